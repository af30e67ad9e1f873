#pragma once

// Renders an analysis report document into report.txt, tables/*.csv and
// figures/*.svg. Every artifact is derived from the JSON alone so a stored
// report can be re-rendered without the data.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "factorlab/error.hpp"
#include "factorlab/serialize.hpp"
#include "factorlab/svg.hpp"

namespace factorlab {

namespace fs = std::filesystem;

/// Writes `content` to a sibling temp file and renames it over `path`.
inline void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::IoError, "write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorKind::IoError, "cannot rename into " + path.string() + ": " + ec.message());
  }
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string dump_json(const Json& doc) { return doc.dump(2) + "\n"; }

namespace render {

inline std::string fmt(const Json& v, const char* spec = "%.4g") {
  if (v.is_null()) return "NA";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v.get<double>());
  return buf;
}

/// CSV cell: full round-trip precision for numbers, quoted strings when needed.
inline std::string cell(const Json& v) {
  if (v.is_null()) return "NA";
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  return fmt(v, "%.17g");
}

inline std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<Json>>& rows) {
  std::string out;
  for (std::size_t j = 0; j < header.size(); ++j) out += (j ? "," : "") + header[j];
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out += (j ? "," : "") + cell(row[j]);
    out += '\n';
  }
  return out;
}

inline std::string pad(std::string s, std::size_t width, bool left_align = false) {
  if (s.size() >= width) return s;
  return left_align ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

/// Fixed-width text table with the first column left-aligned.
inline std::string text_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t j = 0; j < header.size(); ++j) width[j] = header[j].size();
  for (const auto& r : rows)
    for (std::size_t j = 0; j < r.size() && j < width.size(); ++j) width[j] = std::max(width[j], r[j].size());
  std::string out;
  auto emit = [&](const std::vector<std::string>& r) {
    std::string line;
    for (std::size_t j = 0; j < r.size(); ++j) line += (j ? "  " : "  ") + pad(r[j], width[j], j == 0);
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  };
  emit(header);
  std::size_t total = 0;
  for (auto w : width) total += w + 2;
  out += "  " + std::string(total - 2, '-') + "\n";
  for (const auto& r : rows) emit(r);
  return out;
}

inline std::vector<double> numbers(const Json& arr) {
  std::vector<double> out;
  for (const auto& v : arr) out.push_back(number_from(v));
  return out;
}

inline std::string coefficient_block(const Json& fit) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : fit.at("coefficients")) {
    rows.push_back({c.at("name").get<std::string>(), fmt(c.at("estimate"), "%.3f"), fmt(c.at("std_error"), "%.3f"),
                    fmt(c.at("t_value"), "%.3f"), fmt(c.at("p_value"), "%.3g"), c.at("stars").get<std::string>()});
  }
  std::string out = text_table({"Predictor", "Estimate", "Std. Error", "t value", "Pr(>|t|)", ""}, rows);
  out += "  Significance: **** p<0.001, *** p<0.01, ** p<0.05, * p<0.1\n";
  out += "  Residual standard error: " + fmt(fit.at("rse"), "%.4g") + " on " + fmt(fit.at("df_resid"), "%.0f") +
         " degrees of freedom\n";
  out += "  Multiple R-squared: " + fmt(fit.at("r_squared")) + ", Adjusted R-squared: " + fmt(fit.at("adj_r_squared")) + "\n";
  out += "  F-statistic: " + fmt(fit.at("f_stat")) + " on " + fmt(fit.at("df_model"), "%.0f") + " and " +
         fmt(fit.at("df_resid"), "%.0f") + " DF, p-value: " + fmt(fit.at("f_p_value"), "%.3g") + "\n";
  return out;
}

inline std::string join_rows(const Json& arr) {
  if (arr.empty()) return "none";
  std::string out;
  for (const auto& v : arr) out += (out.empty() ? "" : ", ") + v.dump();
  return out;
}

inline std::string join_names(const Json& arr) {
  if (arr.empty()) return "none";
  std::string out;
  for (const auto& v : arr) out += (out.empty() ? "" : ", ") + v.get<std::string>();
  return out;
}

}  // namespace render

inline void require_report(const Json& doc) {
  if (!doc.is_object() || !doc.contains("spec_version") || doc.at("spec_version") != kSpecVersion) {
    throw Error(ErrorKind::SchemaError, "document lacks a supported spec_version");
  }
  if (doc.value("kind", "") != "analysis_report") throw Error(ErrorKind::SchemaError, "document is not an analysis report");
}

inline std::string render_text(const Json& doc) {
  using namespace render;
  require_report(doc);
  const Json& s = doc.at("settings");
  std::string out;
  out += "FACTOR ANALYSIS REPORT\n\n";
  out += "Response: " + s.at("response").get<std::string>() + "    rows: " + doc.at("input").at("rows").dump() +
         "    seed: " + s.at("seed").dump() + "\n";
  out += "Predictors: " + join_names(s.at("predictors")) + "\n";
  if (!s.at("transforms").empty()) {
    std::string t;
    for (const auto& x : s.at("transforms")) t += (t.empty() ? "" : ", ") + x.at("kind").get<std::string>() + "(" + x.at("column").get<std::string>() + ")";
    out += "Transforms applied: " + t + "\n";
  }

  out += "\n1. Predictor screening (simple regressions)\n\n";
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : doc.at("screening")) {
      rows.push_back({r.at("predictor").get<std::string>(), fmt(r.at("f_stat")), fmt(r.at("r_squared")),
                      fmt(r.at("rse"), "%.2f"), fmt(r.at("p_value"), "%.3g"), r.at("stars").get<std::string>()});
    }
    out += text_table({"Predictor", "F-stat", "R^2", "RSE", "p-value", ""}, rows);
  }

  out += "\n2. Pearson correlation (x marks pairs not significant)\n";
  for (const auto& cm : doc.at("correlation")) {
    out += "\n  alpha = " + fmt(cm.at("alpha")) + "\n";
    std::vector<std::string> header{""};
    for (const auto& n : cm.at("names")) header.push_back(n.get<std::string>());
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < cm.at("names").size(); ++i) {
      std::vector<std::string> row{cm.at("names")[i].get<std::string>()};
      for (std::size_t j = 0; j < cm.at("names").size(); ++j) {
        row.push_back(fmt(cm.at("r")[i][j], "%.2f") + (cm.at("significant")[i][j].get<bool>() ? " " : "x"));
      }
      rows.push_back(std::move(row));
    }
    out += text_table(header, rows);
  }

  const Json& col = doc.at("collinearity");
  out += "\n3. Variance inflation (threshold " + fmt(col.at("threshold")) + ")\n\n";
  if (col.at("initial").empty()) {
    out += "  not applicable: fewer than two predictors\n";
  } else {
    std::vector<std::vector<std::string>> rows;
    for (const auto& e : col.at("initial")) {
      rows.push_back({e.at("predictor").get<std::string>(), fmt(e.at("value"), "%.3f"), e.at("flagged").get<bool>() ? "flagged" : ""});
    }
    out += text_table({"Predictor", "VIF", ""}, rows);
    out += "  Dropped: " + join_names(col.at("dropped")) + "\n";
    if (col.at("dropped").empty() && !s.at("drop_vif_flagged").get<bool>()) {
      bool any = false;
      for (const auto& e : col.at("initial")) any = any || e.at("flagged").get<bool>();
      if (any) out += "  Flagged predictors were kept; rerun with --drop-vif-flagged to remove them.\n";
    }
  }

  out += "\n4. Initial multiple regression\n\n" + coefficient_block(doc.at("initial_fit"));
  const Json& o = doc.at("outliers");
  out += "\n5. Outliers (|externally studentized residual| > " + fmt(o.at("threshold")) + ")\n\n";
  out += "  Flagged rows: " + join_rows(o.at("flagged")) + "\n";
  out += "  Removed rows: " + join_rows(o.at("removed")) + "    rows remaining: " + o.at("rows_after").dump() + "\n";

  out += "\n6. Final multiple regression\n\n" + coefficient_block(doc.at("final_fit"));

  const Json& d = doc.at("diagnostics");
  out += "\n7. Residual diagnostics\n\n";
  if (!d.at("vif").empty()) {
    std::string v;
    for (const auto& e : d.at("vif")) v += (v.empty() ? "" : ", ") + e.at("predictor").get<std::string>() + " " + fmt(e.at("value"), "%.3f");
    out += "  VIF (final predictors): " + v + "\n";
    out += "  VIF above threshold: " + join_names(d.at("vif_flagged")) + "\n";
  }
  if (d.at("funnel").is_null()) {
    out += "  Funnel indicator: not computed\n";
  } else {
    out += "  Funnel indicator corr(|e|, fitted) = " + fmt(d.at("funnel").at("correlation")) +
           ", p = " + fmt(d.at("funnel").at("p_value"), "%.3g") + "\n";
  }
  if (d.at("acf").size() > 1) {
    out += "  Residual ACF lag 1 = " + fmt(d.at("acf")[1].at("value")) + " (band +/-" + fmt(d.at("acf_band")) + ")\n";
  }
  out += "  Outliers in final fit: " + join_rows(d.at("outlier_rows")) + "\n";
  if (!doc.at("transform_ladder").empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& l : doc.at("transform_ladder")) {
      std::vector<std::string> row{l.at("predictor").get<std::string>()};
      for (const auto& r : l.at("rungs")) row.push_back(fmt(r.at("r_squared")));
      row.push_back(l.at("suggestion").get<std::string>());
      rows.push_back(std::move(row));
    }
    out += "\n  Power ladder (simple-regression R^2)\n";
    out += text_table({"Predictor", "identity", "log", "sqrt", "square", "best"}, rows);
  }

  const Json& f = doc.at("forest");
  const Json& fc = f.at("config");
  out += "\n8. Random forest\n\n";
  out += "  trees " + fc.at("n_trees").dump() + ", m_try " + fc.at("m_try").dump() + ", min_leaf " +
         fc.at("min_leaf").dump() + ", max_depth " + (fc.at("max_depth") == 0 ? std::string("unlimited") : fc.at("max_depth").dump()) + "\n";
  {
    std::vector<std::vector<std::string>> rows;
    for (const auto& i : f.at("importance")) rows.push_back({i.at("feature").get<std::string>(), fmt(i.at("value"), "%.4f")});
    out += text_table({"Feature", "Importance"}, rows);
  }

  const Json& ev = doc.at("evaluation");
  const Json& cmp = ev.at("comparison");
  out += "\n9. " + ev.at("k").dump() + "-fold cross-validation\n\n";
  {
    std::vector<std::string> header{"Metric"};
    for (const auto& m : ev.at("models")) {
      std::string name = m.at("model").get<std::string>();
      if (cmp.at("marker") == "*" && cmp.at("winner") == name) name += " *";
      header.push_back(name);
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& [key, label] : std::vector<std::pair<std::string, std::string>>{
             {"mae", "MAE"}, {"rmse", "RMSE"}, {"r", "Correlation r"}, {"r_squared", "r^2"}}) {
      std::vector<std::string> row{label};
      for (const auto& m : ev.at("models")) row.push_back(fmt(m.at(key), key == "mae" || key == "rmse" ? "%.1f" : "%.3f"));
      rows.push_back(std::move(row));
    }
    out += text_table(header, rows);
    out += "  * significant at alpha = " + fmt(cmp.at("alpha")) + " (paired t-test on per-fold MAE)\n";
  }
  out += "\n  Paired t-test: t = " + fmt(cmp.at("t_stat")) + ", df = " + cmp.at("df").dump() + ", p = " +
         fmt(cmp.at("p_value"), "%.3g") + ", winner: " + cmp.at("winner").get<std::string>() + "\n";
  return out;
}

/// File name -> CSV content for every table in the report.
inline std::map<std::string, std::string> render_tables(const Json& doc) {
  using namespace render;
  require_report(doc);
  std::map<std::string, std::string> out;

  {
    std::vector<std::vector<Json>> rows;
    for (const auto& r : doc.at("screening"))
      rows.push_back({r["predictor"], r["f_stat"], r["r_squared"], r["rse"], r["p_value"], r["stars"]});
    out["screening.csv"] = csv({"predictor", "f_stat", "r_squared", "rse", "p_value", "stars"}, rows);
  }
  for (const auto& cm : doc.at("correlation")) {
    std::vector<std::string> header{"column"};
    for (const auto& n : cm.at("names")) header.push_back(n.get<std::string>());
    std::vector<std::vector<Json>> r_rows, p_rows;
    for (std::size_t i = 0; i < cm.at("names").size(); ++i) {
      std::vector<Json> rr{cm.at("names")[i]}, pr{cm.at("names")[i]};
      for (std::size_t j = 0; j < cm.at("names").size(); ++j) {
        rr.push_back(cm.at("r")[i][j]);
        pr.push_back(cm.at("p_values")[i][j]);
      }
      r_rows.push_back(std::move(rr));
      p_rows.push_back(std::move(pr));
    }
    const std::string suffix = cm.at("alpha").get<double>() == 0.01 ? "_01" : "_05";
    out["correlation_r.csv"] = csv(header, r_rows);
    out["correlation_p.csv"] = csv(header, p_rows);
    std::vector<std::vector<Json>> sig_rows;
    for (std::size_t i = 0; i < cm.at("names").size(); ++i) {
      std::vector<Json> row{cm.at("names")[i]};
      for (const auto& b : cm.at("significant")[i]) row.push_back(b);
      sig_rows.push_back(std::move(row));
    }
    out["correlation_significant" + suffix + ".csv"] = csv(header, sig_rows);
  }
  {
    std::vector<std::vector<Json>> rows;
    const Json& rounds = doc.at("collinearity").at("rounds");
    for (std::size_t k = 0; k < rounds.size(); ++k)
      for (const auto& e : rounds[k]) rows.push_back({Json(k + 1), e["predictor"], e["value"], e["flagged"]});
    out["vif.csv"] = csv({"round", "predictor", "vif", "flagged"}, rows);
  }
  for (const auto& [key, file] : std::vector<std::pair<std::string, std::string>>{
           {"initial_fit", "coefficients_initial.csv"}, {"final_fit", "coefficients.csv"}}) {
    std::vector<std::vector<Json>> rows;
    for (const auto& c : doc.at(key).at("coefficients"))
      rows.push_back({c["name"], c["estimate"], c["std_error"], c["t_value"], c["p_value"], c["stars"]});
    out[file] = csv({"name", "estimate", "std_error", "t_value", "p_value", "stars"}, rows);
  }

  const Json& d = doc.at("diagnostics");
  {
    std::vector<std::vector<Json>> rows;
    const Json& src = d.at("source_rows");
    for (std::size_t i = 0; i < src.size(); ++i) {
      bool flagged = false;
      for (const auto& r : d.at("outlier_rows")) flagged = flagged || r == src[i];
      rows.push_back({Json(i + 1), src[i], d["fitted"][i], d["residuals"][i], d["studentized"][i], d["leverage"][i], Json(flagged)});
    }
    out["observations.csv"] = csv({"row", "source_row", "fitted", "residual", "studentized", "leverage", "outlier"}, rows);
  }
  {
    std::vector<std::vector<Json>> rows;
    for (const auto& p : d.at("residual_vs_fitted")) rows.push_back({p["fitted"], p["residual"]});
    out["residual_vs_fitted.csv"] = csv({"fitted", "residual"}, rows);
  }
  {
    std::vector<std::vector<Json>> rows;
    for (const auto& p : d.at("qq")) rows.push_back({p["theoretical"], p["sample"]});
    out["qq.csv"] = csv({"theoretical", "sample"}, rows);
  }
  {
    std::vector<std::vector<Json>> rows;
    for (const auto& p : d.at("acf")) rows.push_back({p["lag"], p["value"], d["acf_band"]});
    out["acf.csv"] = csv({"lag", "acf", "band"}, rows);
  }
  {
    std::vector<std::vector<Json>> rows;
    for (const auto& s : d.at("component_residual"))
      for (const auto& p : s.at("points")) rows.push_back({s["predictor"], p["x"], p["partial_residual"]});
    out["component_residual.csv"] = csv({"predictor", "x", "partial_residual"}, rows);
  }
  {
    std::vector<std::vector<Json>> rows;
    for (const auto& l : doc.at("transform_ladder"))
      for (const auto& r : l.at("rungs")) rows.push_back({l["predictor"], r["kind"], r["r_squared"], Json(l["suggestion"] == r["kind"])});
    out["transform_ladder.csv"] = csv({"predictor", "transform", "r_squared", "suggested"}, rows);
  }
  {
    std::vector<std::vector<Json>> rows;
    for (const auto& i : doc.at("forest").at("importance")) rows.push_back({i["feature"], i["value"]});
    out["importance.csv"] = csv({"feature", "importance"}, rows);
  }
  {
    std::vector<std::vector<Json>> rows;
    for (const auto& s : doc.at("response_series")) rows.push_back({s["panel"], s["term"], s["value"]});
    out["response_series.csv"] = csv({"panel", "term", "value"}, rows);
  }

  const Json& ev = doc.at("evaluation");
  const Json& models = ev.at("models");
  {
    std::vector<std::vector<Json>> rows;
    for (const auto& m : models)
      for (const auto& f : m.at("per_fold")) rows.push_back({m["model"], f["fold"], f["size"], f["mae"], f["rmse"], f["r"]});
    out["cv_folds.csv"] = csv({"model", "fold", "size", "mae", "rmse", "r"}, rows);
  }
  {
    std::vector<std::string> header{"row", "actual"};
    for (const auto& m : models) header.push_back(m.at("model").get<std::string>());
    std::vector<std::vector<Json>> rows;
    for (std::size_t i = 0; i < models[0].at("actual").size(); ++i) {
      std::vector<Json> row{Json(i + 1), models[0]["actual"][i]};
      for (const auto& m : models) row.push_back(m["predicted"][i]);
      rows.push_back(std::move(row));
    }
    out["cv_predictions.csv"] = csv(header, rows);
  }
  {
    std::vector<std::string> header{"metric"};
    for (const auto& m : models) header.push_back(m.at("model").get<std::string>());
    std::vector<std::vector<Json>> rows;
    for (const std::string key : {"mae", "rmse", "r", "r_squared"}) {
      std::vector<Json> row{Json(key)};
      for (const auto& m : models) row.push_back(m[key]);
      rows.push_back(std::move(row));
    }
    out["model_comparison.csv"] = csv(header, rows);
    const Json& c = ev.at("comparison");
    out["paired_test.csv"] = csv({"model_a", "model_b", "mean_a", "mean_b", "mean_diff", "t_stat", "df", "p_value", "alpha", "winner", "marker"},
                                 {{c["model_a"], c["model_b"], c["mean_a"], c["mean_b"], c["mean_diff"], c["t_stat"], c["df"],
                                   c["p_value"], c["alpha"], c["winner"], c["marker"]}});
  }
  return out;
}

/// File name -> SVG content for every figure in the report.
inline std::map<std::string, std::string> render_figures(const Json& doc) {
  using namespace render;
  require_report(doc);
  std::map<std::string, std::string> out;
  const std::string response = doc.at("settings").at("response").get<std::string>();

  for (const auto& cm : doc.at("correlation")) {
    const auto names = cm.at("names").get<std::vector<std::string>>();
    std::vector<std::vector<double>> r;
    std::vector<std::vector<bool>> marked;
    for (std::size_t i = 0; i < names.size(); ++i) {
      r.push_back(numbers(cm.at("r")[i]));
      std::vector<bool> row;
      for (const auto& b : cm.at("significant")[i]) row.push_back(!b.get<bool>());
      marked.push_back(std::move(row));
    }
    const double alpha = cm.at("alpha").get<double>();
    out[alpha == 0.01 ? "correlation_01.svg" : "correlation_05.svg"] =
        svg::heatmap("Pearson correlation (x: not significant at " + fmt(cm.at("alpha")) + ")", names, r, marked);
  }

  {
    const Json& initial = doc.at("collinearity").at("initial");
    if (!initial.empty()) {
      std::vector<double> xs, vs;
      for (std::size_t i = 0; i < initial.size(); ++i) {
        xs.push_back(static_cast<double>(i + 1));
        vs.push_back(number_from(initial[i].at("value")));
      }
      const double threshold = doc.at("collinearity").at("threshold").get<double>();
      std::vector<double> range_src = vs;
      range_src.push_back(threshold);
      svg::Plot p("Variance inflation factors", "predictor", "VIF", {0.4, xs.size() + 0.6}, svg::range_of(range_src, true));
      p.bars(xs, vs, 0.35);
      p.hline(threshold, "#d62728");
      for (std::size_t i = 0; i < initial.size(); ++i) p.text(xs[i], 0.0, initial[i].at("predictor").get<std::string>(), 10);
      out["vif.svg"] = p.str();
    }
  }

  const Json& d = doc.at("diagnostics");
  {
    const auto fitted = numbers(d.at("fitted"));
    const auto resid = numbers(d.at("residuals"));
    svg::Plot p("Residuals vs fitted", "fitted", "residual", svg::range_of(fitted), svg::range_of(resid, true));
    p.scatter(fitted, resid);
    p.hline(0.0);
    out["residual_vs_fitted.svg"] = p.str();
  }
  {
    std::vector<double> th, sa;
    for (const auto& q : d.at("qq")) {
      th.push_back(q.at("theoretical").get<double>());
      sa.push_back(q.at("sample").get<double>());
    }
    std::vector<double> both = th;
    both.insert(both.end(), sa.begin(), sa.end());
    const auto r = svg::range_of(both);
    svg::Plot p("Normal Q-Q", "theoretical quantile", "standardized residual", r, r);
    p.scatter(th, sa);
    const double diag[] = {r.lo, r.hi};
    p.line(diag, diag);
    out["qq.svg"] = p.str();
  }
  {
    std::vector<double> lags, vals;
    for (const auto& a : d.at("acf")) {
      lags.push_back(a.at("lag").get<double>());
      vals.push_back(a.at("value").get<double>());
    }
    const double band = d.at("acf_band").get<double>();
    std::vector<double> range_src = vals;
    range_src.push_back(band);
    range_src.push_back(-band);
    svg::Plot p("Residual autocorrelation", "lag", "ACF", {-0.6, std::max(1.0, static_cast<double>(lags.size())) - 0.4},
                svg::range_of(range_src, true));
    p.bars(lags, vals, 0.15, "#1f77b4");
    p.hline(band, "#1f77b4");
    p.hline(-band, "#1f77b4");
    p.hline(0.0, "#333", false);
    out["acf.svg"] = p.str();
  }
  {
    const Json& coefs = doc.at("final_fit").at("coefficients");
    for (const auto& s : d.at("component_residual")) {
      const std::string name = s.at("predictor").get<std::string>();
      std::vector<double> xs, ys;
      for (const auto& pt : s.at("points")) {
        xs.push_back(pt.at("x").get<double>());
        ys.push_back(pt.at("partial_residual").get<double>());
      }
      double slope = 0.0;
      for (const auto& c : coefs)
        if (c.at("name") == name) slope = number_from(c.at("estimate"));
      std::vector<double> comp;
      for (double x : xs) comp.push_back(slope * x);
      std::vector<double> range_src = ys;
      range_src.insert(range_src.end(), comp.begin(), comp.end());
      svg::Plot p("Component + residual: " + name, name, "component + residual", svg::range_of(xs), svg::range_of(range_src));
      p.scatter(xs, ys);
      p.line(xs, comp, "#d62728", true);
      out["component_residual_" + name + ".svg"] = p.str();
    }
  }
  {
    const Json& imp = doc.at("forest").at("importance");
    std::vector<double> xs, vs;
    for (std::size_t i = 0; i < imp.size(); ++i) {
      xs.push_back(static_cast<double>(i + 1));
      vs.push_back(imp[i].at("value").get<double>());
    }
    svg::Plot p("Forest feature importance", "feature", "share of SSE reduction", {0.4, imp.size() + 0.6},
                svg::range_of(vs, true));
    p.bars(xs, vs, 0.35);
    for (std::size_t i = 0; i < imp.size(); ++i) p.text(xs[i], 0.0, imp[i].at("feature").get<std::string>(), 10);
    out["importance.svg"] = p.str();
  }
  {
    std::map<double, std::pair<std::vector<double>, std::vector<double>>> by_panel;
    std::vector<double> terms, values;
    for (const auto& s : doc.at("response_series")) {
      auto& [t, v] = by_panel[s.at("panel").get<double>()];
      t.push_back(s.at("term").get<double>());
      v.push_back(s.at("value").get<double>());
      terms.push_back(t.back());
      values.push_back(v.back());
    }
    static constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
    svg::Plot p(response + " over time by panel", "term", response, svg::range_of(terms), svg::range_of(values));
    std::size_t c = 0;
    for (auto& [panel, tv] : by_panel) {
      std::vector<std::size_t> order(tv.first.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return tv.first[a] < tv.first[b]; });
      std::vector<double> t, v;
      for (std::size_t i : order) {
        t.push_back(tv.first[i]);
        v.push_back(tv.second[i]);
      }
      p.line(t, v, kPalette[c++ % std::size(kPalette)]);
    }
    out["response_series.svg"] = p.str();
  }
  {
    const Json& models = doc.at("evaluation").at("models");
    static constexpr const char* kColors[] = {"#1f77b4", "#2ca02c"};
    std::vector<double> all;
    for (const auto& m : models) {
      for (double v : numbers(m.at("actual"))) all.push_back(v);
      for (double v : numbers(m.at("predicted"))) all.push_back(v);
    }
    const auto r = svg::range_of(all);
    svg::Plot p("Out-of-fold predictions (blue: " + models[0].at("model").get<std::string>() + ", green: " +
                    models[1].at("model").get<std::string>() + ")",
                "actual", "predicted", r, r);
    for (std::size_t m = 0; m < models.size(); ++m) p.scatter(numbers(models[m].at("actual")), numbers(models[m].at("predicted")), kColors[m % 2]);
    const double diag[] = {r.lo, r.hi};
    p.line(diag, diag, "#888", true);
    out["cv_predictions.svg"] = p.str();

    std::vector<double> folds, maes;
    for (const auto& m : models)
      for (const auto& f : m.at("per_fold")) {
        folds.push_back(f.at("fold").get<double>() + 1);
        maes.push_back(number_from(f.at("mae")));
      }
    svg::Plot q("Per-fold MAE", "fold", "MAE", svg::range_of(folds), svg::range_of(maes, true));
    for (std::size_t m = 0; m < models.size(); ++m) {
      std::vector<double> fx, fy;
      for (const auto& f : models[m].at("per_fold")) {
        fx.push_back(f.at("fold").get<double>() + 1);
        fy.push_back(number_from(f.at("mae")));
      }
      q.line(fx, fy, kColors[m % 2]);
      q.scatter(fx, fy, kColors[m % 2]);
    }
    out["cv_folds.svg"] = q.str();
  }
  return out;
}

/// Writes report.json, report.txt, tables/ and figures/ under `dir`.
inline void write_report_files(const fs::path& dir, const Json& doc, bool include_json = true) {
  const std::string text = render_text(doc);
  const auto tables = render_tables(doc);
  const auto figures = render_figures(doc);
  if (include_json) write_file_atomic(dir / "report.json", dump_json(doc));
  write_file_atomic(dir / "report.txt", text);
  for (const auto& [name, content] : tables) write_file_atomic(dir / "tables" / name, content);
  for (const auto& [name, content] : figures) write_file_atomic(dir / "figures" / name, content);
}

}  // namespace factorlab
