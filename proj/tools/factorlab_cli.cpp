#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "factorlab/dataset.hpp"
#include "factorlab/diagnostics.hpp"
#include "factorlab/eval.hpp"
#include "factorlab/forest.hpp"
#include "factorlab/serialize.hpp"
#include "factorlab/linmodel.hpp"
#include "factorlab/pipeline.hpp"
#include "factorlab/report.hpp"

namespace fl = factorlab;
namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kInput = 2, kNumerical = 3 };

struct Common {
  std::string input;
  std::string out;
  std::uint64_t seed = 42;
  std::string response = "price";
  std::vector<std::string> predictors;
  std::string format = "json";
  std::size_t k = 10;
  double alpha = fl::kDefaultAlpha;
  double outlier_threshold = fl::kDefaultOutlierThreshold;
  double vif_threshold = fl::kDefaultVifThreshold;
};

struct ForestFlags {
  std::size_t trees = 500;
  std::size_t m_try = 0;
  std::size_t min_leaf = 5;
  std::size_t max_depth = 0;
  std::size_t threads = 0;
  bool no_bootstrap = false;

  fl::ForestConfig config(std::uint64_t seed) const {
    fl::ForestConfig c;
    c.n_trees = trees;
    c.m_try = m_try;
    c.min_leaf = min_leaf;
    c.max_depth = max_depth;
    c.threads = threads;
    c.bootstrap = !no_bootstrap;
    c.seed = seed;
    return c;
  }
};

void add_format(CLI::App* app, Common& c) {
  app->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "text"}))->capture_default_str();
}

void add_input(CLI::App* app, Common& c, bool required = true) {
  auto* opt = app->add_option("--input", c.input, "Input CSV file");
  if (required) opt->required();
}

void add_columns(CLI::App* app, Common& c) {
  app->add_option("--response", c.response, "Response column")->capture_default_str();
  app->add_option("--predictors", c.predictors, "Comma-separated predictor columns (default: all others)")
      ->delimiter(',');
}

void add_forest(CLI::App* app, ForestFlags& f) {
  app->add_option("--trees", f.trees, "Number of trees")->capture_default_str();
  app->add_option("--mtry", f.m_try, "Features tried per split (0: round(sqrt(p)))")->capture_default_str();
  app->add_option("--min-leaf", f.min_leaf, "Minimum samples per leaf")->capture_default_str();
  app->add_option("--max-depth", f.max_depth, "Maximum tree depth (0: unlimited)")->capture_default_str();
  app->add_option("--threads", f.threads, "Training threads (0: all cores; results do not depend on it)")
      ->capture_default_str();
  app->add_flag("--no-bootstrap", f.no_bootstrap, "Train every tree on the full sample");
}

std::vector<fl::TransformSpec> parse_transforms(const std::vector<std::string>& raw) {
  std::vector<fl::TransformSpec> out;
  for (const auto& item : raw) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw fl::Error(fl::ErrorKind::InvalidArgument, "transform '" + item + "' must look like column:kind");
    }
    out.push_back({fl::to_lower(item.substr(0, colon)), fl::parse_transform_kind(item.substr(colon + 1))});
  }
  return out;
}

fl::FactorFrame load_frame(const Common& c) {
  std::ifstream in(c.input, std::ios::binary);
  if (!in) throw fl::Error(fl::ErrorKind::IoError, "cannot open input " + c.input);
  fl::FrameRoles roles;
  roles.response = c.response;
  return fl::load_csv(in, c.predictors, roles);
}

std::vector<std::string> lowered(const std::vector<std::string>& names) {
  std::vector<std::string> out;
  for (const auto& n : names) out.push_back(fl::to_lower(n));
  return out;
}

/// Prints `doc` (or its text form) and, if `out_file` is set, stores the JSON there too.
void emit(const fl::Json& doc, const std::string& format, const std::string& text, const std::string& out_file = {}) {
  if (!out_file.empty()) fl::write_file_atomic(out_file, fl::dump_json(doc));
  if (format == "text") {
    std::cout << text;
  } else {
    std::cout << fl::dump_json(doc);
  }
}

std::string fit_text(const fl::LinearFit& fit) {
  std::string out;
  char buf[256];
  for (const auto& row : fl::coefficient_table(fit)) {
    std::snprintf(buf, sizeof buf, "%-14s %12.4f %12.4f %9.3f %11.3g %s\n", row.name.c_str(), row.estimate, row.std_error,
                  row.t_value, row.p_value, row.stars.c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "R-squared %.4f, adjusted %.4f, RSE %.4g\nF-statistic %.4g on %zu and %zu DF, p-value %.3g\n",
                fit.r_squared, fit.adj_r_squared, fit.rse, fit.f_stat, fit.df_model, fit.df_resid, fit.f_p_value);
  return out + buf;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct SynthFlags {
  std::size_t companies = 5;
  std::size_t quarters = 14;
  double noise_sd = 150.0;
  std::vector<std::size_t> plant;
  bool no_outliers = false;
  double shift_sd = 10.0;
};

int run_synth(const Common& c, const SynthFlags& s) {
  fl::SynthConfig cfg;
  cfg.seed = c.seed;
  cfg.companies = s.companies;
  cfg.quarters = s.quarters;
  cfg.noise_sd = s.noise_sd;
  cfg.outlier_shift_sd = s.shift_sd;
  if (s.no_outliers) {
    cfg.planted_outliers = std::set<std::size_t>{};
  } else if (!s.plant.empty()) {
    cfg.planted_outliers = fl::from_one_based(s.plant);
  }
  const fl::FactorFrame frame = fl::synthesize(cfg);
  std::ostringstream csv;
  fl::write_csv(csv, frame);
  if (c.out.empty()) {
    std::cout << csv.str();
  } else {
    fl::write_file_atomic(c.out, csv.str());
  }
  return kOk;
}

int run_ingest(const Common& c) {
  const fl::FactorFrame frame = load_frame(c);
  fl::Json doc = fl::document_header("ingest_summary");
  doc["rows"] = frame.rows();
  doc["response"] = frame.response_name();
  fl::Json cols = fl::Json::array();
  std::string text = "rows: " + std::to_string(frame.rows()) + "\n";
  for (const auto& name : frame.column_names()) {
    const fl::Vector v = frame.column(name);
    const double mean = fl::mean_of(v);
    const double sd = v.size() > 1 ? std::sqrt(fl::centered_sum_squares(v) / static_cast<double>(v.size() - 1)) : 0.0;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    cols.push_back(fl::Json{{"name", name}, {"mean", mean}, {"sd", sd}, {"min", *lo}, {"max", *hi}});
    char buf[200];
    std::snprintf(buf, sizeof buf, "%-10s mean %12.4g  sd %12.4g  min %12.4g  max %12.4g\n", name.c_str(), mean, sd, *lo, *hi);
    text += buf;
  }
  doc["columns"] = std::move(cols);
  emit(doc, c.format, text, c.out);
  return kOk;
}

int run_screen(const Common& c) {
  const fl::FactorFrame frame = load_frame(c);
  const auto preds = fl::resolve_predictors(frame, lowered(c.predictors));
  fl::Json doc = fl::document_header("screening");
  doc["response"] = frame.response_name();
  doc["rows"] = fl::screening_json(frame, preds);
  std::string text;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-10s %10s %10s %10s %11s\n", "predictor", "F-stat", "R^2", "RSE", "p-value");
  text += buf;
  for (const auto& r : doc["rows"]) {
    std::snprintf(buf, sizeof buf, "%-10s %10.4g %10.4g %10.2f %11.3g %s\n", r["predictor"].get<std::string>().c_str(),
                  fl::number_from(r["f_stat"]), fl::number_from(r["r_squared"]), fl::number_from(r["rse"]),
                  fl::number_from(r["p_value"]), r["stars"].get<std::string>().c_str());
    text += buf;
  }
  emit(doc, c.format, text, c.out);
  return kOk;
}

struct FitFlags {
  std::vector<std::string> exclude;
  std::vector<std::string> transforms;
  std::vector<std::size_t> remove_rows;
  bool remove_outliers = false;
};

/// Loads, transforms and trims the frame as requested; returns the original
/// 1-based row number of every retained row.
std::pair<fl::FactorFrame, std::vector<std::size_t>> prepared_frame(const Common& c, const FitFlags& f) {
  fl::FactorFrame frame = load_frame(c);
  for (const auto& t : parse_transforms(f.transforms)) frame = fl::apply_transform(frame, t);
  std::vector<std::size_t> source(frame.rows());
  for (std::size_t i = 0; i < source.size(); ++i) source[i] = i + 1;
  if (!f.remove_rows.empty()) {
    const auto drop = fl::from_one_based(f.remove_rows);
    frame = fl::remove_rows(frame, drop);
    std::erase_if(source, [&](std::size_t r) { return drop.contains(r - 1); });
  }
  return {std::move(frame), std::move(source)};
}

int run_fit(const Common& c, const FitFlags& f) {
  auto [frame, source] = prepared_frame(c, f);
  const auto preds = fl::resolve_predictors(frame, lowered(c.predictors), lowered(f.exclude));
  fl::LinearFit fit = fl::fit_ols(frame, preds, frame.response_name());
  std::vector<std::size_t> removed;
  if (f.remove_outliers) {
    const auto flagged = fl::flag_outliers(fit, c.outlier_threshold);
    if (!flagged.empty()) {
      for (std::size_t r : flagged) removed.push_back(source[r - 1]);
      frame = fl::remove_rows(frame, fl::from_one_based(flagged));
      std::erase_if(source, [&](std::size_t r) { return std::find(removed.begin(), removed.end(), r) != removed.end(); });
      fit = fl::fit_ols(frame, preds, frame.response_name());
    }
  }
  fl::Json doc = fl::document_header("linear_fit");
  doc["fit"] = fl::fit_json(fit, source, c.outlier_threshold);
  doc["removed_rows"] = removed;
  std::string text = fit_text(fit) + "Outlier rows: " + fl::render::join_rows(doc["fit"]["outlier_rows"]) + "\n";
  emit(doc, c.format, text, c.out);
  return kOk;
}

int run_diagnose(const Common& c, const FitFlags& f) {
  auto [frame, source] = prepared_frame(c, f);
  const auto preds = fl::resolve_predictors(frame, lowered(c.predictors), lowered(f.exclude));
  const fl::LinearFit fit = fl::fit_ols(frame, preds, frame.response_name());
  fl::DiagnosticsOptions opts;
  opts.outlier_threshold = c.outlier_threshold;
  opts.vif_threshold = c.vif_threshold;
  const fl::DiagnosticsReport diag = fl::diagnose(frame, fit, opts);

  fl::Json doc = fl::document_header("diagnostics");
  doc["fit"] = fl::fit_json(fit, source, c.outlier_threshold);
  doc["diagnostics"] = fl::to_json(diag, c.vif_threshold, c.outlier_threshold);
  fl::Json rows = fl::Json::array();
  for (std::size_t r : diag.outlier_indices) rows.push_back(source[r - 1]);
  doc["diagnostics"]["outlier_rows"] = std::move(rows);
  doc["diagnostics"]["source_rows"] = source;

  if (!c.out.empty()) {
    const fs::path dir(c.out);
    fl::write_file_atomic(dir / "diagnostics.json", fl::dump_json(doc));
    std::string obs = "row,source_row,fitted,residual,studentized,leverage\n";
    for (std::size_t i = 0; i < fit.n(); ++i) {
      obs += std::to_string(i + 1) + "," + std::to_string(source[i]) + "," + fl::format_double(fit.fitted[i]) + "," +
             fl::format_double(fit.residuals[i]) + "," + fl::format_double(diag.studentized[i]) + "," +
             fl::format_double(diag.leverage[i]) + "\n";
    }
    fl::write_file_atomic(dir / "tables" / "observations.csv", obs);
    std::string qq = "theoretical,sample\n";
    for (const auto& p : diag.qq) qq += fl::format_double(p.theoretical) + "," + fl::format_double(p.sample) + "\n";
    fl::write_file_atomic(dir / "tables" / "qq.csv", qq);
    std::string acf = "lag,acf,band\n";
    for (const auto& p : diag.acf.points)
      acf += std::to_string(p.lag) + "," + fl::format_double(p.value) + "," + fl::format_double(diag.acf.band) + "\n";
    fl::write_file_atomic(dir / "tables" / "acf.csv", acf);
    std::string cr = "predictor,x,partial_residual\n";
    for (const auto& s : diag.crplots)
      for (const auto& p : s.points) cr += s.predictor + "," + fl::format_double(p.x) + "," + fl::format_double(p.y) + "\n";
    fl::write_file_atomic(dir / "tables" / "component_residual.csv", cr);
    std::string vif = "predictor,vif,flagged\n";
    for (const auto& e : diag.vif)
      vif += e.predictor + "," + fl::format_double(e.value) + "," + (e.value >= c.vif_threshold ? "true" : "false") + "\n";
    fl::write_file_atomic(dir / "tables" / "vif.csv", vif);
  }

  std::string text = fit_text(fit);
  text += "VIF:";
  for (const auto& e : diag.vif) text += " " + e.predictor + "=" + fl::render::fmt(fl::Json(e.value), "%.3f");
  text += "\nOutlier rows: " + fl::render::join_rows(doc["diagnostics"]["outlier_rows"]) + "\n";
  if (diag.rvf.funnel) {
    text += "Funnel indicator p = " + fl::render::fmt(fl::Json(diag.rvf.funnel->p_value), "%.3g") + "\n";
  }
  if (diag.acf.points.size() > 1) text += "ACF lag 1 = " + fl::render::fmt(fl::Json(diag.acf.points[1].value)) + "\n";
  emit(doc, c.format, text);
  return kOk;
}

int run_forest(const Common& c, const ForestFlags& f, const std::string& model_path) {
  const fl::FactorFrame frame = load_frame(c);
  if (!model_path.empty()) {
    const fl::ForestModel model = fl::forest_from_json(fl::Json::parse(fl::read_file(model_path)));
    const fl::Vector pred = model.predict(frame.select(model.feature_names));
    fl::Json doc = fl::document_header("forest_predictions");
    doc["model"] = model_path;
    doc["predictions"] = fl::json_vector(pred);
    std::string text;
    for (double v : pred) text += fl::format_double(v) + "\n";
    emit(doc, c.format, text);
    return kOk;
  }
  const auto preds = fl::resolve_predictors(frame, lowered(c.predictors));
  const fl::ForestModel model = fl::train_forest(frame, preds, frame.response_name(), f.config(c.seed));
  fl::Json doc = fl::document_header("forest_summary");
  doc["config"] = fl::to_json(model.config);
  fl::Json imp = fl::Json::array();
  std::string text;
  for (const auto& fi : fl::feature_importance(model)) {
    imp.push_back(fl::Json{{"feature", fi.feature}, {"value", fi.value}});
    text += fi.feature + " " + fl::render::fmt(fl::Json(fi.value), "%.4f") + "\n";
  }
  doc["importance"] = std::move(imp);
  if (!c.out.empty()) {
    const fs::path file = fs::path(c.out) / "model" / "forest.json";
    fl::write_file_atomic(file, fl::dump_json(fl::forest_to_json(model)));
    doc["model_file"] = "model/forest.json";
  }
  emit(doc, c.format, text);
  return kOk;
}

int run_evaluate(const Common& c, const ForestFlags& f, const std::vector<std::string>& exclude) {
  const fl::FactorFrame frame = load_frame(c);
  const auto preds = fl::resolve_predictors(frame, lowered(c.predictors), lowered(exclude));
  const fl::EvalSummary lin = fl::kfold_cv(frame, fl::LinearSpec{preds}, c.k, c.seed);
  const fl::EvalSummary rf = fl::kfold_cv(frame, fl::ForestSpec{preds, f.config(c.seed)}, c.k, c.seed);
  const fl::ComparisonResult cmp = fl::compare_cv(rf, lin, c.alpha);
  fl::Json doc = fl::document_header("evaluation");
  doc["k"] = c.k;
  doc["seed"] = c.seed;
  doc["models"] = fl::Json::array({fl::to_json(lin), fl::to_json(rf)});
  doc["comparison"] = fl::to_json(cmp);
  doc["comparison"]["pairing"] = "per-fold MAE";
  doc["comparison"]["marker"] = cmp.significant() ? "*" : "";
  char buf[300];
  std::snprintf(buf, sizeof buf,
                "%-18s %10s %10s %8s %8s\n%-18s %10.2f %10.2f %8.3f %8.3f\n%-18s %10.2f %10.2f %8.3f %8.3f\n"
                "paired t = %.4g, df = %zu, p = %.3g, winner: %s%s\n",
                "model", "MAE", "RMSE", "r", "r^2", lin.model_name.c_str(), lin.mae, lin.rmse, lin.pearson_r.value_or(NAN),
                std::pow(lin.pearson_r.value_or(NAN), 2), rf.model_name.c_str(), rf.mae, rf.rmse,
                rf.pearson_r.value_or(NAN), std::pow(rf.pearson_r.value_or(NAN), 2), cmp.t_stat, cmp.df, cmp.p_value,
                cmp.winner.c_str(), cmp.significant() ? " *" : "");
  emit(doc, c.format, buf, c.out);
  return kOk;
}

struct AnalyzeFlags {
  FitFlags fit;
  bool drop_vif = false;
};

int run_analyze(const Common& c, const ForestFlags& f, const AnalyzeFlags& a) {
  const fl::FactorFrame frame = load_frame(c);
  fl::AnalyzeOptions opts;
  opts.predictors = lowered(c.predictors);
  opts.exclude = lowered(a.fit.exclude);
  opts.transforms = parse_transforms(a.fit.transforms);
  opts.drop_vif_flagged = a.drop_vif;
  opts.remove_outliers = a.fit.remove_outliers;
  opts.k = c.k;
  opts.seed = c.seed;
  opts.alpha = c.alpha;
  opts.outlier_threshold = c.outlier_threshold;
  opts.vif_threshold = c.vif_threshold;
  opts.forest = f.config(c.seed);
  const fl::AnalysisResult result = fl::run_analysis(frame, opts);

  const fs::path dir(c.out);
  fl::write_report_files(dir, result.report);
  fl::write_file_atomic(dir / "model" / "forest.json", fl::dump_json(fl::forest_to_json(result.forest)));

  fl::Json doc = fl::document_header("analysis_summary");
  doc["out"] = c.out;
  doc["report"] = (dir / "report.json").string();
  doc["comparison"] = result.report["evaluation"]["comparison"];
  emit(doc, c.format, fl::render_text(result.report));
  return kOk;
}

int run_report(const Common& c) {
  const fl::Json doc = fl::Json::parse(fl::read_file(c.input));
  fl::require_report(doc);
  const fs::path dir = c.out.empty() ? fs::path(c.input).parent_path() : fs::path(c.out);
  // The stored report.json is left untouched when rendering next to it.
  const bool same_place = !c.out.empty() && fs::exists(dir / "report.json") &&
                          fs::equivalent(dir / "report.json", fs::path(c.input));
  fl::write_report_files(dir, doc, !c.out.empty() && !same_place);
  if (c.format == "text") {
    std::cout << fl::render_text(doc);
  } else {
    fl::Json summary = fl::document_header("report_render");
    summary["out"] = dir.string();
    std::cout << fl::dump_json(summary);
  }
  return kOk;
}

void print_error(std::string_view type, std::string_view category, const std::string& message,
                 const std::string& subject = {}, std::size_t row = 0) {
  fl::Json err{{"type", type}, {"category", category}, {"message", message}};
  if (!subject.empty()) err["column"] = subject;
  if (row != 0) err["row"] = row;
  fl::Json doc = fl::document_header("error");
  doc["error"] = std::move(err);
  std::cerr << fl::dump_json(doc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stock-factor regression, diagnostics and random forest comparison"};
  app.require_subcommand(1);

  Common common;
  ForestFlags forest_flags;
  SynthFlags synth_flags;
  FitFlags fit_flags;
  AnalyzeFlags analyze_flags;
  std::string model_path;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic factor panel as CSV");
  synth->add_option("--seed", common.seed, "Random seed")->capture_default_str();
  synth->add_option("--out", common.out, "Output CSV (default: stdout)");
  synth->add_option("--companies", synth_flags.companies, "Number of companies")->capture_default_str();
  synth->add_option("--quarters", synth_flags.quarters, "Quarters per company")->capture_default_str();
  synth->add_option("--noise-sd", synth_flags.noise_sd, "Response noise standard deviation")->capture_default_str();
  synth->add_option("--plant-outliers", synth_flags.plant,
                    "Comma-separated 1-based rows to corrupt (default: 3,38,48)")
      ->delimiter(',');
  synth->add_flag("--no-outliers", synth_flags.no_outliers, "Do not corrupt any rows");
  synth->add_option("--outlier-shift-sd", synth_flags.shift_sd, "Corruption size in noise standard deviations")
      ->capture_default_str();

  auto* ingest = app.add_subcommand("ingest", "Validate a CSV file and summarise its columns");
  add_input(ingest, common);
  add_columns(ingest, common);
  add_format(ingest, common);
  ingest->add_option("--out", common.out, "Also write the summary JSON here");

  auto* screen = app.add_subcommand("screen", "Simple regression of the response on each predictor");
  add_input(screen, common);
  add_columns(screen, common);
  add_format(screen, common);
  screen->add_option("--out", common.out, "Also write the JSON document here");

  auto add_fit_flags = [&](CLI::App* sub) {
    add_input(sub, common);
    add_columns(sub, common);
    add_format(sub, common);
    sub->add_option("--exclude", fit_flags.exclude, "Comma-separated predictors to leave out")->delimiter(',');
    sub->add_option("--transform", fit_flags.transforms, "column:identity|log|sqrt|square (repeatable)");
    sub->add_option("--outlier-threshold", common.outlier_threshold, "Studentized residual cut-off")
        ->capture_default_str();
  };

  auto* fit = app.add_subcommand("fit", "Fit a multiple linear regression");
  add_fit_flags(fit);
  fit->add_option("--remove-rows", fit_flags.remove_rows, "Comma-separated 1-based rows to drop first")->delimiter(',');
  fit->add_flag("--remove-outliers", fit_flags.remove_outliers, "Drop flagged outliers and refit");
  fit->add_option("--out", common.out, "Also write the JSON document here");

  auto* diagnose = app.add_subcommand("diagnose", "Residual, collinearity and outlier diagnostics");
  add_fit_flags(diagnose);
  diagnose->add_option("--remove-rows", fit_flags.remove_rows, "Comma-separated 1-based rows to drop first")
      ->delimiter(',');
  diagnose->add_option("--vif-threshold", common.vif_threshold, "VIF flag level")->capture_default_str();
  diagnose->add_option("--out", common.out, "Directory for diagnostics.json and plot-data CSVs");

  auto* forest = app.add_subcommand("forest", "Train a random forest, or predict with a saved one");
  add_input(forest, common);
  add_columns(forest, common);
  add_format(forest, common);
  add_forest(forest, forest_flags);
  forest->add_option("--seed", common.seed, "Random seed")->capture_default_str();
  forest->add_option("--out", common.out, "Directory receiving model/forest.json");
  forest->add_option("--model", model_path, "Saved model to predict with instead of training");

  auto* evaluate = app.add_subcommand("evaluate", "k-fold comparison of linear regression and random forest");
  add_input(evaluate, common);
  add_columns(evaluate, common);
  add_format(evaluate, common);
  add_forest(evaluate, forest_flags);
  evaluate->add_option("--exclude", fit_flags.exclude, "Comma-separated predictors to leave out")->delimiter(',');
  evaluate->add_option("--seed", common.seed, "Random seed")->capture_default_str();
  evaluate->add_option("--k", common.k, "Number of folds")->capture_default_str();
  evaluate->add_option("--alpha", common.alpha, "Significance level")->capture_default_str();
  evaluate->add_option("--out", common.out, "Also write the JSON document here");

  auto* analyze = app.add_subcommand("analyze", "Run the full analysis and write a results directory");
  add_fit_flags(analyze);
  add_forest(analyze, forest_flags);
  analyze->add_option("--out", common.out, "Results directory")->required();
  analyze->add_option("--seed", common.seed, "Random seed")->capture_default_str();
  analyze->add_option("--k", common.k, "Number of folds")->capture_default_str();
  analyze->add_option("--alpha", common.alpha, "Significance level")->capture_default_str();
  analyze->add_option("--vif-threshold", common.vif_threshold, "VIF flag level")->capture_default_str();
  analyze->add_flag("--drop-vif-flagged", analyze_flags.drop_vif, "Remove predictors whose VIF exceeds the threshold");
  analyze->add_flag("--remove-outliers", fit_flags.remove_outliers, "Drop flagged outliers and refit");

  auto* report = app.add_subcommand("report", "Re-render report.txt, tables and figures from report.json");
  report->add_option("--input", common.input, "Stored report.json")->required();
  report->add_option("--out", common.out, "Output directory (default: next to the input)");
  add_format(report, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("UsageError", "input", e.what());
    return kInput;
  }

  try {
    analyze_flags.fit = fit_flags;
    if (synth->parsed()) return run_synth(common, synth_flags);
    if (ingest->parsed()) return run_ingest(common);
    if (screen->parsed()) return run_screen(common);
    if (fit->parsed()) return run_fit(common, fit_flags);
    if (diagnose->parsed()) return run_diagnose(common, fit_flags);
    if (forest->parsed()) return run_forest(common, forest_flags, model_path);
    if (evaluate->parsed()) return run_evaluate(common, forest_flags, fit_flags.exclude);
    if (analyze->parsed()) return run_analyze(common, forest_flags, analyze_flags);
    if (report->parsed()) return run_report(common);
  } catch (const fl::Error& e) {
    const auto cat = e.category();
    print_error(fl::to_string(e.kind()),
                cat == fl::ErrorCategory::Numerical ? "numerical" : cat == fl::ErrorCategory::Input ? "input" : "internal",
                e.what(), e.subject(), e.row());
    return cat == fl::ErrorCategory::Numerical ? kNumerical : cat == fl::ErrorCategory::Input ? kInput : kInternal;
  } catch (const fl::Json::parse_error& e) {
    print_error("ParseError", "input", e.what());
    return kInput;
  } catch (const fl::Json::exception& e) {
    print_error("SchemaError", "input", e.what());
    return kInput;
  } catch (const fs::filesystem_error& e) {
    print_error("IoError", "input", e.what());
    return kInput;
  } catch (const std::exception& e) {
    print_error("Internal", "internal", e.what());
    return kInternal;
  }
  return kInternal;
}
