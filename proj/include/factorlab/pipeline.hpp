#pragma once

// End-to-end analysis: screening, correlation, collinearity, fit and outlier
// handling, diagnostics, forest training and cross-validated comparison.
// Everything is gathered into one JSON report; rendering lives in report.hpp.

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "factorlab/dataset.hpp"
#include "factorlab/diagnostics.hpp"
#include "factorlab/eval.hpp"
#include "factorlab/forest.hpp"
#include "factorlab/serialize.hpp"
#include "factorlab/linmodel.hpp"

namespace factorlab {

struct AnalyzeOptions {
  std::vector<std::string> predictors;  // empty: every non-response column
  std::vector<std::string> exclude;
  std::vector<TransformSpec> transforms;
  bool drop_vif_flagged = false;
  bool remove_outliers = false;
  std::size_t k = 10;
  std::uint64_t seed = 42;
  double alpha = kDefaultAlpha;
  double outlier_threshold = kDefaultOutlierThreshold;
  double vif_threshold = kDefaultVifThreshold;
  ForestConfig forest;  // seed is replaced by `seed`
};

inline Json document_header(std::string_view kind) {
  return Json{{"spec_version", kSpecVersion}, {"kind", kind}};
}

/// Predictors named in `options`, minus exclusions, validated against the frame.
inline std::vector<std::string> resolve_predictors(const FactorFrame& frame, const std::vector<std::string>& wanted,
                                                   const std::vector<std::string>& exclude = {}) {
  std::vector<std::string> out;
  for (const auto& raw : wanted.empty() ? frame.predictor_names() : wanted) {
    const std::string name = to_lower(raw);
    frame.index_of(name);
    if (name == frame.response_name()) {
      throw Error(ErrorKind::InvalidArgument, "response " + name + " cannot also be a predictor", name);
    }
    if (std::find(out.begin(), out.end(), name) != out.end()) {
      throw Error(ErrorKind::InvalidArgument, "predictor " + name + " listed twice", name);
    }
    out.push_back(name);
  }
  for (const auto& raw : exclude) {
    const std::string name = to_lower(raw);
    frame.index_of(name);
    std::erase(out, name);
  }
  if (out.empty()) throw Error(ErrorKind::InvalidArgument, "no predictors left to model");
  return out;
}

inline Json screening_json(const FactorFrame& frame, const std::vector<std::string>& predictors) {
  Json rows = Json::array();
  for (const auto& row : screen_predictors(frame, predictors, frame.response_name())) rows.push_back(to_json(row));
  return rows;
}

inline Json vif_json(const std::vector<VifEntry>& entries, double threshold) {
  Json out = Json::array();
  for (const auto& e : entries) {
    out.push_back(Json{{"predictor", e.predictor}, {"value", json_number(e.value)}, {"flagged", e.value >= threshold}});
  }
  return out;
}

/// Drops the predictor with the largest VIF at or above `threshold`, one at a
/// time, until nothing is flagged or a single predictor remains. Returns the
/// rounds of VIF values that were computed.
inline Json prune_collinear(const FactorFrame& frame, std::vector<std::string>& predictors, double threshold,
                            std::vector<std::string>& dropped) {
  Json rounds = Json::array();
  while (predictors.size() >= 2) {
    const auto entries = vif(frame, predictors);
    rounds.push_back(vif_json(entries, threshold));
    auto worst = std::max_element(entries.begin(), entries.end(),
                                  [](const VifEntry& a, const VifEntry& b) { return a.value < b.value; });
    if (worst->value < threshold) break;
    dropped.push_back(worst->predictor);
    std::erase(predictors, worst->predictor);
  }
  return rounds;
}

inline Json fit_json(const LinearFit& fit, const std::vector<std::size_t>& source_rows, double outlier_threshold) {
  Json j = to_json(fit);
  Json flagged = Json::array();
  for (std::size_t r : flag_outliers(fit, outlier_threshold)) flagged.push_back(source_rows[r - 1]);
  j["outlier_rows"] = std::move(flagged);
  return j;
}

struct AnalysisResult {
  Json report;
  ForestModel forest;
};

inline AnalysisResult run_analysis(FactorFrame frame, const AnalyzeOptions& options) {
  if (options.k < 2) throw Error(ErrorKind::InvalidArgument, "k must be at least 2");
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  if (!(options.outlier_threshold > 0.0)) throw Error(ErrorKind::InvalidArgument, "outlier threshold must be positive");
  if (!(options.vif_threshold >= 1.0)) throw Error(ErrorKind::InvalidArgument, "VIF threshold must be at least 1");

  for (const auto& t : options.transforms) frame = apply_transform(frame, t);
  std::vector<std::string> predictors = resolve_predictors(frame, options.predictors, options.exclude);
  const std::string response = frame.response_name();

  Json report = document_header("analysis_report");
  Json transforms = Json::array();
  for (const auto& t : options.transforms) transforms.push_back(Json{{"column", t.column}, {"kind", to_string(t.kind)}});
  ForestConfig forest_cfg = options.forest;
  forest_cfg.seed = options.seed;
  report["settings"] = Json{{"response", response},
                            {"predictors", predictors},
                            {"excluded", options.exclude},
                            {"transforms", std::move(transforms)},
                            {"seed", options.seed},
                            {"k", options.k},
                            {"alpha", options.alpha},
                            {"outlier_threshold", options.outlier_threshold},
                            {"vif_threshold", options.vif_threshold},
                            {"drop_vif_flagged", options.drop_vif_flagged},
                            {"remove_outliers", options.remove_outliers}};
  report["input"] = Json{{"rows", frame.rows()}, {"columns", frame.column_names()}};

  // Series for the response-over-time figure.
  Json series = Json::array();
  {
    const Vector term = frame.column(frame.term_column());
    const Vector panel = frame.column(frame.panel_column());
    const Vector y = frame.column(response);
    for (std::size_t i = 0; i < frame.rows(); ++i) series.push_back(Json{{"term", term[i]}, {"panel", panel[i]}, {"value", y[i]}});
  }
  report["response_series"] = std::move(series);

  report["screening"] = screening_json(frame, predictors);

  {
    std::vector<std::string> columns = predictors;
    columns.push_back(response);
    Json corr = Json::array();
    for (double a : {0.05, 0.01}) corr.push_back(to_json(pearson_matrix(frame, columns, a)));
    report["correlation"] = std::move(corr);
  }

  {
    std::vector<std::string> dropped;
    Json rounds = Json::array();
    if (predictors.size() >= 2) {
      if (options.drop_vif_flagged) {
        rounds = prune_collinear(frame, predictors, options.vif_threshold, dropped);
      } else {
        rounds.push_back(vif_json(vif(frame, predictors), options.vif_threshold));
      }
    }
    report["collinearity"] = Json{{"threshold", options.vif_threshold},
                                  {"initial", rounds.empty() ? Json::array() : rounds.front()},
                                  {"rounds", rounds},
                                  {"dropped", dropped},
                                  {"retained", predictors}};
  }

  std::vector<std::size_t> source_rows(frame.rows());
  for (std::size_t i = 0; i < source_rows.size(); ++i) source_rows[i] = i + 1;

  const LinearFit initial = fit_ols(frame, predictors, response);
  report["initial_fit"] = fit_json(initial, source_rows, options.outlier_threshold);

  LinearFit fit = initial;
  std::vector<std::size_t> removed;
  if (options.remove_outliers) {
    const auto flagged = flag_outliers(initial, options.outlier_threshold);
    if (!flagged.empty()) {
      for (std::size_t r : flagged) removed.push_back(source_rows[r - 1]);
      frame = remove_rows(frame, from_one_based(flagged));
      std::erase_if(source_rows, [&](std::size_t r) { return std::find(removed.begin(), removed.end(), r) != removed.end(); });
      fit = fit_ols(frame, predictors, response);
    }
  }
  report["outliers"] = Json{{"threshold", options.outlier_threshold},
                            {"flagged", report["initial_fit"]["outlier_rows"]},
                            {"removed", removed},
                            {"rows_after", frame.rows()}};
  report["final_fit"] = fit_json(fit, source_rows, options.outlier_threshold);

  DiagnosticsOptions dopts;
  dopts.outlier_threshold = options.outlier_threshold;
  dopts.vif_threshold = options.vif_threshold;
  const DiagnosticsReport diag = diagnose(frame, fit, dopts);
  Json diag_json = to_json(diag, options.vif_threshold, options.outlier_threshold);
  Json outlier_rows = Json::array();
  for (std::size_t r : diag.outlier_indices) outlier_rows.push_back(source_rows[r - 1]);
  diag_json["outlier_rows"] = std::move(outlier_rows);
  diag_json["source_rows"] = source_rows;
  diag_json["fitted"] = json_vector(fit.fitted);
  diag_json["residuals"] = json_vector(fit.residuals);
  report["diagnostics"] = std::move(diag_json);

  Json ladder = Json::array();
  for (const auto& p : predictors) {
    if (p == frame.term_column() || p == frame.panel_column()) continue;
    Json rungs = Json::array();
    for (const auto& rung : tukey_ladder(frame, p, response)) {
      rungs.push_back(Json{{"kind", to_string(rung.kind)}, {"r_squared", json_number(rung.r_squared)}});
    }
    ladder.push_back(Json{{"predictor", p},
                          {"suggestion", to_string(tukey_suggest(frame, p, response).kind)},
                          {"rungs", std::move(rungs)}});
  }
  report["transform_ladder"] = std::move(ladder);

  AnalysisResult result;
  result.forest = train_forest(frame, predictors, response, forest_cfg);
  Json importance = Json::array();
  for (const auto& fi : feature_importance(result.forest)) {
    importance.push_back(Json{{"feature", fi.feature}, {"value", fi.value}});
  }
  report["forest"] = Json{{"config", to_json(result.forest.config)},
                          {"importance", std::move(importance)},
                          {"model_file", "model/forest.json"}};

  const EvalSummary lin = kfold_cv(frame, LinearSpec{predictors}, options.k, options.seed);
  const EvalSummary rf = kfold_cv(frame, ForestSpec{predictors, forest_cfg}, options.k, options.seed);
  const ComparisonResult cmp = compare_cv(rf, lin, options.alpha);
  Json comparison = to_json(cmp);
  comparison["pairing"] = "per-fold MAE";
  comparison["marker"] = cmp.significant() ? "*" : "";
  report["evaluation"] = Json{{"k", options.k},
                              {"seed", options.seed},
                              {"models", Json::array({to_json(lin), to_json(rf)})},
                              {"comparison", std::move(comparison)}};

  result.report = std::move(report);
  return result;
}

}  // namespace factorlab
