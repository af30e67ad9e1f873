#pragma once

// JSON views of the library's result types, plus the versioned forest model
// document. Non-finite numbers serialize as null.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "factorlab/diagnostics.hpp"
#include "factorlab/eval.hpp"
#include "factorlab/forest.hpp"
#include "factorlab/linmodel.hpp"
#include <json.hpp>

namespace factorlab {

using Json = nlohmann::ordered_json;

/// Schema version stamped on every document this library writes.
inline constexpr std::string_view kSpecVersion = "1.0";

inline Json json_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json json_number(const std::optional<double>& v) { return v ? json_number(*v) : Json(nullptr); }

inline Json json_vector(std::span<const double> v) {
  Json out = Json::array();
  for (double x : v) out.push_back(json_number(x));
  return out;
}

/// Reads a number written by json_number; null comes back as NaN.
inline double number_from(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline Json to_json(const CoefficientRow& row) {
  return Json{{"name", row.name},
              {"estimate", json_number(row.estimate)},
              {"std_error", json_number(row.std_error)},
              {"t_value", json_number(row.t_value)},
              {"p_value", json_number(row.p_value)},
              {"stars", row.stars}};
}

inline Json to_json(const LinearFit& fit) {
  Json coefs = Json::array();
  for (const auto& row : coefficient_table(fit)) coefs.push_back(to_json(row));
  return Json{{"response", fit.response_name},
              {"predictors", fit.predictors},
              {"n", fit.n()},
              {"coefficients", std::move(coefs)},
              {"r_squared", json_number(fit.r_squared)},
              {"adj_r_squared", json_number(fit.adj_r_squared)},
              {"rse", json_number(fit.rse)},
              {"f_stat", json_number(fit.f_stat)},
              {"f_p_value", json_number(fit.f_p_value)},
              {"df_model", fit.df_model},
              {"df_resid", fit.df_resid}};
}

inline Json to_json(const ScreenRow& row) {
  return Json{{"predictor", row.predictor},
              {"f_stat", json_number(row.f_stat)},
              {"r_squared", json_number(row.r_squared)},
              {"rse", json_number(row.rse)},
              {"p_value", json_number(row.p_value)},
              {"stars", significance_stars(row.p_value)}};
}

inline Json to_json(const CorrelationMatrix& cm) {
  Json r = Json::array(), p = Json::array(), sig = Json::array();
  for (std::size_t i = 0; i < cm.names.size(); ++i) {
    r.push_back(json_vector(cm.r.row(i)));
    p.push_back(json_vector(cm.p_values.row(i)));
    Json row = Json::array();
    for (std::size_t j = 0; j < cm.names.size(); ++j) row.push_back(static_cast<bool>(cm.significant[i][j]));
    sig.push_back(std::move(row));
  }
  return Json{{"names", cm.names}, {"alpha", cm.alpha}, {"r", std::move(r)}, {"p_values", std::move(p)},
              {"significant", std::move(sig)}};
}

inline Json to_json(const DiagnosticsReport& d, double vif_threshold, double outlier_threshold) {
  Json vif = Json::array();
  for (const auto& e : d.vif) {
    vif.push_back(Json{{"predictor", e.predictor}, {"value", json_number(e.value)},
                       {"flagged", e.value >= vif_threshold}});
  }
  Json rvf = Json::array();
  for (const auto& p : d.rvf.points) rvf.push_back(Json{{"fitted", p.x}, {"residual", p.y}});
  Json funnel = nullptr;
  if (d.rvf.funnel) {
    funnel = Json{{"correlation", json_number(d.rvf.funnel->correlation)},
                  {"p_value", json_number(d.rvf.funnel->p_value)}};
  }
  Json qq = Json::array();
  for (const auto& p : d.qq) qq.push_back(Json{{"theoretical", p.theoretical}, {"sample", p.sample}});
  Json acf = Json::array();
  for (const auto& p : d.acf.points) acf.push_back(Json{{"lag", p.lag}, {"value", p.value}});
  Json cr = Json::array();
  for (const auto& s : d.crplots) {
    Json pts = Json::array();
    for (const auto& p : s.points) pts.push_back(Json{{"x", p.x}, {"partial_residual", p.y}});
    cr.push_back(Json{{"predictor", s.predictor}, {"points", std::move(pts)}});
  }
  return Json{{"vif_threshold", vif_threshold},
              {"vif", std::move(vif)},
              {"vif_flagged", d.vif_flagged},
              {"outlier_threshold", outlier_threshold},
              {"outlier_rows", d.outlier_indices},
              {"studentized", json_vector(d.studentized)},
              {"leverage", json_vector(d.leverage)},
              {"residual_vs_fitted", std::move(rvf)},
              {"funnel", std::move(funnel)},
              {"qq", std::move(qq)},
              {"acf", std::move(acf)},
              {"acf_band", d.acf.band},
              {"component_residual", std::move(cr)}};
}

inline Json to_json(const ForestConfig& c) {
  return Json{{"n_trees", c.n_trees}, {"m_try", c.m_try},   {"min_leaf", c.min_leaf},
              {"max_depth", c.max_depth}, {"seed", c.seed}, {"bootstrap", c.bootstrap}};
}

inline Json to_json(const EvalSummary& s) {
  Json folds = Json::array();
  for (const auto& f : s.per_fold) {
    folds.push_back(Json{{"fold", f.fold}, {"size", f.size}, {"mae", json_number(f.mae)},
                         {"rmse", json_number(f.rmse)}, {"r", json_number(f.r)}});
  }
  std::optional<double> r2;
  if (s.pearson_r) r2 = *s.pearson_r * *s.pearson_r;
  return Json{{"model", s.model_name},
              {"k", s.k},
              {"seed", s.seed},
              {"mae", json_number(s.mae)},
              {"rmse", json_number(s.rmse)},
              {"r", json_number(s.pearson_r)},
              {"r_squared", json_number(r2)},
              {"per_fold", std::move(folds)},
              {"actual", json_vector(s.actual)},
              {"predicted", json_vector(s.oof_predictions)}};
}

inline Json to_json(const ComparisonResult& c) {
  return Json{{"model_a", c.model_a},
              {"model_b", c.model_b},
              {"mean_a", json_number(c.mean_a)},
              {"mean_b", json_number(c.mean_b)},
              {"mean_diff", json_number(c.mean_diff)},
              {"t_stat", json_number(c.t_stat)},
              {"p_value", json_number(c.p_value)},
              {"df", c.df},
              {"alpha", c.alpha},
              {"significant", c.significant()},
              {"winner", c.winner}};
}

// ---------------------------------------------------------------------------
// Forest model document
// ---------------------------------------------------------------------------

inline Json forest_to_json(const ForestModel& model) {
  Json trees = Json::array();
  for (const auto& tree : model.trees) {
    Json feature = Json::array(), threshold = Json::array(), left = Json::array(), right = Json::array(),
         value = Json::array(), count = Json::array(), gain = Json::array();
    for (const auto& n : tree.nodes()) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
      count.push_back(n.count);
      gain.push_back(n.gain);
    }
    trees.push_back(Json{{"feature", std::move(feature)}, {"threshold", std::move(threshold)},
                         {"left", std::move(left)},       {"right", std::move(right)},
                         {"value", std::move(value)},     {"count", std::move(count)},
                         {"gain", std::move(gain)}});
  }
  return Json{{"spec_version", kSpecVersion},
              {"kind", "random_forest_regressor"},
              {"response", model.response_name},
              {"feature_names", model.feature_names},
              {"config", to_json(model.config)},
              {"trees", std::move(trees)}};
}

inline ForestModel forest_from_json(const Json& doc) {
  try {
    if (doc.at("spec_version").get<std::string>() != kSpecVersion) {
      throw Error(ErrorKind::SchemaError, "unsupported model version " + doc.at("spec_version").get<std::string>());
    }
    if (doc.at("kind").get<std::string>() != "random_forest_regressor") {
      throw Error(ErrorKind::SchemaError, "document is not a forest model");
    }
    ForestModel model;
    model.response_name = doc.at("response").get<std::string>();
    model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    const Json& c = doc.at("config");
    model.config.n_trees = c.at("n_trees").get<std::size_t>();
    model.config.m_try = c.at("m_try").get<std::size_t>();
    model.config.min_leaf = c.at("min_leaf").get<std::size_t>();
    model.config.max_depth = c.at("max_depth").get<std::size_t>();
    model.config.seed = c.at("seed").get<std::uint64_t>();
    model.config.bootstrap = c.at("bootstrap").get<bool>();
    for (const Json& t : doc.at("trees")) {
      const auto feature = t.at("feature").get<std::vector<std::int32_t>>();
      const auto threshold = t.at("threshold").get<std::vector<double>>();
      const auto left = t.at("left").get<std::vector<std::uint32_t>>();
      const auto right = t.at("right").get<std::vector<std::uint32_t>>();
      const auto value = t.at("value").get<std::vector<double>>();
      const auto count = t.at("count").get<std::vector<std::uint32_t>>();
      const auto gain = t.at("gain").get<std::vector<double>>();
      const std::size_t n = feature.size();
      if (threshold.size() != n || left.size() != n || right.size() != n || value.size() != n ||
          count.size() != n || gain.size() != n) {
        throw Error(ErrorKind::SchemaError, "tree arrays differ in length");
      }
      std::vector<TreeNode> nodes(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (feature[i] >= static_cast<std::int32_t>(model.feature_names.size())) {
          throw Error(ErrorKind::SchemaError, "tree references an unknown feature");
        }
        nodes[i] = {feature[i], threshold[i], left[i], right[i], value[i], count[i], gain[i]};
      }
      model.trees.emplace_back(std::move(nodes));
    }
    if (model.trees.size() != model.config.n_trees) {
      throw Error(ErrorKind::SchemaError, "tree count does not match n_trees");
    }
    return model;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::SchemaError, std::string("malformed forest model: ") + e.what());
  }
}

}  // namespace factorlab
