#pragma once

// Ordinary least squares with coefficient inference, single-predictor
// screening and out-of-sample prediction.

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "factorlab/dataset.hpp"
#include "factorlab/error.hpp"
#include "factorlab/numkernel.hpp"

namespace factorlab {

inline constexpr std::string_view kInterceptName = "(Intercept)";

struct FitOptions {
  bool intercept = true;
};

/// Everything a fitted OLS model reports. Coefficient vectors are aligned
/// with `predictor_names`, which starts with "(Intercept)" when an intercept
/// was fitted.
struct LinearFit {
  std::string response_name;
  std::vector<std::string> predictors;       // slopes only
  std::vector<std::string> predictor_names;  // intercept first, then slopes
  bool has_intercept = true;

  Vector beta;
  Vector se;
  Vector t_values;
  Vector p_values;

  double r_squared = 0.0;
  double adj_r_squared = 0.0;
  double rse = 0.0;
  double f_stat = 0.0;
  double f_p_value = 1.0;
  std::size_t df_model = 0;
  std::size_t df_resid = 0;
  double rss = 0.0;
  double tss = 0.0;

  Vector response;
  Vector fitted;
  Vector residuals;
  Vector leverage;

  std::size_t n() const noexcept { return response.size(); }
  std::size_t n_params() const noexcept { return beta.size(); }
  double intercept() const noexcept { return has_intercept ? beta.front() : 0.0; }

  /// Coefficient for a slope predictor.
  double slope(std::string_view name) const {
    const std::size_t offset = has_intercept ? 1 : 0;
    for (std::size_t j = 0; j < predictors.size(); ++j)
      if (predictors[j] == name) return beta[j + offset];
    throw Error(ErrorKind::UnknownColumn, "predictor " + std::string(name) + " is not in the fit",
                std::string(name));
  }
};

namespace detail {

inline double t_from_estimate(double estimate, double se) noexcept {
  if (se > 0.0) return estimate / se;
  if (estimate == 0.0) return 0.0;
  return estimate > 0.0 ? std::numeric_limits<double>::infinity()
                        : -std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Fits the response on an explicit design (no intercept column added).
/// `names` labels the design columns for error reporting.
inline LinearFit fit_design(const Matrix& design, std::span<const double> y,
                            std::vector<std::string> names, bool has_intercept) {
  const std::size_t n = design.rows();
  const std::size_t params = design.cols();
  if (y.size() != n) throw Error(ErrorKind::DimensionMismatch, "response length != design rows");
  if (n <= params) {
    throw Error(ErrorKind::InsufficientRows,
                "need more than " + std::to_string(params) + " rows, have " + std::to_string(n));
  }
  const HouseholderQr qr(design);
  if (auto k = qr.deficient_column()) {
    throw Error(ErrorKind::RankDeficient,
                "design column '" + names[*k] + "' is linearly dependent on earlier columns", names[*k]);
  }

  LinearFit fit;
  fit.has_intercept = has_intercept;
  fit.predictor_names = std::move(names);
  fit.predictors.assign(fit.predictor_names.begin() + (has_intercept ? 1 : 0), fit.predictor_names.end());
  fit.response.assign(y.begin(), y.end());
  fit.beta = qr.solve(y);
  fit.fitted.assign(n, 0.0);
  fit.residuals.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < params; ++j) acc += design(i, j) * fit.beta[j];
    fit.fitted[i] = acc;
    fit.residuals[i] = y[i] - acc;
    fit.rss += fit.residuals[i] * fit.residuals[i];
  }
  if (has_intercept) {
    fit.tss = centered_sum_squares(y);
  } else {
    for (double v : y) fit.tss += v * v;
  }
  fit.df_model = params - (has_intercept ? 1 : 0);
  fit.df_resid = n - params;

  if (fit.tss > 0.0) {
    fit.r_squared = std::clamp(1.0 - fit.rss / fit.tss, 0.0, 1.0);
  } else {
    fit.r_squared = fit.rss == 0.0 ? 1.0 : 0.0;
  }
  const double df_resid = static_cast<double>(fit.df_resid);
  const double df_total = static_cast<double>(n - (has_intercept ? 1 : 0));
  fit.adj_r_squared = 1.0 - (1.0 - fit.r_squared) * df_total / df_resid;
  fit.rse = std::sqrt(fit.rss / df_resid);

  if (fit.df_model == 0) {
    fit.f_stat = 0.0;
    fit.f_p_value = 1.0;
  } else if (fit.r_squared >= 1.0) {
    fit.f_stat = std::numeric_limits<double>::infinity();
    fit.f_p_value = 0.0;
  } else {
    fit.f_stat = (fit.r_squared / static_cast<double>(fit.df_model)) / ((1.0 - fit.r_squared) / df_resid);
    fit.f_p_value = f_p_upper(fit.f_stat, static_cast<double>(fit.df_model), df_resid);
  }

  const Vector inv_gram = qr.inverse_gram_diagonal();
  fit.se.resize(params);
  fit.t_values.resize(params);
  fit.p_values.resize(params);
  for (std::size_t j = 0; j < params; ++j) {
    fit.se[j] = fit.rse * std::sqrt(inv_gram[j]);
    fit.t_values[j] = detail::t_from_estimate(fit.beta[j], fit.se[j]);
    fit.p_values[j] = student_t_p_two_sided(fit.t_values[j], df_resid);
  }
  fit.leverage = qr.leverage();
  return fit;
}

/// Design matrix for `predictors`, with a leading column of ones when
/// `intercept` is set.
inline Matrix design_matrix(const FactorFrame& frame, std::span<const std::string> predictors,
                            bool intercept) {
  const Matrix block = frame.select(predictors);
  const std::size_t offset = intercept ? 1 : 0;
  Matrix x(frame.rows(), predictors.size() + offset);
  for (std::size_t i = 0; i < frame.rows(); ++i) {
    if (intercept) x(i, 0) = 1.0;
    for (std::size_t j = 0; j < predictors.size(); ++j) x(i, j + offset) = block(i, j);
  }
  return x;
}

/// OLS of `response` on `predictors` (plus intercept unless suppressed).
inline LinearFit fit_ols(const FactorFrame& frame, std::span<const std::string> predictors,
                         const std::string& response, FitOptions options = {}) {
  const Vector y = frame.column(response);
  for (const auto& p : predictors) {
    frame.index_of(p);
    if (p == response) {
      throw Error(ErrorKind::InvalidArgument, "response " + response + " cannot also be a predictor", p);
    }
  }
  if (predictors.empty() && !options.intercept) {
    throw Error(ErrorKind::InvalidArgument, "model has no terms");
  }
  std::vector<std::string> names;
  if (options.intercept) names.emplace_back(kInterceptName);
  names.insert(names.end(), predictors.begin(), predictors.end());
  const std::size_t params = names.size();
  if (frame.rows() <= params) {
    throw Error(ErrorKind::InsufficientRows, "fitting " + std::to_string(params) + " parameters needs more than " +
                                                 std::to_string(params) + " rows, have " +
                                                 std::to_string(frame.rows()));
  }
  LinearFit fit = fit_design(design_matrix(frame, predictors, options.intercept), y, std::move(names),
                             options.intercept);
  fit.response_name = response;
  return fit;
}

inline LinearFit fit_ols(const FactorFrame& frame, const std::vector<std::string>& predictors,
                         const std::string& response, FitOptions options = {}) {
  return fit_ols(frame, std::span<const std::string>(predictors), response, options);
}

/// Intercept + rows * slopes; `rows` has one column per slope predictor.
inline Vector predict(const LinearFit& fit, const Matrix& rows) {
  if (rows.cols() != fit.predictors.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "expected " + std::to_string(fit.predictors.size()) + " predictor columns, got " +
                    std::to_string(rows.cols()));
  }
  const std::size_t offset = fit.has_intercept ? 1 : 0;
  Vector out(rows.rows(), fit.intercept());
  for (std::size_t i = 0; i < rows.rows(); ++i)
    for (std::size_t j = 0; j < rows.cols(); ++j) out[i] += rows(i, j) * fit.beta[j + offset];
  return out;
}

// ---------------------------------------------------------------------------
// Reporting helpers
// ---------------------------------------------------------------------------

/// **** p<0.001, *** p<0.01, ** p<0.05, * p<0.1.
inline std::string significance_stars(double p) {
  if (p < 0.001) return "****";
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.1) return "*";
  return "";
}

struct CoefficientRow {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double t_value = 0.0;
  double p_value = 1.0;
  std::string stars;
};

inline std::vector<CoefficientRow> coefficient_table(const LinearFit& fit) {
  std::vector<CoefficientRow> rows;
  rows.reserve(fit.beta.size());
  for (std::size_t j = 0; j < fit.beta.size(); ++j) {
    rows.push_back({fit.predictor_names[j], fit.beta[j], fit.se[j], fit.t_values[j], fit.p_values[j],
                    significance_stars(fit.p_values[j])});
  }
  return rows;
}

/// One simple regression response ~ predictor.
struct ScreenRow {
  std::string predictor;
  double f_stat = 0.0;
  double r_squared = 0.0;
  double rse = 0.0;
  double slope = 0.0;
  double slope_t = 0.0;
  double p_value = 1.0;
};

inline void require_variation(const FactorFrame& frame, const std::string& name) {
  if (!(centered_sum_squares(frame.column(name)) > 0.0)) {
    throw Error(ErrorKind::ConstantPredictor, "predictor " + name + " has zero variance", name);
  }
}

/// Per-predictor simple regressions, in the order given.
inline std::vector<ScreenRow> screen_predictors(const FactorFrame& frame,
                                                std::span<const std::string> predictors,
                                                const std::string& response) {
  std::vector<ScreenRow> rows;
  rows.reserve(predictors.size());
  for (const auto& name : predictors) {
    require_variation(frame, name);
    const std::vector<std::string> one{name};
    const LinearFit fit = fit_ols(frame, one, response);
    rows.push_back({name, fit.f_stat, fit.r_squared, fit.rse, fit.beta[1], fit.t_values[1], fit.f_p_value});
  }
  return rows;
}

inline std::vector<ScreenRow> screen_predictors(const FactorFrame& frame,
                                                const std::vector<std::string>& predictors,
                                                const std::string& response) {
  return screen_predictors(frame, std::span<const std::string>(predictors), response);
}

}  // namespace factorlab
