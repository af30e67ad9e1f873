#pragma once

// Linear-model assumption checks: collinearity (VIF), outlying observations,
// error-variance structure, residual normality, residual autocorrelation,
// per-predictor linearity and the predictor correlation matrix.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "factorlab/dataset.hpp"
#include "factorlab/error.hpp"
#include "factorlab/linmodel.hpp"
#include "factorlab/numkernel.hpp"

namespace factorlab {

inline constexpr double kDefaultOutlierThreshold = 3.0;
inline constexpr double kDefaultVifThreshold = 4.0;

// ---------------------------------------------------------------------------
// Variance inflation
// ---------------------------------------------------------------------------

struct VifEntry {
  std::string predictor;
  double value = 1.0;
};

/// VIF_j = 1 / (1 - R^2_j), R^2_j from regressing predictor j on the other
/// predictors with an intercept. Exact collinearity raises CollinearSingular.
inline std::vector<VifEntry> vif(const FactorFrame& frame, std::span<const std::string> predictors) {
  if (predictors.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, "VIF needs at least two predictors");
  }
  {
    std::vector<std::string> names{std::string(kInterceptName)};
    names.insert(names.end(), predictors.begin(), predictors.end());
    const HouseholderQr qr(design_matrix(frame, predictors, true));
    if (auto k = qr.deficient_column()) {
      throw Error(ErrorKind::CollinearSingular,
                  "predictor '" + names[*k] + "' is an exact linear combination of the others", names[*k]);
    }
  }
  std::vector<VifEntry> out;
  out.reserve(predictors.size());
  for (std::size_t j = 0; j < predictors.size(); ++j) {
    std::vector<std::string> others;
    for (std::size_t k = 0; k < predictors.size(); ++k)
      if (k != j) others.push_back(predictors[k]);
    LinearFit aux;
    try {
      aux = fit_ols(frame, others, predictors[j]);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::RankDeficient) {
        throw Error(ErrorKind::CollinearSingular, "auxiliary regression for " + predictors[j] +
                                                      " is rank deficient", predictors[j]);
      }
      throw;
    }
    if (!(aux.rss > 0.0)) {
      throw Error(ErrorKind::CollinearSingular,
                  "predictor '" + predictors[j] + "' is fully explained by the others", predictors[j]);
    }
    if (!(aux.tss > 0.0)) {
      throw Error(ErrorKind::ConstantPredictor, "predictor " + predictors[j] + " has zero variance",
                  predictors[j]);
    }
    out.push_back({predictors[j], std::max(1.0, aux.tss / aux.rss)});
  }
  return out;
}

inline std::vector<VifEntry> vif(const FactorFrame& frame, const std::vector<std::string>& predictors) {
  return vif(frame, std::span<const std::string>(predictors));
}

/// Predictors whose VIF reaches `threshold`.
inline std::vector<std::string> vif_flagged(std::span<const VifEntry> entries,
                                            double threshold = kDefaultVifThreshold) {
  std::vector<std::string> out;
  for (const auto& e : entries)
    if (e.value >= threshold) out.push_back(e.predictor);
  return out;
}

// ---------------------------------------------------------------------------
// Residual scaling and outliers
// ---------------------------------------------------------------------------

/// e_i / (rse * sqrt(1 - h_ii)); zero where undefined.
inline Vector internally_standardized(const LinearFit& fit) {
  Vector out(fit.n(), 0.0);
  if (!(fit.rse > 0.0)) return out;
  for (std::size_t i = 0; i < fit.n(); ++i) {
    const double room = 1.0 - fit.leverage[i];
    if (room > 1e-12) out[i] = fit.residuals[i] / (fit.rse * std::sqrt(room));
  }
  return out;
}

/// Leave-one-out (externally) studentized residuals.
inline Vector externally_studentized(const LinearFit& fit) {
  if (fit.df_resid < 2) {
    throw Error(ErrorKind::InsufficientRows, "studentized residuals need at least 2 residual df");
  }
  const double loo_df = static_cast<double>(fit.df_resid - 1);
  Vector out(fit.n(), 0.0);
  for (std::size_t i = 0; i < fit.n(); ++i) {
    const double e = fit.residuals[i];
    const double room = 1.0 - fit.leverage[i];
    if (room <= 1e-12 || e == 0.0) continue;
    const double s2 = (fit.rss - e * e / room) / loo_df;
    if (s2 > 0.0) {
      out[i] = e / std::sqrt(s2 * room);
    } else {
      out[i] = e > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    }
  }
  return out;
}

/// 1-based rows whose |externally studentized residual| exceeds `threshold`,
/// ascending.
inline std::vector<std::size_t> flag_outliers(const LinearFit& fit,
                                              double threshold = kDefaultOutlierThreshold) {
  if (!(threshold > 0.0)) throw Error(ErrorKind::InvalidArgument, "outlier threshold must be positive");
  const Vector t = externally_studentized(fit);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (std::abs(t[i]) > threshold) rows.push_back(i + 1);
  return rows;
}

// ---------------------------------------------------------------------------
// Autocorrelation
// ---------------------------------------------------------------------------

struct AcfPoint {
  std::size_t lag = 0;
  double value = 0.0;
};

struct AcfResult {
  std::vector<AcfPoint> points;  // lags 0..max_lag
  double band = 0.0;             // +-1.96 / sqrt(n)
};

inline std::size_t default_acf_lag(std::size_t n) noexcept {
  return n == 0 ? 0 : std::min<std::size_t>(20, n - 1);
}

/// Sample autocorrelation normalised by the lag-0 sum of squares.
inline AcfResult acf(std::span<const double> series, std::size_t max_lag) {
  const std::size_t n = series.size();
  if (n < 2) throw Error(ErrorKind::InsufficientRows, "ACF needs at least two observations");
  if (max_lag >= n) {
    throw Error(ErrorKind::LagTooLarge,
                "max lag " + std::to_string(max_lag) + " must be below series length " + std::to_string(n));
  }
  const double m = mean_of(series);
  Vector centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = series[i] - m;
  double denom = 0.0;
  for (double c : centered) denom += c * c;
  if (!(denom > 0.0)) throw Error(ErrorKind::ZeroVariance, "series has zero variance");

  AcfResult out;
  out.band = 1.96 / std::sqrt(static_cast<double>(n));
  out.points.reserve(max_lag + 1);
  out.points.push_back({0, 1.0});
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double num = 0.0;
    for (std::size_t t = 0; t + k < n; ++t) num += centered[t] * centered[t + k];
    out.points.push_back({k, num / denom});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normal Q-Q
// ---------------------------------------------------------------------------

struct QqPoint {
  double theoretical = 0.0;
  double sample = 0.0;
};

/// Sorted values against normal quantiles at (i - 0.5) / n.
inline std::vector<QqPoint> qq_points(std::span<const double> standardized) {
  Vector sorted(standardized.begin(), standardized.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<QqPoint> out;
  out.reserve(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    out.push_back({normal_quantile((static_cast<double>(i) + 0.5) / n), sorted[i]});
  }
  return out;
}

inline std::vector<QqPoint> qq_points(const LinearFit& fit) {
  return qq_points(internally_standardized(fit));
}

// ---------------------------------------------------------------------------
// Residuals vs fitted
// ---------------------------------------------------------------------------

struct ScatterPoint {
  double x = 0.0;
  double y = 0.0;
};

/// corr(|residual|, fitted) with its two-sided p-value. A funnel-shaped
/// residual plot shows up as a significant positive correlation.
struct HeteroIndicator {
  double correlation = 0.0;
  double p_value = 1.0;
};

inline constexpr std::size_t kMinRowsForFunnel = 10;

struct ResidualVsFitted {
  std::vector<ScatterPoint> points;  // (fitted, residual), row order
  std::optional<HeteroIndicator> funnel;
};

inline HeteroIndicator funnel_indicator(std::span<const double> fitted, std::span<const double> residuals) {
  Vector magnitude(residuals.size());
  for (std::size_t i = 0; i < residuals.size(); ++i) magnitude[i] = std::abs(residuals[i]);
  const auto r = correlation_or_none(magnitude, fitted);
  if (!r) return {0.0, 1.0};
  return {*r, correlation_p_value(*r, residuals.size())};
}

/// True when every residual is zero up to rounding relative to the response
/// scale (an exact fit).
inline bool residuals_negligible(const LinearFit& fit) noexcept {
  double scale = 1.0;
  for (double v : fit.response) scale = std::max(scale, std::abs(v));
  for (double e : fit.residuals)
    if (std::abs(e) > 1e-10 * scale) return false;
  return true;
}

inline ResidualVsFitted residual_vs_fitted(const LinearFit& fit) {
  ResidualVsFitted out;
  out.points.reserve(fit.n());
  for (std::size_t i = 0; i < fit.n(); ++i) out.points.push_back({fit.fitted[i], fit.residuals[i]});
  if (fit.n() >= kMinRowsForFunnel) {
    out.funnel = residuals_negligible(fit) ? HeteroIndicator{0.0, 1.0}
                                           : funnel_indicator(fit.fitted, fit.residuals);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Component + residual
// ---------------------------------------------------------------------------

/// (x_ij, e_i + beta_j x_ij), ordered by x. `frame` must be the fitted frame.
inline std::vector<ScatterPoint> component_residual(const LinearFit& fit, const FactorFrame& frame,
                                                    const std::string& predictor) {
  const double slope = fit.slope(predictor);
  if (frame.rows() != fit.n()) {
    throw Error(ErrorKind::DimensionMismatch, "frame rows do not match the fitted model");
  }
  const Vector x = frame.column(predictor);
  std::vector<ScatterPoint> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = {x[i], fit.residuals[i] + slope * x[i]};
  std::stable_sort(out.begin(), out.end(),
                   [](const ScatterPoint& a, const ScatterPoint& b) { return a.x < b.x; });
  return out;
}

// ---------------------------------------------------------------------------
// Power-ladder suggestion
// ---------------------------------------------------------------------------

struct LadderRung {
  TransformKind kind = TransformKind::Identity;
  std::optional<double> r_squared;  // nullopt when the rung was skipped
};

/// Simple-regression R^2 of the response on each rung of
/// {identity, log, sqrt, square}. Rungs whose domain is violated, or that
/// collapse the predictor to a constant, are skipped.
inline std::vector<LadderRung> tukey_ladder(const FactorFrame& frame, const std::string& predictor,
                                            const std::string& response) {
  require_variation(frame, predictor);
  const Vector x = frame.column(predictor);
  const Vector y = frame.column(response);
  std::vector<LadderRung> rungs;
  for (auto kind : {TransformKind::Identity, TransformKind::Log, TransformKind::Sqrt, TransformKind::Square}) {
    LadderRung rung{kind, std::nullopt};
    try {
      const Vector tx = transform_values(x, kind, predictor);
      if (all_finite(tx)) {
        if (auto r = correlation_or_none(tx, y)) rung.r_squared = (*r) * (*r);
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DomainError) throw;
    }
    rungs.push_back(rung);
  }
  return rungs;
}

/// Rung with the highest R^2; a rung must beat the current best by more than
/// 1e-12 to displace it, so ties stay with identity.
inline TransformSpec tukey_suggest(const FactorFrame& frame, const std::string& predictor,
                                   const std::string& response) {
  const auto rungs = tukey_ladder(frame, predictor, response);
  TransformKind best = TransformKind::Identity;
  double best_r2 = rungs.front().r_squared.value_or(-1.0);
  for (const auto& rung : rungs) {
    if (rung.r_squared && *rung.r_squared > best_r2 + 1e-12) {
      best = rung.kind;
      best_r2 = *rung.r_squared;
    }
  }
  return {predictor, best};
}

// ---------------------------------------------------------------------------
// Correlation matrix
// ---------------------------------------------------------------------------

struct CorrelationMatrix {
  std::vector<std::string> names;
  Matrix r;
  Matrix p_values;
  double alpha = 0.05;
  std::vector<std::vector<bool>> significant;

  bool is_significant(std::size_t i, std::size_t j) const { return significant[i][j]; }
};

/// Pairwise Pearson r; a pair is significant when its two-sided t-test
/// (df = n - 2) gives p < alpha. The diagonal is 1 and significant.
inline CorrelationMatrix pearson_matrix(const FactorFrame& frame, std::span<const std::string> columns,
                                        double alpha) {
  if (columns.size() < 2) throw Error(ErrorKind::InvalidArgument, "correlation matrix needs >= 2 columns");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  const std::size_t k = columns.size();
  std::vector<Vector> data;
  data.reserve(k);
  for (const auto& c : columns) {
    data.push_back(frame.column(c));
    if (!(centered_sum_squares(data.back()) > 0.0)) {
      throw Error(ErrorKind::ZeroVariance, "column " + c + " has zero variance", c);
    }
  }
  CorrelationMatrix out;
  out.names.assign(columns.begin(), columns.end());
  out.alpha = alpha;
  out.r = Matrix(k, k, 0.0);
  out.p_values = Matrix(k, k, 0.0);
  out.significant.assign(k, std::vector<bool>(k, false));
  for (std::size_t i = 0; i < k; ++i) {
    out.r(i, i) = 1.0;
    out.p_values(i, i) = 0.0;
    out.significant[i][i] = true;
    for (std::size_t j = i + 1; j < k; ++j) {
      const double r = *correlation_or_none(data[i], data[j]);
      const double p = correlation_p_value(r, frame.rows());
      out.r(i, j) = out.r(j, i) = r;
      out.p_values(i, j) = out.p_values(j, i) = p;
      out.significant[i][j] = out.significant[j][i] = p < alpha;
    }
  }
  return out;
}

inline CorrelationMatrix pearson_matrix(const FactorFrame& frame, const std::vector<std::string>& columns,
                                        double alpha) {
  return pearson_matrix(frame, std::span<const std::string>(columns), alpha);
}

// ---------------------------------------------------------------------------
// Bundle
// ---------------------------------------------------------------------------

struct DiagnosticsOptions {
  double outlier_threshold = kDefaultOutlierThreshold;
  double vif_threshold = kDefaultVifThreshold;
  std::optional<std::size_t> acf_max_lag;
};

struct ComponentResidualSeries {
  std::string predictor;
  std::vector<ScatterPoint> points;
};

struct DiagnosticsReport {
  std::vector<VifEntry> vif;  // empty for single-predictor models
  std::vector<std::string> vif_flagged;
  std::vector<std::size_t> outlier_indices;  // 1-based
  Vector studentized;                        // external
  Vector leverage;
  ResidualVsFitted rvf;
  std::vector<QqPoint> qq;
  AcfResult acf;
  std::vector<ComponentResidualSeries> crplots;
};

/// Runs every check against a fitted model. `frame` must be the frame the
/// model was fitted on.
inline DiagnosticsReport diagnose(const FactorFrame& frame, const LinearFit& fit,
                                  const DiagnosticsOptions& options = {}) {
  DiagnosticsReport report;
  if (fit.predictors.size() >= 2) {
    report.vif = vif(frame, fit.predictors);
    report.vif_flagged = vif_flagged(report.vif, options.vif_threshold);
  }
  report.studentized = externally_studentized(fit);
  report.outlier_indices = flag_outliers(fit, options.outlier_threshold);
  report.leverage = fit.leverage;
  report.rvf = residual_vs_fitted(fit);
  report.qq = qq_points(fit);
  if (!residuals_negligible(fit)) {
    report.acf = acf(fit.residuals, options.acf_max_lag.value_or(default_acf_lag(fit.n())));
  } else {
    report.acf.band = 1.96 / std::sqrt(static_cast<double>(fit.n()));
  }
  for (const auto& p : fit.predictors) report.crplots.push_back({p, component_residual(fit, frame, p)});
  return report;
}

}  // namespace factorlab
