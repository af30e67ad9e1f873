#pragma once

// Error metrics, k-fold cross-validation and paired model comparison.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "factorlab/dataset.hpp"
#include "factorlab/error.hpp"
#include "factorlab/forest.hpp"
#include "factorlab/linmodel.hpp"
#include "factorlab/numkernel.hpp"
#include "factorlab/rng.hpp"

namespace factorlab {

namespace detail {
inline void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "lengths differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  if (a.empty()) throw Error(ErrorKind::EmptyInput, "metric over zero observations");
}
}  // namespace detail

/// Mean absolute error.
inline double mae(std::span<const double> actual, std::span<const double> predicted) {
  detail::check_pair(actual, predicted);
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) s += std::abs(actual[i] - predicted[i]);
  return s / static_cast<double>(actual.size());
}

/// Root mean squared error.
inline double rmse(std::span<const double> actual, std::span<const double> predicted) {
  detail::check_pair(actual, predicted);
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double d = actual[i] - predicted[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(actual.size()));
}

inline double pearson_r(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::DimensionMismatch, "pearson_r of unequal lengths");
  if (a.size() < 2) throw Error(ErrorKind::InsufficientRows, "pearson_r needs at least two pairs");
  if (auto r = correlation_or_none(a, b)) return *r;
  throw Error(ErrorKind::ZeroVariance, "pearson_r of a constant series");
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

/// Stream index reserved for fold shuffling under the CV seed.
inline constexpr std::uint64_t kFoldStream = 0x4b464f4c44ULL;

/// Shuffles 0..n-1 with Rng::stream(seed, kFoldStream) and cuts the
/// permutation into k contiguous folds; the first n % k folds get one extra
/// row. Depends only on (n, k, seed). Each fold is returned sorted.
inline std::vector<std::vector<std::size_t>> kfold_partition(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::InvalidArgument, "k must be >= 2");
  if (k > n) {
    throw Error(ErrorKind::KTooLarge, "k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " rows");
  }
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng = Rng::stream(seed, kFoldStream);
  rng.shuffle(std::span<std::size_t>(perm));
  std::vector<std::vector<std::size_t>> folds(k);
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::size_t at = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    folds[f].assign(perm.begin() + static_cast<std::ptrdiff_t>(at),
                    perm.begin() + static_cast<std::ptrdiff_t>(at + size));
    std::sort(folds[f].begin(), folds[f].end());
    at += size;
  }
  return folds;
}

struct LinearSpec {
  std::vector<std::string> predictors;
};

struct ForestSpec {
  std::vector<std::string> predictors;
  ForestConfig config;
};

using ModelSpec = std::variant<LinearSpec, ForestSpec>;

inline std::string default_model_name(const ModelSpec& spec) {
  return std::holds_alternative<LinearSpec>(spec) ? "linear_regression" : "random_forest";
}

/// Seed used by the forest trained for `fold`.
inline std::uint64_t fold_seed(std::uint64_t base, std::size_t fold) noexcept {
  return splitmix_mix(base + 0x9E3779B97F4A7C15ULL * (fold + 1));
}

struct FoldResult {
  std::size_t fold = 0;
  std::size_t size = 0;
  double mae = 0.0;
  double rmse = 0.0;
  std::optional<double> r;  // undefined for single-row or constant folds
};

struct EvalSummary {
  std::string model_name;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  double mae = 0.0;
  double rmse = 0.0;
  std::optional<double> pearson_r;  // over pooled out-of-fold predictions
  std::vector<FoldResult> per_fold;
  Vector actual;
  Vector oof_predictions;

  Vector fold_maes() const {
    Vector out;
    out.reserve(per_fold.size());
    for (const auto& f : per_fold) out.push_back(f.mae);
    return out;
  }
};

namespace detail {

inline FactorFrame take_rows(const FactorFrame& frame, std::span<const std::size_t> rows) {
  std::vector<double> data;
  data.reserve(rows.size() * frame.cols());
  for (std::size_t r : rows) {
    const auto src = frame.values().row(r);
    data.insert(data.end(), src.begin(), src.end());
  }
  return FactorFrame(frame.column_names(), Matrix(rows.size(), frame.cols(), std::move(data)), frame.roles());
}

}  // namespace detail

/// k-fold CV of `spec` predicting the frame's response. Aggregate metrics
/// are computed over the pooled out-of-fold predictions.
inline EvalSummary kfold_cv(const FactorFrame& frame, const ModelSpec& spec, std::size_t k, std::uint64_t seed,
                            std::string model_name = {}) {
  const std::size_t n = frame.rows();
  const auto folds = kfold_partition(n, k, seed);
  const std::string& response = frame.response_name();

  EvalSummary out;
  out.model_name = model_name.empty() ? default_model_name(spec) : std::move(model_name);
  out.k = k;
  out.seed = seed;
  out.actual = frame.column(response);
  out.oof_predictions.assign(n, 0.0);

  std::vector<bool> held(n);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::fill(held.begin(), held.end(), false);
    for (std::size_t r : folds[f]) held[r] = true;
    std::vector<std::size_t> train_rows;
    train_rows.reserve(n - folds[f].size());
    for (std::size_t i = 0; i < n; ++i)
      if (!held[i]) train_rows.push_back(i);
    const FactorFrame train = detail::take_rows(frame, train_rows);
    const FactorFrame test = detail::take_rows(frame, folds[f]);

    Vector predicted;
    if (const auto* lin = std::get_if<LinearSpec>(&spec)) {
      const LinearFit fit = fit_ols(train, lin->predictors, response);
      predicted = predict(fit, test.select(lin->predictors));
    } else {
      const auto& fs = std::get<ForestSpec>(spec);
      ForestConfig cfg = fs.config;
      cfg.seed = fold_seed(fs.config.seed, f);
      const ForestModel model = train_forest(train, fs.predictors, response, cfg);
      predicted = model.predict(test.select(fs.predictors));
    }

    const Vector truth = test.column(response);
    FoldResult fr;
    fr.fold = f;
    fr.size = folds[f].size();
    fr.mae = mae(truth, predicted);
    fr.rmse = rmse(truth, predicted);
    if (truth.size() >= 2) fr.r = correlation_or_none(truth, predicted);
    out.per_fold.push_back(fr);
    for (std::size_t i = 0; i < folds[f].size(); ++i) out.oof_predictions[folds[f][i]] = predicted[i];
  }
  out.mae = mae(out.actual, out.oof_predictions);
  out.rmse = rmse(out.actual, out.oof_predictions);
  out.pearson_r = correlation_or_none(out.actual, out.oof_predictions);
  return out;
}

// ---------------------------------------------------------------------------
// Paired comparison
// ---------------------------------------------------------------------------

inline constexpr double kDefaultAlpha = 0.05;
inline constexpr std::string_view kTie = "tie";

struct ComparisonResult {
  std::string model_a;
  std::string model_b;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double mean_diff = 0.0;  // mean(a - b)
  double t_stat = 0.0;
  double p_value = 1.0;
  std::size_t df = 0;
  double alpha = kDefaultAlpha;
  std::string winner{kTie};

  bool significant() const noexcept { return p_value < alpha; }
};

/// Paired t-test on matched error vectors. When every difference is the
/// same non-zero value the statistic is infinite and p is reported as 0;
/// identical vectors give t = 0, p = 1.
inline ComparisonResult paired_t_test(std::span<const double> errors_a, std::span<const double> errors_b,
                                      double alpha = kDefaultAlpha, std::string name_a = "a",
                                      std::string name_b = "b") {
  if (errors_a.size() != errors_b.size()) {
    throw Error(ErrorKind::DimensionMismatch, "paired vectors differ in length");
  }
  if (errors_a.size() < 2) throw Error(ErrorKind::InsufficientRows, "paired t-test needs at least two pairs");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  require_finite(errors_a, "errors_a");
  require_finite(errors_b, "errors_b");

  const std::size_t n = errors_a.size();
  Vector d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = errors_a[i] - errors_b[i];

  ComparisonResult out;
  out.model_a = std::move(name_a);
  out.model_b = std::move(name_b);
  out.alpha = alpha;
  out.df = n - 1;
  out.mean_a = mean_of(errors_a);
  out.mean_b = mean_of(errors_b);
  out.mean_diff = mean_of(d);
  const double sd = std::sqrt(centered_sum_squares(d) / static_cast<double>(n - 1));
  if (sd > 0.0) {
    out.t_stat = out.mean_diff / (sd / std::sqrt(static_cast<double>(n)));
    out.p_value = student_t_p_two_sided(out.t_stat, static_cast<double>(out.df));
  } else if (out.mean_diff == 0.0) {
    out.t_stat = 0.0;
    out.p_value = 1.0;
  } else {
    out.t_stat = out.mean_diff > 0.0 ? std::numeric_limits<double>::infinity()
                                     : -std::numeric_limits<double>::infinity();
    out.p_value = 0.0;
  }
  if (out.p_value < alpha) out.winner = out.mean_diff < 0.0 ? out.model_a : out.model_b;
  return out;
}

/// Compares two CV runs fold by fold on their per-fold MAE. Both runs must
/// share k and the fold seed so the folds coincide.
inline ComparisonResult compare_cv(const EvalSummary& a, const EvalSummary& b, double alpha = kDefaultAlpha) {
  if (a.k != b.k || a.seed != b.seed || a.actual.size() != b.actual.size()) {
    throw Error(ErrorKind::InvalidArgument, "CV runs use different folds and cannot be paired");
  }
  return paired_t_test(a.fold_maes(), b.fold_maes(), alpha, a.model_name, b.model_name);
}

}  // namespace factorlab
