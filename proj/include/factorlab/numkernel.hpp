#pragma once

// Dense linear algebra and distribution functions used by every inference
// statistic in the library. Everything here is a pure function of its
// arguments.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "factorlab/error.hpp"

namespace factorlab {

using Vector = std::vector<double>;

inline bool all_finite(std::span<const double> values) noexcept {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

inline void require_finite(std::span<const double> values, const char* what) {
  if (!all_finite(values)) {
    throw Error(ErrorKind::DomainError, std::string(what) + " contains a non-finite value");
  }
}

/// Row-major dense matrix. Entries are checked for finiteness when the
/// matrix is built from external data.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (!std::isfinite(fill)) throw Error(ErrorKind::DomainError, "matrix fill value is not finite");
  }

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw Error(ErrorKind::DimensionMismatch,
                  "matrix data length " + std::to_string(data_.size()) + " != " +
                      std::to_string(rows_) + "x" + std::to_string(cols_));
    }
    require_finite(data_, "matrix");
  }

  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
      if (row.size() != cols_) throw Error(ErrorKind::DimensionMismatch, "ragged matrix literal");
      data_.insert(data_.end(), row.begin(), row.end());
    }
    require_finite(data_, "matrix");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  Vector column(std::size_t j) const {
    Vector out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
  }

  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Householder QR
// ---------------------------------------------------------------------------

/// Relative threshold on |R_kk| below which a column is declared dependent.
inline constexpr double kRankTolerance = 1e-10;

/// Thin Householder QR of an n x p matrix (n >= p). The factorization never
/// throws on rank deficiency; callers check `deficient_column()`.
class HouseholderQr {
 public:
  explicit HouseholderQr(const Matrix& x, double rank_tolerance = kRankTolerance)
      : n_(x.rows()), p_(x.cols()), packed_(x), diag_(x.cols(), 0.0) {
    if (p_ == 0 || n_ < p_) {
      throw Error(ErrorKind::DimensionMismatch,
                  "QR needs rows >= cols >= 1, got " + std::to_string(n_) + "x" + std::to_string(p_));
    }
    // Column k of `packed_` below the diagonal holds the Householder vector
    // v_k (with v_k[k] stored in vhead_), R lives on and above the diagonal.
    vhead_.assign(p_, 0.0);
    vnorm2_.assign(p_, 0.0);
    for (std::size_t k = 0; k < p_; ++k) {
      double norm2 = 0.0;
      for (std::size_t i = k; i < n_; ++i) norm2 += packed_(i, k) * packed_(i, k);
      const double norm = std::sqrt(norm2);
      if (norm == 0.0) {
        diag_[k] = 0.0;
        continue;
      }
      const double x0 = packed_(k, k);
      const double alpha = x0 >= 0.0 ? -norm : norm;
      const double v0 = x0 - alpha;
      vhead_[k] = v0;
      vnorm2_[k] = norm2 - x0 * x0 + v0 * v0;
      diag_[k] = alpha;
      for (std::size_t j = k + 1; j < p_; ++j) {
        double dot = v0 * packed_(k, j);
        for (std::size_t i = k + 1; i < n_; ++i) dot += packed_(i, k) * packed_(i, j);
        const double scale = 2.0 * dot / vnorm2_[k];
        packed_(k, j) -= scale * v0;
        for (std::size_t i = k + 1; i < n_; ++i) packed_(i, j) -= scale * packed_(i, k);
      }
      packed_(k, k) = alpha;
    }
    double largest = 0.0;
    for (double d : diag_) largest = std::max(largest, std::abs(d));
    for (std::size_t k = 0; k < p_; ++k) {
      if (!(std::abs(diag_[k]) > rank_tolerance * largest) || largest == 0.0) {
        deficient_ = k;
        break;
      }
    }
  }

  std::size_t rows() const noexcept { return n_; }
  std::size_t cols() const noexcept { return p_; }

  /// First column whose R diagonal falls under the rank tolerance.
  std::optional<std::size_t> deficient_column() const noexcept { return deficient_; }
  bool full_rank() const noexcept { return !deficient_.has_value(); }

  /// Upper-triangular p x p factor.
  Matrix r() const {
    Matrix out(p_, p_);
    for (std::size_t i = 0; i < p_; ++i)
      for (std::size_t j = i; j < p_; ++j) out(i, j) = packed_(i, j);
    return out;
  }

  /// Q^T y (full length n).
  Vector apply_qt(std::span<const double> y) const {
    check_length(y.size());
    Vector z(y.begin(), y.end());
    for (std::size_t k = 0; k < p_; ++k) reflect(k, z);
    return z;
  }

  /// Least-squares coefficients minimising ||y - X b||^2.
  Vector solve(std::span<const double> y) const {
    require_full_rank();
    Vector z = apply_qt(y);
    Vector beta(p_, 0.0);
    for (std::size_t ii = p_; ii-- > 0;) {
      double acc = z[ii];
      for (std::size_t j = ii + 1; j < p_; ++j) acc -= packed_(ii, j) * beta[j];
      beta[ii] = acc / packed_(ii, ii);
    }
    return beta;
  }

  /// R^{-1}, upper triangular.
  Matrix r_inverse() const {
    require_full_rank();
    Matrix inv(p_, p_);
    for (std::size_t col = 0; col < p_; ++col) {
      inv(col, col) = 1.0 / packed_(col, col);
      for (std::size_t ii = col; ii-- > 0;) {
        double acc = 0.0;
        for (std::size_t j = ii + 1; j <= col; ++j) acc += packed_(ii, j) * inv(j, col);
        inv(ii, col) = -acc / packed_(ii, ii);
      }
    }
    return inv;
  }

  /// diag((X^T X)^{-1}) = squared row norms of R^{-1}.
  Vector inverse_gram_diagonal() const {
    const Matrix inv = r_inverse();
    Vector out(p_, 0.0);
    for (std::size_t i = 0; i < p_; ++i)
      for (std::size_t j = i; j < p_; ++j) out[i] += inv(i, j) * inv(i, j);
    return out;
  }

  /// Hat-matrix diagonal: squared row norms of the thin Q factor.
  Vector leverage() const {
    Vector h(n_, 0.0);
    Vector e(n_);
    for (std::size_t j = 0; j < p_; ++j) {
      std::fill(e.begin(), e.end(), 0.0);
      e[j] = 1.0;
      for (std::size_t k = p_; k-- > 0;) reflect(k, e);
      for (std::size_t i = 0; i < n_; ++i) h[i] += e[i] * e[i];
    }
    return h;
  }

 private:
  void reflect(std::size_t k, std::span<double> z) const noexcept {
    if (vnorm2_[k] == 0.0) return;
    double dot = vhead_[k] * z[k];
    for (std::size_t i = k + 1; i < n_; ++i) dot += packed_(i, k) * z[i];
    const double scale = 2.0 * dot / vnorm2_[k];
    z[k] -= scale * vhead_[k];
    for (std::size_t i = k + 1; i < n_; ++i) z[i] -= scale * packed_(i, k);
  }

  void check_length(std::size_t len) const {
    if (len != n_) {
      throw Error(ErrorKind::DimensionMismatch,
                  "response length " + std::to_string(len) + " != rows " + std::to_string(n_));
    }
  }

  void require_full_rank() const {
    if (deficient_) {
      throw Error(ErrorKind::RankDeficient, "column " + std::to_string(*deficient_) +
                                                " is numerically dependent on earlier columns",
                  std::to_string(*deficient_));
    }
  }

  std::size_t n_;
  std::size_t p_;
  Matrix packed_;
  Vector diag_;
  Vector vhead_;
  Vector vnorm2_;
  std::optional<std::size_t> deficient_;
};

/// b minimising ||y - X b||^2. Throws RankDeficient (subject = column index)
/// or DimensionMismatch.
inline Vector qr_least_squares(const Matrix& x, std::span<const double> y) {
  if (y.size() != x.rows()) {
    throw Error(ErrorKind::DimensionMismatch,
                "response length " + std::to_string(y.size()) + " != rows " + std::to_string(x.rows()));
  }
  return HouseholderQr(x).solve(y);
}

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr int kBetaMaxIterations = 300;
inline constexpr double kBetaEpsilon = 1e-12;

// Modified Lentz evaluation of the incomplete-beta continued fraction.
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kBetaMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kBetaEpsilon) return h;
  }
  throw Error(ErrorKind::Internal, "incomplete beta continued fraction did not converge (a=" +
                                       std::to_string(a) + ", b=" + std::to_string(b) +
                                       ", x=" + std::to_string(x) + ")");
}

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b) || !(x >= 0.0) ||
      !(x <= 1.0)) {
    throw Error(ErrorKind::DomainError, "incomplete beta requires a>0, b>0, 0<=x<=1");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = a * std::log(x) + b * std::log1p(-x) - detail::log_beta(a, b);
  const double front = std::exp(log_front);
  double result;
  if (x < (a + 1.0) / (a + b + 2.0)) {
    result = front * detail::beta_continued_fraction(a, b, x) / a;
  } else {
    result = 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
  }
  return std::clamp(result, 0.0, 1.0);
}

/// 2 P(T_df > |t|).
inline double student_t_p_two_sided(double t, double df) {
  if (!(df > 0.0) || std::isnan(t)) {
    throw Error(ErrorKind::DomainError, "t tail needs df > 0 and a numeric statistic");
  }
  if (std::isinf(t)) return 0.0;
  const double t2 = t * t;
  if (t2 == 0.0) return 1.0;
  return regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t2));
}

/// P(F_{df1,df2} > f).
inline double f_p_upper(double f, double df1, double df2) {
  if (!(f >= 0.0) || !(df1 > 0.0) || !(df2 > 0.0)) {
    throw Error(ErrorKind::DomainError, "F tail needs f >= 0 and positive degrees of freedom");
  }
  if (std::isinf(f)) return 0.0;
  if (f == 0.0) return 1.0;
  return regularized_incomplete_beta(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * f));
}

inline double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Inverse standard normal CDF: Acklam's rational approximation followed by
/// one Halley step against erfc.
inline double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) throw Error(ErrorKind::DomainError, "normal quantile needs 0 < p < 1");
  if (p > 0.5) return -normal_quantile(1.0 - p);
  if (p == 0.5) return 0.0;

  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

// ---------------------------------------------------------------------------
// Small descriptive helpers
// ---------------------------------------------------------------------------

inline double mean_of(std::span<const double> v) noexcept {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double centered_sum_squares(std::span<const double> v) noexcept {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s;
}

/// Sample Pearson correlation, or nullopt when either side has no spread.
inline std::optional<double> correlation_or_none(std::span<const double> a,
                                                 std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::DimensionMismatch, "correlation of unequal lengths");
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Two-sided p-value for H0: rho = 0 given a sample correlation over n pairs.
inline double correlation_p_value(double r, std::size_t n) {
  if (n < 3) return 1.0;
  const double df = static_cast<double>(n - 2);
  if (std::abs(r) >= 1.0) return 0.0;
  const double t = r * std::sqrt(df / (1.0 - r * r));
  return student_t_p_two_sided(t, df);
}

}  // namespace factorlab
