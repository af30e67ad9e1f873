#pragma once

// Factor tables: CSV ingestion and emission, column transforms, row removal
// and a seeded synthesizer shaped like a quarterly multi-company panel.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "factorlab/error.hpp"
#include "factorlab/numkernel.hpp"
#include "factorlab/rng.hpp"

namespace factorlab {

namespace columns {
inline constexpr std::string_view term = "term";
inline constexpr std::string_view panel = "panel";
inline constexpr std::string_view dta = "dta";
inline constexpr std::string_view roe = "roe";
inline constexpr std::string_view roa = "roa";
inline constexpr std::string_view tato = "tato";
inline constexpr std::string_view cr = "cr";
inline constexpr std::string_view price = "price";
}  // namespace columns

/// Canonical column order; also the header order used by write_csv.
inline const std::vector<std::string>& canonical_columns() {
  static const std::vector<std::string> names{"term", "panel", "dta", "roe",
                                              "roa",  "tato",  "cr",  "price"};
  return names;
}

inline const std::vector<std::string>& canonical_predictors() {
  static const std::vector<std::string> names{"term", "panel", "dta", "roe", "roa", "tato", "cr"};
  return names;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

/// Which columns play the response, time-index and company-code roles.
struct FrameRoles {
  std::string response = "price";
  std::string term = "term";
  std::string panel = "panel";
};

/// Immutable rectangular table of numeric observations.
class FactorFrame {
 public:
  FactorFrame(std::vector<std::string> names, Matrix values, FrameRoles roles = {})
      : names_(std::move(names)), values_(std::move(values)), roles_(std::move(roles)) {
    if (names_.size() != values_.cols()) {
      throw Error(ErrorKind::DimensionMismatch, "column name count != matrix columns");
    }
    if (values_.rows() == 0) throw Error(ErrorKind::EmptyInput, "frame has no rows");
    std::unordered_set<std::string> seen;
    for (const auto& n : names_) {
      if (!seen.insert(n).second) throw Error(ErrorKind::SchemaError, "duplicate column " + n, n);
    }
    for (const auto* role : {&roles_.response, &roles_.term, &roles_.panel}) {
      if (!seen.contains(*role)) {
        throw Error(ErrorKind::SchemaError, "missing required column " + *role, *role);
      }
    }
    const std::size_t t = index_of(roles_.term);
    for (std::size_t i = 0; i < values_.rows(); ++i) {
      const double v = values_(i, t);
      if (v < 0.0 || v != std::floor(v)) {
        throw Error(ErrorKind::DomainError,
                    "term values must be non-negative integers (row " + std::to_string(i + 1) + ")",
                    roles_.term, i + 1);
      }
    }
  }

  std::size_t rows() const noexcept { return values_.rows(); }
  std::size_t cols() const noexcept { return values_.cols(); }
  const std::vector<std::string>& column_names() const noexcept { return names_; }
  const Matrix& values() const noexcept { return values_; }
  const FrameRoles& roles() const noexcept { return roles_; }
  const std::string& response_name() const noexcept { return roles_.response; }
  const std::string& term_column() const noexcept { return roles_.term; }
  const std::string& panel_column() const noexcept { return roles_.panel; }

  std::optional<std::size_t> find(std::string_view name) const noexcept {
    for (std::size_t j = 0; j < names_.size(); ++j)
      if (names_[j] == name) return j;
    return std::nullopt;
  }

  std::size_t index_of(std::string_view name) const {
    if (auto j = find(name)) return *j;
    throw Error(ErrorKind::UnknownColumn, "unknown column " + std::string(name), std::string(name));
  }

  Vector column(std::string_view name) const { return values_.column(index_of(name)); }

  /// n x k block of the named columns, in the order given.
  Matrix select(std::span<const std::string> names) const {
    std::vector<std::size_t> idx;
    idx.reserve(names.size());
    for (const auto& n : names) idx.push_back(index_of(n));
    Matrix out(rows(), idx.size());
    for (std::size_t i = 0; i < rows(); ++i)
      for (std::size_t j = 0; j < idx.size(); ++j) out(i, j) = values_(i, idx[j]);
    return out;
  }

  /// Every column other than the response, in frame order.
  std::vector<std::string> predictor_names() const {
    std::vector<std::string> out;
    for (const auto& n : names_)
      if (n != roles_.response) out.push_back(n);
    return out;
  }

  friend bool operator==(const FactorFrame& a, const FactorFrame& b) {
    return a.names_ == b.names_ && a.values_ == b.values_ && a.roles_.response == b.roles_.response &&
           a.roles_.term == b.roles_.term && a.roles_.panel == b.roles_.panel;
  }

 private:
  std::vector<std::string> names_;
  Matrix values_;
  FrameRoles roles_;
};

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

inline bool is_missing_token(std::string_view cell) {
  if (cell.empty()) return true;
  const std::string lower = to_lower(cell);
  return lower == "na" || lower == "nan" || lower == "null";
}

}  // namespace detail

/// Parses a header-first, comma-separated numeric table. `schema` lists the
/// columns that must be present (case-insensitive); extra columns are kept.
/// Error rows are 1-based data-row numbers (the header is not counted).
inline FactorFrame load_csv(std::istream& source, std::span<const std::string> schema,
                            FrameRoles roles = {}) {
  std::string line;
  if (!std::getline(source, line)) throw Error(ErrorKind::EmptyInput, "input is empty");
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (detail::trim(line).empty()) throw Error(ErrorKind::EmptyInput, "header line is empty");

  std::vector<std::string> names;
  for (auto cell : detail::split_commas(line)) names.push_back(to_lower(cell));
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (names[j].empty()) throw Error(ErrorKind::SchemaError, "blank column name in header");
    for (std::size_t k = 0; k < j; ++k)
      if (names[k] == names[j]) throw Error(ErrorKind::SchemaError, "duplicate column " + names[j], names[j]);
  }
  auto require = [&](const std::string& wanted) {
    const std::string lower = to_lower(wanted);
    if (std::find(names.begin(), names.end(), lower) == names.end()) {
      throw Error(ErrorKind::SchemaError, "missing column " + lower, lower);
    }
  };
  for (const auto& s : schema) require(s);
  roles.response = to_lower(roles.response);
  roles.term = to_lower(roles.term);
  roles.panel = to_lower(roles.panel);
  require(roles.response);
  require(roles.term);
  require(roles.panel);

  std::vector<double> data;
  std::size_t row = 0;
  std::size_t pending_blank = 0;
  while (std::getline(source, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) {
      ++pending_blank;
      continue;
    }
    if (pending_blank > 0) {
      throw Error(ErrorKind::MissingValue, "blank line inside data (row " + std::to_string(row + 1) + ")",
                  names.front(), row + 1);
    }
    ++row;
    const auto cells = detail::split_commas(line);
    if (cells.size() != names.size()) {
      throw Error(ErrorKind::ParseError,
                  "row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " fields, header has " + std::to_string(names.size()),
                  cells.size() < names.size() ? names[cells.size()] : names.back(), row);
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const auto cell = cells[j];
      if (detail::is_missing_token(cell)) {
        throw Error(ErrorKind::MissingValue,
                    "missing value at row " + std::to_string(row) + ", column " + names[j], names[j], row);
      }
      std::string_view digits = cell;
      if (digits.starts_with('+')) digits.remove_prefix(1);
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
      if (ec != std::errc{} || ptr != digits.data() + digits.size() || !std::isfinite(value)) {
        throw Error(ErrorKind::ParseError,
                    "cannot parse '" + std::string(cell) + "' at row " + std::to_string(row) +
                        ", column " + names[j],
                    names[j], row);
      }
      data.push_back(value);
    }
  }
  if (row == 0) throw Error(ErrorKind::EmptyInput, "no data rows after header");
  const std::size_t width = names.size();
  return FactorFrame(std::move(names), Matrix(row, width, std::move(data)), std::move(roles));
}

inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw Error(ErrorKind::Internal, "number formatting failed");
  return std::string(buf.data(), ptr);
}

/// Header order: canonical columns first (those present), then any others in
/// frame order. Values use shortest round-trip formatting; lines end in LF.
inline void write_csv(std::ostream& out, const FactorFrame& frame) {
  std::vector<std::size_t> order;
  for (const auto& c : canonical_columns())
    if (auto j = frame.find(c)) order.push_back(*j);
  for (std::size_t j = 0; j < frame.cols(); ++j)
    if (std::find(order.begin(), order.end(), j) == order.end()) order.push_back(j);

  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k) out << ',';
    out << frame.column_names()[order[k]];
  }
  out << '\n';
  for (std::size_t i = 0; i < frame.rows(); ++i) {
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (k) out << ',';
      out << format_double(frame.values()(i, order[k]));
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Transforms and row removal
// ---------------------------------------------------------------------------

enum class TransformKind { Identity, Log, Sqrt, Square };

constexpr std::string_view to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::Identity: return "identity";
    case TransformKind::Log: return "log";
    case TransformKind::Sqrt: return "sqrt";
    case TransformKind::Square: return "square";
  }
  return "identity";
}

inline TransformKind parse_transform_kind(std::string_view s) {
  const std::string lower = to_lower(s);
  if (lower == "identity") return TransformKind::Identity;
  if (lower == "log") return TransformKind::Log;
  if (lower == "sqrt") return TransformKind::Sqrt;
  if (lower == "square") return TransformKind::Square;
  throw Error(ErrorKind::InvalidArgument, "unknown transform " + std::string(s), std::string(s));
}

struct TransformSpec {
  std::string column;
  TransformKind kind = TransformKind::Identity;
  friend bool operator==(const TransformSpec&, const TransformSpec&) = default;
};

/// Applies one rung of the transform ladder to a value vector. Throws
/// DomainError naming the first offending 1-based row.
inline Vector transform_values(std::span<const double> values, TransformKind kind,
                               const std::string& column = {}) {
  Vector out(values.begin(), values.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = out[i];
    switch (kind) {
      case TransformKind::Identity: break;
      case TransformKind::Log:
        if (!(v > 0.0)) {
          throw Error(ErrorKind::DomainError, "log of non-positive value in " + column, column, i + 1);
        }
        out[i] = std::log(v);
        break;
      case TransformKind::Sqrt:
        if (v < 0.0) throw Error(ErrorKind::DomainError, "sqrt of negative value in " + column, column, i + 1);
        out[i] = std::sqrt(v);
        break;
      case TransformKind::Square:
        out[i] = v * v;
        if (!std::isfinite(out[i])) {
          throw Error(ErrorKind::DomainError, "square overflows in " + column, column, i + 1);
        }
        break;
    }
  }
  return out;
}

/// New frame with `spec.column` replaced by its transform. The term and
/// panel columns are identifiers and cannot be transformed.
inline FactorFrame apply_transform(const FactorFrame& frame, const TransformSpec& spec) {
  const std::size_t j = frame.index_of(spec.column);
  if (spec.kind == TransformKind::Identity) return frame;
  if (spec.column == frame.term_column() || spec.column == frame.panel_column()) {
    throw Error(ErrorKind::InvalidArgument, "cannot transform identifier column " + spec.column,
                spec.column);
  }
  const Vector replaced = transform_values(frame.values().column(j), spec.kind, spec.column);
  Matrix values = frame.values();
  for (std::size_t i = 0; i < frame.rows(); ++i) values(i, j) = replaced[i];
  return FactorFrame(frame.column_names(), std::move(values), frame.roles());
}

/// Deletes 0-based `indices`; surviving rows keep their order.
inline FactorFrame remove_rows(const FactorFrame& frame, const std::set<std::size_t>& indices) {
  for (std::size_t idx : indices) {
    if (idx >= frame.rows()) {
      throw Error(ErrorKind::IndexOutOfRange,
                  "row " + std::to_string(idx + 1) + " is beyond the " + std::to_string(frame.rows()) +
                      "-row frame",
                  {}, idx + 1);
    }
  }
  if (indices.empty()) return frame;
  std::vector<double> data;
  data.reserve((frame.rows() - indices.size()) * frame.cols());
  std::size_t kept = 0;
  for (std::size_t i = 0; i < frame.rows(); ++i) {
    if (indices.contains(i)) continue;
    const auto r = frame.values().row(i);
    data.insert(data.end(), r.begin(), r.end());
    ++kept;
  }
  if (kept == 0) throw Error(ErrorKind::EmptyInput, "removing every row leaves an empty frame");
  return FactorFrame(frame.column_names(), Matrix(kept, frame.cols(), std::move(data)), frame.roles());
}

/// Converts user-facing 1-based row numbers to internal 0-based indices.
inline std::set<std::size_t> from_one_based(std::span<const std::size_t> rows) {
  std::set<std::size_t> out;
  for (std::size_t r : rows) {
    if (r == 0) throw Error(ErrorKind::IndexOutOfRange, "row numbers are 1-based; got 0");
    out.insert(r - 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthesizer
// ---------------------------------------------------------------------------

/// Intercept followed by one slope per canonical predictor
/// (term, panel, dta, roe, roa, tato, cr).
inline Vector default_synth_coefficients() {
  return {-1700.0, 42.0, 213.0, 2540.0, 340.0, 0.0, 2370.0, -33.0};
}

/// 0-based rows 2, 37, 47: the three outliers of the reference study.
inline const std::set<std::size_t>& default_planted_outliers() {
  static const std::set<std::size_t> rows{2, 37, 47};
  return rows;
}

struct SynthConfig {
  std::uint64_t seed = 0;
  std::size_t companies = 5;
  std::size_t quarters = 14;
  Vector coefficients = default_synth_coefficients();
  double noise_sd = 150.0;
  /// 0-based rows whose response is shifted by outlier_shift_sd * noise_sd.
  /// When unset, rows 3, 38 and 48 (1-based) are corrupted, skipping any the
  /// panel is too short to contain.
  std::optional<std::set<std::size_t>> planted_outliers;
  double outlier_shift_sd = 10.0;
};

/// Company-major panel (all quarters of company 1, then company 2, ...).
/// Each company draws its fundamentals from stream (seed, company index);
/// response noise comes from stream (seed, companies).
///
/// ROA is generated as ROE x (1 - DTA) plus a little noise, the accounting
/// identity that ties those ratios together, so the synthetic panel carries
/// the ROA/ROE collinearity a VIF screen should catch.
inline FactorFrame synthesize(const SynthConfig& cfg) {
  if (cfg.companies == 0 || cfg.quarters == 0) {
    throw Error(ErrorKind::InvalidArgument, "companies and quarters must be >= 1");
  }
  const auto& predictors = canonical_predictors();
  if (cfg.coefficients.size() != predictors.size() + 1) {
    throw Error(ErrorKind::DimensionMismatch,
                "expected " + std::to_string(predictors.size() + 1) + " coefficients, got " +
                    std::to_string(cfg.coefficients.size()));
  }
  require_finite(cfg.coefficients, "coefficients");
  if (!(cfg.noise_sd >= 0.0) || !std::isfinite(cfg.noise_sd)) {
    throw Error(ErrorKind::InvalidArgument, "noise_sd must be a finite non-negative number");
  }
  const std::size_t n = cfg.companies * cfg.quarters;
  std::set<std::size_t> planted;
  if (cfg.planted_outliers) {
    planted = *cfg.planted_outliers;
    for (std::size_t r : planted) {
      if (r >= n) throw Error(ErrorKind::IndexOutOfRange, "planted outlier row beyond frame", {}, r + 1);
    }
  } else {
    for (std::size_t r : default_planted_outliers())
      if (r < n) planted.insert(r);
  }

  auto ratio = [](double v) { return std::clamp(v, 0.01, 2.99); };
  const std::size_t width = predictors.size() + 1;
  std::vector<double> data;
  data.reserve(n * width);
  Rng noise = Rng::stream(cfg.seed, cfg.companies);
  for (std::size_t c = 0; c < cfg.companies; ++c) {
    Rng rng = Rng::stream(cfg.seed, c);
    // Company levels are kept narrow next to the quarter-to-quarter movement;
    // with only a handful of companies, wide levels would line up by chance
    // and make unrelated ratios look collinear.
    const double dta_base = rng.uniform(0.30, 0.55);
    const double roe_base = rng.uniform(0.10, 0.25);
    const double tato_base = rng.uniform(0.55, 0.95);
    const double cr_base = rng.uniform(1.40, 2.40);
    for (std::size_t q = 0; q < cfg.quarters; ++q) {
      const double dta = ratio(dta_base + rng.normal(0.0, 0.10));
      const double roe = ratio(roe_base + rng.normal(0.0, 0.06));
      const double roa = ratio(roe * (1.0 - dta) + rng.normal(0.0, 0.004));
      const double tato = ratio(tato_base + rng.normal(0.0, 0.20));
      const double cr = ratio(cr_base + rng.normal(0.0, 0.35));
      const std::array<double, 7> x{static_cast<double>(q + 1), static_cast<double>(c + 1), dta, roe,
                                    roa, tato, cr};
      double y = cfg.coefficients[0];
      for (std::size_t j = 0; j < x.size(); ++j) y += cfg.coefficients[j + 1] * x[j];
      y += noise.normal(0.0, cfg.noise_sd);
      const std::size_t row = c * cfg.quarters + q;
      if (planted.contains(row)) y += cfg.outlier_shift_sd * cfg.noise_sd;
      data.insert(data.end(), x.begin(), x.end());
      data.push_back(y);
    }
  }
  std::vector<std::string> names = predictors;
  names.push_back("price");
  return FactorFrame(std::move(names), Matrix(n, width, std::move(data)));
}

}  // namespace factorlab
