// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances and seed counts are fixed here and never adjusted.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "factorlab/dataset.hpp"
#include "factorlab/diagnostics.hpp"
#include "factorlab/eval.hpp"
#include "factorlab/forest.hpp"
#include "factorlab/linmodel.hpp"
#include "factorlab/pipeline.hpp"
#include "factorlab/report.hpp"
#include "factorlab/serialize.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "suite_binaries.hpp"

using namespace factorlab;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(bool ok, const char* id, const std::string& title, const std::string& detail) {
  std::printf("%s  %s %s: %s\n", ok ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string num(double v, const char* spec = "%.3g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

int run_command(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// ---------------------------------------------------------------------------

void ols_oracle() {
  const auto start = Clock::now();
  Rng rng(20240101);
  double worst = 0.0;
  for (int problem = 0; problem < 200; ++problem) {
    const std::size_t p = 1 + rng.below(7);                     // slopes, 1..7
    const std::size_t n = p + 3 + rng.below(67 - (p + 3) + 1);  // up to 67 rows
    const Matrix x = oracle::random_design(rng, n, p + 1);
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.normal(0.0, 2.0);
      for (std::size_t j = 0; j <= p; ++j) y[i] += (static_cast<double>(j) - 2.5) * x(i, j);
    }
    const Vector qr = qr_least_squares(x, y);
    const Vector ne = oracle::normal_equations(x, y);
    for (std::size_t j = 0; j < qr.size(); ++j) worst = std::max(worst, std::abs(qr[j] - ne[j]));
  }
  const double elapsed = seconds_since(start);
  report(worst <= 1e-8 && elapsed < 5.0, "C1", "OLS oracle equivalence",
         "200 problems, max |QR - normal equations| = " + num(worst) + " (limit 1e-8), " + num(elapsed, "%.2f") +
             " s (limit 5 s)");
}

void inference_identities() {
  Rng rng(777);
  double worst_r2 = 0.0, worst_f = 0.0, worst_t2 = 0.0;
  for (int problem = 0; problem < 100; ++problem) {
    const std::size_t p = 1 + rng.below(7);
    const std::size_t n = p + 5 + rng.below(60);
    const Matrix x = oracle::random_design(rng, n, p + 1);
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.normal(0.0, 3.0);
      for (std::size_t j = 1; j <= p; ++j) y[i] += 0.4 * x(i, j);
    }
    std::vector<std::string> names{std::string(kInterceptName)};
    for (std::size_t j = 1; j <= p; ++j) names.push_back("x" + std::to_string(j));
    const LinearFit fit = fit_design(x, y, names, true);

    const double r = *correlation_or_none(fit.fitted, y);
    worst_r2 = std::max(worst_r2, std::abs(fit.r_squared - r * r));
    const double f = (fit.r_squared / static_cast<double>(p)) *
                     (static_cast<double>(fit.df_resid) / (1.0 - fit.r_squared));
    worst_f = std::max(worst_f, std::abs(fit.f_stat - f));

    Matrix single(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      single(i, 0) = 1.0;
      single(i, 1) = x(i, 1);
    }
    const LinearFit one = fit_design(single, y, {std::string(kInterceptName), "x1"}, true);
    worst_t2 = std::max(worst_t2, std::abs(one.f_stat - one.t_values[1] * one.t_values[1]));
  }
  report(worst_r2 <= 1e-10 && worst_f <= 1e-8 && worst_t2 <= 1e-8, "C2", "Inference identities",
         "100 problems, max |R^2 - r^2| = " + num(worst_r2) + " (1e-10), max |F - formula| = " + num(worst_f) +
             " (1e-8), max |F - t^2| = " + num(worst_t2) + " (1e-8)");
}

void distribution_kernel() {
  double cauchy = 0.0, df2 = 0.0, ft = 0.0;
  for (double t : {0.1, 0.5, 1.0, 2.0, 5.0, 20.0}) {
    const double closed1 = 1.0 - 2.0 / std::numbers::pi * std::atan(t);
    cauchy = std::max(cauchy, std::abs(student_t_p_two_sided(t, 1.0) - closed1));
    const double closed2 = 1.0 - t / std::sqrt(t * t + 2.0);
    df2 = std::max(df2, std::abs(student_t_p_two_sided(t, 2.0) - closed2));
    for (double df : {1.0, 3.0, 10.0, 60.0, 250.0}) {
      ft = std::max(ft, std::abs(f_p_upper(t * t, 1.0, df) - student_t_p_two_sided(t, df)));
    }
  }
  const double at_one = std::abs(student_t_p_two_sided(1.0, 1.0) - 0.5);
  const double table = student_t_p_two_sided(8.235, 60.0);
  const bool table_ok = std::abs(table - 1.95e-11) <= 0.05e-11;
  report(at_one <= 1e-10 && cauchy <= 1e-10 && df2 <= 1e-9 && ft <= 1e-9 && table_ok, "C3", "Distribution kernel",
         "|p(1;1) - 0.5| = " + num(at_one) + ", Cauchy max dev " + num(cauchy) + " (1e-10), df=2 max dev " + num(df2) +
             " (1e-9), F/t max dev " + num(ft) + " (1e-9), p(8.235; 60) = " + num(table, "%.4g") +
             " vs 1.95e-11 (2 s.f.)");
}

void degrees_of_freedom() {
  const FactorFrame frame = synthesize(SynthConfig{});
  std::vector<std::string> predictors = canonical_predictors();
  std::vector<std::string> dropped;
  prune_collinear(frame, predictors, kDefaultVifThreshold, dropped);
  const LinearFit initial = fit_ols(frame, predictors, "price");
  const auto flagged = flag_outliers(initial);
  const FactorFrame trimmed = remove_rows(frame, from_one_based(flagged));
  const LinearFit fit = fit_ols(trimmed, predictors, "price");

  std::string rows;
  for (std::size_t r : flagged) rows += (rows.empty() ? "" : ",") + std::to_string(r);
  const bool ok = frame.rows() == 70 && flagged.size() == 3 && predictors.size() == 6 && fit.df_model == 6 &&
                  fit.df_resid == 60;
  report(ok, "C4", "Degrees-of-freedom reconstruction",
         std::to_string(frame.rows()) + " rows, VIF drop {" + render::join_names(Json(dropped)) + "}, flagged {" + rows +
             "}, final fit on " + std::to_string(fit.n()) + " rows reports df " + std::to_string(fit.df_model) +
             " and " + std::to_string(fit.df_resid) + " (want 6 and 60)");
}

void vif_checks() {
  Rng rng(4242);
  const Vector a = fixture::normal_vector(rng, 50);
  Vector b = fixture::normal_vector(rng, 50);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] += 0.7 * a[i];
  const FactorFrame two = fixture::frame_of({{"a", a}, {"b", b}, {"y", fixture::normal_vector(rng, 50)}});
  const double r = *correlation_or_none(a, b);
  const double closed = 1.0 / (1.0 - r * r);
  double two_dev = 0.0;
  for (const auto& e : vif(two, std::vector<std::string>{"a", "b"})) two_dev = std::max(two_dev, std::abs(e.value - closed));

  // Mutually orthogonal, mean-zero columns of a Hadamard-style design.
  const Vector h1{1, -1, 1, -1, 1, -1, 1, -1}, h2{1, 1, -1, -1, 1, 1, -1, -1}, h3{1, 1, 1, 1, -1, -1, -1, -1};
  const FactorFrame ortho = fixture::frame_of({{"h1", h1}, {"h2", h2}, {"h3", h3}, {"y", {3, 1, 4, 1, 5, 9, 2, 6}}});
  double ortho_dev = 0.0;
  for (const auto& e : vif(ortho, std::vector<std::string>{"h1", "h2", "h3"}))
    ortho_dev = std::max(ortho_dev, std::abs(e.value - 1.0));

  bool dup_raises = false;
  const FactorFrame dup = fixture::frame_of({{"a", a}, {"a2", a}, {"b", b}, {"y", b}});
  try {
    vif(dup, std::vector<std::string>{"a", "a2", "b"});
  } catch (const Error& e) {
    dup_raises = e.kind() == ErrorKind::CollinearSingular;
  }
  report(two_dev <= 1e-9 && ortho_dev <= 1e-12 && dup_raises, "C5", "VIF",
         "two-predictor dev from 1/(1-r^2) = " + num(two_dev) + " (1e-9), orthogonal max |VIF - 1| = " + num(ortho_dev) +
             " (1e-12), duplicated column " + (dup_raises ? "raises CollinearSingular" : "did not raise"));
}

void diagnostics_power() {
  const auto start = Clock::now();
  int outlier_hits = 0, funnel_hits = 0, homo_hits = 0, acf_hits = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    {
      Rng rng = Rng::stream(seed, 1);
      const std::size_t n = 60;
      const Vector x1 = fixture::normal_vector(rng, n), x2 = fixture::normal_vector(rng, n);
      Vector y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = 1.0 + 2.0 * x1[i] - x2[i] + rng.normal();
      const std::size_t planted = rng.below(n);
      y[planted] += 10.0;
      const FactorFrame f = fixture::frame_of({{"x1", x1}, {"x2", x2}, {"y", y}});
      const auto flagged = flag_outliers(fit_ols(f, std::vector<std::string>{"x1", "x2"}, "y"));
      if (std::find(flagged.begin(), flagged.end(), planted + 1) != flagged.end()) ++outlier_hits;
    }
    {
      Rng rng = Rng::stream(seed, 2);
      const std::size_t n = 200;
      Vector x(n), funnel(n), flat(n);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.uniform(1.0, 10.0);
        funnel[i] = 2.0 + 3.0 * x[i] + rng.normal(0.0, 0.5 * x[i]);
        flat[i] = 2.0 + 3.0 * x[i] + rng.normal(0.0, 2.0);
      }
      const std::vector<std::string> preds{"x"};
      const auto hetero = residual_vs_fitted(fit_ols(fixture::frame_of({{"x", x}, {"y", funnel}}), preds, "y"));
      const auto homo = residual_vs_fitted(fit_ols(fixture::frame_of({{"x", x}, {"y", flat}}), preds, "y"));
      if (hetero.funnel->p_value < 0.01) ++funnel_hits;
      if (homo.funnel->p_value > 0.05) ++homo_hits;
    }
    {
      Rng rng = Rng::stream(seed, 3);
      const std::size_t n = 500;
      Vector x(n), y(n);
      double u = rng.normal() / std::sqrt(1.0 - 0.64);
      for (std::size_t i = 0; i < n; ++i) {
        u = 0.8 * u + rng.normal();
        x[i] = rng.uniform(0.0, 5.0);
        y[i] = 1.0 + 2.0 * x[i] + u;
      }
      const LinearFit fit = fit_ols(fixture::frame_of({{"x", x}, {"y", y}}), std::vector<std::string>{"x"}, "y");
      const double lag1 = acf(fit.residuals, 1).points[1].value;
      if (lag1 >= 0.7 && lag1 <= 0.9) ++acf_hits;
    }
  }
  const double elapsed = seconds_since(start);
  report(outlier_hits == 50 && funnel_hits >= 45 && homo_hits >= 45 && acf_hits >= 45 && elapsed < 30.0, "C6",
         "Diagnostics power",
         "10-sigma outlier flagged " + std::to_string(outlier_hits) + "/50 (50), funnel p<0.01 " +
             std::to_string(funnel_hits) + "/50 (45), homoscedastic p>0.05 " + std::to_string(homo_hits) +
             "/50 (45), AR(1) lag-1 in [0.7,0.9] " + std::to_string(acf_hits) + "/50 (45), " + num(elapsed, "%.2f") +
             " s (limit 30 s)");
}

/// n = 500 rows with an interaction, a threshold step and one linear term.
FactorFrame nonlinear_panel(std::uint64_t seed) {
  Rng rng = Rng::stream(seed, 99);
  const std::size_t n = 500;
  Vector a(n), b(n), c(n), d(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rng.uniform(-1.0, 1.0);
    b[i] = rng.uniform(-1.0, 1.0);
    c[i] = rng.uniform(0.0, 1.0);
    d[i] = rng.uniform(0.0, 1.0);
    y[i] = 4.0 * a[i] * b[i] + (c[i] > 0.5 ? 2.0 : 0.0) + d[i] + rng.normal(0.0, 0.3);
  }
  return fixture::frame_of({{"a", a}, {"b", b}, {"c", c}, {"d", d}, {"y", y}});
}

void forest_vs_linear() {
  const auto start = Clock::now();
  const std::vector<std::string> preds{"a", "b", "c", "d"};
  int lower_rmse = 0, significant = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const FactorFrame frame = nonlinear_panel(seed);
    ForestConfig cfg;
    cfg.n_trees = 60;
    cfg.seed = seed;
    const EvalSummary lin = kfold_cv(frame, LinearSpec{preds}, 10, seed);
    const EvalSummary rf = kfold_cv(frame, ForestSpec{preds, cfg}, 10, seed);
    const ComparisonResult cmp = compare_cv(rf, lin);
    if (rf.rmse < lin.rmse) ++lower_rmse;
    if (cmp.significant() && cmp.winner == rf.model_name) ++significant;
  }
  report(lower_rmse >= 45 && significant >= 40, "C7", "Forest ordering",
         "forest out-of-fold RMSE lower in " + std::to_string(lower_rmse) + "/50 (45), forest significant at 0.05 in " +
             std::to_string(significant) + "/50 (40), 60 trees, " + num(seconds_since(start), "%.1f") + " s");
}

void metric_checks() {
  Rng rng(31337);
  double worst_gap = 0.0;  // most negative rmse - mae
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + rng.below(40);
    const Vector a = fixture::normal_vector(rng, n, 0.0, 1.0 + rng.uniform() * 100.0);
    const Vector b = fixture::normal_vector(rng, n, rng.normal(), 5.0);
    worst_gap = std::min(worst_gap, rmse(a, b) - mae(a, b));
  }
  const double m = std::abs(mae(Vector{2, 4}, Vector{1, 6}) - 1.5);
  const double r = std::abs(rmse(Vector{0, 0}, Vector{3, 4}) - std::sqrt(12.5));
  const double p = std::abs(pearson_r(Vector{1, 2, 3}, Vector{1, 3, 2}) - 0.5);
  report(worst_gap >= -1e-12 && m <= 1e-12 && r <= 1e-12 && p <= 1e-12, "C8", "Metric inequalities and hand values",
         "min(rmse - mae) over 1000 pairs = " + num(worst_gap) + ", |mae - 1.5| = " + num(m) + ", |rmse - sqrt(12.5)| = " +
             num(r) + ", |r - 0.5| = " + num(p) + " (all 1e-12)");
}

void determinism() {
  const fs::path dir = fs::temp_directory_path() / "factorlab_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = std::string("\"") + FACTORLAB_CLI + "\"";
  const std::string csv = (dir / "synth.csv").string();
  bool ok = run_command(cli + " synth --seed 7 --out " + csv) == 0;
  for (const char* run : {"run1", "run2"}) {
    ok = ok && run_command(cli + " analyze --input " + csv + " --out " + (dir / run).string() +
                           " --seed 42 > /dev/null") == 0;
  }
  const bool same_report = ok && read_file(dir / "run1" / "report.json") == read_file(dir / "run2" / "report.json");

  const FactorFrame frame = synthesize(SynthConfig{});
  const auto preds = canonical_predictors();
  ForestConfig cfg;
  cfg.n_trees = 200;
  cfg.seed = 42;
  cfg.threads = 1;
  const ForestModel serial = train_forest(frame, preds, "price", cfg);
  cfg.threads = 4;
  const ForestModel parallel = train_forest(frame, preds, "price", cfg);
  const bool same_forest = serial == parallel && forest_to_json(serial).dump() == forest_to_json(parallel).dump();
  report(same_report && same_forest, "C9", "Determinism",
         std::string("analyze --seed 42 twice: report.json ") + (same_report ? "byte-identical" : "DIFFERS") +
             "; forest with 1 vs 4 threads: " + (same_forest ? "identical" : "DIFFERS"));
}

}  // namespace

int main() {
  const auto start = Clock::now();
  ols_oracle();
  inference_identities();
  distribution_kernel();
  degrees_of_freedom();
  vif_checks();
  diagnostics_power();
  forest_vs_linear();
  metric_checks();
  determinism();

  // The rest of the suite is timed here as well so the limit covers everything.
  const auto others = Clock::now();
  bool suite_ok = true;
  for (const char* binary : kSuiteBinaries) {
    suite_ok = run_command(std::string("\"") + binary + "\" > /dev/null 2>&1") == 0 && suite_ok;
  }
  const double other_seconds = seconds_since(others);
  const double total = seconds_since(start);
  report(suite_ok && total < 60.0, "C10", "Suite runtime",
         "acceptance criteria " + num(total - other_seconds, "%.1f") + " s + other test binaries " +
             num(other_seconds, "%.1f") + " s = " + num(total, "%.1f") + " s (limit 60 s)" +
             (suite_ok ? "" : ", some test binaries failed"));
  std::printf("%s: %d failing criteria\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
