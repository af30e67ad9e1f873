#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "factorlab/linmodel.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace factorlab;
using fixture::frame_of;

namespace {

FactorFrame random_problem(std::uint64_t seed, std::size_t n, std::size_t p, std::vector<std::string>& names) {
  Rng rng(seed);
  std::vector<std::pair<std::string, Vector>> cols;
  Vector y(n, 0.0);
  names.clear();
  for (std::size_t j = 0; j < p; ++j) {
    names.push_back("x" + std::to_string(j));
    Vector x = fixture::normal_vector(rng, n, 0.0, 1.0 + j);
    for (std::size_t i = 0; i < n; ++i) y[i] += (0.5 + j) * x[i];
    cols.emplace_back(names.back(), std::move(x));
  }
  for (auto& v : y) v += rng.normal(3.0, 2.0);
  cols.emplace_back("y", y);
  return frame_of(std::move(cols));
}

}  // namespace

TEST(FitOls, PerfectFit) {
  const auto f = frame_of({{"x", {1, 2, 3, 4, 5}}, {"y", {3, 5, 7, 9, 11}}});
  const LinearFit fit = fit_ols(f, {"x"}, "y");
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-15);
  EXPECT_NEAR(fit.rse, 0.0, 1e-12);
  for (double e : fit.residuals) EXPECT_NEAR(e, 0.0, 1e-12);
}

TEST(FitOls, ThreePointSystem) {
  const auto f = frame_of({{"x", {0, 1, 2}}, {"y", {0, 0, 3}}});
  const LinearFit fit = fit_ols(f, {"x"}, "y");
  EXPECT_NEAR(fit.beta[0], -0.5, 1e-13);
  EXPECT_NEAR(fit.beta[1], 1.5, 1e-13);
  EXPECT_NEAR(fit.rss, 1.5, 1e-13);
  EXPECT_NEAR(fit.residuals[0], 0.5, 1e-13);
  EXPECT_NEAR(fit.residuals[1], -1.0, 1e-13);
  EXPECT_NEAR(fit.residuals[2], 0.5, 1e-13);
  EXPECT_EQ(fit.df_resid, 1u);
  EXPECT_EQ(fit.df_model, 1u);
}

TEST(FitOls, StandardErrorsMatchGramInverseOracle) {
  std::vector<std::string> names;
  const FactorFrame f = random_problem(17, 40, 4, names);
  const LinearFit fit = fit_ols(f, names, "y");
  const Vector inv = oracle::gram_inverse_diagonal(design_matrix(f, names, true));
  for (std::size_t j = 0; j < fit.beta.size(); ++j) {
    EXPECT_NEAR(fit.se[j], fit.rse * std::sqrt(inv[j]), 1e-10 * fit.se[j]);
    EXPECT_NEAR(fit.t_values[j], fit.beta[j] / fit.se[j], 1e-12 * std::abs(fit.t_values[j]));
  }
  EXPECT_EQ(fit.df_resid, 40u - 5u);
  double sum = 0.0;
  for (double e : fit.residuals) sum += e;
  EXPECT_LE(std::abs(sum), 1e-8);
}

TEST(FitOls, InferenceIdentities) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::vector<std::string> names;
    const std::size_t p = 1 + seed % 6;
    const FactorFrame f = random_problem(seed, 20 + 3 * seed, p, names);
    const LinearFit fit = fit_ols(f, names, "y");
    const double r = *correlation_or_none(fit.fitted, fit.response);
    EXPECT_NEAR(fit.r_squared, r * r, 1e-10);
    const double anova = ((fit.tss - fit.rss) / p) / (fit.rss / fit.df_resid);
    EXPECT_NEAR(fit.f_stat, anova, 1e-8 * anova);
    EXPECT_NEAR(fit.rse, std::sqrt(fit.rss / fit.df_resid), 1e-12);
    if (p == 1) EXPECT_NEAR(fit.f_stat, fit.t_values[1] * fit.t_values[1], 1e-8 * fit.f_stat);
  }
}

TEST(FitOls, RowPermutationInvariance) {
  std::vector<std::string> names;
  const FactorFrame f = random_problem(3, 30, 3, names);
  std::vector<std::size_t> order(30);
  for (std::size_t i = 0; i < 30; ++i) order[i] = (i * 7) % 30;
  std::vector<double> data;
  for (std::size_t i : order) {
    const auto row = f.values().row(i);
    data.insert(data.end(), row.begin(), row.end());
  }
  const FactorFrame g(f.column_names(), Matrix(30, f.cols(), data), f.roles());
  const LinearFit a = fit_ols(f, names, "y");
  const LinearFit b = fit_ols(g, names, "y");
  for (std::size_t j = 0; j < a.beta.size(); ++j) EXPECT_NEAR(a.beta[j], b.beta[j], 1e-8);
}

TEST(FitOls, NoiseColumnNeverLowersRSquared) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::vector<std::string> names;
    const FactorFrame base = random_problem(seed, 25, 2, names);
    Rng rng(seed + 1000);
    std::vector<std::pair<std::string, Vector>> cols;
    for (const auto& n : base.column_names()) cols.emplace_back(n, base.column(n));
    cols.emplace_back("noise", fixture::normal_vector(rng, 25));
    const FactorFrame wider = frame_of(cols);
    auto more = names;
    more.push_back("noise");
    EXPECT_GE(fit_ols(wider, more, "y").r_squared + 1e-12, fit_ols(base, names, "y").r_squared);
  }
}

TEST(FitOls, Errors) {
  const auto f = frame_of({{"a", {1, 2, 3, 4}}, {"b", {2, 4, 6, 8}}, {"y", {1, 3, 2, 5}}});
  try {
    fit_ols(f, {"a", "b"}, "y");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RankDeficient);
    EXPECT_EQ(e.subject(), "b");
  }
  try {
    fit_ols(f, {"a", "b", "term"}, "y");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientRows);
  }
  try {
    fit_ols(f, {"zzz"}, "y");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownColumn);
  }
}

TEST(FitOls, CoefficientTableLayout) {
  SynthConfig cfg;
  cfg.seed = 1;
  const FactorFrame f = synthesize(cfg);
  const std::vector<std::string> order{"term", "roe", "cr", "tato", "dta", "panel"};
  const LinearFit fit = fit_ols(f, order, "price");
  const auto rows = coefficient_table(fit);
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_EQ(rows[0].name, "(Intercept)");
  for (std::size_t j = 0; j < order.size(); ++j) EXPECT_EQ(rows[j + 1].name, order[j]);
  EXPECT_EQ(fit.df_model, 6u);
  EXPECT_EQ(fit.df_resid, 70u - 7u);
  for (const auto& r : rows) EXPECT_EQ(r.stars, significance_stars(r.p_value));
}

TEST(SignificanceStars, Thresholds) {
  EXPECT_EQ(significance_stars(0.0005), "****");
  EXPECT_EQ(significance_stars(0.005), "***");
  EXPECT_EQ(significance_stars(0.03), "**");
  EXPECT_EQ(significance_stars(0.07), "*");
  EXPECT_EQ(significance_stars(0.5), "");
}

TEST(ScreenPredictors, PerfectAndNull) {
  const auto f = frame_of({{"x", {1, 2, 3, 4, 5, 6}}, {"y", {2, 4, 6, 8, 10, 12}}});
  const auto rows = screen_predictors(f, {"x"}, "y");
  EXPECT_NEAR(rows[0].r_squared, 1.0, 1e-15);
  EXPECT_NEAR(rows[0].rse, 0.0, 1e-12);

  Rng rng(123);
  const auto g = frame_of({{"x", fixture::normal_vector(rng, 1000)}, {"y", fixture::normal_vector(rng, 1000)}});
  const auto null_rows = screen_predictors(g, {"x"}, "y");
  EXPECT_LT(null_rows[0].r_squared, 0.01);
}

TEST(ScreenPredictors, TableTwoRowsAndFEqualsTSquared) {
  SynthConfig cfg;
  cfg.seed = 2;
  const FactorFrame f = synthesize(cfg);
  const std::vector<std::string> order{"panel", "dta", "roe", "roa", "tato", "cr", "term"};
  const auto rows = screen_predictors(f, order, "price");
  ASSERT_EQ(rows.size(), order.size());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    EXPECT_EQ(rows[j].predictor, order[j]);
    EXPECT_NEAR(rows[j].f_stat, rows[j].slope_t * rows[j].slope_t, 1e-8 * rows[j].f_stat);
    EXPECT_GE(rows[j].r_squared, 0.0);
    EXPECT_LE(rows[j].r_squared, 1.0);
    EXPECT_GE(rows[j].rse, 0.0);
  }
}

TEST(ScreenPredictors, ConstantPredictor) {
  const auto f = frame_of({{"c", {2, 2, 2, 2}}, {"y", {1, 2, 3, 4}}});
  try {
    screen_predictors(f, {"c"}, "y");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConstantPredictor);
    EXPECT_EQ(e.subject(), "c");
  }
}

TEST(Predict, TrainingRowsAndInterceptOnly) {
  std::vector<std::string> names;
  const FactorFrame f = random_problem(8, 30, 3, names);
  const LinearFit fit = fit_ols(f, names, "y");
  const Vector again = predict(fit, f.select(names));
  for (std::size_t i = 0; i < again.size(); ++i) EXPECT_NEAR(again[i], fit.fitted[i], 1e-12);

  const LinearFit mean_only = fit_ols(f, std::vector<std::string>{}, "y");
  const Vector flat = predict(mean_only, Matrix(4, 0));
  const double ybar = mean_of(f.column("y"));
  for (double v : flat) EXPECT_NEAR(v, ybar, 1e-12);

  try {
    predict(fit, Matrix(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(FitOls, WithoutIntercept) {
  const auto f = frame_of({{"x", {1, 2, 3, 4}}, {"y", {2.1, 3.9, 6.2, 7.8}}});
  FitOptions opts;
  opts.intercept = false;
  const LinearFit fit = fit_ols(f, {"x"}, "y", opts);
  ASSERT_EQ(fit.beta.size(), 1u);
  EXPECT_EQ(fit.predictor_names.front(), "x");
  EXPECT_NEAR(fit.beta[0], (2.1 + 7.8 + 18.6 + 31.2) / 30.0, 1e-12);
  EXPECT_EQ(fit.df_resid, 3u);
}
