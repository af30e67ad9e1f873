#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "factorlab/diagnostics.hpp"
#include "fixtures.hpp"

using namespace factorlab;
using fixture::frame_of;
using fixture::normal_vector;

namespace {

/// y = 1 + 2 x1 - x2 + N(0, 1); optional 10 sigma shift on one row.
FactorFrame linear_data(std::uint64_t seed, std::size_t n, std::optional<std::size_t> planted = std::nullopt) {
  Rng rng(seed);
  Vector x1 = normal_vector(rng, n), x2 = normal_vector(rng, n), y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = 1.0 + 2.0 * x1[i] - x2[i] + rng.normal();
  if (planted) y[*planted] += 10.0;
  return frame_of({{"x1", x1}, {"x2", x2}, {"y", y}});
}

const std::vector<std::string> kX{"x1", "x2"};

}  // namespace

TEST(Vif, OrthogonalCenteredPredictors) {
  const auto f = frame_of({{"a", {1, -1, 1, -1}}, {"b", {1, 1, -1, -1}}, {"y", {1, 2, 3, 5}}});
  for (const auto& e : vif(f, {"a", "b"})) EXPECT_NEAR(e.value, 1.0, 1e-12);
}

TEST(Vif, PairwiseClosedForm) {
  // b = 0.8 a + 0.6 z with a, z orthonormal and centered, so corr(a, b) = 0.8.
  const auto f = frame_of({{"a", {1, -1, 1, -1}}, {"b", {1.4, -0.2, 0.2, -1.4}}, {"y", {1, 2, 3, 5}}});
  const auto v = vif(f, {"a", "b"});
  EXPECT_NEAR(v[0].value, 1.0 / (1.0 - 0.64), 1e-9);
  EXPECT_NEAR(v[1].value, 2.7777777778, 1e-9);
  const auto cm = pearson_matrix(f, {"a", "b"}, 0.05);
  EXPECT_NEAR(cm.r(0, 1), 0.8, 1e-12);
}

TEST(Vif, CrossModuleConsistency) {
  SynthConfig cfg;
  cfg.seed = 4;
  const FactorFrame f = synthesize(cfg);
  const auto preds = canonical_predictors();
  const auto v = vif(f, preds);
  for (std::size_t j = 0; j < preds.size(); ++j) {
    std::vector<std::string> others;
    for (std::size_t k = 0; k < preds.size(); ++k)
      if (k != j) others.push_back(preds[k]);
    const LinearFit aux = fit_ols(f, others, preds[j]);
    EXPECT_NEAR(v[j].value, 1.0 / (1.0 - aux.r_squared), 1e-9 * v[j].value);
    EXPECT_GE(v[j].value, 1.0);
  }
  // ROA is built from ROE and DTA, so the screen should flag it.
  const auto flagged = vif_flagged(v, 4.0);
  EXPECT_NE(std::find(flagged.begin(), flagged.end(), "roa"), flagged.end());
}

TEST(Vif, TwoPredictorsMatchPearson) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    Vector a = normal_vector(rng, 30), b(30);
    for (std::size_t i = 0; i < 30; ++i) b[i] = 0.5 * a[i] + rng.normal();
    const auto f = frame_of({{"a", a}, {"b", b}, {"y", normal_vector(rng, 30)}});
    const double r = pearson_matrix(f, {"a", "b"}, 0.05).r(0, 1);
    const auto v = vif(f, {"a", "b"});
    EXPECT_NEAR(v[0].value, 1.0 / (1.0 - r * r), 1e-9);
    EXPECT_NEAR(v[1].value, 1.0 / (1.0 - r * r), 1e-9);
  }
}

TEST(Vif, DuplicatedColumnIsSingular) {
  const auto f = frame_of({{"a", {1, 2, 3, 5, 8}}, {"b", {1, 2, 3, 5, 8}}, {"y", {1, 2, 3, 5, 4}}});
  try {
    vif(f, {"a", "b"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CollinearSingular);
    EXPECT_EQ(e.subject(), "b");
  }
}

TEST(Outliers, SymmetricDesignFlagsNothing) {
  const auto f = frame_of({{"x", {0, 0, 1, 1}}, {"y", {0, 2, 0, 2}}});
  const LinearFit fit = fit_ols(f, {"x"}, "y");
  for (double e : fit.residuals) EXPECT_NEAR(std::abs(e), 1.0, 1e-12);
  EXPECT_TRUE(flag_outliers(fit, 3.0).empty());
}

TEST(Outliers, PlantedShiftIsTheOnlyFlag) {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const std::size_t row = 7 + seed % 40;
    const LinearFit fit = fit_ols(linear_data(seed, 60, row), kX, "y");
    EXPECT_EQ(flag_outliers(fit, 3.0), (std::vector<std::size_t>{row + 1})) << seed;
  }
}

TEST(Outliers, InfiniteThresholdAndScaleInvariance) {
  const FactorFrame f = linear_data(9, 50, 10);
  const LinearFit fit = fit_ols(f, kX, "y");
  EXPECT_TRUE(flag_outliers(fit, std::numeric_limits<double>::infinity()).empty());

  Vector y = f.column("y");
  for (auto& v : y) v *= 37.5;
  const auto g = frame_of({{"x1", f.column("x1")}, {"x2", f.column("x2")}, {"y", y}});
  const LinearFit scaled = fit_ols(g, kX, "y");
  EXPECT_EQ(flag_outliers(fit, 2.0), flag_outliers(scaled, 2.0));

  double sum = 0.0;
  for (double h : fit.leverage) {
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, 1.0);
    sum += h;
  }
  EXPECT_NEAR(sum, 3.0, 1e-8);
}

TEST(Outliers, ExternalStudentizedMatchesLeaveOneOutRefit) {
  const FactorFrame f = linear_data(21, 25);
  const LinearFit fit = fit_ols(f, kX, "y");
  const Vector t = externally_studentized(fit);
  for (std::size_t i : {0u, 5u, 17u}) {
    const LinearFit loo = fit_ols(remove_rows(f, {i}), kX, "y");
    const auto row = f.values().row(i);
    const Matrix xi(1, 2, {row[f.index_of("x1")], row[f.index_of("x2")]});
    const double pred_err = f.column("y")[i] - predict(loo, xi)[0];
    // t_i = prediction error / (s_(i) * sqrt(1 + x_i (X_(i)^T X_(i))^{-1} x_i^T)), and
    // 1 + that quadratic form = 1 / (1 - h_ii).
    const double expected = pred_err * std::sqrt(1.0 - fit.leverage[i]) / loo.rse;
    EXPECT_NEAR(t[i], expected, 1e-9);
  }
}

TEST(Acf, BasicsAndErrors) {
  Rng rng(1);
  const Vector noise = normal_vector(rng, 1000);
  const AcfResult r = acf(noise, 20);
  ASSERT_EQ(r.points.size(), 21u);
  EXPECT_EQ(r.points[0].value, 1.0);
  EXPECT_NEAR(r.band, 1.96 / std::sqrt(1000.0), 1e-15);
  int inside = 0;
  for (std::size_t k = 1; k <= 20; ++k) inside += std::abs(r.points[k].value) < r.band;
  EXPECT_GE(inside, 18);

  try {
    acf(Vector(10, 2.0), 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroVariance);
  }
  try {
    acf(Vector{1, 2, 3}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LagTooLarge);
  }
  EXPECT_EQ(default_acf_lag(8), 7u);
  EXPECT_EQ(default_acf_lag(100), 20u);
}

TEST(Acf, AffineInvariance) {
  Rng rng(2);
  const Vector x = normal_vector(rng, 200);
  for (double a : {3.0, -0.25}) {
    Vector y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + 11.0;
    const auto rx = acf(x, 15), ry = acf(y, 15);
    for (std::size_t k = 0; k <= 15; ++k) EXPECT_NEAR(rx.points[k].value, ry.points[k].value, 1e-10);
  }
}

TEST(Acf, HandComputed) {
  // centered [-1.5, -0.5, 0.5, 1.5], denominator 5
  const auto r = acf(Vector{1, 2, 3, 4}, 2);
  EXPECT_NEAR(r.points[1].value, (0.75 - 0.25 + 0.75) / 5.0, 1e-15);
  EXPECT_NEAR(r.points[2].value, (-0.75 - 0.75) / 5.0, 1e-15);
}

TEST(QqPoints, SinglePointAndMonotonicity) {
  const auto one = qq_points(Vector{0.0});
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].theoretical, 0.0);
  EXPECT_EQ(one[0].sample, 0.0);

  Rng rng(31);
  const Vector z = normal_vector(rng, 500);
  const auto pts = qq_points(z);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    EXPECT_LT(pts[i - 1].theoretical, pts[i].theoretical);
    EXPECT_LE(pts[i - 1].sample, pts[i].sample);
  }
  Vector tx, sy;
  for (const auto& p : pts) {
    tx.push_back(p.theoretical);
    sy.push_back(p.sample);
  }
  const auto f = frame_of({{"q", tx}, {"s", sy}}, "s");
  const double slope = fit_ols(f, {"q"}, "s").beta[1];
  EXPECT_GE(slope, 0.9);
  EXPECT_LE(slope, 1.1);
}

TEST(ResidualVsFitted, HomoscedasticAndFunnel) {
  const LinearFit calm = fit_ols(linear_data(77, 200), kX, "y");
  const auto rc = residual_vs_fitted(calm);
  ASSERT_TRUE(rc.funnel.has_value());
  EXPECT_GT(rc.funnel->p_value, 0.05);
  EXPECT_EQ(rc.points.size(), 200u);

  Rng rng(78);
  const std::size_t n = 500;
  Vector x = Vector(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform(1.0, 10.0);
    const double mean = 5.0 + 3.0 * x[i];
    y[i] = mean + rng.normal(0.0, 0.1 * mean);
  }
  const LinearFit funnel = fit_ols(frame_of({{"x", x}, {"y", y}}), {"x"}, "y");
  const auto rf = residual_vs_fitted(funnel);
  EXPECT_LT(rf.funnel->p_value, 0.01);
  EXPECT_GT(rf.funnel->correlation, 0.0);
}

TEST(ResidualVsFitted, DegenerateConventions) {
  Vector x(12), y(12);
  for (std::size_t i = 0; i < 12; ++i) {
    x[i] = static_cast<double>(i);
    y[i] = 2.0 * x[i] + 1.0;
  }
  const auto r = residual_vs_fitted(fit_ols(frame_of({{"x", x}, {"y", y}}), {"x"}, "y"));
  ASSERT_TRUE(r.funnel.has_value());
  EXPECT_EQ(r.funnel->correlation, 0.0);
  EXPECT_EQ(r.funnel->p_value, 1.0);

  const auto small = residual_vs_fitted(fit_ols(frame_of({{"x", {1, 2, 3, 4}}, {"y", {1, 3, 2, 5}}}), {"x"}, "y"));
  EXPECT_FALSE(small.funnel.has_value());
}

TEST(ComponentResidual, Identities) {
  const auto f = frame_of({{"x", {3, 1, 2, 5}}, {"y", {2, 1, 4, 3}}});
  const LinearFit fit = fit_ols(f, {"x"}, "y");
  const auto pts = component_residual(fit, f, "x");
  // sorted by x: rows 1, 2, 0, 3
  const std::size_t order[] = {1, 2, 0, 3};
  const Vector y = f.column("y");
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(pts[k].y, y[order[k]] - fit.intercept(), 1e-12);

  const auto g = frame_of({{"a", {1, 2, 3, 4, 5}}, {"b", {2, 1, 0, 1, 3}}, {"y", {9, 8, 7, 12, 20}}});
  const LinearFit exact = fit_ols(g, {"a", "b"}, "y");
  for (const auto& p : component_residual(exact, g, "a")) EXPECT_NEAR(p.y, exact.slope("a") * p.x, 1e-10);

  try {
    component_residual(fit, f, "nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownColumn);
  }
}

TEST(ComponentResidual, RevealsCurvature) {
  Rng rng(404);
  const std::size_t n = 200;
  Vector x(n), z(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform(-2.0, 2.0);
    z[i] = rng.normal();
    y[i] = 1.0 + x[i] + 1.5 * x[i] * x[i] + z[i] + rng.normal(0.0, 0.5);
  }
  const auto f = frame_of({{"x", x}, {"z", z}, {"y", y}});
  const LinearFit fit = fit_ols(f, {"x", "z"}, "y");
  Vector px, px2, pr;
  for (const auto& p : component_residual(fit, f, "x")) {
    px.push_back(p.x);
    px2.push_back(p.x * p.x);
    pr.push_back(p.y);
  }
  const LinearFit curve = fit_ols(frame_of({{"x", px}, {"x2", px2}, {"pr", pr}}, "pr"), {"x", "x2"}, "pr");
  EXPECT_GT(std::abs(curve.beta[2]), 10.0 * curve.se[2]);
}

TEST(Tukey, RecoversLog) {
  Rng rng(55);
  const std::size_t n = 300;
  Vector x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform(0.05, 20.0);
    y[i] = 3.0 + 2.0 * std::log(x[i]) + rng.normal(0.0, 0.2);
  }
  const auto f = frame_of({{"x", x}, {"y", y}});
  EXPECT_EQ(tukey_suggest(f, "x", "y").kind, TransformKind::Log);
}

TEST(Tukey, IdentityForLinearAndGuardsDomain) {
  const auto f = frame_of({{"x", {-2, -1, 0, 1, 2, 3}}, {"y", {-3, -1, 1, 3, 5, 7}}});
  EXPECT_EQ(tukey_suggest(f, "x", "y").kind, TransformKind::Identity);
  const auto rungs = tukey_ladder(f, "x", "y");
  EXPECT_FALSE(rungs[1].r_squared.has_value());  // log skipped
  EXPECT_FALSE(rungs[2].r_squared.has_value());  // sqrt skipped
  EXPECT_TRUE(rungs[3].r_squared.has_value());

  const auto c = frame_of({{"x", {1, 1, 1}}, {"y", {1, 2, 3}}});
  try {
    tukey_suggest(c, "x", "y");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConstantPredictor);
  }
}

TEST(PearsonMatrix, HandValuesAndMasks) {
  const auto f = frame_of({{"x", {1, 2, 3}}, {"y", {1, 3, 2}}, {"ax", {5, 7, 9}}});
  const auto cm = pearson_matrix(f, {"x", "y", "ax"}, 0.05);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(cm.r(i, i), 1.0);
    EXPECT_TRUE(cm.is_significant(i, i));
  }
  EXPECT_NEAR(cm.r(0, 1), 0.5, 1e-12);
  EXPECT_NEAR(cm.r(0, 2), 1.0, 1e-12);
  EXPECT_EQ(cm.r(1, 0), cm.r(0, 1));

  SynthConfig cfg;
  cfg.seed = 12;
  const FactorFrame s = synthesize(cfg);
  const auto cols = s.column_names();
  const auto loose = pearson_matrix(s, cols, 0.05);
  const auto strict = pearson_matrix(s, cols, 0.01);
  for (std::size_t i = 0; i < cols.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (strict.is_significant(i, j)) EXPECT_TRUE(loose.is_significant(i, j));
      EXPECT_LE(std::abs(loose.r(i, j)), 1.0);
    }

  const auto z = frame_of({{"x", {1, 2, 3}}, {"k", {4, 4, 4}}, {"y", {1, 2, 2}}});
  try {
    pearson_matrix(z, {"x", "k"}, 0.05);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroVariance);
    EXPECT_EQ(e.subject(), "k");
  }
}

TEST(Diagnose, BundleInvariants) {
  SynthConfig cfg;
  cfg.seed = 6;
  const FactorFrame f = synthesize(cfg);
  const auto preds = canonical_predictors();
  const LinearFit fit = fit_ols(f, preds, "price");
  const DiagnosticsReport rep = diagnose(f, fit);
  EXPECT_EQ(rep.vif.size(), preds.size());
  for (const auto& v : rep.vif) EXPECT_GE(v.value, 1.0);
  double sum = 0.0;
  for (double h : rep.leverage) sum += h;
  EXPECT_NEAR(sum, 8.0, 1e-8);
  EXPECT_EQ(rep.acf.points.front().value, 1.0);
  EXPECT_EQ(rep.acf.points.size(), 21u);
  EXPECT_EQ(rep.crplots.size(), preds.size());
  EXPECT_EQ(rep.qq.size(), f.rows());
  EXPECT_EQ(rep.studentized.size(), f.rows());
}
