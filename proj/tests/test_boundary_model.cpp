#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "radscat/boundary_model.hpp"

using namespace radscat;

namespace {

BoundaryData cos_problem(double circumference = 2 * kPi) {
  return BoundaryData({{1, 1.0, 0.0}}, {}, circumference);
}

}  // namespace

TEST(FourierSeries, DerivativesMatchClosedForm) {
  FourierSeries f({{1, 1.5, 0.25}, {3, -0.5, 0.75}}, 1.0);
  for (double y : {0.0, 0.3, 1.7, 4.0}) {
    EXPECT_NEAR(f.value(y), 1.5 * std::cos(y) + 0.25 * std::sin(y) - 0.5 * std::cos(3 * y) +
                                0.75 * std::sin(3 * y), 1e-14);
    EXPECT_NEAR(f.deriv(y, 1), -1.5 * std::sin(y) + 0.25 * std::cos(y) + 1.5 * std::sin(3 * y) +
                                   2.25 * std::cos(3 * y), 1e-13);
    EXPECT_NEAR(f.deriv(y, 3), 1.5 * std::sin(y) - 0.25 * std::cos(y) - 13.5 * std::sin(3 * y) -
                                   20.25 * std::cos(3 * y), 1e-12);
  }
}

TEST(FourierSeries, ArclengthScaling) {
  // circumference 4 pi: L = 2, V(y) = cos(y / 2)
  FourierSeries f({{1, 1.0, 0.0}}, 2.0);
  EXPECT_NEAR(f.deriv(kPi * 2, 2), 0.25, 1e-15);
  auto c = f.taylor(0.0, 4);
  EXPECT_NEAR(c[0], 1.0, 1e-15);
  EXPECT_NEAR(c[2], -1.0 / 8.0, 1e-15);
  EXPECT_NEAR(c[4], 1.0 / (16.0 * 24.0), 1e-15);
}

TEST(CriticalPoints, CosineUnitCircle) {
  auto cps = find_critical_points(cos_problem());
  ASSERT_EQ(cps.size(), 2u);
  EXPECT_NEAR(cps[0].y_c, 0.0, 1e-13);
  EXPECT_EQ(cps[0].kind, CritKind::Maximum);
  EXPECT_NEAR(cps[0].value, 1.0, 1e-15);
  EXPECT_NEAR(cps[0].hessian, -1.0, 1e-15);
  EXPECT_NEAR(cps[1].y_c, kPi, 1e-13);
  EXPECT_EQ(cps[1].kind, CritKind::Minimum);
  EXPECT_NEAR(cps[1].value, -1.0, 1e-15);
  EXPECT_NEAR(cps[1].hessian, 1.0, 1e-15);
}

TEST(CriticalPoints, ConstantIsNotMorse) {
  BoundaryData b({{0, 2.0, 0.0}}, {}, 2 * kPi);
  try {
    find_critical_points(b);
    FAIL() << "expected NotMorse";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotMorse);
  }
}

TEST(CriticalPoints, DoubleRootIsNotMorse) {
  // V' = -sin y (1 - cos y) ... V = cos y + 0.25 cos 2y has V'' = 0 at y = 0 and pi? use
  // V = cos y - cos(2y)/4: V' = -sin y + sin(2y)/2 = -sin y (1 - cos y), double root at 0.
  BoundaryData b({{1, 1.0, 0.0}, {2, -0.25, 0.0}}, {}, 2 * kPi);
  EXPECT_THROW(find_critical_points(b), Error);
}

TEST(CriticalPoints, TwoModeMatchesDenseScan) {
  BoundaryData b({{1, 1.5, 0.0}, {2, -0.5, 0.0}}, {}, 2 * kPi);
  auto cps = find_critical_points(b);
  ASSERT_EQ(cps.size(), 4u);
  // brute-force scan of V' = -1.5 sin y + sin 2y at 1e6 samples
  const int N = 1000000;
  std::vector<double> scan;
  auto dv = [](double y) { return -1.5 * std::sin(y) + std::sin(2 * y); };
  for (int i = 0; i < N; ++i) {
    const double a = 2 * kPi * i / N, c = 2 * kPi * (i + 1) / N;
    const double fa = dv(a), fc = dv(c);
    if (fa == 0.0) scan.push_back(a);
    else if (fa * fc < 0) scan.push_back(a - fa * (c - a) / (fc - fa));
  }
  ASSERT_EQ(scan.size(), 4u);
  for (size_t i = 0; i < 4; ++i) EXPECT_NEAR(cps[i].y_c, scan[i], 1e-9);
  EXPECT_NEAR(cps[1].y_c, std::acos(0.75), 1e-12);
  for (size_t i = 0; i < 4; ++i) EXPECT_NE(cps[i].kind, cps[(i + 1) % 4].kind);
}

TEST(Thresholds, CosineUnitCircleCoincidence) {
  auto th = thresholds(cos_problem());
  EXPECT_DOUBLE_EQ(th.kappa, -1.0);
  EXPECT_DOUBLE_EQ(th.K_sup, 1.0);
  ASSERT_EQ(th.hess.size(), 1u);
  EXPECT_NEAR(th.hess[0].second, 1.0, 1e-14);
  EXPECT_EQ(th.classify(0.0), EnergyRange::NearMinimum);
  EXPECT_EQ(th.classify(5.0), EnergyRange::AboveThresholds);
  EXPECT_EQ(th.classify(-2.0), EnergyRange::BelowContinuum);
}

TEST(Thresholds, RescaledCircleHasHessianRange) {
  auto th = thresholds(cos_problem(4 * kPi));
  EXPECT_NEAR(th.hess_global, -0.5, 1e-14);
  EXPECT_LT(th.hess_global, th.K_sup);
  EXPECT_EQ(th.classify(0.0), EnergyRange::HessianRange);
  EXPECT_EQ(th.classify(-0.8), EnergyRange::NearMinimum);
}

TEST(Thresholds, MixedRangeOnSmallCircle) {
  auto th = thresholds(cos_problem(kPi));
  EXPECT_NEAR(th.hess_global, 7.0, 1e-13);
  EXPECT_EQ(th.classify(3.0), EnergyRange::MixedRange);
}

TEST(Thresholds, Invariants) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<FourierTerm> ts{{1, 1.0 + 0.2 * u(rng), 0.3 * u(rng)},
                                {2, 0.2 * u(rng), 0.2 * u(rng)},
                                {3, 0.05 * u(rng), 0.05 * u(rng)}};
    const double circ = 2 * kPi * (1.0 + 0.5 * std::abs(u(rng)));
    BoundaryData b(ts, {}, circ);
    auto cps = find_critical_points(b);
    int nmin = 0, nmax = 0;
    for (auto& c : cps) (c.kind == CritKind::Minimum ? nmin : nmax)++;
    EXPECT_EQ(nmin, nmax);
    auto th = thresholds(b);
    for (auto& [y, lh] : th.hess) EXPECT_GT(lh, th.kappa);
    for (double c : th.cv) {
      EXPECT_LE(th.kappa, c);
      EXPECT_LE(c, th.K_sup);
    }

    const double shift = 3.0 * u(rng);
    auto th2 = thresholds(b.translated(shift));
    ASSERT_EQ(th2.cv.size(), th.cv.size());
    for (size_t i = 0; i < th.cv.size(); ++i) EXPECT_NEAR(th2.cv[i], th.cv[i], 1e-11);
    EXPECT_NEAR(th2.hess_global, th.hess_global, 1e-10);
    auto cps2 = find_critical_points(b.translated(shift));
    for (const auto& c : cps) {
      double best = 1e9;
      for (const auto& c2 : cps2)
        best = std::min(best, std::abs(b.periodic_diff(c2.y_c, c.y_c + shift)));
      EXPECT_LT(best, 1e-10);
    }

    const double c = u(rng) * 4;
    auto th3 = thresholds(b.plus_constant(c));
    EXPECT_NEAR(th3.kappa, th.kappa + c, 1e-13);
    EXPECT_NEAR(th3.K_sup, th.K_sup + c, 1e-13);
    EXPECT_NEAR(th3.hess_global, th.hess_global + c, 1e-12);
  }
}

TEST(BoundaryData, JsonRoundTrip) {
  auto b = BoundaryData::from_json_text(
      R"({"v0": [[1, 1.0, 0.0], [2, 0.1, -0.2]], "v1": [[1, 0.0, 0.3]], "circumference": 9.0})");
  EXPECT_DOUBLE_EQ(b.circumference(), 9.0);
  auto b2 = BoundaryData::from_json_text(b.to_json_text());
  for (double y : {0.1, 2.0, 7.5}) {
    EXPECT_DOUBLE_EQ(b2.v0().value(y), b.v0().value(y));
    EXPECT_DOUBLE_EQ(b2.v1().value(y), b.v1().value(y));
  }
  auto b3 = BoundaryData::from_json_text(R"({"v0": [[1, 1.0, 0.0]]})");
  EXPECT_TRUE(b3.v1().is_zero());
  EXPECT_THROW(BoundaryData::from_json_text(R"({"v1": []})"), Error);
  EXPECT_THROW(BoundaryData::from_json_text(R"({"v0": [[1, 1.0]], "circumference": -1})"), Error);
}
