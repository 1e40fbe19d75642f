#include <gtest/gtest.h>

#include <cmath>

#include "radscat/center.hpp"

using namespace radscat;

namespace {

BoundaryData cos_problem() { return BoundaryData({{1, 1.0, 0.0}}, {}, 2 * kPi); }
BoundaryData generic_problem() {
  return BoundaryData({{1, 1.0, 0.0}, {2, 0.3, 0.4}}, {{1, 0.2, 0.1}}, 2 * kPi);
}

RadialPoint center_of(const BoundaryData& b, double lambda) {
  for (const auto& q : radial_points(b, lambda))
    if (q.outgoing() && q.kind == RadialKind::Center) return q;
  throw std::runtime_error("no center");
}

int sign_changes(const CenterExpansion& e, int j) {
  // Undo the chirp; the remaining profile is real.
  int count = 0;
  double prev = 0;
  const double L = (std::sqrt(2.0 * j + 1) + 3) / std::sqrt(e.alpha);
  for (int i = 0; i <= 20000; ++i) {
    const double Y = -L + 2 * L * i / 20000.0;
    const double v = (e.mode(j, Y) * std::polar(1.0, 0.25 * e.nu_t() * Y * Y)).real();
    if (std::abs(v) < 1e-12) continue;
    if (prev != 0 && (v > 0) != (prev > 0)) ++count;
    prev = v;
  }
  return count;
}

}  // namespace

TEST(CenterModes, AlphaAndBetas) {
  auto b = cos_problem();
  auto e = center_modes(center_of(b, 0.5), b, 32);
  // V0'' = 1 at the minimum, nu^2 = 0.5 + 1.
  const double alpha = std::sqrt(1.0 / 2 - 1.5 / 4);
  EXPECT_NEAR(e.alpha, alpha, 1e-12);
  EXPECT_NEAR(e.alpha, 0.35355, 1e-5);
  EXPECT_NEAR(e.betas[0], alpha, 1e-12);
  EXPECT_NEAR(e.betas[1], 3 * alpha, 1e-12);
  EXPECT_EQ(e.j_max(), 32);
}

TEST(CenterModes, ZeroCounts) {
  auto b = cos_problem();
  auto e = center_modes(center_of(b, 0.5), b, 16);
  EXPECT_EQ(sign_changes(e, 0), 0);
  EXPECT_EQ(sign_changes(e, 5), 5);
  for (int j = 0; j <= 10; ++j) EXPECT_EQ(sign_changes(e, j), j);
}

TEST(CenterModes, EigenResidualAndGram) {
  for (auto b : {cos_problem(), generic_problem()}) {
    auto e = center_modes(center_of(b, 0.5), b, 16);
    for (int j = 0; j <= 10; ++j) EXPECT_LE(center_eigen_residual(e, b, j), 1e-6) << j;
    auto G = center_gram(e, 11);
    EXPECT_LE((G - Eigen::MatrixXcd::Identity(11, 11)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(CenterModes, NotCenter) {
  auto b = cos_problem();
  for (const auto& q : radial_points(b, 5.0))
    if (q.outgoing()) {
      try {
        center_modes(q, b);
        FAIL();
      } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotCenter);
      }
    }
}

TEST(CenterModes, HermiteOrthonormality) {
  // Gauss-type check by fine trapezoid, independent of the mode wrapper.
  const int n = 12;
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
  const double h = 0.01;
  for (int i = -1500; i <= 1500; ++i) {
    auto p = hermite_functions(n, i * h);
    for (int a = 0; a < n; ++a)
      for (int c = 0; c < n; ++c) G(a, c) += h * p[a] * p[c];
  }
  EXPECT_LE((G - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12);
  for (double t : {-7.0, -1.3, 0.0, 2.2, 9.0})
    for (double v : hermite_functions(40, t)) EXPECT_LE(std::abs(v), kHermiteSup);
}

TEST(CenterBuild, SingleModeModulus) {
  auto b = generic_problem();
  auto e = center_modes(center_of(b, 0.5), b, 8);
  e.gammas[0] = 1.0;
  auto g = build_center_eigenfunction(e, CollarGrid::log_uniform(b, 0.5, 1e-3, 0.3, 20, 64));
  for (size_t i = 0; i < g.nx(); ++i)
    for (size_t j = 0; j < g.ny(); ++j) {
      const double Y = b.periodic_diff(g.y[j], e.q.crit.y_c) / std::sqrt(g.x[i]);
      EXPECT_NEAR(std::abs(g.field(i, j)) * std::pow(g.x[i], -0.25), std::abs(e.mode(0, Y)), 1e-13);
    }
}

TEST(CenterBuild, ZeroCoefficientsGiveZeroField) {
  auto b = cos_problem();
  auto e = center_modes(center_of(b, 0.5), b, 8);
  auto g = build_center_eigenfunction(e, CollarGrid::log_uniform(b, 0.5, 1e-3, 0.3, 8, 16));
  for (const auto& v : g.values) EXPECT_EQ(v, cplx(0.0));
}

TEST(CenterBuild, TailTooLarge) {
  auto b = cos_problem();
  auto e = center_modes(center_of(b, 0.5), b, 4);
  e.gammas = {1.0, 0.0, 0.0, 0.0, 1e-3};
  auto lay = CollarGrid::log_uniform(b, 0.5, 1e-3, 0.3, 8, 16);
  try {
    build_center_eigenfunction(e, lay);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::TailTooLarge);
  }
  e.gammas[4] = 1e-14;
  EXPECT_NO_THROW(build_center_eigenfunction(e, lay));
}

TEST(CenterBuild, ResidualSlope) {
  // Leading exponent 1/4, one power of x from the operator, gap 1/2; an even
  // potential with V1 = 0 gains a further half power.
  struct Case {
    BoundaryData b;
    double predicted;
  };
  for (const auto& c : {Case{generic_problem(), 1.75}, Case{cos_problem(), 2.25}}) {
    auto e = center_modes(center_of(c.b, 0.5), c.b, 8);
    e.gammas[0] = 1.0;
    auto lay = CollarGrid::log_uniform(c.b, 0.5, 1e-3, 0.3, 40, 256);
    auto rep = residual(CenterModel(e), lay, ResidualNorm::Sup, 1e-3, 1e-1);
    EXPECT_GE(rep.fit.slope, c.predicted - 0.05);
    EXPECT_LE(rep.fit.slope, c.predicted + 0.1);
  }
}
