#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "radscat/legendrian.hpp"

using namespace radscat;

namespace {

BoundaryData cos_problem() { return BoundaryData({{1, 1.0, 0.0}}, {}, 2 * kPi); }

RadialPoint outgoing_at(const BoundaryData& b, double lambda, CritKind k) {
  for (const auto& q : radial_points(b, lambda))
    if (q.outgoing() && q.crit.kind == k) return q;
  throw std::runtime_error("missing radial point");
}

// Least-squares polynomial fit of the continued curve, using only samples
// produced by the ODE (outside the jet handoff).
RealVec fit_taylor(const LegendrePhase& ph, double zmax, int degree) {
  std::vector<double> zs, vs;
  for (const auto& s : ph.curve)
    if (std::abs(s.y) > ph.handoff && std::abs(s.y) <= zmax) {
      zs.push_back(s.y);
      vs.push_back(s.phi);
    }
  Eigen::MatrixXd A(zs.size(), degree + 1);
  Eigen::VectorXd rhs(zs.size());
  for (size_t i = 0; i < zs.size(); ++i) {
    double t = 1.0;
    for (int k = 0; k <= degree; ++k, t *= zs[i] / zmax) A(i, k) = t;
    rhs(i) = vs[i];
  }
  Eigen::VectorXd c = A.colPivHouseholderQr().solve(rhs);
  RealVec out(degree + 1);
  for (int k = 0; k <= degree; ++k) out[k] = c(k) / std::pow(zmax, k);
  return out;
}

}  // namespace

TEST(PhaseJet, LowOrderCoefficients) {
  auto b = cos_problem();
  auto q = outgoing_at(b, 5.0, CritKind::Maximum);
  ASSERT_NEAR(q.nu_t, 2.0, 1e-15);
  for (int br : {1, 2}) {
    auto ph = phase_jet(q, b, br, 8);
    EXPECT_DOUBLE_EQ(ph.jet[0], q.nu_t);
    EXPECT_DOUBLE_EQ(ph.jet[1], 0.0);
    const double r = (br == 1 ? q.r1 : q.r2).real();
    EXPECT_NEAR(2 * ph.jet[2] / -q.nu_t, r, 1e-8);
  }
  auto ph2 = phase_jet(q, b, 2, 8);
  EXPECT_NEAR(2 * ph2.jet[2], -2.0 * 1.1124, 1e-4);
}

TEST(PhaseJet, SecondDerivativeMatchesContinuedCurve) {
  auto b = cos_problem();
  auto q = outgoing_at(b, 5.0, CritKind::Maximum);
  for (int br : {1, 2}) {
    auto ph = continue_phase(phase_jet(q, b, br, 8), b, -0.5, 0.5);
    // Centered second difference at y_c from ODE samples only.
    double p1, d1, p2, d2;
    const double h = 0.02;
    ASSERT_TRUE(ph.curve_eval(h, p1, d1));
    ASSERT_TRUE(ph.curve_eval(-h, p2, d2));
    const double fd = (p1 - 2 * q.nu_t + p2) / (h * h);
    // O(h^2) error with Phi'''' = 24 c_4.
    EXPECT_NEAR(fd, 2 * ph.jet[2], 2 * std::abs(ph.jet[4]) * h * h + 1e-8);
  }
}

TEST(PhaseJet, OddCoefficientsVanishForSymmetricPotential) {
  auto b = BoundaryData({{1, 1.0, 0.0}, {2, 0.3, 0.0}, {3, -0.1, 0.0}}, {}, 2 * kPi);
  for (double lambda : {2.0, 5.0}) {
    for (const auto& q : radial_points(b, lambda)) {
      if (q.kind == RadialKind::Center) continue;
      // Only 0 and pi are symmetry points of a cosine series.
      if (std::min(std::abs(q.crit.y_c), std::abs(q.crit.y_c - kPi)) > 1e-9) continue;
      for (int br : {1, 2}) {
        auto ph = phase_jet(q, b, br, 12, ResonancePolicy::Truncate);
        for (size_t m = 1; m < ph.jet.size(); m += 2)
          EXPECT_NEAR(ph.jet[m], 0.0, 1e-12 * (1 + std::abs(ph.jet[m - 1])));
      }
    }
  }
}

TEST(PhaseJet, CenterRejected) {
  auto b = cos_problem();
  auto q = outgoing_at(b, 0.5, CritKind::Minimum);
  ASSERT_EQ(q.kind, RadialKind::Center);
  try {
    phase_jet(q, b, 1, 8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WrongKind);
  }
}

TEST(PhaseJet, ResonantObstruction) {
  // r2/r1 = 3 at the minimum: a/nu^2 = 3/16, so the r1 branch is obstructed
  // at order 1/r1 = 4.
  auto b = cos_problem();
  const double lambda = -1.0 + 8.0 / 3.0;
  auto q = outgoing_at(b, lambda, CritKind::Minimum);
  ASSERT_TRUE(q.resonant);
  try {
    phase_jet(q, b, 1, 8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ResonantObstruction);
  }
  auto ph = phase_jet(q, b, 1, 8, ResonancePolicy::Truncate);
  ASSERT_TRUE(ph.resonant_order.has_value());
  EXPECT_EQ(*ph.resonant_order, 4);
  ASSERT_EQ(ph.jet.size(), 4u);

  // Independent defect: multiply out the truncated polynomial.
  const RealVec& c = ph.jet;
  const RealVec v = b.v0().taylor(q.crit.y_c, 4);
  double d4 = v[4];
  for (int i = 0; i <= 4; ++i) {
    const double ci = i < 4 ? c[i] : 0.0, cj = 4 - i < 4 ? c[4 - i] : 0.0;
    d4 += ci * cj;
    const double di = i + 1 < 4 ? (i + 1) * c[i + 1] : 0.0;
    const double dj = 5 - i < 4 ? (5 - i) * c[5 - i] : 0.0;
    d4 += di * dj;
  }
  EXPECT_NEAR(ph.defect_coef, d4, 1e-12);
  // Even potential about the minimum: the cubic term vanishes, so the defect
  // is driven by V0's quartic term and c2^2.
  EXPECT_NE(ph.defect_coef, 0.0);

  // The other branch is not obstructed.
  EXPECT_NO_THROW(phase_jet(q, b, 2, 8));
}

TEST(ContinuePhase, EikonalResidualBothSaddleBranches) {
  auto b = cos_problem();
  const double lambda = 5.0;
  auto q = outgoing_at(b, lambda, CritKind::Maximum);
  for (int br : {1, 2}) {
    auto ph = continue_phase(phase_jet(q, b, br, 8), b, -0.5, 0.5);
    EXPECT_FALSE(ph.fold_lo || ph.fold_hi);
    EXPECT_NEAR(ph.z_min(), -0.5, 1e-14);
    EXPECT_NEAR(ph.z_max(), 0.5, 1e-14);
    double worst = 0;
    for (const auto& s : ph.curve)
      worst = std::max(worst, std::abs(eikonal_residual(s.phi, s.dphi, s.y, b, lambda)));
    EXPECT_LE(worst, 1e-10) << "branch " << br;
    // Dense output between samples.
    for (int i = 0; i <= 2000; ++i) {
      const double y = -0.5 + i * 0.0005;
      worst = std::max(worst, std::abs(eikonal_residual(ph.value(y), ph.deriv(y), y, b, lambda)));
    }
    EXPECT_LE(worst, 1e-10) << "branch " << br;
  }
}

TEST(ContinuePhase, JetMatchesOdeFit) {
  auto b = BoundaryData({{1, 1.0, 0.2}, {2, 0.3, -0.1}}, {}, 2 * kPi);
  for (double lambda : {3.0, 5.0}) {
    for (const auto& q : radial_points(b, lambda)) {
      if (!q.outgoing() || q.kind == RadialKind::Center) continue;
      for (int br : {1, 2}) {
        auto jet = phase_jet(q, b, br, 10);
        auto ph = continue_phase(jet, b, q.crit.y_c - 0.3, q.crit.y_c + 0.3);
        if (ph.fold_lo || ph.fold_hi) continue;
        auto fit = fit_taylor(ph, 0.25, 16);
        for (int m = 0; m <= 4; ++m)
          EXPECT_NEAR(fit[m], jet.jet[m], 1e-6)
              << "lambda " << lambda << " y_c " << q.crit.y_c << " branch " << br << " m " << m;
      }
    }
  }
}

TEST(ContinuePhase, NuSideOfSaddleBranches) {
  auto b = cos_problem();
  auto q = outgoing_at(b, 5.0, CritKind::Maximum);
  auto out = continue_phase(phase_jet(q, b, 1, 8), b, -0.5, 0.5);
  auto other = continue_phase(phase_jet(q, b, 2, 8), b, -0.5, 0.5);
  for (const auto& s : out.curve) EXPECT_GE(s.phi, q.nu_t - 1e-14);
  for (const auto& s : other.curve) EXPECT_LE(s.phi, q.nu_t + 1e-14);
  // Branches share c0, c1 and differ at second order.
  EXPECT_EQ(out.jet[0], other.jet[0]);
  EXPECT_EQ(out.jet[1], other.jet[1]);
  EXPECT_NE(out.jet[2], other.jet[2]);
}

TEST(ContinuePhase, FoldIsStatusNotError) {
  // The saddle's branch-1 curve runs into the neighbouring sinks, where mu -> 0.
  auto b = BoundaryData({{1, 1.5, 0.0}, {2, 0.5, 0.0}}, {}, 2 * kPi);
  auto q = outgoing_at(b, 0.6, CritKind::Maximum);
  ASSERT_EQ(q.kind, RadialKind::Saddle);
  LegendrePhase ph;
  ASSERT_NO_THROW(ph = continue_phase(phase_jet(q, b, 1, 8), b, q.crit.y_c - 2, q.crit.y_c + 2));
  EXPECT_TRUE(ph.fold_lo);
  EXPECT_TRUE(ph.fold_hi);
  EXPECT_LT(ph.z_max(), 2.0);
  EXPECT_THROW(ph.value(q.crit.y_c + 1.9), Error);
}

TEST(ContinuePhase, RequiresJetOrderFour) {
  auto b = cos_problem();
  auto q = outgoing_at(b, 5.0, CritKind::Maximum);
  EXPECT_THROW(continue_phase(phase_jet(q, b, 1, 3), b, -0.5, 0.5), Error);
}
