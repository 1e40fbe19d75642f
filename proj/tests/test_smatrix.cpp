#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "radscat/smatrix.hpp"

using namespace radscat;

namespace {

void expect_code(const std::function<void()>& fn, ErrorCode code) {
  try {
    fn();
    FAIL() << "expected " << error_name(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

BoundaryData cos_problem() { return BoundaryData({{1, 1.0, 0.0}}, {}, 2 * kPi); }

}  // namespace

TEST(SmoothStep, EndpointsAndMonotone) {
  EXPECT_EQ(smooth_step(-0.1), 0.0);
  EXPECT_EQ(smooth_step(0.0), 0.0);
  EXPECT_EQ(smooth_step(1.0), 1.0);
  EXPECT_NEAR(smooth_step(0.5), 0.5, 1e-15);
  double prev = 0.0;
  for (int k = 1; k < 100; ++k) {
    const double v = smooth_step(k / 100.0);
    EXPECT_GE(v, prev);
    EXPECT_NEAR(v + smooth_step(1.0 - k / 100.0), 1.0, 1e-14);
    prev = v;
  }
}

TEST(UnitarityDefect, KnownMatrices) {
  Eigen::MatrixXcd U(2, 2);
  const double c = std::cos(0.3), s = std::sin(0.3);
  U << c, cplx(0, s), cplx(0, s), c;
  EXPECT_LT(unitarity_defect(U), 1e-15);
  EXPECT_NEAR(unitarity_defect(0.9 * U), 0.19, 1e-14);
  Eigen::MatrixXcd D = Eigen::MatrixXcd::Identity(3, 3);
  D(2, 2) = 1.1;
  EXPECT_NEAR(unitarity_defect(D), 0.21, 1e-14);
}

TEST(SMatrixBasis, UnitFluxAndCutoff) {
  auto b = cos_problem();
  SMatrixOptions o;
  o.j_s = 3;
  std::vector<SMatrixBasis> basis;
  const auto models = smatrix_basis_models(b, 0.5, o, basis);
  ASSERT_EQ(models.size(), 3u);
  for (size_t k = 0; k < basis.size(); ++k) {
    const auto& q = basis[k].q;
    EXPECT_EQ(q.kind, RadialKind::Center);
    EXPECT_NEAR(q.crit.y_c, kPi, 1e-10);
    EXPECT_EQ(basis[k].j, int(k));
    CplxVec g(12, 0.0);
    g[k] = 1.0 / std::sqrt(2.0 * q.nu_t);
    const auto p = pair_modes(ModeTrace::center(q, g), ModeTrace::center(q, g));
    EXPECT_NEAR(p.value.real(), 1.0, 1e-12);
    EXPECT_NEAR(p.value.imag(), 0.0, 1e-12);
  }
  const auto& cm = static_cast<const CutoffModel&>(*models[0]);
  EXPECT_EQ(cm.weight(0.05, 0.0), 1.0);
  EXPECT_EQ(cm.weight(o.x_cut, 0.0), 0.0);
  EXPECT_EQ(cm.weight(0.05, cm.half_width()), 0.0);
  EXPECT_EQ(cm.weight(0.05, 0.5 * cm.half_width()), 1.0);
}

TEST(SMatrixBasis, SinkBasisAboveMaximum) {
  auto b = cos_problem();
  SMatrixOptions o;
  std::vector<SMatrixBasis> basis;
  const auto models = smatrix_basis_models(b, 2.0, o, basis);
  ASSERT_EQ(models.size(), 4u);
  for (const auto& e : basis) EXPECT_EQ(e.q.kind, RadialKind::SinkOrSource);
}

TEST(SMatrixBasis, Rejections) {
  auto b = cos_problem();
  std::vector<SMatrixBasis> basis;
  SMatrixOptions o;
  expect_code([&] { smatrix_basis_models(b, -1.5, o, basis); }, ErrorCode::InvalidInput);
  o.j_s = 0;
  expect_code([&] { smatrix_basis_models(b, 0.5, o, basis); }, ErrorCode::InvalidInput);
}

TEST(IncomingSource, SupportFollowsCutoff) {
  auto b = cos_problem();
  SMatrixOptions o;
  o.oracle.ny = 64;
  o.oracle.x_min = 0.01;
  std::vector<SMatrixBasis> basis;
  const auto models = smatrix_basis_models(b, 0.5, o, basis);
  const auto& cm = static_cast<const CutoffModel&>(*models[0]);
  const auto layout = o.oracle.layout(b, 0.5);
  const auto f = incoming_source(cm, b, 0.5, layout);
  EXPECT_FALSE(f.phase.has_value());
  double inside = 0.0;
  for (size_t i = 0; i < f.nx(); ++i)
    for (size_t j = 0; j < f.ny(); ++j) {
      const double z = b.periodic_diff(f.y[j], kPi);
      if (f.x[i] >= 1.01 * o.x_cut || std::abs(z) >= 1.01 * cm.half_width())
        EXPECT_EQ(f.at(i, j), cplx(0.0));
      else
        inside = std::max(inside, std::abs(f.at(i, j)));
    }
  EXPECT_GT(inside, 0.0);
  // Incoming oscillation: phase advances as exp(-i nu s) along y = pi.
  const size_t jc = f.ny() / 2;
  size_t i0 = 0;
  while (f.x[i0] < 0.05) ++i0;
  const cplx ratio = f.at(i0, jc) * std::conj(f.at(i0 + 1, jc));
  const double ds = 1.0 / f.x[i0] - 1.0 / f.x[i0 + 1];
  EXPECT_NEAR(std::arg(ratio) / ds, -basis[0].q.nu_t, 0.05 * basis[0].q.nu_t);
}

TEST(OutgoingPart, KeepsPositiveFrequencies) {
  auto b = cos_problem();
  auto g = CollarGrid::inverse_uniform(b, 2.0, 0.0025, 1.0, 4001, 4);
  const double nu = 1.4;
  for (double dc : {0.0, 0.3}) {
    for (size_t i = 0; i < g.nx(); ++i) {
      const double s = 1.0 / g.x[i];
      for (size_t j = 0; j < g.ny(); ++j)
        g.at(i, j) = std::polar(1.0 + 0.1 * j, nu * s) + 0.7 * std::polar(1.0, -nu * s) + dc;
    }
    const auto out = outgoing_part(g, 0.005, 0.05, 20.0);
    size_t kept = 0;
    for (size_t i = 0; i < g.nx(); ++i) {
      const double s = 1.0 / g.x[i];
      const bool in = g.x[i] >= 0.005 && g.x[i] <= 0.05;
      if (in) EXPECT_NE(out.at(i, 0), cplx(0.0));
      if (!in) EXPECT_EQ(out.at(i, 0), cplx(0.0));
      // A constant leaks through the tapers near the ends of the range.
      if (!in || (dc > 0 && (s < 60.0 || s > 160.0))) continue;
      ++kept;
      for (size_t j = 0; j < g.ny(); ++j)
        EXPECT_NEAR(std::abs(out.at(i, j) - std::polar(1.0 + 0.1 * j, nu * s)), 0.0, 1e-3);
    }
    EXPECT_GT(kept, 100u);
  }
  expect_code([&] { outgoing_part(g, 0.2, 0.20001, 1.0); }, ErrorCode::InsufficientRange);
}

// One retained center mode below the maximum: flux is conserved into itself.
TEST(AssembleSMatrix, SingleCenterModeIsUnimodular) {
  auto b = cos_problem();
  SMatrixOptions o;
  o.j_s = 1;
  o.oracle.ppw = 32;
  const auto S = assemble_smatrix(b, -0.5, o);
  ASSERT_EQ(S.matrix.rows(), 1);
  EXPECT_NEAR(std::abs(S.matrix(0, 0)), 1.0, 5e-2);
  EXPECT_LE(S.residuals[0], o.oracle.solver_tol);
  EXPECT_LE(S.misfits[0], o.fit_tol);
}

// cos y is even about the minimum: parity blocks decouple and S = S^T.
TEST(AssembleSMatrix, ParityAndTimeReversal) {
  auto b = cos_problem();
  SMatrixOptions o;
  o.oracle.ppw = 32;
  const auto S = assemble_smatrix(b, 0.5, o);
  ASSERT_EQ(S.matrix.rows(), 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      if ((r + c) % 2) EXPECT_LT(std::abs(S.matrix(r, c)), 1e-8) << r << "," << c;
  EXPECT_LE((S.matrix - S.matrix.transpose()).norm(), 0.05 * S.matrix.norm());
  // Diagonal entries dominate; total outgoing flux per column does not exceed the incoming one.
  for (int c = 0; c < 4; ++c) {
    EXPECT_GT(std::abs(S.matrix(c, c)), 0.85);
    EXPECT_LE(S.matrix.col(c).norm(), 1.0 + 5e-2);
  }
  EXPECT_EQ(S.unitarity_defect, unitarity_defect(S.matrix));
}
