#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "radscat/collar.hpp"

using namespace radscat;

namespace {

BoundaryData free_problem() { return BoundaryData({}, {}, 2 * kPi); }

// exp(i k X . e_1) in polar form: an exact solution of -Delta u = k^2 u.
void fill_plane_wave(CollarGrid& g, double k) {
  for (size_t i = 0; i < g.nx(); ++i)
    for (size_t j = 0; j < g.ny(); ++j) g.at(i, j) = std::polar(1.0, k * std::cos(g.y[j]) / g.x[i]);
}

double max_sup(const ResidualReport& r) {
  double m = 0;
  for (const auto& s : r.shells) m = std::max(m, s.sup);
  return m;
}

// Plane wave written as exp(i k / x) times a relative amplitude.
struct PlaneWaveModel : FieldModel {
  double k;
  explicit PlaneWaveModel(double k) : k(k) {}
  double y_c() const override { return 0.0; }
  void phase(double, double out[3]) const override { out[0] = k, out[1] = 0, out[2] = 0; }
  cplx amplitude(double x, double z) const override {
    return std::polar(1.0, k * (std::cos(z) - 1.0) / x);
  }
  double z_scale(double x) const override { return x; }
};

struct PowerModel : FieldModel {
  double sigma;
  explicit PowerModel(double s) : sigma(s) {}
  double y_c() const override { return 0.0; }
  void phase(double, double out[3]) const override { out[0] = 1, out[1] = 0, out[2] = 0; }
  cplx amplitude(double x, double) const override { return std::pow(x, sigma); }
  double z_scale(double) const override { return 1.0; }
};

}  // namespace

TEST(CollarResidual, PlaneWaveFourthOrderLogGrid) {
  auto b = free_problem();
  double prev = 0;
  for (int lev = 0; lev < 3; ++lev) {
    const size_t nx = 64u << lev, ny = 64u << lev;
    auto g = CollarGrid::log_uniform(b, 1.0, 0.1, 0.3, nx, ny);
    fill_plane_wave(g, 1.0);
    const double e = max_sup(residual(g));
    if (lev > 0) {
      EXPECT_GT(prev / e, 12.0) << lev;
      EXPECT_LT(prev / e, 20.0) << lev;
    }
    prev = e;
  }
  EXPECT_LT(prev, 1e-4);
}

TEST(CollarResidual, PlaneWaveInverseGrid) {
  auto b = free_problem();
  double prev = 0;
  for (int lev = 0; lev < 2; ++lev) {
    auto g = CollarGrid::inverse_uniform(b, 4.0, 0.1, 0.3, 96u << lev, 64u << lev);
    fill_plane_wave(g, 2.0);
    const double e = max_sup(residual(g));
    if (lev > 0) EXPECT_GT(prev / e, 11.0);
    prev = e;
  }
}

TEST(CollarResidual, ModelRouteMatchesExactSolution) {
  auto b = free_problem();
  PlaneWaveModel m(1.5);
  for (double x : {0.02, 0.05, 0.2})
    for (double z : {-0.3, 0.0, 0.2})
      EXPECT_LT(std::abs(model_residual_at(m, b, 2.25, x, z)), 1e-7) << x << " " << z;
}

TEST(CollarResidual, MonomialKernel) {
  // (P - lambda)(e^{i/x} x^sigma) with Phi = 1, lambda = 1, V = 0:
  // x^{sigma+1} i (2 sigma - 1) - sigma^2 x^{sigma+2}.
  auto b = free_problem();
  for (double sigma : {0.5, 1.25}) {
    PowerModel m(sigma);
    for (double x : {0.01, 0.1}) {
      const cplx want = kI * (2 * sigma - 1) * std::pow(x, sigma + 1) - sigma * sigma * std::pow(x, sigma + 2);
      EXPECT_LT(std::abs(model_residual_at(m, b, 1.0, x, 0.2) - want), 1e-9 * std::pow(x, sigma + 1));
    }
  }
  auto layout = CollarGrid::log_uniform(b, 1.0, 1e-3, 0.1, 40, 8);
  auto rep = residual(PowerModel(0.5), layout);
  EXPECT_NEAR(rep.fit.slope, 2.5, 1e-6);
}

TEST(CollarResidual, UnresolvedOscillation) {
  auto b = free_problem();
  auto g = CollarGrid::log_uniform(b, 2500.0, 0.1, 0.3, 16, 16);
  fill_plane_wave(g, 50.0);
  try {
    residual(g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnresolvedOscillation);
  }
  // Same with the phase factored out of the stored values.
  sample_model(PlaneWaveModel(50.0), g);
  EXPECT_THROW(residual(g), Error);
}

TEST(CollarFit, ExactPowerLaw) {
  RealVec x, v;
  for (int i = 0; i < 20; ++i) {
    x.push_back(std::pow(10.0, -3 + 0.1 * i));
    v.push_back(3.0 * std::pow(x.back(), 1.7));
  }
  auto f = fit_loglog(x, v, 0, 1);
  EXPECT_NEAR(f.slope, 1.7, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-10);
  EXPECT_LT(f.band, 1e-10);
  EXPECT_EQ(f.n, 20);
  EXPECT_THROW(fit_loglog(x, v, 10, 20), Error);
}

TEST(CollarIo, FieldBlockRoundTrip) {
  auto b = BoundaryData({{1, 1.0, 0.25}, {3, -0.5, 0.0}}, {{2, 0.1, 0.0}}, 3.0);
  auto g = CollarGrid::windowed(b, 0.7, 0.01, 0.2, 7, -0.4, 0.6, 5);
  for (size_t i = 0; i < g.values.size(); ++i) g.values[i] = cplx(std::sin(1.0 + i), 1.0 / (3.0 + i));
  g.phase = RealVec{1, 2, 3, 4, 5};
  std::stringstream ss;
  write_field_block(ss, g);
  auto h = read_field_block(ss);
  EXPECT_EQ(h.x, g.x);
  EXPECT_EQ(h.y, g.y);
  EXPECT_EQ(h.values, g.values);
  EXPECT_EQ(*h.phase, *g.phase);
  EXPECT_FALSE(h.periodic_y);
  EXPECT_EQ(h.lambda, 0.7);
  EXPECT_EQ(h.b.to_json_text(), b.to_json_text());
}
