#include <gtest/gtest.h>

#include <cmath>

#include "radscat/saddle.hpp"

using namespace radscat;

namespace {

BoundaryData cos_problem() { return BoundaryData({{1, 1.0, 0.0}}, {}, 2 * kPi); }
BoundaryData generic_problem() {
  return BoundaryData({{1, 1.0, 0.0}, {2, 0.3, 0.4}}, {{1, 0.2, 0.1}}, 2 * kPi);
}

RadialPoint saddle(const BoundaryData& b, double lambda, bool out = true) {
  for (const auto& q : radial_points(b, lambda))
    if (q.outgoing() == out && q.kind == RadialKind::Saddle) return q;
  throw std::runtime_error("missing saddle");
}

double slope_gap(const SaddleSeries& s, const BoundaryData& b, double lambda, int n) {
  CplxVec co(n + 1, 0.0);
  co[n] = 1.0;
  const double w = s.opts.window, yc = s.q.crit.y_c;
  auto lay = CollarGrid::windowed(b, lambda, 1e-3, 0.3, 40, yc - w, yc + w, 81);
  auto rep = residual(SaddleModel(s, co), lay, ResidualNorm::Sup, 1e-3, 1e-1);
  return rep.fit.slope - (s.beta.real() - s.r * n + 1.0);
}

}  // namespace

TEST(SaddleSeries, ConjugationExponent) {
  auto b = cos_problem();
  auto s = saddle_models(saddle(b, 5.0), b, SaddleDirection::Outgoing, 2, 1);
  // r^2 - r + a/nu^2 = 0 with a = -1/2, nu^2 = 4.
  const double r2 = 0.5 + std::sqrt(0.25 + 0.125);
  EXPECT_NEAR(s.beta.real(), r2 / 2, 1e-12);
  EXPECT_NEAR(s.beta.real(), 0.5562, 5e-5);
  EXPECT_EQ(s.beta.imag(), 0.0);
  EXPECT_EQ(s.conj.branch, 1);
  EXPECT_NEAR(s.r, 0.5 - std::sqrt(0.375), 1e-12);

  auto g = generic_problem();
  auto q = saddle(g, 5.0);
  auto sg = saddle_models(q, g, SaddleDirection::Outgoing, 1, 0);
  EXPECT_NEAR(sg.beta.real(), q.r2.real() / 2, 1e-12);
  EXPECT_NEAR(sg.beta.imag(), g.v1().value(q.crit.y_c) / (2 * q.nu_t), 1e-14);
}

TEST(SaddleSeries, LeadingTermsAndKernel) {
  auto b = generic_problem();
  auto s = saddle_models(saddle(b, 5.0), b, SaddleDirection::Outgoing, 4, 2);
  for (int n = 0; n <= 4; ++n) {
    const auto* lead = s.models[n].find(0, -n, n);
    ASSERT_NE(lead, nullptr);
    EXPECT_EQ(lead->c, cplx(1.0));
    // No term below the leading power of y at p = 0.
    for (const auto& t : s.models[n].terms)
      if (t.p == 0) EXPECT_GE(t.m, n);
    // (y x^{-r})^n is annihilated termwise.
    GenSeries k{0.0, s.r, {{0, -n, n, 1.0}}};
    EXPECT_TRUE(apply_model_op(k, s.q.nu_t).terms.empty());
  }
  // n = 0 at y = 0 tends to the constant 1 once x^beta is removed.
  for (double x : {1e-4, 1e-6}) {
    const cplx v = s.models[0].eval(x, 0.0) * std::exp(-s.beta * std::log(x));
    EXPECT_NEAR(std::abs(v - 1.0), 0.0, 30 * x);
  }
}

TEST(SaddleSeries, ModelOperatorOnMonomials) {
  // 2 i nu (tau + r m) x^{tau+1} y^m against a direct difference quotient of
  // 2 i nu (x^2 d_x + r y x d_y).
  const double nu = 1.7, r = -0.3, x = 0.07, y = 0.4;
  GenSeries s{0.0, r, {{1, -2, 3, cplx(0.4, -1.1)}}};
  auto out = apply_model_op(s, nu);
  ASSERT_EQ(out.terms.size(), 1u);
  const double h = 1e-5;
  auto f = [&](double xx, double yy) { return s.eval(xx, yy); };
  const cplx dx = (f(x + h * x, y) - f(x - h * x, y)) / (2 * h * x);
  const cplx dy = (f(x, y + h) - f(x, y - h)) / (2 * h);
  const cplx direct = 2.0 * kI * nu * (x * x * dx + r * y * x * dy);
  EXPECT_NEAR(std::abs(out.eval(x, y) - direct), 0.0, 1e-8 * std::abs(direct));
}

TEST(SaddleSeries, ZeroOrderLayerMatchesTransportOde) {
  // The p = 0 part of v_0 solves -2i Phi' a' + ((2 i beta - i) Phi - i Phi'' + V1) a = 0.
  auto b = generic_problem();
  auto q = saddle(b, 5.0);
  auto s = saddle_models(q, b, SaddleDirection::Outgoing, 0, 0);
  const double yc = q.crit.y_c;
  for (double y : {-0.12, 0.08, 0.15}) {
    cplx series = 0.0;
    for (const auto& t : s.models[0].terms) series += t.c * std::pow(y, t.m);
    // Gauss-Legendre on [0, y]; the integrand is finite at 0.
    const int N = 400;
    cplx logs = 0.0;
    for (int k = 0; k < N; ++k) {
      const double t = y * (k + 0.5) / N;
      const double P = s.phase.jet_value(t), dP = s.phase.jet_value(t, 1), d2P = s.phase.jet_value(t, 2);
      const cplx num = (2.0 * kI * s.beta - kI) * P - kI * d2P + b.v1().value(yc + t);
      logs += num / (2.0 * kI * dP) * (y / N);
    }
    EXPECT_NEAR(std::abs(series - std::exp(logs)), 0.0, 1e-5);
  }
}

TEST(SaddleSeries, ConjugationJets) {
  auto b = cos_problem();
  auto q = saddle(b, 5.0);
  auto s = saddle_models(q, b, SaddleDirection::Outgoing, 1, 0);
  EXPECT_NEAR(s.conj.a_jet[0], 1.0, 1e-15);
  EXPECT_NEAR(s.conj.a_jet[1], 0.0, 1e-15);
  EXPECT_NEAR(s.conj.a_jet[2], 0.25, 1e-12);
  EXPECT_NEAR(s.conj.b_jet[0], 1.0, 1e-15);
  EXPECT_NEAR(std::abs(s.conj.beta - s.beta), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(s.conj.f_jet[0]), 0.0, 1e-15);
  // log b(y) = int_0^y (-r nu / Phi' - 1/t) dt, midpoint rule.
  const double y = 0.1;
  const int N = 4000;
  double lb = 0.0;
  for (int k = 0; k < N; ++k) {
    const double t = y * (k + 0.5) / N;
    lb += (-s.r * q.nu_t / s.phase.jet_value(t, 1) - 1.0 / t) * (y / N);
  }
  double bj = 0.0;
  for (int k = int(s.conj.b_jet.size()) - 1; k >= 0; --k) bj = bj * y + s.conj.b_jet[k];
  EXPECT_NEAR(bj, std::exp(lb), 1e-8);
}

TEST(SaddleSeries, ResidualGapIsOrderPlusOne) {
  for (auto b : {cos_problem(), generic_problem()}) {
    auto q = saddle(b, 5.0);
    for (int order : {0, 1}) {
      auto s = saddle_models(q, b, SaddleDirection::Outgoing, 2, order);
      for (int n = 0; n <= 2; ++n) EXPECT_GE(slope_gap(s, b, 5.0, n), s.residual_gap() - 0.05);
    }
  }
}

TEST(SaddleSeries, IncomingSeries) {
  auto b = cos_problem();
  EXPECT_THROW(saddle_models(saddle(b, 5.0, false), b, SaddleDirection::Incoming, 1, 0), Error);
  auto q = saddle(b, 5.0);
  auto s = saddle_models(q, b, SaddleDirection::Incoming, 2, 1);
  EXPECT_EQ(s.conj.branch, 2);
  EXPECT_NEAR(s.r, q.r2.real(), 1e-14);
  EXPECT_NEAR(s.beta.real(), q.r1.real() / 2, 1e-12);
  for (int n = 0; n <= 2; ++n) EXPECT_GE(slope_gap(s, b, 5.0, n), s.residual_gap() - 0.05);
}

TEST(SaddleSeries, ResonantExponent) {
  // V0 = cos y + 0.2 cos 2y: V0(0) = 1.2, a = -0.9; lambda = 1.2 + 0.9/0.3125 gives
  // r1 = -1/4, so p + r1 (m - n) = 0 at p = 1, m = n + 4.
  BoundaryData b({{1, 1.0, 0.0}, {2, 0.2, 0.0}}, {}, 2 * kPi);
  const double lambda = 1.2 + 0.9 / 0.3125;
  auto q = saddle(b, lambda);
  ASSERT_NEAR(q.crit.y_c, 0.0, 1e-12);
  EXPECT_NEAR(q.r1.real(), -0.25, 1e-14);
  EXPECT_NO_THROW(saddle_models(q, b, SaddleDirection::Outgoing, 2, 0));
  try {
    saddle_models(q, b, SaddleDirection::Outgoing, 2, 1);
    FAIL() << "expected ResonantExponent";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ResonantExponent);
  }
  auto s = saddle_models(q, b, SaddleDirection::Outgoing, 2, 2, {}, ResonancePolicy::Truncate);
  ASSERT_TRUE(s.resonance.has_value());
  EXPECT_EQ((*s.resonance)[1], 1);
  EXPECT_EQ((*s.resonance)[2] - (*s.resonance)[0], 4);
  EXPECT_EQ(s.order, 0);

  // For cos y the obstruction vanishes identically: no log term, no flag.
  auto c = cos_problem();
  auto sc = saddle_models(saddle(c, 2.6), c, SaddleDirection::Outgoing, 2, 1);
  EXPECT_FALSE(sc.resonance.has_value());
  EXPECT_EQ(sc.models[0].find(1, 0, 4), nullptr);
}

TEST(SaddleBuild, OutgoingDecayBound) {
  auto b = generic_problem();
  auto q = saddle(b, 5.0);
  auto s = saddle_models(q, b, SaddleDirection::Outgoing, 3, 1);
  const double yc = q.crit.y_c;
  auto lay = CollarGrid::windowed(b, 5.0, 1e-4, 0.1, 30, yc - 0.2, yc + 0.2, 41);
  auto g = build_saddle_eigenfunction(s, {1.0, cplx(0.5, 0.2), -0.3, 0.1}, lay);
  RealVec sup(g.nx(), 0.0);
  for (size_t i = 0; i < g.nx(); ++i)
    for (size_t j = 0; j < g.ny(); ++j) sup[i] = std::max(sup[i], std::abs(g.field(i, j)));
  auto fit = fit_loglog(g.x, sup, 1e-4, 1e-2);
  EXPECT_GE(fit.slope, q.r2.real() / 2 - 0.02);
  auto zero = build_saddle_eigenfunction(s, {0.0, 0.0}, lay);
  for (auto v : zero.values) EXPECT_EQ(v, cplx(0.0));
}

namespace {

cplx vstar(double x, double y) { return std::pow(x, 0.5) * (1 + y * y) * std::polar(1.0, y); }
cplx tv_star(double x, double y, double r, double nu) {
  return -2 * nu * (0.5 + r * y * (2 * y / (1 + y * y) + kI)) * vstar(x, y);
}

}  // namespace

TEST(Transport, ManufacturedSolution) {
  auto b = cos_problem();
  const double nu = 2.0;
  for (double r : {-0.1124, 1.1124}) {
    auto f = CollarGrid::windowed(b, 5.0, 1e-3, 0.3, 120, -1.0, 1.0, 201);
    for (size_t i = 0; i < f.nx(); ++i)
      for (size_t j = 0; j < f.ny(); ++j) f.at(i, j) = tv_star(f.x[i], f.y[j], r, nu);
    const double x0 = r < 0 ? f.x.back() : f.x.front();
    auto v = transport_solve(f, r, nu, x0, [&](double y) { return vstar(x0, y); });
    double err = 0.0;
    for (size_t i = 0; i < f.nx(); ++i)
      for (size_t j = 0; j < f.ny(); ++j) err = std::max(err, std::abs(v.at(i, j) - vstar(f.x[i], f.y[j])));
    EXPECT_LT(err, 1e-8) << "r = " << r;
  }
}

TEST(Transport, ModelOperatorResidual) {
  // x^{-1} P~0 v = -i T v; checked against -i f by differences in log x and y.
  auto b = cos_problem();
  const double nu = 2.0, r = -0.1124;
  auto f = CollarGrid::windowed(b, 5.0, 1e-2, 0.3, 400, -1.0, 1.0, 401);
  for (size_t i = 0; i < f.nx(); ++i)
    for (size_t j = 0; j < f.ny(); ++j) f.at(i, j) = tv_star(f.x[i], f.y[j], r, nu);
  auto v = transport_solve(f, r, nu, 0.3, [&](double y) { return vstar(0.3, y); });
  const double du = std::log(f.x[1] / f.x[0]), hy = f.dy();
  double err = 0.0;
  for (size_t i = 2; i + 2 < f.nx(); ++i)
    for (size_t j = 2; j + 2 < f.ny(); ++j) {
      auto d = [&](auto at, double h) {
        return (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) / (12.0 * h);
      };
      const cplx vx = d([&](int k) { return v.at(i + k, j); }, du);
      const cplx vy = d([&](int k) { return v.at(i, j + k); }, hy);
      const cplx p0 = 2.0 * kI * nu * (vx + r * f.y[j] * vy);
      err = std::max(err, std::abs(p0 + kI * f.at(i, j)));
    }
  EXPECT_LT(err, default_tolerances().transport_tol);
}

TEST(Transport, HomogeneousKernelAndCharacteristics) {
  auto b = cos_problem();
  const double r = -0.1124, nu = 2.0, x0 = 0.3;
  auto f = CollarGrid::windowed(b, 5.0, 1e-3, x0, 60, -0.5, 0.5, 41);
  for (int n : {0, 1, 3}) {
    auto v = transport_solve(f, r, nu, x0, [&](double y) { return std::pow(y * std::pow(x0, -r), n); });
    for (size_t i = 0; i < f.nx(); ++i)
      for (size_t j = 0; j < f.ny(); ++j) {
        const double want = std::pow(f.y[j] * std::pow(f.x[i], -r), n);
        EXPECT_NEAR(v.at(i, j).real(), want, 1e-13 * (1 + std::abs(want)));
        EXPECT_EQ(v.at(i, j).imag(), 0.0);
      }
  }
  // f = 0: constant along y x^{-r} = const.
  auto v = transport_solve(f, r, nu, x0, [](double y) { return cplx(std::sin(3 * y), y); });
  for (size_t i = 0; i < f.nx(); ++i)
    for (size_t j = 0; j < f.ny(); ++j) {
      const double y0 = f.y[j] * std::pow(x0 / f.x[i], r);
      EXPECT_NEAR(std::abs(v.at(i, j) - cplx(std::sin(3 * y0), y0)), 0.0, 1e-14);
    }
}

TEST(Transport, PeriodicWrapAndEscape) {
  auto b = cos_problem();
  const double r = -0.3, nu = 1.5, x0 = 0.3;
  auto f = CollarGrid::log_uniform(b, 5.0, 1e-3, x0, 80, 256);
  for (size_t i = 0; i < f.nx(); ++i)
    for (size_t j = 0; j < f.ny(); ++j) f.at(i, j) = std::sin(f.y[j]);
  TransportOptions opts;
  opts.y_c = kPi;
  auto v = transport_solve(f, r, nu, x0, [](double) { return cplx(0.0); }, opts);
  for (size_t i : {size_t(0), f.nx() / 2})
    for (size_t j : {size_t(3), size_t(100), size_t(250)}) {
      const double z = f.y[j] - kPi, u1 = std::log(f.x[i]), u0 = std::log(x0);
      // Characteristics z e^{r(u - u1)} spread well past one period here.
      const int N = 20000;
      double acc = 0.0;
      for (int k = 0; k < N; ++k) {
        const double u = u0 + (u1 - u0) * (k + 0.5) / N;
        acc += std::sin(kPi + z * std::exp(r * (u - u1))) * (u1 - u0) / N;
      }
      EXPECT_NEAR(v.at(i, j).real(), -acc / (2 * nu), 2e-7);
    }

  auto w = CollarGrid::windowed(b, 5.0, 1e-3, x0, 40, -0.5, 0.5, 41);
  try {
    transport_solve(w, r, nu, w.x.front(), [](double) { return cplx(0.0); });
    FAIL() << "expected CharacteristicEscape";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CharacteristicEscape);
  }
}
