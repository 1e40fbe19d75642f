#include "radscat/sink.hpp"

#include <algorithm>
#include <cmath>

namespace radscat {

cplx HermiteProfile::operator()(double Y) const {
  const int n = int(coefs.size());
  if (n == 0) return 0.0;
  double buf[128];
  RealVec big;
  double* p = buf;
  if (n > 128) {
    big.resize(n);
    p = big.data();
  }
  hermite_functions(n, Y / scale, p);
  cplx acc = 0.0;
  for (int k = 0; k < n; ++k) acc += coefs[k] * p[k];
  return acc / std::sqrt(scale);
}

bool HermiteProfile::is_zero() const {
  return std::all_of(coefs.begin(), coefs.end(), [](cplx c) { return c == 0.0; });
}

double SinkExpansion::first_gap(bool even_about_yc) const {
  // r1 * {1, 1/r1, (2 r2 - 1)/r1, r2/r1} = {r1, 1, 2 r2 - 1, r2}; in the even
  // case the r1 step appears first at 2 r1.
  const double lead = even_about_yc ? 2.0 * r1 : r1;
  return std::min({lead, 1.0, 2.0 * r2 - 1.0, r2});
}

void phase_derivs(const LegendrePhase& ph, const BoundaryData& b, double z, double out[3]) {
  if (ph.curve.empty() || std::abs(z) <= ph.handoff) {
    out[0] = ph.jet_value(z);
    out[1] = ph.jet_value(z, 1);
    out[2] = ph.jet_value(z, 2);
    return;
  }
  if (!ph.curve_eval(z, out[0], out[1]))
    fail(ErrorCode::InvalidInput, "offset " + std::to_string(z) + " outside the continued phase");
  // Phi' from the eikonal relation keeps the defect at rounding level.
  const double m2 = ph.base.lambda - b.v0().value(ph.y_c() + z) - out[0] * out[0];
  if (m2 > 0) out[1] = std::copysign(std::sqrt(m2), out[1]);
  out[2] = -(b.v0().deriv(ph.y_c() + z, 1) + 2.0 * out[0] * out[1]) / (2.0 * out[1]);
}

SinkExpansion sink_expansion(const RadialPoint& q, const BoundaryData& b, HermiteProfile profile,
                             double half_width, const Tolerances& tol) {
  if (q.kind != RadialKind::SinkOrSource) fail(ErrorCode::WrongKind, "radial point is not a sink");
  if (!q.outgoing()) fail(ErrorCode::InvalidInput, "sink expansions are built at outgoing points");
  if (!(profile.scale > 0)) fail(ErrorCode::InvalidInput, "profile scale must be positive");
  SinkExpansion e;
  e.q = q;
  e.r1 = q.r1.real();
  e.r2 = q.r2.real();
  const double v1 = b.v1().is_zero() ? 0.0 : b.v1().value(q.crit.y_c);
  e.beta = cplx(0.5 * e.r2, v1 / (2.0 * q.nu_t));
  e.profile = std::move(profile);
  e.index_generators = {1.0, 1.0 / e.r1, (2.0 * e.r2 - 1.0) / e.r1, e.r2 / e.r1};

  const int m_res = int(std::lround(1.0 / e.r1));
  const bool res = q.resonant || std::abs(1.0 - m_res * e.r1) < tol.resonance_tol;
  if (res) {
    e.phase = phase_jet(q, b, 1, std::max(tol.n_jet, m_res + 1), ResonancePolicy::Truncate, tol);
    if (!e.phase.resonant_order) fail(ErrorCode::ResonantObstruction, "expected a jet obstruction");
    e.resonant_order = *e.phase.resonant_order;
    e.resonant_c = -e.phase.defect_coef / (2.0 * q.nu_t);
  } else {
    auto jet = phase_jet(q, b, 1, std::max(tol.n_jet, 4), ResonancePolicy::Throw, tol);
    e.phase = continue_phase(jet, b, q.crit.y_c - half_width, q.crit.y_c + half_width,
                             ContinueOptions::from(tol));
  }
  return e;
}

SinkModel::SinkModel(SinkExpansion e, BoundaryData b) : e_(std::move(e)), b_(std::move(b)) {
  if (e_.resonant() && !e_.resonant_c)
    fail(ErrorCode::MissingResonantC, "resonant sink needs the constant c");
}

void SinkModel::phase(double z, double out[3]) const { phase_derivs(e_.phase, b_, z, out); }

cplx SinkModel::amplitude(double x, double z) const {
  const double lx = std::log(x);
  const double Y = z * std::exp(-e_.r1 * lx);
  cplx a = std::exp(e_.beta * lx) * e_.profile(Y);
  if (e_.resonant()) a *= std::polar(1.0, -*e_.resonant_c * std::pow(Y, e_.resonant_order) * lx);
  return a;
}

double SinkModel::z_scale(double x) const {
  const double n = double(e_.profile.coefs.size());
  double s = e_.profile.scale * std::pow(x, e_.r1) / std::sqrt(n + 1.0);
  if (e_.resonant()) {
    const int M = e_.resonant_order;
    s /= 1.0 + std::abs(*e_.resonant_c) * M * std::pow(6.0 * e_.profile.scale, M - 1) *
                   std::abs(std::log(x));
  }
  return s;
}

CollarGrid build_sink_eigenfunction(const SinkExpansion& e, const CollarGrid& layout) {
  SinkModel m(e, layout.b);
  CollarGrid g = layout.empty_like();
  sample_model(m, g);
  return g;
}

ThresholdExpansion threshold_expansion(const RadialPoint& q, const BoundaryData& b,
                                       HermiteProfile ghat, int n_jet) {
  if (q.kind != RadialKind::DegenerateCenter)
    fail(ErrorCode::WrongKind, "radial point is not a degenerate center");
  if (!q.outgoing()) fail(ErrorCode::InvalidInput, "threshold expansions are built at outgoing points");
  ThresholdExpansion e;
  e.q = q;
  const double v1 = b.v1().is_zero() ? 0.0 : b.v1().value(q.crit.y_c);
  e.beta = cplx(0.25, v1 / (2.0 * q.nu_t));
  e.phase = phase_jet(q, b, 1, n_jet);
  e.ghat = std::move(ghat);
  return e;
}

void ThresholdModel::phase(double z, double out[3]) const {
  out[0] = e_.phase.jet_value(z);
  out[1] = e_.phase.jet_value(z, 1);
  out[2] = e_.phase.jet_value(z, 2);
}

cplx ThresholdModel::amplitude(double x, double z) const {
  const double T = std::log(x);
  if (!(T < 0)) fail(ErrorCode::InvalidInput, "threshold field needs x < 1");
  const double nu = e_.q.nu_t, Y = z / std::sqrt(x);
  const cplx W = std::sqrt(2.0 * kPi * nu / -T) * std::polar(1.0, -0.25 * kPi) *
                 e_.ghat(-nu * Y / T) * std::polar(1.0, -nu * Y * Y / (2.0 * T));
  return std::exp(e_.beta * T) * W;
}

double ThresholdModel::z_scale(double x) const {
  const double T = std::abs(std::log(x)), nu = e_.q.nu_t, s = e_.ghat.scale;
  const double n = double(e_.ghat.coefs.size());
  return std::sqrt(x) * std::min(T * s / nu, 1.0 / (6.0 * s)) / std::sqrt(n + 1.0);
}

CollarGrid build_threshold_eigenfunction(const ThresholdExpansion& e, const CollarGrid& layout) {
  if (layout.x.front() > std::exp(-5.0))
    fail(ErrorCode::GridTooCoarse, "threshold form needs |log x| >= 5 on the grid");
  if (layout.x.back() >= 1.0) fail(ErrorCode::InvalidInput, "threshold grid must stay below x = 1");
  CollarGrid g = layout.empty_like();
  sample_model(ThresholdModel(e), g);
  return g;
}

}  // namespace radscat
