#include "radscat/legendrian.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace radscat {

double eikonal_residual(double phi, double dphi, double y, const BoundaryData& b, double lambda) {
  return phi * phi + dphi * dphi + b.v0().value(y) - lambda;
}

double LegendrePhase::offset(double y) const {
  double z = std::fmod(y - y_c(), period);
  if (z > 0.5 * period) z -= period;
  if (z <= -0.5 * period) z += period;
  return z;
}

double LegendrePhase::jet_value(double z, int deriv) const {
  double acc = 0.0;
  for (int m = int(jet.size()) - 1; m >= deriv; --m) {
    double f = 1.0;
    for (int k = 0; k < deriv; ++k) f *= m - k;
    acc = acc * z + f * jet[m];
  }
  return acc;
}

bool LegendrePhase::curve_eval(double z, double& phi, double& dphi) const {
  if (curve.size() < 2 || z < curve.front().y || z > curve.back().y) return false;
  auto it = std::upper_bound(curve.begin(), curve.end(), z,
                             [](double v, const CurveSample& s) { return v < s.y; });
  size_t i = it == curve.end() ? curve.size() - 2 : size_t(it - curve.begin()) - 1;
  i = std::min(i, curve.size() - 2);
  const auto& a = curve[i];
  const auto& c = curve[i + 1];
  const double h = c.y - a.y, t = (z - a.y) / h;
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
  phi = h00 * a.phi + h10 * h * a.dphi + h01 * c.phi + h11 * h * c.dphi;
  dphi = h00 * a.dphi + h10 * h * a.d2phi + h01 * c.dphi + h11 * h * c.d2phi;
  return true;
}

double LegendrePhase::value(double y) const {
  const double z = offset(y);
  if (curve.empty() || std::abs(z) <= handoff) return jet_value(z);
  double p, d;
  if (!curve_eval(z, p, d)) fail(ErrorCode::InvalidInput, "y outside the continued phase");
  return p;
}

double LegendrePhase::deriv(double y) const {
  const double z = offset(y);
  if (curve.empty() || std::abs(z) <= handoff) return jet_value(z, 1);
  double p, d;
  if (!curve_eval(z, p, d)) fail(ErrorCode::InvalidInput, "y outside the continued phase");
  return d;
}

LegendrePhase phase_jet(const RadialPoint& q, const BoundaryData& b, int branch, int n_jet,
                        ResonancePolicy policy, const Tolerances& tol) {
  if (q.kind == RadialKind::Center)
    fail(ErrorCode::WrongKind, "a center carries the constant phase only");
  if (branch != 1 && branch != 2) fail(ErrorCode::InvalidInput, "branch must be 1 or 2");
  if (n_jet < 2) fail(ErrorCode::InvalidInput, "n_jet must be at least 2");
  LegendrePhase ph;
  ph.base = q;
  ph.branch = branch;
  ph.r = (branch == 1 ? q.r1 : q.r2).real();
  ph.period = b.circumference();
  const double nu = q.nu_t;
  const RealVec v = b.v0().taylor(q.crit.y_c, n_jet);

  RealVec c(n_jet + 1, 0.0);
  c[0] = nu;
  c[1] = 0.0;
  c[2] = -0.5 * nu * ph.r;
  // Order-m coefficient of Phi^2 + Phi'^2 + V0 - lambda with c_m = 0.
  auto defect = [&](int m) {
    double s = v[m];
    for (int i = 0; i <= m; ++i) {
      s += c[i] * c[m - i];
      if (i + 1 <= n_jet && m - i + 1 <= n_jet)
        s += (i + 1) * (m - i + 1) * c[i + 1] * c[m - i + 1];
    }
    return s;
  };
  for (int m = 3; m <= n_jet; ++m) {
    const double gap = 1.0 - m * ph.r;
    if (std::abs(gap) < tol.resonance_tol) {
      if (policy == ResonancePolicy::Throw)
        fail(ErrorCode::ResonantObstruction, "jet obstructed at order " + std::to_string(m));
      ph.resonant_order = m;
      ph.defect_coef = defect(m);
      c.resize(m);
      break;
    }
    c[m] = -defect(m) / (2.0 * nu * gap);
  }
  ph.jet = std::move(c);
  return ph;
}

ContinueOptions ContinueOptions::from(const Tolerances& t) {
  ContinueOptions o;
  o.handoff = t.jet_handoff;
  o.fold_tol = t.fold_tol;
  return o;
}

namespace {

using S2 = std::array<double, 2>;

S2 eik_rhs(double z, const S2& s, const BoundaryData& b, double yc) {
  const double vp = b.v0().deriv(yc + z, 1);
  return {s[1], -(vp + 2.0 * s[0] * s[1]) / (2.0 * s[1])};
}

S2 rk4(double z, const S2& s, double h, const BoundaryData& b, double yc) {
  const S2 k1 = eik_rhs(z, s, b, yc);
  const S2 k2 = eik_rhs(z + 0.5 * h, {s[0] + 0.5 * h * k1[0], s[1] + 0.5 * h * k1[1]}, b, yc);
  const S2 k3 = eik_rhs(z + 0.5 * h, {s[0] + 0.5 * h * k2[0], s[1] + 0.5 * h * k2[1]}, b, yc);
  const S2 k4 = eik_rhs(z + h, {s[0] + h * k3[0], s[1] + h * k3[1]}, b, yc);
  return {s[0] + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
          s[1] + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])};
}

// March from z0 towards z_end; returns samples in marching order and whether a
// fold stopped the march.
bool march(const LegendrePhase& ph, const BoundaryData& b, double z0, double z_end,
           const ContinueOptions& o, std::vector<CurveSample>& out) {
  const double yc = ph.y_c(), dir = z_end > z0 ? 1.0 : -1.0;
  S2 s{ph.jet_value(z0), ph.jet_value(z0, 1)};
  double z = z0, h = std::min(o.step, 0.1 * o.handoff);
  const double tol = 1e-14;
  while (dir * (z_end - z) > 1e-15) {
    h = std::min(h, dir * (z_end - z));
    const S2 full = rk4(z, s, dir * h, b, yc);
    const S2 mid = rk4(z, s, 0.5 * dir * h, b, yc);
    const S2 half = rk4(z + 0.5 * dir * h, mid, 0.5 * dir * h, b, yc);
    const double err = std::max(std::abs(half[0] - full[0]), std::abs(half[1] - full[1])) / 15.0;
    if (!std::isfinite(err) || std::abs(half[1]) < o.fold_tol) {
      if (h > 1e-10) {
        h *= 0.25;
        continue;
      }
      return true;
    }
    if (err > tol && h > 1e-10) {
      h *= std::max(0.1, 0.9 * std::pow(tol / err, 0.2));
      continue;
    }
    s = {half[0] + (half[0] - full[0]) / 15.0, half[1] + (half[1] - full[1]) / 15.0};
    z += dir * h;
    if (std::abs(s[1]) < o.fold_tol) return true;
    out.push_back({z, s[0], s[1], eik_rhs(z, s, b, yc)[1]});
    const double grow = err > 0 ? 0.9 * std::pow(tol / err, 0.2) : 2.0;
    h = std::min(o.step, h * std::min(2.0, std::max(0.2, grow)));
  }
  return false;
}

}  // namespace

LegendrePhase continue_phase(const LegendrePhase& phase, const BoundaryData& b, double y_lo,
                             double y_hi, const ContinueOptions& opts) {
  if (phase.jet.size() < 5) fail(ErrorCode::InvalidInput, "continuation needs a jet of order >= 4");
  const double zlo = y_lo - phase.y_c(), zhi = y_hi - phase.y_c();
  if (!(zlo <= 0.0 && zhi >= 0.0)) fail(ErrorCode::InvalidInput, "interval must contain y_c");
  LegendrePhase ph = phase;
  ph.handoff = opts.handoff;
  ph.curve.clear();
  ph.fold_lo = ph.fold_hi = false;

  const double hin = opts.handoff;
  std::vector<CurveSample> lo, hi;
  if (zlo < -hin) ph.fold_lo = march(ph, b, -hin, zlo, opts, lo);
  if (zhi > hin) ph.fold_hi = march(ph, b, hin, zhi, opts, hi);

  for (auto it = lo.rbegin(); it != lo.rend(); ++it) ph.curve.push_back(*it);
  const double a = std::max(zlo, -hin), c = std::min(zhi, hin);
  const int n = std::max(2, int(std::ceil((c - a) / opts.step)) + 1);
  for (int i = 0; i < n; ++i) {
    const double z = a + (c - a) * i / (n - 1);
    ph.curve.push_back({z, ph.jet_value(z), ph.jet_value(z, 1), ph.jet_value(z, 2)});
  }
  for (const auto& s : hi) ph.curve.push_back(s);
  return ph;
}

}  // namespace radscat
