#include "radscat/boundary_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>

namespace radscat {

namespace {

std::vector<FourierTerm> merge_terms(const std::vector<FourierTerm>& in) {
  std::map<int, FourierTerm> acc;
  for (const auto& t : in) {
    if (t.k < 0) fail(ErrorCode::InvalidInput, "negative Fourier mode");
    if (!std::isfinite(t.c) || !std::isfinite(t.s))
      fail(ErrorCode::InvalidInput, "non-finite Fourier coefficient");
    auto& a = acc[t.k];
    a.k = t.k;
    a.c += t.c;
    a.s += (t.k == 0) ? 0.0 : t.s;
  }
  std::vector<FourierTerm> out;
  for (auto& [k, t] : acc)
    if (t.c != 0.0 || t.s != 0.0) out.push_back(t);
  return out;
}

std::vector<FourierTerm> terms_from_json(const nlohmann::json& j) {
  std::vector<FourierTerm> out;
  if (j.is_null()) return out;
  if (!j.is_array()) fail(ErrorCode::InvalidInput, "Fourier list must be an array");
  for (const auto& e : j) {
    if (!e.is_array() || e.size() < 2 || e.size() > 3)
      fail(ErrorCode::InvalidInput, "Fourier entry must be [k, cos, sin]");
    FourierTerm t;
    t.k = e[0].get<int>();
    t.c = e[1].get<double>();
    t.s = e.size() == 3 ? e[2].get<double>() : 0.0;
    out.push_back(t);
  }
  return out;
}

nlohmann::json terms_to_json(const std::vector<FourierTerm>& ts) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& t : ts) a.push_back({t.k, t.c, t.s});
  return a;
}

}  // namespace

FourierSeries::FourierSeries(std::vector<FourierTerm> terms, double L)
    : terms_(merge_terms(terms)), L_(L) {
  if (!(L > 0.0)) fail(ErrorCode::InvalidInput, "length scale must be positive");
}

double FourierSeries::deriv(double y, int n) const {
  if (terms_.empty()) return 0.0;
  const double th = y / L_;
  const cplx e1 = std::polar(1.0, th);
  cplx ek{1.0, 0.0};
  int kcur = 0;
  double sum = 0.0;
  const int q = n & 3;
  for (const auto& t : terms_) {
    while (kcur < t.k) {
      ek *= e1;
      ++kcur;
    }
    if (t.k == 0) {
      if (n == 0) sum += t.c;
      continue;
    }
    const double ck = ek.real(), sk = ek.imag();
    double dc, ds;  // d^n/dth^n of cos and sin, without the k^n factor
    switch (q) {
      case 0: dc = ck; ds = sk; break;
      case 1: dc = -sk; ds = ck; break;
      case 2: dc = -ck; ds = -sk; break;
      default: dc = sk; ds = -ck; break;
    }
    sum += std::pow(double(t.k), n) * (t.c * dc + t.s * ds);
  }
  return sum / std::pow(L_, n);
}

RealVec FourierSeries::taylor(double y0, int order) const {
  RealVec c(order + 1);
  double fact = 1.0;
  for (int m = 0; m <= order; ++m) {
    if (m > 0) fact *= m;
    c[m] = deriv(y0, m) / fact;
  }
  return c;
}

int FourierSeries::max_mode() const { return terms_.empty() ? 0 : terms_.back().k; }

double FourierSeries::mean() const {
  return (!terms_.empty() && terms_.front().k == 0) ? terms_.front().c : 0.0;
}

BoundaryData::BoundaryData(std::vector<FourierTerm> v0, std::vector<FourierTerm> v1,
                           double circumference)
    : raw0_(merge_terms(v0)), raw1_(merge_terms(v1)), circumference_(circumference) {
  if (!(circumference > 0.0) || !std::isfinite(circumference))
    fail(ErrorCode::InvalidInput, "circumference must be positive");
  v0_ = FourierSeries(raw0_, L());
  v1_ = FourierSeries(raw1_, L());
}

double BoundaryData::wrap(double y) const {
  double r = std::fmod(y, circumference_);
  if (r < 0) r += circumference_;
  if (r >= circumference_) r -= circumference_;
  return r;
}

double BoundaryData::periodic_diff(double a, double b) const {
  double d = std::remainder(a - b, circumference_);
  if (d <= -0.5 * circumference_) d += circumference_;
  return d;
}

BoundaryData BoundaryData::translated(double dy) const {
  // V(y - dy): shift theta by dth = dy / L.
  const double dth = dy / L();
  auto shift = [&](const std::vector<FourierTerm>& ts) {
    std::vector<FourierTerm> out;
    for (auto t : ts) {
      const double ca = std::cos(t.k * dth), sa = std::sin(t.k * dth);
      // c cos(k(th - d)) + s sin(k(th - d))
      FourierTerm n{t.k, t.c * ca - t.s * sa, t.c * sa + t.s * ca};
      out.push_back(n);
    }
    return out;
  };
  return BoundaryData(shift(raw0_), shift(raw1_), circumference_);
}

BoundaryData BoundaryData::plus_constant(double c) const {
  auto v0 = raw0_;
  v0.push_back({0, c, 0.0});
  return BoundaryData(v0, raw1_, circumference_);
}

BoundaryData BoundaryData::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    fail(ErrorCode::InvalidInput, std::string("problem file: ") + e.what());
  }
  if (!j.contains("v0")) fail(ErrorCode::InvalidInput, "problem file lacks v0");
  const double circ = j.value("circumference", 2.0 * kPi);
  try {
    return BoundaryData(terms_from_json(j["v0"]),
                        terms_from_json(j.contains("v1") ? j["v1"] : nlohmann::json()), circ);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidInput, std::string("problem file: ") + e.what());
  }
}

std::string BoundaryData::to_json_text() const {
  nlohmann::json j;
  j["v0"] = terms_to_json(raw0_);
  j["v1"] = terms_to_json(raw1_);
  j["circumference"] = circumference_;
  return j.dump();
}

const char* energy_range_name(EnergyRange r) {
  switch (r) {
    case EnergyRange::BelowContinuum: return "below continuum";
    case EnergyRange::NearMinimum: return "near minimum";
    case EnergyRange::HessianRange: return "Hessian range";
    case EnergyRange::MixedRange: return "mixed range";
    case EnergyRange::AboveThresholds: return "above thresholds";
    case EnergyRange::Transition: return "transition";
  }
  return "?";
}

double Thresholds::distance_to_cv(double lambda) const {
  double d = INFINITY;
  for (double c : cv) d = std::min(d, std::abs(lambda - c));
  return d;
}

EnergyRange Thresholds::classify(double lambda, double tol) const {
  if (std::abs(lambda - kappa) <= tol || std::abs(lambda - K_sup) <= tol ||
      std::abs(lambda - hess_global) <= tol)
    return EnergyRange::Transition;
  if (lambda < kappa) return EnergyRange::BelowContinuum;
  if (lambda < std::min(hess_global, K_sup)) return EnergyRange::NearMinimum;
  if (lambda > std::max(hess_global, K_sup)) return EnergyRange::AboveThresholds;
  return hess_global < K_sup ? EnergyRange::HessianRange : EnergyRange::MixedRange;
}

std::vector<CriticalPoint> find_critical_points(const BoundaryData& b, const Tolerances& tol) {
  const FourierSeries& V = b.v0();
  const int kmax = V.max_mode();
  if (kmax == 0) fail(ErrorCode::NotMorse, "V0 is constant; every point is critical");
  const int N = 4096 * kmax;
  const double len = b.circumference();
  const double h = len / N;

  RealVec f(N);
  double fscale = 0.0;
  for (int i = 0; i < N; ++i) {
    f[i] = V.deriv(i * h, 1);
    fscale = std::max(fscale, std::abs(f[i]));
  }
  auto fd = [&](double y) { return V.deriv(y, 1); };
  auto fdd = [&](double y) { return V.deriv(y, 2); };

  auto polish = [&](double a, double c) {
    // bracket [a, c] with a sign change of V'
    double fa = fd(a);
    for (int it = 0; it < 200 && c - a > 1e-14 * std::max(1.0, len); ++it) {
      const double m = 0.5 * (a + c);
      const double fm = fd(m);
      if (fm == 0.0) return m;
      if ((fm > 0) == (fa > 0)) {
        a = m;
        fa = fm;
      } else {
        c = m;
      }
    }
    double y = 0.5 * (a + c);
    for (int it = 0; it < 4; ++it) {
      const double d2 = fdd(y);
      if (d2 == 0.0) break;
      const double step = fd(y) / d2;
      if (std::abs(step) > h) break;
      y -= step;
    }
    return y;
  };

  RealVec roots;
  for (int i = 0; i < N; ++i) {
    const int j = (i + 1) % N;
    const double yi = i * h;
    if (f[i] == 0.0) {
      const double fp = f[(i + N - 1) % N], fn = f[j];
      if (fp * fn < 0.0) {
        roots.push_back(yi);
        continue;
      }
      fail(ErrorCode::NotMorse, "V0' vanishes without sign change at y=" + std::to_string(yi));
    }
    if (f[j] != 0.0 && (f[i] > 0) != (f[j] > 0)) roots.push_back(polish(yi, yi + h));
  }

  // Double roots do not change sign; look for local minima of |V'| that touch zero.
  for (int i = 0; i < N; ++i) {
    const double fp = f[(i + N - 1) % N], fc = f[i], fn = f[(i + 1) % N];
    if (fc == 0.0 || fp == 0.0 || fn == 0.0) continue;
    if (!((fp > 0) == (fc > 0) && (fc > 0) == (fn > 0))) continue;
    if (!(std::abs(fc) <= std::abs(fp) && std::abs(fc) <= std::abs(fn))) continue;
    double a = i * h - h, c = i * h + h;
    double ga = fdd(a), gc = fdd(c);
    double ystar = i * h;
    if ((ga > 0) != (gc > 0)) {
      for (int it = 0; it < 100; ++it) {
        const double m = 0.5 * (a + c);
        const double gm = fdd(m);
        if ((gm > 0) == (ga > 0)) {
          a = m;
          ga = gm;
        } else {
          c = m;
        }
      }
      ystar = 0.5 * (a + c);
    }
    if (std::abs(fd(ystar)) <= tol.morse_tol * std::max(1.0, fscale))
      fail(ErrorCode::NotMorse, "degenerate critical point near y=" + std::to_string(b.wrap(ystar)));
  }

  if (roots.empty() || roots.size() % 2 != 0)
    fail(ErrorCode::NoConvergence, "root isolation produced an odd number of critical points");

  std::vector<CriticalPoint> out;
  for (double y : roots) {
    y = b.wrap(y);
    if (std::abs(fd(y)) > tol.root_tol * std::max(1.0, fscale))
      fail(ErrorCode::NoConvergence, "root polish failed at y=" + std::to_string(y));
    const double hs = fdd(y);
    if (std::abs(hs) <= tol.morse_tol)
      fail(ErrorCode::NotMorse, "|V0''| <= morse_tol at y=" + std::to_string(y));
    CriticalPoint cp;
    cp.y_c = y;
    cp.kind = hs > 0 ? CritKind::Minimum : CritKind::Maximum;
    cp.value = V.value(y);
    cp.hessian = hs;
    cp.v1 = b.v1().value(y);
    out.push_back(cp);
  }
  std::sort(out.begin(), out.end(), [](auto& a, auto& c) { return a.y_c < c.y_c; });
  for (size_t i = 0; i < out.size(); ++i)
    if (out[i].kind == out[(i + 1) % out.size()].kind)
      fail(ErrorCode::NoConvergence, "critical points do not alternate min/max");
  return out;
}

Thresholds thresholds(const BoundaryData& b, const Tolerances& tol) {
  const auto cps = find_critical_points(b, tol);
  Thresholds th;
  th.kappa = INFINITY;
  th.K_sup = -INFINITY;
  for (const auto& c : cps) {
    th.cv.push_back(c.value);
    th.kappa = std::min(th.kappa, c.value);
    th.K_sup = std::max(th.K_sup, c.value);
  }
  std::sort(th.cv.begin(), th.cv.end());
  double best = INFINITY;
  for (const auto& c : cps) {
    if (c.kind != CritKind::Minimum) continue;
    const double lh = c.value + 2.0 * c.hessian;
    th.hess.emplace_back(c.y_c, lh);
    if (c.value < best) {
      best = c.value;
      th.hess_global = lh;
    }
  }
  return th;
}

}  // namespace radscat
