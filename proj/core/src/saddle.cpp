#include "radscat/saddle.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>

namespace radscat {

const char* saddle_direction_name(SaddleDirection d) {
  return d == SaddleDirection::Outgoing ? "outgoing" : "incoming";
}

cplx GenSeries::eval(double x, double y) const {
  const double lx = std::log(x);
  cplx acc = 0.0;
  for (const auto& t : terms) acc += t.c * std::exp(exponent(t) * lx) * std::pow(y, t.m);
  return acc;
}

const GenTerm* GenSeries::find(int p, int k, int m) const {
  for (const auto& t : terms)
    if (t.p == p && t.k == k && t.m == m) return &t;
  return nullptr;
}

GenSeries apply_model_op(const GenSeries& s, double nu) {
  GenSeries out = s;
  out.terms.clear();
  for (const auto& t : s.terms) {
    const double w = double(t.p) + s.r * double(t.k + t.m);
    if (w == 0.0) continue;
    out.terms.push_back({t.p + 1, t.k, t.m, 2.0 * kI * nu * w * t.c});
  }
  return out;
}

namespace {

template <class T>
std::vector<T> series_div(const std::vector<T>& a, const std::vector<T>& b, int n) {
  std::vector<T> q(n + 1, T(0));
  for (int k = 0; k <= n; ++k) {
    T acc = k < int(a.size()) ? a[k] : T(0);
    for (int j = 1; j <= k && j < int(b.size()); ++j) acc -= b[j] * q[k - j];
    q[k] = acc / b[0];
  }
  return q;
}

// exp of a series with zero constant term: E' = g' E.
RealVec series_exp(const RealVec& g, int n) {
  RealVec e(n + 1, 0.0);
  e[0] = 1.0;
  for (int k = 1; k <= n; ++k) {
    double acc = 0.0;
    for (int j = 1; j <= k && j < int(g.size()); ++j) acc += j * g[j] * e[k - j];
    e[k] = acc / k;
  }
  return e;
}

RealVec taylor(const FourierSeries& f, double y, int n) {
  RealVec c(n + 1, 0.0);
  if (f.is_zero()) return c;
  double fact = 1.0;
  for (int k = 0; k <= n; ++k) {
    if (k > 0) fact *= k;
    c[k] = f.deriv(y, k) / fact;
  }
  return c;
}

}  // namespace

ConjugationData conjugation_data(const LegendrePhase& ph, const BoundaryData& b, int order) {
  const int n = std::min(order, int(ph.jet.size()) - 3);
  if (n < 1) fail(ErrorCode::InvalidInput, "phase jet too short for conjugation data");
  const RealVec& p = ph.jet;
  const double nu = p[0];
  ConjugationData c;
  c.branch = ph.branch;
  c.r = ph.r;
  const RealVec v1 = taylor(b.v1(), ph.y_c(), n);
  c.beta_jet.resize(n + 1);
  for (int k = 0; k <= n; ++k)
    c.beta_jet[k] = cplx(p[k] + (k + 2) * (k + 1) * p[k + 2], v1[k]) / (2.0 * nu);
  c.beta = c.beta_jet[0];
  c.f_jet.assign(n + 1, 0.0);
  for (int k = 1; k <= n; ++k) c.f_jet[k] = c.beta_jet[k] / double(k);

  // (Phi - nu)/y and Phi'/y as series.
  RealVec num(n + 1, 0.0), den(n + 1, 0.0);
  for (int k = 0; k <= n; ++k) {
    num[k] = p[k + 1] * (k == 0 ? 0.0 : 1.0);
    den[k] = (k + 2) * p[k + 2];
  }
  const RealVec g = series_div(num, den, n);
  RealVec la(n + 1, 0.0);
  for (int k = 1; k <= n; ++k) la[k] = g[k - 1] / k;
  c.a_jet = series_exp(la, n);

  RealVec h = series_div(RealVec{-ph.r * nu}, den, n);
  RealVec lb(n + 1, 0.0);
  for (int k = 1; k <= n; ++k) lb[k] = h[k] / k;
  c.b_jet = series_exp(lb, n);
  return c;
}

SaddleSeries saddle_models(const RadialPoint& q, const BoundaryData& b, SaddleDirection dir,
                           int n_max, int order, const SaddleOptions& opts,
                           ResonancePolicy policy, const Tolerances& tol) {
  if (q.kind != RadialKind::Saddle) fail(ErrorCode::WrongKind, "radial point is not a saddle");
  // Both families live at the outgoing saddle: v_n along branch 1, w_n along branch 2.
  if (!q.outgoing()) fail(ErrorCode::InvalidInput, "saddle series are built at outgoing radial points");
  if (n_max < 0 || order < 0 || opts.m_max < n_max || opts.n_jet < opts.m_max + 2)
    fail(ErrorCode::InvalidInput, "need n_max <= m_max and n_jet >= m_max + 2");
  SaddleSeries s;
  s.q = q;
  s.direction = dir;
  s.opts = opts;
  const int branch = dir == SaddleDirection::Outgoing ? 1 : 2;
  s.phase = phase_jet(q, b, branch, opts.n_jet, ResonancePolicy::Throw, tol);
  s.r = s.phase.r;
  s.conj = conjugation_data(s.phase, b, opts.n_jet - 2);
  s.beta = s.conj.beta;

  const RealVec& ph = s.phase.jet;
  const RealVec v1 = taylor(b.v1(), q.crit.y_c, opts.n_jet);
  const double nu = ph[0], r = s.r;
  const int M = opts.m_max;
  auto phi = [&](int k) { return k < int(ph.size()) ? ph[k] : 0.0; };

  int solved = order;
  std::vector<std::vector<CplxVec>> coef(n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    // R[p][m]: residual collected at x^{beta + p - r n + 1} y^m.
    std::vector<CplxVec> R(order + 2, CplxVec(M + 1, 0.0));
    std::vector<CplxVec> C(order + 1, CplxVec(M + 1, 0.0));
    for (int p = 0; p <= std::min(order, solved); ++p) {
      for (int m = 0; m <= M; ++m) {
        cplx c;
        if (p == 0 && m == n) {
          c = 1.0;
        } else {
          const double L = p + r * (m - n);
          const double scale = std::max(1.0, std::abs(R[p][m]));
          if (std::abs(L) < tol.resonance_tol) {
            if (std::abs(R[p][m]) <= 1e-14 * scale) continue;
            if (policy == ResonancePolicy::Throw)
              fail(ErrorCode::ResonantExponent,
                   "v_" + std::to_string(n) + ": exponent of x^" + std::to_string(p) +
                       " y^" + std::to_string(m) + " term is resonant");
            if (!s.resonance || p - 1 < solved) s.resonance = std::array<int, 3>{n, p, m};
            solved = std::min(solved, p - 1);
            break;
          }
          if (R[p][m] == 0.0) continue;
          c = -R[p][m] / (2.0 * kI * nu * L);
        }
        C[p][m] = c;
        const cplx sigma = s.beta + double(p) - r * n;
        for (int k = 1; m + k <= M; ++k) {
          const cplx A = (2.0 * kI * sigma - kI) * phi(k) - kI * double((k + 2) * (k + 1)) * phi(k + 2) +
                         v1[k] - 2.0 * kI * double(m * (k + 2)) * phi(k + 2);
          R[p][m + k] += A * c;
        }
        R[p + 1][m] += -sigma * sigma * c;
        if (m >= 2) R[p + 1][m - 2] += -double(m * (m - 1)) * c;
      }
    }
    coef[n] = std::move(C);
  }
  s.order = solved;
  if (s.order < 0) fail(ErrorCode::ResonantExponent, "resonance at the first correction");
  for (int n = 0; n <= n_max; ++n) {
    GenSeries g;
    g.beta = s.beta;
    g.r = r;
    for (int p = 0; p <= s.order; ++p)
      for (int m = 0; m <= M; ++m)
        if (coef[n][p][m] != 0.0) g.terms.push_back({p, -n, m, coef[n][p][m]});
    s.models.push_back(std::move(g));
  }
  return s;
}

SaddleModel::SaddleModel(const SaddleSeries& s, CplxVec coeffs) : s_(s), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() > s_.models.size()) fail(ErrorCode::InvalidInput, "more coefficients than models");
}

void SaddleModel::phase(double z, double out[3]) const {
  for (int d = 0; d < 3; ++d) out[d] = s_.phase.jet_value(z, d);
}

cplx SaddleModel::amplitude(double x, double z) const {
  cplx acc = 0.0;
  for (size_t n = 0; n < coeffs_.size(); ++n)
    if (coeffs_[n] != 0.0) acc += coeffs_[n] * s_.models[n].eval(x, z);
  return acc;
}

CollarGrid build_saddle_eigenfunction(const SaddleSeries& s, const CplxVec& coeffs,
                                      const CollarGrid& layout) {
  CollarGrid g = layout.empty_like();
  sample_model(SaddleModel(s, coeffs), g);
  return g;
}

namespace {

// Lagrange weights on nodes t[i0 .. i0+q) at u.
void lagrange(const double* t, int q, double u, double* w) {
  for (int j = 0; j < q; ++j) {
    double a = 1.0;
    for (int k = 0; k < q; ++k)
      if (k != j) a *= (u - t[k]) / (t[j] - t[k]);
    w[j] = a;
  }
}

}  // namespace

CollarGrid transport_solve(const CollarGrid& f, double r, double nu, double x0,
                           const std::function<cplx(double)>& v0, const TransportOptions& opts) {
  f.validate();
  if (f.phase) fail(ErrorCode::InvalidInput, "transport data must be an amplitude (no phase)");
  if (r == 0.0 || nu == 0.0) fail(ErrorCode::InvalidInput, "need r != 0 and nu != 0");
  const int q = opts.interp_order;
  const int nx = int(f.nx()), ny = int(f.ny());
  if (q < 3 || q > 12 || nx < q || ny < q) fail(ErrorCode::InvalidInput, "interpolation order too high for the grid");
  if (!(x0 >= f.x.front() * (1 - 1e-12) && x0 <= f.x.back() * (1 + 1e-12)))
    fail(ErrorCode::InvalidInput, "x0 outside the grid");

  RealVec lx(nx);
  for (int i = 0; i < nx; ++i) lx[i] = std::log(f.x[i]);
  const double h = f.dy(), period = f.periodic_y ? f.b.circumference() : 0.0;
  const double ylo = f.y.front() - opts.y_c, yhi = f.y.back() - opts.y_c;
  auto offset = [&](int j) {
    return f.periodic_y ? f.b.periodic_diff(f.y[j], opts.y_c) : f.y[j] - opts.y_c;
  };

  auto interp = [&](double u, double z) -> cplx {
    // x stencil
    int i0 = int(std::upper_bound(lx.begin(), lx.end(), u) - lx.begin()) - q / 2;
    i0 = std::clamp(i0, 0, nx - q);
    double wx[12], wy[12], ty[12];
    lagrange(&lx[i0], q, u, wx);
    int jj[12];
    if (f.periodic_y) {
      double yy = std::fmod(z + opts.y_c - f.y.front(), period);
      if (yy < 0) yy += period;
      const int j = int(std::floor(yy / h));
      for (int k = 0; k < q; ++k) {
        const int idx = j - (q / 2 - 1) + k;
        jj[k] = ((idx % ny) + ny) % ny;
        ty[k] = idx * h;
      }
      lagrange(ty, q, yy, wy);
    } else {
      if (z < ylo - 1e-12 * (1 + std::abs(ylo)) || z > yhi + 1e-12 * (1 + std::abs(yhi)))
        fail(ErrorCode::CharacteristicEscape, "characteristic leaves the y window at offset " + std::to_string(z));
      int j0 = int(std::floor((z - ylo) / h)) - (q / 2 - 1);
      j0 = std::clamp(j0, 0, ny - q);
      for (int k = 0; k < q; ++k) {
        jj[k] = j0 + k;
        ty[k] = ylo + (j0 + k) * h;
      }
      lagrange(ty, q, z, wy);
    }
    cplx acc = 0.0;
    for (int a = 0; a < q; ++a) {
      cplx row = 0.0;
      for (int c = 0; c < q; ++c) row += wy[c] * f.at(i0 + a, jj[c]);
      acc += wx[a] * row;
    }
    return acc;
  };

  using GL = boost::math::quadrature::gauss<double, 8>;
  const auto& ab = GL::abscissa();
  const auto& we = GL::weights();
  const double u0 = std::log(x0);
  CollarGrid v = f.empty_like();
  for (int i = 0; i < nx; ++i) {
    const double u1 = lx[i], span = u1 - u0;
    const int panels = std::max(1, int(std::ceil(std::abs(span) / opts.panel)));
    const double hp = span / panels;
    for (int j = 0; j < ny; ++j) {
      const double z = offset(j);
      // Endpoint of the characteristic; the path between is monotone.
      const double z0 = z * std::exp(r * (u0 - u1));
      if (!f.periodic_y && (z0 < ylo - 1e-12 || z0 > yhi + 1e-12))
        fail(ErrorCode::CharacteristicEscape, "characteristic through offset " + std::to_string(z) + " leaves the window");
      cplx integral = 0.0;
      for (int pnl = 0; pnl < panels; ++pnl) {
        const double mid = u0 + (pnl + 0.5) * hp;
        auto g = [&](double u) { return interp(u, z * std::exp(r * (u - u1))); };
        for (size_t k = 0; k < ab.size(); ++k) {
          const double w = we[k] * 0.5 * hp;
          if (ab[k] == 0.0) {
            integral += w * g(mid);
          } else {
            integral += w * (g(mid + 0.5 * hp * ab[k]) + g(mid - 0.5 * hp * ab[k]));
          }
        }
      }
      v.at(i, j) = -integral / (2.0 * nu) + v0(z0);
    }
  }
  return v;
}

}  // namespace radscat
