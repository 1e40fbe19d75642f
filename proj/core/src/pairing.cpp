#include "radscat/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace radscat {

const char* pairing_method_name(PairingMethod m) {
  return m == PairingMethod::ModeFormula ? "mode_formula" : "flux_limit";
}

ModeTrace ModeTrace::center(const RadialPoint& q, CplxVec gammas) {
  ModeTrace t;
  t.q = q;
  t.kind = TraceKind::Center;
  t.weight = std::abs(q.nu_t);
  t.gammas = std::move(gammas);
  return t;
}

ModeTrace ModeTrace::sink(const RadialPoint& q, double Y0, double dY, CplxVec profile) {
  ModeTrace t;
  t.q = q;
  t.kind = TraceKind::Sink;
  t.weight = std::abs(q.nu_t);
  t.Y0 = Y0;
  t.dY = dY;
  t.profile = std::move(profile);
  return t;
}

namespace {

void check_same_energy(const ModeTrace& a, const ModeTrace& b) {
  if (std::abs(a.lambda() - b.lambda()) > 1e-12 * (1 + std::abs(a.lambda())))
    fail(ErrorCode::MixedEnergy, "traces at different energies");
  if (!a.q.outgoing() || !b.q.outgoing()) fail(ErrorCode::InvalidInput, "pair_modes needs outgoing traces");
}

bool same_point(const ModeTrace& a, const ModeTrace& b) {
  return std::abs(a.q.crit.y_c - b.q.crit.y_c) < 1e-9;
}

}  // namespace

PairingResult pair_modes(const ModeTrace& t1, const ModeTrace& t2) {
  check_same_energy(t1, t2);
  PairingResult r;
  r.method = PairingMethod::ModeFormula;
  if (!same_point(t1, t2)) return r;
  if (t1.kind != t2.kind) fail(ErrorCode::InvalidInput, "traces of different kinds at one point");
  const double w = 2.0 * t1.weight;
  if (t1.kind == TraceKind::Center) {
    const size_t n = std::min(t1.gammas.size(), t2.gammas.size());
    cplx acc = 0.0;
    for (size_t k = 0; k < n; ++k) acc += t1.gammas[k] * std::conj(t2.gammas[k]);
    r.value = w * acc;
    r.estimated_error = 1e-15 * w * n;
    return r;
  }
  if (t1.profile.size() != t2.profile.size() || std::abs(t1.dY - t2.dY) > 1e-14 ||
      std::abs(t1.Y0 - t2.Y0) > 1e-12)
    fail(ErrorCode::InvalidInput, "sink traces sampled on different Y grids");
  // Trapezoid at step dY and 2 dY; the difference estimates the quadrature error.
  const size_t n = t1.profile.size();
  cplx fine = 0.0, coarse = 0.0;
  for (size_t k = 0; k < n; ++k) {
    const cplx p = t1.profile[k] * std::conj(t2.profile[k]);
    const double e = (k == 0 || k + 1 == n) ? 0.5 : 1.0;
    fine += e * p;
    if (k % 2 == 0) coarse += ((k == 0 || k + 2 >= n) ? 0.5 : 1.0) * p;
  }
  fine *= t1.dY;
  coarse *= 2.0 * t1.dY;
  r.value = w * fine;
  r.estimated_error = w * std::abs(fine - coarse);
  return r;
}

PairingResult pair_modes(const std::vector<ModeTrace>& u1, const std::vector<ModeTrace>& u2) {
  PairingResult r;
  for (const auto& a : u1)
    for (const auto& b : u2) {
      check_same_energy(a, b);
      if (!same_point(a, b)) continue;
      auto p = pair_modes(a, b);
      r.value += p.value;
      r.estimated_error += p.estimated_error;
    }
  return r;
}

namespace {

// Smooth step: 0 for t <= 0, 1 for t >= 1, and its derivative.
double smooth_step(double t, double* deriv = nullptr) {
  if (t <= 0.0 || t >= 1.0) {
    if (deriv) *deriv = 0.0;
    return t <= 0.0 ? 0.0 : 1.0;
  }
  const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  if (deriv) {
    const double da = a / (t * t), db = -b / ((1.0 - t) * (1.0 - t));
    *deriv = (da * (a + b) - a * (da + db)) / ((a + b) * (a + b));
  }
  return a / (a + b);
}

void check_layout(const CollarGrid& a, const CollarGrid& b) {
  a.validate();
  b.validate();
  if (a.x != b.x || a.y != b.y || a.periodic_y != b.periodic_y)
    fail(ErrorCode::InvalidInput, "fields must share one grid");
  if (std::abs(a.lambda - b.lambda) > 1e-12 * (1 + std::abs(a.lambda)))
    fail(ErrorCode::MixedEnergy, "fields at different energies");
}

// d/du of column j at shell i, five-point Lagrange on the (possibly
// nonuniform) log x nodes.
cplx du_amplitude(const CollarGrid& g, const RealVec& u, size_t i, size_t j) {
  const int nx = int(g.nx());
  const int i0 = std::clamp(int(i) - 2, 0, nx - 5);
  const double t = u[i];
  cplx acc = 0.0;
  for (int a = 0; a < 5; ++a) {
    // derivative of the a-th Lagrange basis polynomial at t
    double num = 0.0, den = 1.0;
    for (int b = 0; b < 5; ++b) {
      if (b == a) continue;
      den *= u[i0 + a] - u[i0 + b];
      double prod = 1.0;
      for (int c = 0; c < 5; ++c)
        if (c != a && c != b) prod *= t - u[i0 + c];
      num += prod;
    }
    acc += (num / den) * g.at(i0 + a, j);
  }
  return acc;
}

}  // namespace

cplx flux_at(const CollarGrid& f1, const CollarGrid& f2, double r, const FluxOptions& opts) {
  check_layout(f1, f2);
  const size_t nx = f1.nx(), ny = f1.ny();
  if (nx < 8) fail(ErrorCode::InvalidInput, "flux needs at least eight shells");
  if (!(r / 2 >= f1.x[2] && r <= f1.x[nx - 3]))
    fail(ErrorCode::InvalidInput, "cutoff transition [r/2, r] must lie inside the grid");
  RealVec u(nx);
  for (size_t i = 0; i < nx; ++i) u[i] = std::log(f1.x[i]);
  const double l2 = std::log(2.0), lr = std::log(r);

  RealVec wy(ny, f1.dy());
  if (!f1.periodic_y) wy.front() = wy.back() = 0.5 * f1.dy();
  if (opts.window > 0) {
    for (size_t j = 0; j < ny; ++j) {
      const double z = f1.periodic_y ? f1.b.periodic_diff(f1.y[j], opts.y_c) : f1.y[j] - opts.y_c;
      wy[j] *= smooth_step((opts.window - std::abs(z)) / (0.5 * opts.window));
    }
  }
  auto phase = [](const CollarGrid& g, size_t j) { return g.phase ? (*g.phase)[j] : 0.0; };

  cplx total = 0.0;
  for (size_t i = 0; i < nx; ++i) {
    double dchi;
    smooth_step((u[i] - lr + l2) / l2, &dchi);
    if (dchi == 0.0) continue;
    // trapezoid weight in u
    const double wu = 0.5 * ((i > 0 ? u[i] - u[i - 1] : 0.0) + (i + 1 < nx ? u[i + 1] - u[i] : 0.0));
    const double x = f1.x[i], s = 1.0 / x;
    cplx shell = 0.0;
    for (size_t j = 0; j < ny; ++j) {
      if (wy[j] == 0.0) continue;
      const double p1 = phase(f1, j), p2 = phase(f2, j);
      const cplx a1 = f1.at(i, j), a2 = f2.at(i, j);
      const cplx ds1 = -x * du_amplitude(f1, u, i, j), ds2 = -x * du_amplitude(f2, u, i, j);
      const cplx F = std::conj(a2) * (kI * p1 * a1 + ds1) - a1 * (-kI * p2 * std::conj(a2) + std::conj(ds2));
      shell += wy[j] * std::polar(1.0, (p1 - p2) * s) * F;
    }
    total += (dchi / l2) * wu * s * shell;
  }
  return -kI * total;
}

PairingResult pair_flux(const CollarGrid& f1, const CollarGrid& f2, const FluxOptions& opts,
                        const Tolerances& tol) {
  const double r0 = opts.r0 > 0 ? opts.r0 : 8.5 * f1.x.at(2);
  const cplx b0 = flux_at(f1, f2, r0, opts), b1 = flux_at(f1, f2, r0 / 2, opts),
             b2 = flux_at(f1, f2, r0 / 4, opts);
  const cplx e1 = 2.0 * b1 - b0, e2 = 2.0 * b2 - b1;
  PairingResult r;
  r.method = PairingMethod::FluxLimit;
  r.value = e2;
  r.estimated_error = std::abs(e2 - e1);
  const double n1 = std::abs(flux_at(f1, f1, r0 / 4, opts)),
               n2 = std::abs(flux_at(f2, f2, r0 / 4, opts));
  const double scale = std::max(std::abs(e2), std::sqrt(n1 * n2));
  if (r.estimated_error > tol.flux_tol * scale && r.estimated_error > opts.abs_floor)
    fail(ErrorCode::NoConvergence, "flux sequence spread " + std::to_string(r.estimated_error) +
                                       " exceeds flux_tol relative to " + std::to_string(scale));
  return r;
}

namespace {

// Shells used for extraction.
std::vector<size_t> fit_shells(const CollarGrid& g, const ExtractOptions& o) {
  const double lo = o.x_lo > 0 ? o.x_lo : g.x.front();
  const double hi = o.x_hi > 0 ? o.x_hi : std::min(g.x.back(), 10.0 * g.x.front());
  std::vector<size_t> out;
  for (size_t i = 0; i < g.nx(); ++i)
    if (g.x[i] >= lo * (1 - 1e-12) && g.x[i] <= hi * (1 + 1e-12)) out.push_back(i);
  if (out.empty()) fail(ErrorCode::InvalidInput, "no shells in the extraction range");
  return out;
}

// Least squares c0 + c1 t + c2 t^2 over samples, returns c0.
cplx extrapolate(const RealVec& t, const CplxVec& v, int degree) {
  const int n = int(t.size());
  const int d = std::min(degree, n - 1);
  Eigen::MatrixXd A(n, d + 1);
  Eigen::VectorXcd b(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k <= d; ++k) A(i, k) = std::pow(t[i], k);
    b(i) = v[i];
  }
  Eigen::MatrixXcd Ac = A.cast<cplx>();
  Eigen::VectorXcd c = Ac.colPivHouseholderQr().solve(b);
  return c(0);
}

cplx full_times(const CollarGrid& g, size_t i, size_t j, double phi) {
  // u exp(-i phi / x), combining phases before the exponential.
  const double p = g.phase ? (*g.phase)[j] : 0.0;
  return g.at(i, j) * std::polar(1.0, (p - phi) / g.x[i]);
}

ModeTrace extract_center(const CollarGrid& g, const RadialPoint& q, const ExtractOptions& o) {
  auto e = center_modes(q, g.b, std::max(o.n_modes, 1));
  const auto shells = fit_shells(g, o);
  const int J = o.n_modes;
  const double nu = q.nu_t, yc = q.crit.y_c;
  std::vector<CplxVec> per(J);
  RealVec t;
  double misfit = 0.0, norm = 0.0;
  for (size_t i : shells) {
    const double x = g.x[i], sx = std::sqrt(x), lx = std::log(x);
    CplxVec gam(J, 0.0);
    std::vector<RealVec> psi(g.ny());
    CplxVec a(g.ny());
    for (size_t j = 0; j < g.ny(); ++j) {
      const double z = g.periodic_y ? g.b.periodic_diff(g.y[j], yc) : g.y[j] - yc;
      a[j] = full_times(g, i, j, nu);
      psi[j] = hermite_functions(J, std::sqrt(e.alpha) * z / sx);
      const double Y = z / sx;
      const cplx chirp = std::polar(std::pow(e.alpha, 0.25), -0.25 * nu * Y * Y);
      for (int k = 0; k < J; ++k) gam[k] += a[j] * std::conj(chirp * psi[j][k]) * g.dy();
    }
    for (int k = 0; k < J; ++k) {
      gam[k] *= std::exp(-e.exponent(k) * lx) / sx;
      per[k].push_back(gam[k]);
    }
    // Mismatch of the field against its projection.
    for (size_t j = 0; j < g.ny(); ++j) {
      const double z = g.periodic_y ? g.b.periodic_diff(g.y[j], yc) : g.y[j] - yc;
      const double Y = z / sx;
      const cplx chirp = std::polar(std::pow(e.alpha, 0.25), -0.25 * nu * Y * Y);
      cplx rec = 0.0;
      for (int k = 0; k < J; ++k) rec += gam[k] * std::exp(e.exponent(k) * lx) * chirp * psi[j][k];
      misfit = std::max(misfit, std::abs(rec - a[j]));
      norm = std::max(norm, std::abs(a[j]));
    }
    t.push_back(sx);
  }
  CplxVec gammas(J);
  for (int k = 0; k < J; ++k) gammas[k] = extrapolate(t, per[k], 2);
  ModeTrace tr = ModeTrace::center(q, std::move(gammas));
  tr.misfit = norm > 0 ? misfit / norm : 0.0;
  if (tr.misfit > o.fit_tol)
    fail(ErrorCode::FormMismatch, "field differs from its center-mode projection by " + std::to_string(tr.misfit));
  return tr;
}

ModeTrace extract_sink(const CollarGrid& g, const RadialPoint& q, const ExtractOptions& o,
                       const Tolerances& tol) {
  auto e = sink_expansion(q, g.b, HermiteProfile{{}, 1.0}, o.sink_half_width, tol);
  const auto shells = fit_shells(g, o);
  const double yc = q.crit.y_c, h = g.dy();
  const int nY = o.n_Y, ny = int(g.ny());
  const double dY = 2.0 * o.Y_max / (nY - 1);
  std::vector<CplxVec> per(nY);
  RealVec t;
  const int Q = 6;
  for (size_t i : shells) {
    const double x = g.x[i], lx = std::log(x), sc = std::pow(x, e.r1);
    const cplx xb = std::exp(-e.beta * lx);
    auto amp = [&](int jj) {
      // amplitude at grid column jj with phase and weight removed
      const double z = g.periodic_y ? g.b.periodic_diff(g.y[jj], yc) : g.y[jj] - yc;
      double ph[3];
      try {
        phase_derivs(e.phase, g.b, z, ph);
      } catch (const Error&) {
        fail(ErrorCode::FormMismatch, "sink trace needs the phase at offset " + std::to_string(z));
      }
      cplx a = full_times(g, i, jj, ph[0]) * xb;
      if (e.resonant()) a *= std::polar(1.0, *e.resonant_c * std::pow(z / sc, e.resonant_order) * lx);
      return a;
    };
    for (int k = 0; k < nY; ++k) {
      const double Y = -o.Y_max + k * dY, z = Y * sc;
      double pos;  // fractional column index
      if (g.periodic_y) {
        double yy = std::fmod(yc + z - g.y.front(), g.b.circumference());
        if (yy < 0) yy += g.b.circumference();
        pos = yy / h;
      } else {
        pos = (yc + z - g.y.front()) / h;
        if (pos < 0 || pos > ny - 1)
          fail(ErrorCode::FormMismatch, "sink trace range leaves the y window");
      }
      int j0 = int(std::floor(pos)) - (Q / 2 - 1);
      if (!g.periodic_y) j0 = std::clamp(j0, 0, ny - Q);
      cplx acc = 0.0;
      for (int a = 0; a < Q; ++a) {
        double w = 1.0;
        for (int b = 0; b < Q; ++b)
          if (b != a) w *= (pos - (j0 + b)) / double(a - b);
        const int jj = g.periodic_y ? (((j0 + a) % ny) + ny) % ny : j0 + a;
        acc += w * amp(jj);
      }
      per[k].push_back(acc);
    }
    t.push_back(std::pow(x, e.first_gap(false)));
  }
  CplxVec prof(nY);
  double misfit = 0.0, norm = 0.0;
  for (int k = 0; k < nY; ++k) {
    prof[k] = extrapolate(t, per[k], 1);
    for (const auto& v : per[k]) {
      misfit = std::max(misfit, std::abs(v - prof[k]));
      norm = std::max(norm, std::abs(v));
    }
  }
  ModeTrace tr = ModeTrace::sink(q, -o.Y_max, dY, std::move(prof));
  tr.misfit = norm > 0 ? misfit / norm : 0.0;
  if (tr.misfit > o.fit_tol)
    fail(ErrorCode::FormMismatch, "sink profile varies across shells by " + std::to_string(tr.misfit));
  return tr;
}

}  // namespace

ModeTrace extract_mode_trace(const CollarGrid& field, const RadialPoint& q, const ExtractOptions& opts,
                             const Tolerances& tol) {
  field.validate();
  if (!q.outgoing()) fail(ErrorCode::InvalidInput, "traces are taken at outgoing minima");
  if (std::abs(field.lambda - q.lambda) > 1e-12 * (1 + std::abs(q.lambda)))
    fail(ErrorCode::MixedEnergy, "field and radial point at different energies");
  switch (q.kind) {
    case RadialKind::Center: return extract_center(field, q, opts);
    case RadialKind::SinkOrSource: return extract_sink(field, q, opts, tol);
    default: fail(ErrorCode::WrongKind, "mode traces exist at centers and sinks only");
  }
}

CplxVec hermite_coefficients(const ModeTrace& t, int n, double scale) {
  if (t.kind != TraceKind::Sink) fail(ErrorCode::InvalidInput, "hermite_coefficients needs a sink trace");
  CplxVec c(n, 0.0);
  RealVec psi(n);
  for (size_t k = 0; k < t.profile.size(); ++k) {
    const double Y = t.Y0 + k * t.dY;
    hermite_functions(n, Y / scale, psi.data());
    const double w = (k == 0 || k + 1 == t.profile.size()) ? 0.5 : 1.0;
    for (int m = 0; m < n; ++m) c[m] += w * t.dY * t.profile[k] * psi[m] / std::sqrt(scale);
  }
  return c;
}

Biorthogonalization biorthogonalize(const Eigen::MatrixXcd& gram, const Eigen::MatrixXd& spread,
                                    const Tolerances& tol) {
  const int n = int(gram.rows());
  if (gram.cols() != n || spread.rows() != n || spread.cols() != n)
    fail(ErrorCode::InvalidInput, "gram and spread must be square and of one size");
  Biorthogonalization out;
  out.gram = gram;
  out.spread = spread;
  const double big = gram.cwiseAbs().maxCoeff();
  for (int m = 0; m < n; ++m)
    if (!(std::abs(gram(m, m)) > tol.biorth_tol * big))
      fail(ErrorCode::SingularDiagonal, "B(u_" + std::to_string(m) + ", w_" + std::to_string(m) + ") vanishes");
  for (int c = 0; c < n; ++c)
    for (int r = c + 1; r < n; ++r) out.lower_excess = std::max(out.lower_excess, std::abs(gram(r, c)) - spread(r, c));

  Eigen::MatrixXcd U = gram.triangularView<Eigen::Upper>();
  Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(n, n);
  for (int m = 0; m < n; ++m) {
    Eigen::VectorXcd col = Eigen::VectorXcd::Zero(n);
    col(m) = 1.0;
    for (int k = 0; k < m; ++k) col -= std::conj(U(k, m)) * T.col(k);
    T.col(m) = col / std::conj(U(m, m));
  }
  out.transform = T;
  out.renormalized = U * T.conjugate();
  return out;
}

Biorthogonalization biorthogonalize(const SaddleSeries& outgoing, const SaddleSeries& incoming,
                                    const CollarGrid& layout, const FluxOptions& opts,
                                    const Tolerances& tol) {
  if (outgoing.direction != SaddleDirection::Outgoing || incoming.direction != SaddleDirection::Incoming)
    fail(ErrorCode::InvalidInput, "need an outgoing and an incoming series");
  const int n = int(std::min(outgoing.models.size(), incoming.models.size()));
  std::vector<CollarGrid> u, w;
  for (int k = 0; k < n; ++k) {
    CplxVec c(k + 1, 0.0);
    c[k] = 1.0;
    u.push_back(build_saddle_eigenfunction(outgoing, c, layout));
    w.push_back(build_saddle_eigenfunction(incoming, c, layout));
  }
  FluxOptions o = opts;
  if (o.r0 <= 0) o.r0 = 8.5 * layout.x.at(2);
  if (o.window <= 0) o.window = outgoing.opts.window;
  o.y_c = outgoing.q.crit.y_c;
  Eigen::MatrixXcd G(n, n);
  Eigen::MatrixXd S(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const cplx b0 = flux_at(u[a], w[b], o.r0, o), b1 = flux_at(u[a], w[b], o.r0 / 2, o),
                 b2 = flux_at(u[a], w[b], o.r0 / 4, o);
      G(a, b) = 2.0 * b2 - b1;
      S(a, b) = std::abs((2.0 * b2 - b1) - (2.0 * b1 - b0));
    }
  return biorthogonalize(G, S, tol);
}

}  // namespace radscat
