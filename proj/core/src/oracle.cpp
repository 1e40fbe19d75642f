#include "radscat/oracle.hpp"

#include <fftw3.h>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <Eigen/UmfPackSupport>
#include <unsupported/Eigen/IterativeSolvers>
#include <cmath>
#include <mutex>

namespace radscat {

const char* oracle_solver_name(OracleSolver s) {
  return s == OracleSolver::Direct ? "direct" : "krylov";
}

double nu_max(const BoundaryData& b, double lambda) {
  const int n = 4096 * std::max(1, b.v0().max_mode());
  double vmin = 1e300;
  for (int j = 0; j < n; ++j) vmin = std::min(vmin, b.v0().value(b.circumference() * j / n));
  return lambda > vmin ? std::sqrt(lambda - vmin) : 0.0;
}

size_t OracleConfig::nx_for(const BoundaryData& b, double lambda) const {
  if (nx > 0) return nx;
  const double nu = std::max(nu_max(b, lambda), 1e-3);
  const double h = 2.0 * kPi / (ppw * nu);
  return size_t(std::ceil((1.0 / x_min - 1.0 / x_max) / h)) + 1;
}

CollarGrid OracleConfig::layout(const BoundaryData& b, double lambda) const {
  return CollarGrid::inverse_uniform(b, lambda, x_min, x_max, nx_for(b, lambda), ny);
}

void OracleConfig::validate(const BoundaryData& b, double lambda) const {
  if (!(x_min > 0) || !(x_max > x_min)) fail(ErrorCode::InvalidInput, "need 0 < x_min < x_max");
  if (!(eps_for(lambda) > 0)) fail(ErrorCode::InvalidInput, "eps must be positive");
  const double xa = x_abs_value();
  if (!(xa > x_min) || !(xa < x_max)) fail(ErrorCode::InvalidInput, "x_abs must lie in (x_min, x_max)");
  if (ny < 8 || ny % 2) fail(ErrorCode::InvalidInput, "ny must be even and at least 8");
  if (!(ppw >= 8.0) || solver_tol <= 0 || max_iter < 1 || restart < 2 || fmap_window < 8)
    fail(ErrorCode::InvalidInput, "bad solver settings");
  const int kmax = std::max(b.v0().max_mode(), b.v1().max_mode());
  if (2 * size_t(kmax) >= ny)
    fail(ErrorCode::ResolutionError, "ny does not resolve the potential's modes");
  const size_t n = nx_for(b, lambda);
  if (n < 8) fail(ErrorCode::InvalidInput, "nx must be at least 8");
  const double h = (1.0 / x_min - 1.0 / x_max) / double(n - 1);
  const double nu = nu_max(b, lambda);
  // ppw sizes the automatic grid; 8 is the floor for explicit ones.
  if (nu * h > 2.0 * kPi / 8.0)
    fail(ErrorCode::ResolutionError, "fewer than 8 points per wavelength at nu = " + std::to_string(nu));
}

namespace {

using SpMat = Eigen::SparseMatrix<cplx>;
using Vec = Eigen::VectorXcd;

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// In-place batched transforms of `rows` contiguous length-n lines.
class LineFft {
 public:
  LineFft(cplx* data, size_t rows, size_t n) : n_(n) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto* p = reinterpret_cast<fftw_complex*>(data);
    const int len = int(n);
    fwd_ = fftw_plan_many_dft(1, &len, int(rows), p, nullptr, 1, len, p, nullptr, 1, len,
                              FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_many_dft(1, &len, int(rows), p, nullptr, 1, len, p, nullptr, 1, len,
                              FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~LineFft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
  }
  LineFft(const LineFft&) = delete;
  LineFft& operator=(const LineFft&) = delete;
  void forward() { fftw_execute(fwd_); }
  void backward() { fftw_execute(bwd_); }

 private:
  size_t n_;
  fftw_plan fwd_, bwd_;
};

// Grid-coefficient representation V(y_j) = sum_d vhat[d] exp(2 pi i d j / ny).
std::vector<std::pair<int, cplx>> grid_modes(const FourierSeries& V, size_t ny) {
  std::vector<std::pair<int, cplx>> out;
  for (const auto& t : V.terms()) {
    if (t.k == 0) {
      out.push_back({0, t.c});
      continue;
    }
    out.push_back({t.k, cplx(t.c, -t.s) / 2.0});
    out.push_back({int(ny) - t.k, cplx(t.c, t.s) / 2.0});
  }
  return out;
}

double signed_mode(size_t m, size_t ny) {
  return m <= ny / 2 ? double(m) : double(m) - double(ny);
}

struct Discretization {
  size_t N, ny;
  double s0, h;
  RealVec s, sigma, k2;
  std::vector<std::pair<int, cplx>> v0, v1;
  double lambda;

  double s_at(size_t i) const { return s[i]; }
  // Diagonal of Q at node i, mode m.
  cplx qdiag(size_t i, size_t m) const {
    const double si = s[i];
    cplx q = (k2[m] - 0.25) / (si * si) - lambda - kI * sigma[i];
    for (const auto& [d, c] : v0)
      if (d == 0) q += c;
    for (const auto& [d, c] : v1)
      if (d == 0) q += c / si;
    return q;
  }
};

Discretization discretize(const BoundaryData& b, double lambda, const OracleConfig& cfg, size_t N) {
  Discretization D;
  D.N = N;
  D.ny = cfg.ny;
  D.lambda = lambda;
  const double s_lo = 1.0 / cfg.x_max, s_hi = 1.0 / cfg.x_min;
  D.s0 = s_lo;
  D.h = (s_hi - s_lo) / double(N - 1);
  D.s.resize(N);
  D.sigma.resize(N);
  const double s_abs = 1.0 / cfg.x_abs_value(), eps = cfg.eps_for(lambda),
               A = cfg.strength_for(lambda);
  for (size_t i = 0; i < N; ++i) {
    D.s[i] = i + 1 == N ? s_hi : s_lo + D.h * double(i);
    const double r = std::max(0.0, (D.s[i] - s_abs) / (s_hi - s_abs));
    D.sigma[i] = eps + A * r * r * r;
  }
  D.k2.resize(cfg.ny);
  const double C = b.circumference();
  for (size_t m = 0; m < cfg.ny; ++m) {
    const double k = 2.0 * kPi * signed_mode(m, cfg.ny) / C;
    D.k2[m] = k * k;
  }
  D.v0 = grid_modes(b.v0(), cfg.ny);
  D.v1 = grid_modes(b.v1(), cfg.ny);
  return D;
}

// Numerov rows for interior nodes i = 1..N-2; unknown (i, m) at (i-1) ny + m.
// Known boundary values W0 (node 0) are moved to the right-hand side.
SpMat assemble(const Discretization& D, bool coupled) {
  const size_t N = D.N, ny = D.ny, n = (N - 2) * ny;
  const double c12 = D.h * D.h / 12.0;
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(n * 3 * (1 + (coupled ? D.v0.size() + D.v1.size() : 0)));
  for (size_t i = 1; i + 1 < N; ++i) {
    for (size_t m = 0; m < ny; ++m) {
      const size_t row = (i - 1) * ny + m;
      for (int off = -1; off <= 1; ++off) {
        const size_t ip = size_t(int(i) + off);
        if (ip == 0 || ip + 1 == N) continue;
        const double w = off == 0 ? 10.0 : 1.0, c0 = off == 0 ? -2.0 : 1.0;
        const size_t base = (ip - 1) * ny;
        trip.emplace_back(row, base + m, c0 - c12 * w * D.qdiag(ip, m));
        if (!coupled) continue;
        auto add = [&](const std::vector<std::pair<int, cplx>>& V, double scale) {
          for (const auto& [d, c] : V) {
            if (d == 0) continue;
            const size_t col = (m + ny - size_t(d)) % ny;
            trip.emplace_back(row, base + col, -c12 * w * c * scale);
          }
        };
        add(D.v0, 1.0);
        add(D.v1, 1.0 / D.s[ip]);
      }
    }
  }
  SpMat A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  return A;
}

// Contribution of the known node-0 values to row block i = 1.
void boundary_rhs(const Discretization& D, const Vec& W0, Vec& rhs) {
  const double c12 = D.h * D.h / 12.0;
  const size_t ny = D.ny;
  for (size_t m = 0; m < ny; ++m) {
    cplx acc = (1.0 - c12 * D.qdiag(0, m)) * W0[m];
    for (const auto& [d, c] : D.v0)
      if (d != 0) acc -= c12 * c * W0[(m + ny - size_t(d)) % ny];
    for (const auto& [d, c] : D.v1)
      if (d != 0) acc -= c12 * c / D.s[0] * W0[(m + ny - size_t(d)) % ny];
    rhs[m] -= acc;
  }
}

// Per-mode banded solves of the diagonal Fourier symbol.
class DecoupledPreconditioner {
 public:
  void set(const SpMat& M) {
    lu_.compute(M);
    if (lu_.info() != Eigen::Success) fail(ErrorCode::NoConvergence, "preconditioner factorization failed");
  }
  template <typename M>
  DecoupledPreconditioner& analyzePattern(const M&) { return *this; }
  template <typename M>
  DecoupledPreconditioner& factorize(const M&) { return *this; }
  template <typename M>
  DecoupledPreconditioner& compute(const M&) { return *this; }
  Eigen::ComputationInfo info() const { return Eigen::Success; }
  template <typename Rhs>
  Vec solve(const Eigen::MatrixBase<Rhs>& b) const { return lu_.solve(Vec(b)); }

 private:
  Eigen::SparseLU<SpMat> lu_;
};

size_t s_index_to_grid_row(size_t i, size_t N) { return N - 1 - i; }

}  // namespace

FrequencyMap frequency_map(const CollarGrid& g, size_t W) {
  FrequencyMap F;
  F.y = g.y;
  const size_t N = g.nx(), ny = g.ny();
  if (N < W || W < 8) return F;
  // s ascending = grid rows descending.
  RealVec s(N);
  for (size_t i = 0; i < N; ++i) s[i] = 1.0 / g.x[N - 1 - i];
  const double h = (s.back() - s.front()) / double(N - 1);
  RealVec hann(W);
  double hsum = 0.0;
  for (size_t k = 0; k < W; ++k) {
    hann[k] = 0.5 - 0.5 * std::cos(2.0 * kPi * (double(k) + 0.5) / double(W));
    hsum += hann[k];
  }
  std::vector<size_t> starts;
  for (size_t a = 0; a + W <= N; a += W / 2) starts.push_back(a);
  const size_t nw = starts.size();
  CplxVec buf(nw * ny * W);
  for (size_t w = 0; w < nw; ++w)
    for (size_t j = 0; j < ny; ++j)
      for (size_t k = 0; k < W; ++k)
        buf[(w * ny + j) * W + k] = hann[k] * g.field(N - 1 - (starts[w] + k), j);
  {
    LineFft fft(buf.data(), nw * ny, W);
    fft.forward();
  }
  // Windows ordered by ascending x = descending s.
  F.x.resize(nw);
  F.nu.assign(nw * ny, 0.0);
  F.amp.assign(nw * ny, 0.0);
  for (size_t w = 0; w < nw; ++w) {
    const size_t wr = nw - 1 - w;
    F.x[wr] = 1.0 / s[starts[w] + W / 2];
    for (size_t j = 0; j < ny; ++j) {
      const cplx* line = &buf[(w * ny + j) * W];
      size_t kb = 0;
      for (size_t k = 1; k < W; ++k)
        if (std::abs(line[k]) > std::abs(line[kb])) kb = k;
      const double am = std::abs(line[(kb + W - 1) % W]), a0 = std::abs(line[kb]),
                   ap = std::abs(line[(kb + 1) % W]);
      // Hann main lobe: |X(k+1)|/|X(k)| = (1 + d)/(2 - d) for a tone at bin k + d.
      const double an = std::max(am, ap), al = a0 > 0 ? an / a0 : 0.0;
      const double shift = (ap >= am ? 1.0 : -1.0) * (2.0 * al - 1.0) / (1.0 + al);
      const double bin = signed_mode(kb, W) + shift;
      F.nu[wr * ny + j] = 2.0 * kPi * bin / (double(W) * h);
      F.amp[wr * ny + j] = a0 / hsum;
    }
  }
  return F;
}

std::vector<OracleSolution> solve_batch(const BoundaryData& b, double lambda,
                                        const std::vector<CollarGrid>& fs, const OracleConfig& cfg,
                                        const std::vector<CplxVec>& boundaries) {
  cfg.validate(b, lambda);
  if (b.v0().max_mode() > 0 && thresholds(b).distance_to_cv(lambda) < default_tolerances().cv_tol)
    fail(ErrorCode::CriticalEnergy, "lambda is a critical value of V0");
  if (!boundaries.empty() && boundaries.size() != fs.size())
    fail(ErrorCode::InvalidInput, "one boundary vector per right-hand side");
  const size_t N = cfg.nx_for(b, lambda), ny = cfg.ny;
  for (size_t r = 0; r < fs.size(); ++r) {
    const CollarGrid& f = fs[r];
    if (f.nx() != N || f.ny() != ny || f.spacing != XSpacing::InverseUniform ||
        std::abs(f.x.front() - cfg.x_min) > 1e-14 * cfg.x_min ||
        std::abs(f.x.back() - cfg.x_max) > 1e-14 * cfg.x_max)
      fail(ErrorCode::InvalidInput, "right-hand side is not on the oracle layout");
    if (!boundaries.empty() && !boundaries[r].empty() && boundaries[r].size() != ny)
      fail(ErrorCode::InvalidInput, "boundary data must have ny values");
  }

  const Discretization D = discretize(b, lambda, cfg, N);
  const size_t n = (N - 2) * ny;
  const double c12 = D.h * D.h / 12.0;

  std::vector<OracleSolution> out(fs.size());
  std::vector<Vec> rhs(fs.size());
  std::vector<CplxVec> W0s(fs.size());
  for (size_t r = 0; r < fs.size(); ++r) {
    const CollarGrid& f = fs[r];
    const CplxVec* boundary = boundaries.empty() || boundaries[r].empty() ? nullptr : &boundaries[r];
    OracleSolution& sol = out[r];
    sol.lambda = lambda;
    sol.eps = cfg.eps_for(lambda);
    sol.x_abs = cfg.x_abs_value();
    sol.solver = cfg.solver;
    sol.field = f.empty_like();
    sol.field.phase.reset();
    sol.field.b = b;
    sol.field.lambda = lambda;

    // F = s^{1/2} f in y-Fourier coefficients, s-ascending rows.
    CplxVec Fh(N * ny);
    CplxVec& W0 = W0s[r];
    W0.assign(ny, 0.0);
    double xlo = 0.0, xhi = 0.0;
    for (size_t i = 0; i < N; ++i) {
      const size_t gr = s_index_to_grid_row(i, N);
      for (size_t j = 0; j < ny; ++j) {
        const cplx v = f.field(gr, j);
        if (v != 0.0) {
          xlo = xlo == 0.0 ? f.x[gr] : std::min(xlo, f.x[gr]);
          xhi = std::max(xhi, f.x[gr]);
        }
        Fh[i * ny + j] = std::sqrt(D.s[i]) * v / double(ny);
      }
    }
    sol.rhs_x_lo = xlo;
    sol.rhs_x_hi = xhi;
    for (size_t j = 0; j < ny && boundary; ++j) W0[j] = std::sqrt(D.s[0]) * (*boundary)[j] / double(ny);
    {
      LineFft fft(Fh.data(), N, ny);
      fft.forward();
      LineFft f0(W0.data(), 1, ny);
      f0.forward();
    }
    Vec& q = rhs[r];
    q.resize(n);
    for (size_t i = 1; i + 1 < N; ++i)
      for (size_t m = 0; m < ny; ++m)
        q[(i - 1) * ny + m] = -c12 * (Fh[(i - 1) * ny + m] + 10.0 * Fh[i * ny + m] + Fh[(i + 1) * ny + m]);
    boundary_rhs(D, Eigen::Map<const Vec>(W0.data(), Eigen::Index(ny)), q);
    sol.rhs_norm = q.norm();
    sol.rhs = xhi > 0 ? "source supported in x in [" + std::to_string(xlo) + ", " + std::to_string(xhi) + "]"
                      : "zero source";
    if (boundary) sol.rhs += ", Dirichlet data at x_max";
  }

  std::vector<Vec> ws(fs.size(), Vec::Zero(n));
  const bool any = std::any_of(out.begin(), out.end(), [](const OracleSolution& s) { return s.rhs_norm > 0; });
  if (any) {
    const SpMat A = assemble(D, true);
    if (cfg.solver == OracleSolver::Direct) {
      Eigen::UmfPackLU<SpMat> lu;
      lu.compute(A);
      if (lu.info() != Eigen::Success) fail(ErrorCode::NoConvergence, "sparse factorization failed");
      for (size_t r = 0; r < fs.size(); ++r) {
        if (out[r].rhs_norm == 0) continue;
        ws[r] = lu.solve(rhs[r]);
        out[r].iterations = 1;
      }
    } else {
      Eigen::GMRES<SpMat, DecoupledPreconditioner> gm;
      gm.preconditioner().set(assemble(D, false));
      gm.setTolerance(cfg.solver_tol);
      gm.setMaxIterations(cfg.max_iter);
      gm.set_restart(cfg.restart);
      gm.compute(A);
      for (size_t r = 0; r < fs.size(); ++r) {
        if (out[r].rhs_norm == 0) continue;
        ws[r] = gm.solve(rhs[r]);
        out[r].iterations = int(gm.iterations());
        if (gm.info() != Eigen::Success)
          fail(ErrorCode::NoConvergence, "GMRES stopped after " + std::to_string(gm.iterations()) +
                                             " iterations at relative residual " + std::to_string(gm.error()));
      }
    }
    for (size_t r = 0; r < fs.size(); ++r) {
      if (out[r].rhs_norm == 0) continue;
      out[r].residual = (A * ws[r] - rhs[r]).norm() / out[r].rhs_norm;
      if (cfg.solver == OracleSolver::Direct && out[r].residual > 10.0 * std::max(cfg.solver_tol, 1e-12))
        fail(ErrorCode::NoConvergence, "direct solve residual " + std::to_string(out[r].residual));
    }
  }

  for (size_t r = 0; r < fs.size(); ++r) {
    OracleSolution& sol = out[r];
    // Back to physical values u = s^{-1/2} w.
    CplxVec U(N * ny, 0.0);
    for (size_t m = 0; m < ny; ++m) U[m] = W0s[r][m];
    for (size_t i = 1; i + 1 < N; ++i)
      for (size_t m = 0; m < ny; ++m) U[i * ny + m] = ws[r][(i - 1) * ny + m];
    double tail = 0.0, total = 0.0;
    for (size_t i = 0; i < N && D.s[i] * sol.x_abs <= 1.0; ++i)
      for (size_t m = 0; m < ny; ++m) {
        const double e = std::norm(U[i * ny + m]);
        total += e;
        if (std::abs(signed_mode(m, ny)) >= 7.0 * double(ny) / 16.0) tail += e;
      }
    sol.y_tail = total > 0 ? tail / total : 0.0;
    {
      LineFft fft(U.data(), N, ny);
      fft.backward();
    }
    for (size_t i = 0; i < N; ++i) {
      const size_t gr = s_index_to_grid_row(i, N);
      for (size_t j = 0; j < ny; ++j) sol.field.at(gr, j) = U[i * ny + j] / std::sqrt(D.s[i]);
    }
    sol.fmap = frequency_map(sol.field, cfg.fmap_window);
  }
  return out;
}

OracleSolution solve(const BoundaryData& b, double lambda, const CollarGrid& f,
                     const OracleConfig& cfg, const CplxVec& boundary) {
  auto v = solve_batch(b, lambda, {f}, cfg, {boundary});
  return std::move(v.front());
}

DecayFit measure_decay(const OracleSolution& sol, double y_star, const DecayOptions& o) {
  const CollarGrid& g = sol.field;
  const double x_lo = o.x_lo > 0 ? o.x_lo : 1.25 * sol.x_abs;
  const double x_hi = o.x_hi > 0 ? o.x_hi : (sol.rhs_x_lo > 0 ? sol.rhs_x_lo : g.x.back());
  if (!(x_hi >= 100.0 * x_lo * (1.0 - 1e-9)))
    fail(ErrorCode::InsufficientRange, "fit range [" + std::to_string(x_lo) + ", " + std::to_string(x_hi) +
                                           "] spans less than two decades");
  DecayFit d;
  double gmax = 0.0;
  for (const auto& v : g.values) gmax = std::max(gmax, std::abs(v));
  for (size_t i = 0; i < g.nx(); ++i) {
    if (g.x[i] < x_lo || g.x[i] > x_hi) continue;
    double m = 0.0;
    for (size_t j = 0; j < g.ny(); ++j)
      if (std::abs(g.b.periodic_diff(g.y[j], y_star)) <= o.half_width) m = std::max(m, std::abs(g.at(i, j)));
    d.x.push_back(g.x[i]);
    d.shell_max.push_back(m);
  }
  if (d.x.size() < 3) fail(ErrorCode::InsufficientRange, "fewer than three shells in the fit range");
  if (*std::min_element(d.shell_max.begin(), d.shell_max.end()) <= 0.0)
    fail(ErrorCode::InsufficientRange, "field vanishes on the fit range");
  d.noise_flag = *std::max_element(d.shell_max.begin(), d.shell_max.end()) < 1e-12 * std::max(gmax, 1e-300) ||
                 gmax < 1e-250;
  d.fit = fit_loglog(d.x, d.shell_max, x_lo, x_hi);
  return d;
}

EpsContinuation eps_continuation(const BoundaryData& b, double lambda, const CollarGrid& f,
                                 const OracleConfig& cfg, const RealVec& eps_list, const ProbeSet& p) {
  if (eps_list.size() < 3) fail(ErrorCode::InvalidInput, "need at least three eps values");
  for (size_t k = 0; k < eps_list.size(); ++k)
    if (!(eps_list[k] > 0) || (k > 0 && !(eps_list[k] < eps_list[k - 1])))
      fail(ErrorCode::InvalidInput, "eps list must be positive and decreasing");
  EpsContinuation E;
  E.eps = eps_list;
  for (double e : eps_list) {
    OracleConfig c = cfg;
    c.eps = e;
    E.solutions.push_back(solve(b, lambda, f, c));
  }
  const CollarGrid& g0 = E.solutions.front().field;
  const double xlo = p.x_lo > 0 ? p.x_lo : 1.25 * cfg.x_abs_value();
  const double xhi = p.x_hi > 0 ? p.x_hi : g0.x.back();
  for (size_t k = 0; k + 1 < eps_list.size(); ++k) {
    const CollarGrid &a = E.solutions[k].field, &c = E.solutions[k + 1].field;
    double d = 0.0;
    for (size_t i = 0; i < g0.nx(); i += std::max<size_t>(p.stride_x, 1)) {
      if (g0.x[i] < xlo || g0.x[i] > xhi) continue;
      for (size_t j = 0; j < g0.ny(); j += std::max<size_t>(p.stride_y, 1))
        d = std::max(d, std::abs(a.at(i, j) - c.at(i, j)));
    }
    E.diffs.push_back(d);
  }
  E.monotone = true;
  for (size_t k = 1; k < E.diffs.size(); ++k)
    if (E.diffs[k] > E.diffs[k - 1]) E.monotone = false;
  if (!E.monotone) E.warning = "probe differences do not decrease monotonically";
  if (E.diffs.back() > 0 && E.diffs.back() >= E.diffs.front())
    fail(ErrorCode::NoLimit, "probe differences do not decrease under eps refinement");
  const size_t K = eps_list.size();
  const double ea = eps_list[K - 2], eb = eps_list[K - 1];
  E.extrapolated = E.solutions.back().field;
  const auto& ua = E.solutions[K - 2].field.values;
  for (size_t q = 0; q < ua.size(); ++q)
    E.extrapolated.values[q] += (E.extrapolated.values[q] - ua[q]) * (eb / (ea - eb));
  return E;
}

}  // namespace radscat
