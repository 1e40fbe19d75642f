#include "radscat/smatrix.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <fftw3.h>

namespace radscat {

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

CutoffModel::CutoffModel(std::shared_ptr<const FieldModel> inner, double x_cut, double w)
    : inner_(std::move(inner)), x_cut_(x_cut), w_(w) {
  if (!inner_ || !(x_cut > 0) || !(w > 0)) fail(ErrorCode::InvalidInput, "bad cutoff");
}

double CutoffModel::weight(double x, double z) const {
  const double cx = 1.0 - smooth_step((x - 0.5 * x_cut_) / (0.5 * x_cut_));
  const double cz = 1.0 - smooth_step((std::abs(z) - 0.5 * w_) / (0.5 * w_));
  return cx * cz;
}

void CutoffModel::phase(double z, double out[3]) const {
  inner_->phase(std::clamp(z, -w_, w_), out);
}

cplx CutoffModel::amplitude(double x, double z) const {
  const double c = weight(x, z);
  return c == 0.0 ? cplx(0.0) : c * inner_->amplitude(x, z);
}

double CutoffModel::z_scale(double x) const { return std::min(inner_->z_scale(x), w_ / 8.0); }

CollarGrid incoming_source(const CutoffModel& m, const BoundaryData& b, double lambda,
                           const CollarGrid& layout) {
  CollarGrid f = layout.empty_like();
  f.phase.reset();
  for (size_t j = 0; j < f.ny(); ++j) {
    const double z = f.periodic_y ? b.periodic_diff(f.y[j], m.y_c()) : f.y[j] - m.y_c();
    if (std::abs(z) >= 1.01 * m.half_width()) continue;
    double ph[3];
    m.phase(z, ph);
    for (size_t i = 0; i < f.nx(); ++i) {
      const double x = f.x[i];
      if (x >= 1.01 * m.x_cut()) continue;
      const cplx r = model_residual_at(m, b, lambda, x, z) * std::polar(1.0, ph[0] / x);
      f.at(i, j) = -std::conj(r);
    }
  }
  return f;
}

CollarGrid outgoing_part(const CollarGrid& g, double x_lo, double x_hi, double margin) {
  if (g.spacing != XSpacing::InverseUniform) fail(ErrorCode::InvalidInput, "outgoing filter needs an s-uniform grid");
  const size_t N = g.nx(), ny = g.ny();
  const double h = 1.0 / g.x.front() - 1.0 / g.x[1];  // rows ascend in x, so s descends
  const double s_a = std::max(1.0 / x_hi - margin, 1.0 / g.x.back());
  const double s_b = std::min(1.0 / x_lo + margin, 1.0 / g.x.front());
  CollarGrid out = g.empty_like();
  out.phase.reset();
  // Rows with s in [s_a, s_b], s ascending.
  std::vector<size_t> rows;
  for (size_t i = N; i-- > 0;)
    if (1.0 / g.x[i] >= s_a - 1e-12 && 1.0 / g.x[i] <= s_b + 1e-12) rows.push_back(i);
  const size_t L = rows.size();
  if (L < 16) fail(ErrorCode::InsufficientRange, "too few shells for the outgoing filter");
  size_t M = 1;
  while (M < 2 * L) M *= 2;
  CplxVec buf(M * ny, 0.0);
  // Tapers fill [s_a, 1/x_hi] and [1/x_lo, s_b]; either may be empty at the grid ends.
  const double in_lo = 1.0 / x_hi, in_hi = 1.0 / x_lo;
  const double tl = in_lo - s_a, tr = s_b - in_hi;
  RealVec wgt(L);
  std::vector<char> keep(L);
  for (size_t k = 0; k < L; ++k) {
    const double s = 1.0 / g.x[rows[k]];
    keep[k] = s >= in_lo * (1.0 - 1e-12) && s <= in_hi * (1.0 + 1e-12);
    wgt[k] = keep[k] ? 1.0
                     : (s < in_lo ? (tl > 0 ? smooth_step((s - s_a) / tl) : 0.0)
                                  : (tr > 0 ? smooth_step((s_b - s) / tr) : 0.0));
  }
  if (std::count(keep.begin(), keep.end(), 1) == 0)
    fail(ErrorCode::InsufficientRange, "no shells in the requested range");
  for (size_t j = 0; j < ny; ++j)
    for (size_t k = 0; k < L; ++k) buf[j * M + k] = wgt[k] * g.field(rows[k], j);
  auto* p = reinterpret_cast<fftw_complex*>(buf.data());
  const int len = int(M);
  fftw_plan fwd, bwd;
  {
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    fwd = fftw_plan_many_dft(1, &len, int(ny), p, nullptr, 1, len, p, nullptr, 1, len, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_many_dft(1, &len, int(ny), p, nullptr, 1, len, p, nullptr, 1, len, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(fwd);
  // Keep positive s-frequencies: mask rises smoothly over 0 < nu < nu_c.
  const double dnu = 2.0 * kPi / (double(M) * h), nu_c = 0.25;
  for (size_t j = 0; j < ny; ++j)
    for (size_t m = 0; m < M; ++m) {
      const double nu = (m <= M / 2 ? double(m) : double(m) - double(M)) * dnu;
      buf[j * M + m] *= smooth_step(nu / nu_c) / double(M);
    }
  fftw_execute(bwd);
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(bwd);
  for (size_t k = 0; k < L; ++k)
    if (keep[k])
      for (size_t j = 0; j < ny; ++j) out.at(rows[k], j) = buf[j * M + k];
  return out;
}

namespace {

double basis_half_width(const BoundaryData& b, const RadialPoint& q,
                        const std::vector<RadialPoint>& minima, const SMatrixOptions& o) {
  if (o.y_half_width > 0) return o.y_half_width;
  double w = 0.45 * b.circumference();
  for (const auto& p : minima)
    if (std::abs(p.crit.y_c - q.crit.y_c) > 1e-12)
      w = std::min(w, 0.5 * std::abs(b.periodic_diff(p.crit.y_c, q.crit.y_c)));
  return w;
}

std::vector<RadialPoint> outgoing_minima(const BoundaryData& b, double lambda) {
  std::vector<RadialPoint> out;
  for (const auto& q : radial_points(b, lambda))
    if (q.outgoing() && q.crit.kind == CritKind::Minimum) out.push_back(q);
  return out;
}

}  // namespace

std::vector<std::shared_ptr<const FieldModel>> smatrix_basis_models(
    const BoundaryData& b, double lambda, const SMatrixOptions& o, std::vector<SMatrixBasis>& basis) {
  if (o.j_s < 1) fail(ErrorCode::InvalidInput, "j_s must be positive");
  if (thresholds(b).classify(lambda) == EnergyRange::Transition)
    fail(ErrorCode::InvalidInput, "lambda is in a transition range");
  const auto minima = outgoing_minima(b, lambda);
  if (minima.empty()) fail(ErrorCode::InvalidInput, "no minimum below lambda");
  std::vector<std::shared_ptr<const FieldModel>> models;
  basis.clear();
  for (const auto& q : minima) {
    const double unit = 1.0 / std::sqrt(2.0 * q.nu_t);
    const double w = basis_half_width(b, q, minima, o);
    for (int j = 0; j < o.j_s; ++j) {
      std::shared_ptr<const FieldModel> inner;
      if (q.kind == RadialKind::Center) {
        auto e = center_modes(q, b, std::max(o.j_s, 12));
        e.gammas[j] = unit;
        inner = std::make_shared<CenterModel>(e);
      } else if (q.kind == RadialKind::SinkOrSource) {
        CplxVec c(j + 1, 0.0);
        c[j] = unit;
        auto e = sink_expansion(q, b, HermiteProfile{c, o.sink_scale}, 1.1 * w);
        inner = std::make_shared<SinkModel>(e, b);
      } else {
        fail(ErrorCode::InvalidInput, "minimum at the Hessian threshold");
      }
      models.push_back(std::make_shared<CutoffModel>(inner, o.x_cut, w));
      basis.push_back({q, j, std::string(q.kind == RadialKind::Center ? "center" : "sink") + "@" +
                                 std::to_string(q.crit.y_c) + ":" + std::to_string(j)});
    }
  }
  return models;
}

double unitarity_defect(const Eigen::MatrixXcd& S) {
  const Eigen::MatrixXcd D = S.adjoint() * S - Eigen::MatrixXcd::Identity(S.cols(), S.cols());
  return Eigen::JacobiSVD<Eigen::MatrixXcd>(D).singularValues()(0);
}

SMatrix assemble_smatrix(const BoundaryData& b, double lambda, const SMatrixOptions& o) {
  SMatrix S;
  S.lambda = lambda;
  auto models = smatrix_basis_models(b, lambda, o, S.basis);
  const CollarGrid layout = o.oracle.layout(b, lambda);
  std::vector<CollarGrid> fs;
  for (const auto& m : models)
    fs.push_back(incoming_source(static_cast<const CutoffModel&>(*m), b, lambda, layout));
  const auto sols = solve_batch(b, lambda, fs, o.oracle);

  const double x_lo = 1.3 * o.oracle.x_abs_value();
  const double x_hi = std::min(10.0 * x_lo, 0.5 * o.x_cut);
  const size_t n = S.basis.size();
  S.matrix = Eigen::MatrixXcd::Zero(n, n);
  S.residuals.resize(n);
  S.misfits.assign(n, 0.0);
  const auto minima = outgoing_minima(b, lambda);
  for (size_t col = 0; col < n; ++col) {
    S.residuals[col] = sols[col].residual;
    const CollarGrid filtered = outgoing_part(sols[col].field, x_lo, x_hi, o.filter_margin);
    size_t row = 0;
    for (const auto& q : minima) {
      ExtractOptions eo;
      eo.n_modes = std::max(9, o.j_s);
      eo.x_lo = x_lo;
      eo.x_hi = x_hi;
      eo.fit_tol = o.fit_tol;
      const double w = basis_half_width(b, q, minima, o);
      eo.sink_half_width = w;
      if (q.kind == RadialKind::SinkOrSource)
        eo.Y_max = std::min(10.0 * o.sink_scale, 0.9 * w / std::pow(x_hi, q.r1.real()));
      const ModeTrace t = extract_mode_trace(filtered, q, eo);
      S.misfits[col] = std::max(S.misfits[col], t.misfit);
      const double norm = std::sqrt(2.0 * q.nu_t);
      const CplxVec c = t.kind == TraceKind::Center ? t.gammas : hermite_coefficients(t, o.j_s, o.sink_scale);
      for (int k = 0; k < o.j_s; ++k) S.matrix(row + k, col) = norm * c.at(k);
      row += size_t(o.j_s);
    }
  }
  S.unitarity_defect = unitarity_defect(S.matrix);
  return S;
}

}  // namespace radscat
