#include "radscat/center.hpp"

#include <algorithm>
#include <cmath>

namespace radscat {

void hermite_functions(int n, double t, double* out) {
  if (n <= 0) return;
  out[0] = 0.7511255444649425 * std::exp(-0.5 * t * t);  // pi^{-1/4}
  if (n == 1) return;
  out[1] = std::sqrt(2.0) * t * out[0];
  for (int j = 1; j + 1 < n; ++j)
    out[j + 1] = std::sqrt(2.0 / (j + 1)) * t * out[j] - std::sqrt(double(j) / (j + 1)) * out[j - 1];
}

RealVec hermite_functions(int n, double t) {
  RealVec out(std::max(n, 0));
  hermite_functions(n, t, out.data());
  return out;
}

cplx CenterExpansion::mode(int j, double Y) const {
  RealVec psi = hermite_functions(j + 1, std::sqrt(alpha) * Y);
  return std::polar(std::pow(alpha, 0.25) * psi[j], -0.25 * q.nu_t * Y * Y);
}

cplx CenterExpansion::exponent(int j) const {
  return {0.25, (alpha * (2 * j + 1) + v1) / (2.0 * q.nu_t)};
}

CenterExpansion center_modes(const RadialPoint& q, const BoundaryData& b, int j_max) {
  if (q.kind != RadialKind::Center) fail(ErrorCode::NotCenter, "radial point is not a center");
  if (!q.outgoing()) fail(ErrorCode::InvalidInput, "center expansions are built at outgoing points");
  if (j_max < 1) fail(ErrorCode::InvalidInput, "j_max must be positive");
  CenterExpansion e;
  e.q = q;
  const double a2 = q.a() - 0.25 * q.nu_t * q.nu_t;
  if (!(a2 > 0)) fail(ErrorCode::NotCenter, "oscillator frequency is not real");
  e.alpha = std::sqrt(a2);
  e.v1 = b.v1().is_zero() ? 0.0 : b.v1().value(q.crit.y_c);
  e.betas.resize(j_max);
  for (int j = 0; j < j_max; ++j) e.betas[j] = e.alpha * (2 * j + 1);
  e.gammas.assign(j_max, 0.0);
  return e;
}

double center_eigen_residual(const CenterExpansion& e, const BoundaryData& b, int j, double h) {
  const double nu = e.q.nu_t, hess = b.v0().deriv(e.q.crit.y_c, 2);
  const double L = (std::sqrt(2.0 * j + 1) + 9.0) / std::sqrt(e.alpha);
  const int n = int(std::ceil(L / h));
  CplxVec v(2 * n + 5);
  auto Y = [&](int i) { return (i - n - 2) * h; };
  for (int i = 0; i < int(v.size()); ++i) v[i] = e.mode(j, Y(i));
  double acc = 0.0;
  for (int i = 2; i + 2 < int(v.size()); ++i) {
    const cplx d1 = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h);
    const cplx d2 = (-v[i - 2] + 16.0 * v[i - 1] - 30.0 * v[i] + 16.0 * v[i + 1] - v[i + 2]) / (12.0 * h * h);
    const double y = Y(i);
    const cplx qv = -d2 - kI * nu * y * d1 - 0.5 * kI * nu * v[i] + 0.5 * hess * y * y * v[i];
    acc += std::norm(qv - e.betas.at(j) * v[i]) * h;
  }
  return std::sqrt(acc);
}

Eigen::MatrixXcd center_gram(const CenterExpansion& e, int n, double h) {
  const double L = (std::sqrt(2.0 * n + 1) + 9.0) / std::sqrt(e.alpha);
  const int m = int(std::ceil(L / h));
  Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(n, n);
  Eigen::VectorXcd v(n);
  for (int i = -m; i <= m; ++i) {
    for (int j = 0; j < n; ++j) v(j) = e.mode(j, i * h);
    G += h * v * v.adjoint();
  }
  return G;  // G(j, k) = int v_j conj(v_k)
}

CenterModel::CenterModel(CenterExpansion e) : e_(std::move(e)) {
  n_ = 0;
  for (int j = 0; j < int(e_.gammas.size()); ++j)
    if (e_.gammas[j] != 0.0) n_ = j + 1;
  if (n_ > e_.j_max()) fail(ErrorCode::InvalidInput, "more coefficients than modes");
}

void CenterModel::phase(double, double out[3]) const {
  out[0] = e_.q.nu_t;
  out[1] = out[2] = 0.0;
}

cplx CenterModel::amplitude(double x, double z) const {
  if (n_ == 0) return 0.0;
  const double Y = z / std::sqrt(x);
  double psi[256];
  RealVec big;
  double* p = psi;
  if (n_ > 256) {
    big.resize(n_);
    p = big.data();
  }
  hermite_functions(n_, std::sqrt(e_.alpha) * Y, p);
  const double lx = std::log(x);
  cplx acc = 0.0;
  for (int j = 0; j < n_; ++j)
    if (e_.gammas[j] != 0.0) acc += e_.gammas[j] * std::exp(e_.exponent(j) * lx) * p[j];
  return acc * std::polar(std::pow(e_.alpha, 0.25), -0.25 * e_.q.nu_t * Y * Y);
}

double CenterModel::z_scale(double x) const {
  return std::sqrt(x / (e_.alpha * (n_ + 1))) / std::max(1.0, std::sqrt(e_.q.nu_t / e_.alpha));
}

CollarGrid build_center_eigenfunction(const CenterExpansion& e, const CollarGrid& layout,
                                      const Tolerances& tol) {
  double tail = 0.0;
  for (size_t j = e.betas.size(); j < e.gammas.size(); ++j) tail += std::abs(e.gammas[j]);
  tail *= kHermiteSup * std::pow(e.alpha, 0.25) * std::pow(layout.x.back(), 0.25);
  if (tail > tol.series_tol)
    fail(ErrorCode::TailTooLarge, "coefficients beyond j_max contribute up to " + std::to_string(tail));
  CenterExpansion t = e;
  t.gammas.resize(e.betas.size(), 0.0);
  CollarGrid g = layout.empty_like();
  g.b = layout.b;
  sample_model(CenterModel(t), g);
  return g;
}

}  // namespace radscat
