#pragma once

#include <Eigen/Dense>

#include "radscat/classical.hpp"
#include "radscat/collar.hpp"

namespace radscat {

// Orthonormal Hermite functions psi_0 .. psi_{n-1} at t, by the stable
// three-term recurrence.
void hermite_functions(int n, double t, double* out);
RealVec hermite_functions(int n, double t);

// Bound sup |psi_j| <= kHermiteSup (Cramer's inequality).
inline constexpr double kHermiteSup = 1.0865 * 0.7511255444649425;

struct CenterExpansion {
  RadialPoint q;
  double alpha = 0.0;
  double v1 = 0.0;  // V1 at the critical point
  RealVec betas;    // alpha (2j + 1)
  CplxVec gammas;

  int j_max() const { return int(betas.size()); }
  double nu_t() const { return q.nu_t; }
  // v_j(Y) = exp(-i nu Y^2 / 4) alpha^{1/4} psi_j(sqrt(alpha) Y)
  cplx mode(int j, double Y) const;
  // Complex exponent of x carried by mode j: 1/4 + i (beta_j + V1) / (2 nu).
  cplx exponent(int j) const;
};

CenterExpansion center_modes(const RadialPoint& q, const BoundaryData& b, int j_max = 32);

// Q v - beta_j v in L^2(dY) with Q = D_Y^2 + (nu/2)(Y D_Y + D_Y Y) + (V0''/2) Y^2,
// applied by fourth-order differences of the sampled mode.
double center_eigen_residual(const CenterExpansion& e, const BoundaryData& b, int j,
                             double h = 1e-3);
// Gram matrix of the first n modes by trapezoid quadrature.
Eigen::MatrixXcd center_gram(const CenterExpansion& e, int n, double h = 1e-2);

class CenterModel : public FieldModel {
 public:
  explicit CenterModel(CenterExpansion e);
  double y_c() const override { return e_.q.crit.y_c; }
  void phase(double, double out[3]) const override;
  cplx amplitude(double x, double z) const override;
  double z_scale(double x) const override;
  const CenterExpansion& expansion() const { return e_; }

 private:
  CenterExpansion e_;
  int n_;  // last nonzero gamma + 1
};

// Truncated sum on the grid (amplitudes; phase nu_t recorded).
CollarGrid build_center_eigenfunction(const CenterExpansion& e, const CollarGrid& layout,
                                      const Tolerances& tol = default_tolerances());

}  // namespace radscat
