#pragma once

#include <memory>
#include <string>
#include <vector>

#include "radscat/oracle.hpp"
#include "radscat/pairing.hpp"

namespace radscat {

// 0 for t <= 0, 1 for t >= 1, smooth in between.
double smooth_step(double t);

// chi(x) psi(z) times a model field: chi = 1 for x <= x_cut/2, 0 for
// x >= x_cut; psi = 1 for |z| <= w/2, 0 for |z| >= w.
class CutoffModel : public FieldModel {
 public:
  CutoffModel(std::shared_ptr<const FieldModel> inner, double x_cut, double w);
  double y_c() const override { return inner_->y_c(); }
  void phase(double z, double out[3]) const override;
  cplx amplitude(double x, double z) const override;
  double z_scale(double x) const override;
  double weight(double x, double z) const;
  double x_cut() const { return x_cut_; }
  double half_width() const { return w_; }

 private:
  std::shared_ptr<const FieldModel> inner_;
  double x_cut_, w_;
};

// Oracle settings for scattering runs: near-zero global absorption. The
// s-discretization error of the imposed incoming field feeds the output, so
// center runs want ppw 32.
inline OracleConfig smatrix_oracle_defaults() {
  OracleConfig c;
  c.x_min = 0.0025;
  c.eps = 1e-6;
  return c;
}

struct SMatrixOptions {
  OracleConfig oracle = smatrix_oracle_defaults();
  int j_s = 4;              // modes per minimum
  double sink_scale = 1.5;  // oscillator scale of the sink basis in Y
  double x_cut = 0.2;
  double y_half_width = 0.0;  // 0: from the geometry
  double fit_tol = 0.1;
  double filter_margin = 20.0;  // s-length of the tapers around the extraction shells
};

struct SMatrixBasis {
  RadialPoint q;
  int j = 0;
  std::string label;
};

struct SMatrix {
  double lambda = 0.0;
  std::vector<SMatrixBasis> basis;
  Eigen::MatrixXcd matrix;  // column = incoming basis mode, row = outgoing
  double unitarity_defect = 0.0;  // spectral norm of S*S - I
  RealVec residuals;              // oracle residual per column
  RealVec misfits;                // worst trace misfit per column
};

// Outgoing unit-norm basis fields at the minima (B(e, e) = 1).
std::vector<std::shared_ptr<const FieldModel>> smatrix_basis_models(
    const BoundaryData& b, double lambda, const SMatrixOptions& opts, std::vector<SMatrixBasis>& basis);

// Right-hand side -(P - lambda)(cutoff * conj(e)) on `layout`.
CollarGrid incoming_source(const CutoffModel& m, const BoundaryData& b, double lambda,
                           const CollarGrid& layout);

// Positive s-frequency part of an oracle field on the shells x in [x_lo, x_hi]
// (zero elsewhere). Tapers of s-length `margin` sit outside that range.
CollarGrid outgoing_part(const CollarGrid& g, double x_lo, double x_hi, double margin);

// Drives the oracle with each incoming basis field and reads the outgoing
// traces at every minimum.
SMatrix assemble_smatrix(const BoundaryData& b, double lambda, const SMatrixOptions& opts = {});

double unitarity_defect(const Eigen::MatrixXcd& S);

}  // namespace radscat
