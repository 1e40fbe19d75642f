#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "radscat/boundary_model.hpp"

namespace radscat {

enum class XSpacing { LogUniform, InverseUniform, Custom };

const char* x_spacing_name(XSpacing s);

// Samples of a complex field on a polar collar {x_min <= x <= x_max} x Y.
// When `phase` is set the stored values are amplitudes a and the field is
// u = exp(i phase(y) / x) a.
struct CollarGrid {
  RealVec x;  // ascending
  RealVec y;  // arclength samples
  bool periodic_y = true;
  XSpacing spacing = XSpacing::LogUniform;
  CplxVec values;  // x-major, y fastest
  std::optional<RealVec> phase;
  BoundaryData b;
  double lambda = 0.0;

  size_t nx() const { return x.size(); }
  size_t ny() const { return y.size(); }
  cplx& at(size_t i, size_t j) { return values[i * y.size() + j]; }
  const cplx& at(size_t i, size_t j) const { return values[i * y.size() + j]; }
  // Full field value, phase factor applied.
  cplx field(size_t i, size_t j) const;
  double dy() const;

  static CollarGrid log_uniform(const BoundaryData& b, double lambda, double x_min, double x_max,
                                size_t nx, size_t ny);
  static CollarGrid inverse_uniform(const BoundaryData& b, double lambda, double x_min,
                                    double x_max, size_t nx, size_t ny);
  // Non-periodic window [y_lo, y_hi] including both ends.
  static CollarGrid windowed(const BoundaryData& b, double lambda, double x_min, double x_max,
                             size_t nx, double y_lo, double y_hi, size_t ny);
  // Same layout, values cleared.
  CollarGrid empty_like() const;

  void validate() const;
};

// Field block: one JSON header line, then little-endian f64 (re, im) pairs,
// row-major with y fastest.
void write_field_block(std::ostream& os, const CollarGrid& g);
CollarGrid read_field_block(std::istream& is);

// A field near a radial point u = exp(i phi(z)/x) a(x, z), z = y - y_c.
class FieldModel {
 public:
  virtual ~FieldModel() = default;
  virtual double y_c() const = 0;
  // phi, phi', phi'' at offset z.
  virtual void phase(double z, double out[3]) const = 0;
  virtual cplx amplitude(double x, double z) const = 0;
  // Length scale of z-variation at x; sets finite-difference steps.
  virtual double z_scale(double x) const = 0;
};

// exp(-i phi/x) (P_model - lambda) u at (x, z), amplitude derivatives by local
// sixth-order differences in s = 1/x and z.
cplx model_residual_at(const FieldModel& f, const BoundaryData& b, double lambda, double x,
                       double z);

// Fill grid values from a model (amplitudes, with the phase recorded).
void sample_model(const FieldModel& f, CollarGrid& g);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double std_err = 0.0;
  double band = 0.0;  // two standard errors
  int n = 0;
};

// Least squares of log v against log x over samples with x in [x_lo, x_hi].
SlopeFit fit_loglog(const RealVec& x, const RealVec& v, double x_lo, double x_hi);

struct ShellResidual {
  double x;
  double l2;   // (sum |r|^2 dy)^(1/2)
  double sup;
  double field_sup;
};

enum class ResidualNorm { L2, Sup };

struct ResidualReport {
  std::vector<ShellResidual> shells;
  SlopeFit fit;
  ResidualNorm norm = ResidualNorm::Sup;
};

// Grid route: fourth-order differences of the stored field on the grid
// itself. Only interior shells are reported.
ResidualReport residual(const CollarGrid& g, ResidualNorm norm = ResidualNorm::Sup,
                        double fit_lo = 0.0, double fit_hi = 1e300);

// Model route: evaluates the residual of `f` at the grid's sample points.
ResidualReport residual(const FieldModel& f, const CollarGrid& layout,
                        ResidualNorm norm = ResidualNorm::Sup, double fit_lo = 0.0,
                        double fit_hi = 1e300, int jobs = 1);

}  // namespace radscat
