#pragma once

#include <optional>

#include "radscat/center.hpp"
#include "radscat/legendrian.hpp"

namespace radscat {

// Oscillator-basis profile p(Y) = sum_k c_k psi_k(Y / scale) / sqrt(scale).
struct HermiteProfile {
  CplxVec coefs;
  double scale = 1.0;

  cplx operator()(double Y) const;
  bool is_zero() const;
};

struct SinkExpansion {
  RadialPoint q;
  cplx beta;            // r2/2 + i V1(y_c) / (2 nu)
  LegendrePhase phase;  // Phi'' = -nu r1 at y_c
  double r1 = 0.0, r2 = 0.0;
  HermiteProfile profile;  // u0 on the front face, Y = z / x^{r1}
  RealVec index_generators;  // {1, 1/r1, (2 r2 - 1)/r1, r2/r1}
  std::optional<double> resonant_c;
  int resonant_order = 0;  // M = 1/r1 when resonant

  bool resonant() const { return resonant_order > 0; }
  // Smallest correction exponent in x: r1 times the least nonzero index.
  // With V0 even and V1 odd-free about y_c the odd orders drop out.
  double first_gap(bool even_about_yc) const;
};

// Phase continued over [y_c - half_width, y_c + half_width] unless resonant
// (truncated jet only). A fold shortens the range.
SinkExpansion sink_expansion(const RadialPoint& q, const BoundaryData& b, HermiteProfile profile,
                             double half_width = 1.0,
                             const Tolerances& tol = default_tolerances());

// Phi, Phi', Phi'' of a Legendre phase at offset z; Phi'' from the eikonal
// equation outside the jet radius.
void phase_derivs(const LegendrePhase& ph, const BoundaryData& b, double z, double out[3]);

class SinkModel : public FieldModel {
 public:
  SinkModel(SinkExpansion e, BoundaryData b);
  double y_c() const override { return e_.q.crit.y_c; }
  void phase(double z, double out[3]) const override;
  cplx amplitude(double x, double z) const override;
  double z_scale(double x) const override;
  const SinkExpansion& expansion() const { return e_; }

 private:
  SinkExpansion e_;
  BoundaryData b_;
};

CollarGrid build_sink_eigenfunction(const SinkExpansion& e, const CollarGrid& layout);

// Leading term at a degenerate center (r1 = r2 = 1/2):
// u = exp(i Phi/x) x^beta W(log x, Y), Y = z / sqrt(x), where
// W = int exp(i Y eta) x^{i eta^2 / (2 nu)} ghat(eta) d eta is replaced by its
// stationary-phase value
// sqrt(2 pi nu / -log x) e^{-i pi/4} ghat(-nu Y / log x) e^{-i nu Y^2 / (2 log x)}.
struct ThresholdExpansion {
  RadialPoint q;
  cplx beta;  // 1/4 + i V1(y_c) / (2 nu)
  LegendrePhase phase;
  HermiteProfile ghat;  // Fourier-side profile
};

ThresholdExpansion threshold_expansion(const RadialPoint& q, const BoundaryData& b,
                                       HermiteProfile ghat, int n_jet = 12);

class ThresholdModel : public FieldModel {
 public:
  explicit ThresholdModel(ThresholdExpansion e) : e_(std::move(e)) {}
  double y_c() const override { return e_.q.crit.y_c; }
  void phase(double z, double out[3]) const override;
  cplx amplitude(double x, double z) const override;
  double z_scale(double x) const override;

 private:
  ThresholdExpansion e_;
};

// Requires the grid to reach |log x| >= 5.
CollarGrid build_threshold_eigenfunction(const ThresholdExpansion& e, const CollarGrid& layout);

}  // namespace radscat
