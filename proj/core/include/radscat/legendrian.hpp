#pragma once

#include <optional>
#include <vector>

#include "radscat/classical.hpp"

namespace radscat {

enum class ResonancePolicy { Throw, Truncate };

struct CurveSample {
  double y;     // offset from the radial point, z = y - y_c
  double phi;   // Phi
  double dphi;  // Phi' = mu
  double d2phi;
};

// Graph y -> (y, Phi(y), Phi'(y)) of a W-invariant curve through a radial
// point. Branch b has Phi''(y_c) = -nu_t * r_b.
struct LegendrePhase {
  RadialPoint base;
  int branch = 1;
  double r = 0.0;
  RealVec jet;  // Taylor coefficients of Phi in z = y - y_c
  double period = 2.0 * kPi;

  // Set when the jet recursion hit 1 - M r = 0 and was truncated at order M-1;
  // defect_coef is the y^M coefficient of Phi^2 + Phi'^2 + V0 - lambda.
  std::optional<int> resonant_order;
  double defect_coef = 0.0;

  std::vector<CurveSample> curve;  // ascending z, empty until continued
  double handoff = 0.0;
  bool fold_lo = false, fold_hi = false;

  double y_c() const { return base.crit.y_c; }
  // Offset of y from y_c, reduced periodically.
  double offset(double y) const;
  double jet_value(double z, int deriv = 0) const;
  // Value and derivative: jet inside the handoff radius, dense output outside.
  double value(double y) const;
  double deriv(double y) const;
  // Dense output from the continued curve only (no jet fallback).
  bool curve_eval(double z, double& phi, double& dphi) const;
  double z_min() const { return curve.empty() ? 0.0 : curve.front().y; }
  double z_max() const { return curve.empty() ? 0.0 : curve.back().y; }
};

double eikonal_residual(double phi, double dphi, double y, const BoundaryData& b, double lambda);

LegendrePhase phase_jet(const RadialPoint& q, const BoundaryData& b, int branch, int n_jet,
                        ResonancePolicy policy = ResonancePolicy::Throw,
                        const Tolerances& tol = default_tolerances());

struct ContinueOptions {
  double handoff = 1e-2;
  double step = 1e-3;
  double fold_tol = 1e-6;
  static ContinueOptions from(const Tolerances& t);
};

// Fill the curve over [y_lo, y_hi] (absolute arclength, must contain y_c).
LegendrePhase continue_phase(const LegendrePhase& phase, const BoundaryData& b, double y_lo,
                             double y_hi, const ContinueOptions& opts = {});

}  // namespace radscat
