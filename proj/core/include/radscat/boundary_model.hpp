#pragma once

#include <string>
#include <vector>

#include "radscat/common.hpp"

namespace radscat {

struct FourierTerm {
  int k = 0;
  double c = 0.0;  // coefficient of cos(k theta)
  double s = 0.0;  // coefficient of sin(k theta)
};

// Real trigonometric polynomial in theta = y / L, evaluated in arclength y.
class FourierSeries {
 public:
  FourierSeries() = default;
  FourierSeries(std::vector<FourierTerm> terms, double L);

  double value(double y) const { return deriv(y, 0); }
  // n-th derivative with respect to arclength.
  double deriv(double y, int n) const;
  // Taylor coefficients V^{(m)}(y0)/m!, m = 0..order.
  RealVec taylor(double y0, int order) const;

  int max_mode() const;
  double mean() const;
  bool is_zero() const { return terms_.empty(); }
  double scale() const { return L_; }
  const std::vector<FourierTerm>& terms() const { return terms_; }

 private:
  std::vector<FourierTerm> terms_;  // merged, sorted by k, zero terms dropped
  double L_ = 1.0;
};

class BoundaryData {
 public:
  BoundaryData() = default;
  BoundaryData(std::vector<FourierTerm> v0, std::vector<FourierTerm> v1, double circumference);

  const FourierSeries& v0() const { return v0_; }
  const FourierSeries& v1() const { return v1_; }
  double circumference() const { return circumference_; }
  double L() const { return circumference_ / (2.0 * kPi); }

  // Reduce an arclength position to [0, circumference).
  double wrap(double y) const;
  // Signed periodic difference a - b reduced to (-circumference/2, circumference/2].
  double periodic_diff(double a, double b) const;

  BoundaryData translated(double dy) const;
  BoundaryData plus_constant(double c) const;

  static BoundaryData from_json_text(const std::string& text);
  std::string to_json_text() const;

 private:
  FourierSeries v0_, v1_;
  std::vector<FourierTerm> raw0_, raw1_;
  double circumference_ = 2.0 * kPi;
};

enum class CritKind { Minimum, Maximum };

struct CriticalPoint {
  double y_c = 0.0;
  CritKind kind = CritKind::Minimum;
  double value = 0.0;
  double hessian = 0.0;
  double v1 = 0.0;
};

enum class EnergyRange {
  BelowContinuum,
  NearMinimum,
  HessianRange,
  MixedRange,
  AboveThresholds,
  Transition,
};

const char* energy_range_name(EnergyRange r);

struct Thresholds {
  double kappa = 0.0;
  double K_sup = 0.0;
  RealVec cv;  // sorted critical values
  // (position of minimum, lambda_Hess) for every minimum, in position order.
  std::vector<std::pair<double, double>> hess;
  double hess_global = 0.0;  // lambda_Hess at the global minimum

  EnergyRange classify(double lambda, double tol = 1e-12) const;
  double distance_to_cv(double lambda) const;
};

std::vector<CriticalPoint> find_critical_points(const BoundaryData& b,
                                                const Tolerances& tol = default_tolerances());
Thresholds thresholds(const BoundaryData& b, const Tolerances& tol = default_tolerances());

}  // namespace radscat
