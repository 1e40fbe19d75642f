#pragma once

#include <array>
#include <functional>
#include <optional>

#include "radscat/collar.hpp"
#include "radscat/legendrian.hpp"

namespace radscat {

enum class SaddleDirection { Outgoing, Incoming };
const char* saddle_direction_name(SaddleDirection d);

// c x^{beta + p + k r} y^m. Exponents are kept as integer pairs (p, k); r is
// shared by the whole series.
struct GenTerm {
  int p = 0;
  int k = 0;
  int m = 0;
  cplx c;
};

struct GenSeries {
  cplx beta;
  double r = 0.0;
  std::vector<GenTerm> terms;

  cplx exponent(const GenTerm& t) const { return beta + double(t.p) + double(t.k) * r; }
  cplx eval(double x, double y) const;
  const GenTerm* find(int p, int k, int m) const;
};

// P~0 = -2 nu (x^2 D_x + r y x D_y) acting termwise on the amplitude:
// x^{beta+tau} y^m -> 2 i nu (tau + r m) x^{beta+tau+1} y^m, with beta's own
// contribution removed (beta is the conjugation weight).
GenSeries apply_model_op(const GenSeries& s, double nu);

struct ConjugationData {
  int branch = 1;
  double r = 0.0;
  cplx beta;     // (1 - r)/2 + i V1(y_c) / (2 nu)
  CplxVec beta_jet;  // beta(y) = (Phi + Phi'')/(2 nu) + i V1(y)/(2 nu)
  CplxVec f_jet;     // f(y) = int_0^y (beta(t) - beta(0)) dt / t
  RealVec a_jet;     // a'/a = (Phi - nu)/Phi', a(0) = 1
  RealVec b_jet;     // (y b)'/(y b) = -r nu / Phi', b(0) = 1
};

ConjugationData conjugation_data(const LegendrePhase& ph, const BoundaryData& b, int order);

struct SaddleOptions {
  int m_max = 24;
  int n_jet = 30;
  double window = 0.2;  // |y - y_c| range the truncation is designed for
};

struct SaddleSeries {
  RadialPoint q;
  SaddleDirection direction = SaddleDirection::Outgoing;
  double r = 0.0;
  cplx beta;
  LegendrePhase phase;
  int order = 0;  // x-corrections kept, after any resonance truncation
  SaddleOptions opts;
  std::vector<GenSeries> models;  // v_n (outgoing) or w_n (incoming), n = 0..n_max
  ConjugationData conj;
  // (n, p, m) of the first resonant slot when the series was truncated there.
  std::optional<std::array<int, 3>> resonance;

  // Relative power of x between the leading residual and the first term left
  // unsolved.
  int residual_gap() const { return order + 1; }
};

SaddleSeries saddle_models(const RadialPoint& q, const BoundaryData& b, SaddleDirection dir,
                           int n_max, int order, const SaddleOptions& opts = {},
                           ResonancePolicy policy = ResonancePolicy::Throw,
                           const Tolerances& tol = default_tolerances());

// u = exp(i Phi/x) sum_n coeffs[n] v_n.
class SaddleModel : public FieldModel {
 public:
  SaddleModel(const SaddleSeries& s, CplxVec coeffs);
  double y_c() const override { return s_.q.crit.y_c; }
  void phase(double z, double out[3]) const override;
  cplx amplitude(double x, double z) const override;
  double z_scale(double) const override { return 0.05 * s_.opts.window; }

 private:
  SaddleSeries s_;
  CplxVec coeffs_;
};

CollarGrid build_saddle_eigenfunction(const SaddleSeries& s, const CplxVec& coeffs,
                                      const CollarGrid& layout);

struct TransportOptions {
  double panel = 0.25;  // max panel width in log t
  int interp_order = 6;
  double y_c = 0.0;  // characteristics scale offsets from y_c
};

// Solves T v = f with T = -2 nu (x d_x + r y d_y) along the characteristics
// y (t/x)^r:  v(x, y) = -(2 nu)^{-1} int_{x0}^{x} f(t, y (t/x)^r) dt/t + v0(y (x0/x)^r).
// y is the offset from opts.y_c; periodic grids wrap.
CollarGrid transport_solve(const CollarGrid& f, double r, double nu, double x0,
                           const std::function<cplx(double)>& v0, const TransportOptions& opts = {});

}  // namespace radscat
