#pragma once

#include <Eigen/Dense>
#include <vector>

#include "radscat/center.hpp"
#include "radscat/saddle.hpp"
#include "radscat/sink.hpp"

namespace radscat {

enum class PairingMethod { ModeFormula, FluxLimit };
const char* pairing_method_name(PairingMethod m);

struct PairingResult {
  cplx value;
  PairingMethod method = PairingMethod::ModeFormula;
  double estimated_error = 0.0;
};

enum class TraceKind { Center, Sink };

// Front-face data of an outgoing field at a minimum. Centers carry mode
// coefficients; sinks carry samples of the profile on Y = Y0 + k dY.
struct ModeTrace {
  RadialPoint q;
  TraceKind kind = TraceKind::Center;
  double weight = 0.0;  // sqrt(lambda - V0(y_c))
  CplxVec gammas;
  double Y0 = 0.0, dY = 0.0;
  CplxVec profile;
  double misfit = 0.0;  // relative mismatch of the fitted form

  double lambda() const { return q.lambda; }
  static ModeTrace center(const RadialPoint& q, CplxVec gammas);
  static ModeTrace sink(const RadialPoint& q, double Y0, double dY, CplxVec profile);
};

// 2 sum_q sqrt(lambda - V0) int M u1 conj(M u2) over the front face.
PairingResult pair_modes(const ModeTrace& t1, const ModeTrace& t2);
// Traces at several minima; radial points are matched by position.
PairingResult pair_modes(const std::vector<ModeTrace>& u1, const std::vector<ModeTrace>& u2);

struct FluxOptions {
  double r0 = 0.0;          // largest cutoff scale (0: smallest the grid admits); r0/2, r0/4 follow
  double window = 0.0;      // half-width of the y-window about y_c; 0 = none
  double y_c = 0.0;
  double abs_floor = 1e-12; // absolute error accepted when both fields are tiny
};

// -i lim_r <[P, chi_r] u1, u2>, chi_r(x) = chi(x/r), evaluated in the
// integrated-by-parts form -i int s chi_u (conj(u2) d_s u1 - u1 d_s conj(u2)) du dy
// and extrapolated to r = 0 (Richardson, order 1).
PairingResult pair_flux(const CollarGrid& f1, const CollarGrid& f2, const FluxOptions& opts = {},
                        const Tolerances& tol = default_tolerances());
// The flux at a single cutoff scale.
cplx flux_at(const CollarGrid& f1, const CollarGrid& f2, double r, const FluxOptions& opts = {});

struct ExtractOptions {
  int n_modes = 9;        // center modes projected
  double x_lo = 0.0;      // shells used for extrapolation; default: lowest decade
  double x_hi = 0.0;
  double Y_max = 6.0;     // sink profile range
  int n_Y = 241;
  double fit_tol = 1e-2;
  double sink_half_width = 1.0;
};

ModeTrace extract_mode_trace(const CollarGrid& field, const RadialPoint& q,
                             const ExtractOptions& opts = {},
                             const Tolerances& tol = default_tolerances());

// Projection of a sink trace onto scaled oscillator functions.
CplxVec hermite_coefficients(const ModeTrace& t, int n, double scale = 1.0);

struct Biorthogonalization {
  Eigen::MatrixXcd gram;          // G(n, m) = B(u_n, w_m)
  Eigen::MatrixXd spread;         // per-entry flux error estimates
  Eigen::MatrixXcd transform;     // w'_m = sum_k T(k, m) w_k
  Eigen::MatrixXcd renormalized;  // B(u_n, w'_m) from the upper triangle of G
  double lower_excess = 0.0;      // max over n > m of |G(n, m)| - spread(n, m)
};

// Inductive renormalization w'_m = (w_m - sum_{n<m} conj(G(n,m)) w'_n) / conj(G(m,m)),
// the conjugates because B is conjugate-linear in its second slot.
Biorthogonalization biorthogonalize(const Eigen::MatrixXcd& gram, const Eigen::MatrixXd& spread,
                                    const Tolerances& tol = default_tolerances());
// Gram matrix from built saddle fields on `layout`, then renormalization.
Biorthogonalization biorthogonalize(const SaddleSeries& outgoing, const SaddleSeries& incoming,
                                    const CollarGrid& layout, const FluxOptions& opts,
                                    const Tolerances& tol = default_tolerances());

}  // namespace radscat
