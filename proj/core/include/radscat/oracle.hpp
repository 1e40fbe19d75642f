#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "radscat/collar.hpp"

namespace radscat {

enum class OracleSolver { Direct, Krylov };

const char* oracle_solver_name(OracleSolver s);

// Finite-difference resolvent of P_model - lambda - i eps chi on the collar
// [x_min, x_max] x circle. The grid is uniform in s = 1/x (the oscillation
// e^{i nu/x} has constant wavelength there), Numerov in s, Fourier in y.
struct OracleConfig {
  size_t nx = 0;  // 0: smallest count meeting ppw at nu_max
  size_t ny = 256;
  double x_min = 1.0 / 300.0;
  double x_max = 1.0;
  double eps = -1.0;             // < 0: 1e-2 lambda
  double x_abs = 0.0;            // absorber active for x < x_abs; 0: 1.5 x_min
  double absorber_strength = 0;  // peak of the ramp; 0: max(lambda, 1)
  double ppw = 16.0;
  OracleSolver solver = OracleSolver::Direct;
  double solver_tol = 1e-10;
  int max_iter = 400;
  int restart = 80;
  size_t fmap_window = 64;  // s-samples per frequency-map window

  double eps_for(double lambda) const { return eps < 0 ? 1e-2 * lambda : eps; }
  double x_abs_value() const { return x_abs > 0 ? x_abs : 1.5 * x_min; }
  double strength_for(double lambda) const {
    return absorber_strength > 0 ? absorber_strength : std::max(lambda, 1.0);
  }
  size_t nx_for(const BoundaryData& b, double lambda) const;
  // Grid carrying right-hand sides and solutions.
  CollarGrid layout(const BoundaryData& b, double lambda) const;
  void validate(const BoundaryData& b, double lambda) const;
};

// Largest local frequency sqrt(lambda - V0) over the circle.
double nu_max(const BoundaryData& b, double lambda);

// Windowed-FFT estimate of d(phase)/ds along each y line, per s-window.
struct FrequencyMap {
  RealVec x;    // window centers, ascending
  RealVec y;
  RealVec nu;   // x-major
  RealVec amp;  // peak spectral amplitude, normalized by the window sum
  double at(size_t i, size_t j) const { return nu[i * y.size() + j]; }
  double amp_at(size_t i, size_t j) const { return amp[i * y.size() + j]; }
};

FrequencyMap frequency_map(const CollarGrid& g, size_t window);

struct OracleSolution {
  CollarGrid field;  // full field values
  double lambda = 0.0;
  double eps = 0.0;
  double x_abs = 0.0;
  std::string rhs;  // description
  double rhs_x_lo = 0.0, rhs_x_hi = 0.0;  // x-support of f (0, 0 if f = 0)
  double rhs_norm = 0.0;
  double residual = 0.0;  // discrete residual / rhs norm
  int iterations = 0;
  OracleSolver solver = OracleSolver::Direct;
  double y_tail = 0.0;  // energy fraction in the top eighth of y-modes, above the absorber
  FrequencyMap fmap;
};

// f on cfg.layout(b, lambda); full values, or amplitudes if f.phase is set.
// `boundary` holds Dirichlet data at x_max (default zero).
OracleSolution solve(const BoundaryData& b, double lambda, const CollarGrid& f,
                     const OracleConfig& cfg, const CplxVec& boundary = {});

// Several right-hand sides sharing one factorization; `boundaries` is empty
// or holds one (possibly empty) vector per right-hand side.
std::vector<OracleSolution> solve_batch(const BoundaryData& b, double lambda,
                                        const std::vector<CollarGrid>& fs, const OracleConfig& cfg,
                                        const std::vector<CplxVec>& boundaries = {});

struct DecayOptions {
  double half_width = 0.05;  // y-window around y*
  double x_lo = 0.0;         // 0: 1.25 x_abs
  double x_hi = 0.0;         // 0: lower edge of the rhs support, or x_max
};

struct DecayFit {
  SlopeFit fit;
  RealVec x, shell_max;
  bool noise_flag = false;  // shell maxima near rounding level
};

DecayFit measure_decay(const OracleSolution& sol, double y_star, const DecayOptions& = {});

struct EpsContinuation {
  RealVec eps;
  RealVec diffs;  // max probe difference between consecutive eps
  bool monotone = false;
  std::optional<std::string> warning;
  CollarGrid extrapolated;  // linear in eps from the last two solves
  std::vector<OracleSolution> solutions;
};

// Probe set: every `stride`-th grid point with x in [x_lo, x_hi]; zeros pick
// the physical region above the absorber.
struct ProbeSet {
  double x_lo = 0.0, x_hi = 0.0;
  size_t stride_x = 4, stride_y = 4;
};

EpsContinuation eps_continuation(const BoundaryData& b, double lambda, const CollarGrid& f,
                                 const OracleConfig& cfg, const RealVec& eps_list,
                                 const ProbeSet& probes = {});

}  // namespace radscat
