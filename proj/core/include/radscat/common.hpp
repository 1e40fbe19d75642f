#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace radscat {

using cplx = std::complex<double>;
using RealVec = std::vector<double>;
using CplxVec = std::vector<cplx>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

enum class ErrorCode {
  InvalidInput,
  NotMorse,
  NoConvergence,
  CriticalEnergy,
  EnergyDrift,
  WrongKind,
  UnresolvedConnection,
  ResonantObstruction,
  FoldDetected,
  NotCenter,
  TailTooLarge,
  MissingResonantC,
  GridTooCoarse,
  ResonantExponent,
  CharacteristicEscape,
  UnresolvedOscillation,
  MixedEnergy,
  SingularDiagonal,
  FormMismatch,
  ResolutionError,
  InsufficientRange,
  NoLimit,
};

const char* error_name(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode c, const std::string& msg) {
  throw Error(c, std::string(error_name(c)) + ": " + msg);
}

// Named tolerances. Defaults follow the build contract; the CLI can override
// any of them and echoes the full set into run manifests.
struct Tolerances {
  double morse_tol = 1e-8;
  double root_tol = 1e-12;
  double cv_tol = 1e-10;
  double hess_tol = 1e-12;
  double energy_tol = 1e-9;
  double capture_radius = 1e-4;
  double seed_eps = 1e-5;
  int n_seed = 64;
  double max_time = 1e3;
  double resonance_tol = 1e-9;
  double near_resonance = 1e-3;
  double jet_handoff = 1e-2;
  int n_jet = 8;
  double eik_tol = 1e-9;
  double fold_tol = 1e-6;
  int j_max = 32;
  double series_tol = 1e-10;
  double transport_tol = 1e-7;
  double flux_tol = 1e-3;
  double biorth_tol = 1e-8;
  double fit_tol = 1e-2;
  int j_s = 4;

  void validate() const;
};

const Tolerances& default_tolerances();

}  // namespace radscat
