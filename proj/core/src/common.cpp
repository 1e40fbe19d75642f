#include "radscat/common.hpp"

namespace radscat {

const char* error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::NotMorse: return "NotMorse";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::CriticalEnergy: return "CriticalEnergy";
    case ErrorCode::EnergyDrift: return "EnergyDrift";
    case ErrorCode::WrongKind: return "WrongKind";
    case ErrorCode::UnresolvedConnection: return "UnresolvedConnection";
    case ErrorCode::ResonantObstruction: return "ResonantObstruction";
    case ErrorCode::FoldDetected: return "FoldDetected";
    case ErrorCode::NotCenter: return "NotCenter";
    case ErrorCode::TailTooLarge: return "TailTooLarge";
    case ErrorCode::MissingResonantC: return "MissingResonantC";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::ResonantExponent: return "ResonantExponent";
    case ErrorCode::CharacteristicEscape: return "CharacteristicEscape";
    case ErrorCode::UnresolvedOscillation: return "UnresolvedOscillation";
    case ErrorCode::MixedEnergy: return "MixedEnergy";
    case ErrorCode::SingularDiagonal: return "SingularDiagonal";
    case ErrorCode::FormMismatch: return "FormMismatch";
    case ErrorCode::ResolutionError: return "ResolutionError";
    case ErrorCode::InsufficientRange: return "InsufficientRange";
    case ErrorCode::NoLimit: return "NoLimit";
  }
  return "Unknown";
}

void Tolerances::validate() const {
  auto pos = [](double v, const char* name) {
    if (!(v > 0.0)) fail(ErrorCode::InvalidInput, std::string(name) + " must be positive");
  };
  pos(morse_tol, "morse_tol");
  pos(root_tol, "root_tol");
  pos(cv_tol, "cv_tol");
  pos(hess_tol, "hess_tol");
  pos(energy_tol, "energy_tol");
  pos(capture_radius, "capture_radius");
  pos(seed_eps, "seed_eps");
  pos(max_time, "max_time");
  pos(resonance_tol, "resonance_tol");
  pos(jet_handoff, "jet_handoff");
  pos(eik_tol, "eik_tol");
  pos(fold_tol, "fold_tol");
  pos(series_tol, "series_tol");
  pos(transport_tol, "transport_tol");
  pos(flux_tol, "flux_tol");
  pos(biorth_tol, "biorth_tol");
  pos(fit_tol, "fit_tol");
  if (n_seed < 1 || n_jet < 4 || j_max < 1 || j_s < 1)
    fail(ErrorCode::InvalidInput, "n_seed, n_jet (>=4), j_max, j_s must be positive");
}

const Tolerances& default_tolerances() {
  static const Tolerances t{};
  return t;
}

}  // namespace radscat
