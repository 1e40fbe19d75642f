#pragma once

#include <array>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "radscat/boundary_model.hpp"

namespace radscat {

struct PhasePoint {
  double y = 0.0;
  double nu = 0.0;
  double mu = 0.0;
};

using Tangent = std::array<double, 3>;

enum class RadialKind { Center, DegenerateCenter, SinkOrSource, Saddle };
enum class Sign { Outgoing, Incoming };

const char* radial_kind_name(RadialKind k);

// Covector e = dy_coef dy + dmu_coef dmu.
struct Covector {
  cplx dy_coef;
  cplx dmu_coef;
};

struct RadialPoint {
  CriticalPoint crit;
  Sign sign = Sign::Outgoing;
  double nu_t = 0.0;
  double lambda = 0.0;
  cplx r1, r2;
  RadialKind kind = RadialKind::Center;
  bool resonant = false;
  bool near_resonant = false;
  int resonance_order = 0;  // N with r2/r1 = N when resonant
  std::array<Covector, 2> eigvecs;

  double a() const { return 0.5 * crit.hessian; }
  PhasePoint point() const { return {crit.y_c, nu_t, 0.0}; }
  bool outgoing() const { return sign == Sign::Outgoing; }
  // Eigenvalues of the linearization restricted to the energy surface.
  cplx eigenvalue(int j) const { return -2.0 * nu_t * (j == 1 ? r1 : r2); }
};

Tangent vector_field(const PhasePoint& p, const BoundaryData& b);
double energy(const PhasePoint& p, const BoundaryData& b);

// Radial points over every critical point below lambda, outgoing first within
// each critical point, critical points in position order.
std::vector<RadialPoint> radial_points(const BoundaryData& b, double lambda,
                                       const Tolerances& tol = default_tolerances());
RadialPoint classify_point(const CriticalPoint& c, double lambda, Sign s,
                           const Tolerances& tol = default_tolerances());

enum class Direction { Forward, Backward };
enum class FlowStatus { Converged, LeftDomain, MaxTime };

const char* flow_status_name(FlowStatus s);

struct Sample {
  double t;
  PhasePoint p;
};

struct Bicharacteristic {
  std::vector<Sample> samples;  // ascending t
  std::optional<int> alpha_limit, omega_limit;  // indices into the radial point list
  FlowStatus status = FlowStatus::MaxTime;
  double max_energy_drift = 0.0;
};

struct FlowOptions {
  double energy_tol = 1e-9;
  double capture_radius = 1e-4;
  double max_time = 1e3;
  double step_tol = 1e-12;  // local error per unit time for step doubling
  double initial_step = 1e-2;
  bool record = true;
  static FlowOptions from(const Tolerances& t);
};

// Distance in (y, nu, mu) with y periodic.
double phase_distance(const PhasePoint& a, const PhasePoint& b, const BoundaryData& bd);

Bicharacteristic integrate(const PhasePoint& start, const BoundaryData& b, double lambda,
                           const std::vector<RadialPoint>& rps, Direction dir,
                           const FlowOptions& opts);

// Seeds on the energy surface leaving q along its unstable manifold.
std::vector<PhasePoint> unstable_directions(const RadialPoint& q, const BoundaryData& b,
                                            const Tolerances& tol = default_tolerances());
// Unit tangent (dy, dnu, dmu) of the unstable eigendirection of a saddle.
std::array<double, 3> unstable_tangent(const RadialPoint& q);

struct MorseEdge {
  int from, to;  // indices into MorseDiagram::nodes
  bool operator<(const MorseEdge& o) const {
    return from != o.from ? from < o.from : to < o.to;
  }
  bool operator==(const MorseEdge& o) const { return from == o.from && to == o.to; }
};

struct MorseDiagram {
  double lambda = 0.0;
  std::vector<RadialPoint> nodes;  // RP_+(lambda)
  std::vector<MorseEdge> edges;    // sorted
  double a_min = 0.0;
  std::vector<std::vector<int>> filtration;  // Gamma_1 ... Gamma_n
  std::vector<std::string> unresolved;       // seeds that exhausted max_time

  bool has_edge(int from, int to) const;
  std::string to_dot() const;
};

MorseDiagram morse_diagram(const BoundaryData& b, double lambda,
                           const Tolerances& tol = default_tolerances(), int jobs = 1);

// Random point of the energy surface: y uniform over the allowed region, then
// a uniform angle on the fibre circle nu^2 + mu^2 = lambda - V0(y).
PhasePoint random_energy_point(const BoundaryData& b, double lambda, std::mt19937_64& rng);

}  // namespace radscat
