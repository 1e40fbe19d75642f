#include "radscat/classical.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

namespace radscat {

const char* radial_kind_name(RadialKind k) {
  switch (k) {
    case RadialKind::Center: return "Center";
    case RadialKind::DegenerateCenter: return "DegenerateCenter";
    case RadialKind::SinkOrSource: return "SinkOrSource";
    case RadialKind::Saddle: return "Saddle";
  }
  return "?";
}

const char* flow_status_name(FlowStatus s) {
  switch (s) {
    case FlowStatus::Converged: return "converged";
    case FlowStatus::LeftDomain: return "left_domain";
    case FlowStatus::MaxTime: return "max_time";
  }
  return "?";
}

Tangent vector_field(const PhasePoint& p, const BoundaryData& b) {
  return {2.0 * p.mu, 2.0 * p.mu * p.mu, -(b.v0().deriv(p.y, 1) + 2.0 * p.nu * p.mu)};
}

double energy(const PhasePoint& p, const BoundaryData& b) {
  return p.nu * p.nu + p.mu * p.mu + b.v0().value(p.y);
}

RadialPoint classify_point(const CriticalPoint& c, double lambda, Sign s, const Tolerances& tol) {
  if (!(c.value < lambda)) fail(ErrorCode::InvalidInput, "critical value not below lambda");
  RadialPoint q;
  q.crit = c;
  q.sign = s;
  q.lambda = lambda;
  const double nu = std::sqrt(lambda - c.value);
  q.nu_t = s == Sign::Outgoing ? nu : -nu;
  const double a = 0.5 * c.hessian;
  const double ratio = a / (nu * nu);
  const double D = 0.25 - ratio;

  if (c.kind == CritKind::Maximum) {
    q.kind = RadialKind::Saddle;
    const double sd = std::sqrt(D);
    q.r1 = 0.5 - sd;
    q.r2 = 0.5 + sd;
  } else {
    const double lh = c.value + 2.0 * c.hessian;
    if (std::abs(lambda - lh) <= tol.hess_tol * std::max(1.0, std::abs(lh))) {
      q.kind = RadialKind::DegenerateCenter;
      q.r1 = q.r2 = 0.5;
    } else if (lambda < lh) {
      q.kind = RadialKind::Center;
      const double sd = std::sqrt(std::max(-D, 0.0));
      q.r1 = cplx(0.5, -sd);
      q.r2 = cplx(0.5, sd);
    } else {
      q.kind = RadialKind::SinkOrSource;
      const double sd = std::sqrt(std::max(D, 0.0));
      q.r1 = 0.5 - sd;
      q.r2 = 0.5 + sd;
      const double rr = q.r2.real() / q.r1.real();
      const double N = std::round(rr);
      if (N >= 1.0) {
        const double dist = std::abs(rr - N) / rr;
        q.resonant = dist <= tol.resonance_tol;
        q.near_resonant = !q.resonant && dist <= tol.near_resonance;
        q.resonance_order = q.resonant ? int(N) : 0;
      }
    }
  }
  for (int j = 0; j < 2; ++j) {
    const cplx r = j == 0 ? q.r1 : q.r2;
    q.eigvecs[j] = {q.nu_t * (1.0 - r), 1.0};
  }
  return q;
}

std::vector<RadialPoint> radial_points(const BoundaryData& b, double lambda, const Tolerances& tol) {
  const auto cps = find_critical_points(b, tol);
  for (const auto& c : cps)
    if (std::abs(lambda - c.value) < tol.cv_tol)
      fail(ErrorCode::CriticalEnergy, "lambda within cv_tol of critical value " +
                                          std::to_string(c.value));
  std::vector<RadialPoint> out;
  for (const auto& c : cps) {
    if (!(c.value < lambda)) continue;
    out.push_back(classify_point(c, lambda, Sign::Outgoing, tol));
    out.push_back(classify_point(c, lambda, Sign::Incoming, tol));
  }
  return out;
}

FlowOptions FlowOptions::from(const Tolerances& t) {
  FlowOptions o;
  o.energy_tol = t.energy_tol;
  o.capture_radius = t.capture_radius;
  o.max_time = t.max_time;
  return o;
}

double phase_distance(const PhasePoint& a, const PhasePoint& b, const BoundaryData& bd) {
  const double dy = bd.periodic_diff(a.y, b.y);
  return std::sqrt(dy * dy + (a.nu - b.nu) * (a.nu - b.nu) + (a.mu - b.mu) * (a.mu - b.mu));
}

namespace {

using State = std::array<double, 3>;

State rhs(const State& z, const BoundaryData& b, double sgn) {
  const auto w = vector_field({z[0], z[1], z[2]}, b);
  return {sgn * w[0], sgn * w[1], sgn * w[2]};
}

State rk4(const State& z, double h, const BoundaryData& b, double sgn) {
  auto add = [](const State& a, const State& k, double c) {
    return State{a[0] + c * k[0], a[1] + c * k[1], a[2] + c * k[2]};
  };
  const State k1 = rhs(z, b, sgn);
  const State k2 = rhs(add(z, k1, 0.5 * h), b, sgn);
  const State k3 = rhs(add(z, k2, 0.5 * h), b, sgn);
  const State k4 = rhs(add(z, k3, h), b, sgn);
  State out;
  for (int i = 0; i < 3; ++i) out[i] = z[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  return out;
}

}  // namespace

Bicharacteristic integrate(const PhasePoint& start, const BoundaryData& b, double lambda,
                           const std::vector<RadialPoint>& rps, Direction dir,
                           const FlowOptions& opts) {
  const double e0 = std::abs(energy(start, b) - lambda);
  if (e0 > opts.energy_tol)
    fail(ErrorCode::InvalidInput, "start point not on the energy surface");
  Bicharacteristic out;
  const double sgn = dir == Direction::Forward ? 1.0 : -1.0;
  out.max_energy_drift = e0;

  std::vector<char> armed(rps.size());
  for (size_t j = 0; j < rps.size(); ++j) {
    const double d = phase_distance(start, rps[j].point(), b);
    if (d <= 1e-14) {
      out.samples.push_back({0.0, start});
      if (dir == Direction::Forward) out.omega_limit = int(j);
      else out.alpha_limit = int(j);
      out.status = FlowStatus::Converged;
      return out;
    }
    armed[j] = d > opts.capture_radius;
  }

  std::vector<Sample> path;
  State z{start.y, start.nu, start.mu};
  double t = 0.0, h = opts.initial_step;
  if (opts.record) path.push_back({0.0, start});
  std::optional<int> limit;

  while (t < opts.max_time) {
    h = std::min(h, opts.max_time - t);
    const State full = rk4(z, h, b, sgn);
    const State half = rk4(rk4(z, 0.5 * h, b, sgn), 0.5 * h, b, sgn);
    double err = 0.0;
    for (int i = 0; i < 3; ++i) err = std::max(err, std::abs(half[i] - full[i]) / 15.0);
    if (!std::isfinite(err)) {
      out.status = FlowStatus::LeftDomain;
      break;
    }
    if (err > opts.step_tol && h > 1e-12) {
      h *= std::max(0.1, 0.9 * std::pow(opts.step_tol / err, 0.2));
      continue;
    }
    for (int i = 0; i < 3; ++i) z[i] = half[i] + (half[i] - full[i]) / 15.0;
    t += h;
    const PhasePoint p{b.wrap(z[0]), z[1], z[2]};
    z[0] = p.y;
    const double drift = std::abs(energy(p, b) - lambda);
    out.max_energy_drift = std::max(out.max_energy_drift, drift);
    if (drift > 10.0 * opts.energy_tol)
      fail(ErrorCode::EnergyDrift, "energy drift " + std::to_string(drift) + " at t=" +
                                       std::to_string(t));
    if (opts.record) path.push_back({t, p});
    for (size_t j = 0; j < rps.size(); ++j) {
      const double d = phase_distance(p, rps[j].point(), b);
      if (!armed[j]) {
        if (d > opts.capture_radius) armed[j] = 1;
      } else if (d <= opts.capture_radius) {
        limit = int(j);
        break;
      }
    }
    if (limit) {
      out.status = FlowStatus::Converged;
      break;
    }
    const double grow = err > 0 ? 0.9 * std::pow(opts.step_tol / err, 0.2) : 4.0;
    h *= std::min(4.0, std::max(0.2, grow));
    h = std::min(h, 1.0);
  }
  if (!limit && out.status != FlowStatus::LeftDomain) out.status = FlowStatus::MaxTime;
  if (!opts.record) path.push_back({t, {z[0], z[1], z[2]}});

  if (dir == Direction::Forward) {
    out.samples = std::move(path);
    out.omega_limit = limit;
  } else {
    std::reverse(path.begin(), path.end());
    for (auto& s : path) s.t = -s.t;
    out.samples = std::move(path);
    out.alpha_limit = limit;
  }
  return out;
}

std::array<double, 3> unstable_tangent(const RadialPoint& q) {
  if (q.kind != RadialKind::Saddle) fail(ErrorCode::WrongKind, "unstable tangent needs a saddle");
  // Linearization on (y, mu): d/dt (y, mu) = (2 mu, -2 a y - 2 nu_t mu); the
  // eigenvector for s = -2 nu_t r is (1, -nu_t r).
  const double s1 = q.eigenvalue(1).real();
  const double r = s1 > 0 ? q.r1.real() : q.r2.real();
  const double ty = 1.0, tmu = -q.nu_t * r;
  const double n = std::hypot(ty, tmu);
  return {ty / n, 0.0, tmu / n};
}

std::vector<PhasePoint> unstable_directions(const RadialPoint& q, const BoundaryData& b,
                                            const Tolerances& tol) {
  auto on_shell = [&](double y, double mu) {
    const double rem = q.lambda - b.v0().value(y) - mu * mu;
    const double nu = std::sqrt(std::max(rem, 0.0));
    return PhasePoint{b.wrap(y), q.nu_t > 0 ? nu : -nu, mu};
  };
  std::vector<PhasePoint> seeds;
  switch (q.kind) {
    case RadialKind::Center:
    case RadialKind::DegenerateCenter:
      fail(ErrorCode::WrongKind, "no hyperbolic splitting at a center");
    case RadialKind::Saddle: {
      const auto tng = unstable_tangent(q);
      for (double s : {1.0, -1.0})
        seeds.push_back(on_shell(q.crit.y_c + s * tol.seed_eps * tng[0], s * tol.seed_eps * tng[2]));
      break;
    }
    case RadialKind::SinkOrSource: {
      if (q.eigenvalue(1).real() <= 0) break;  // sink: nothing leaves
      for (int k = 0; k < tol.n_seed; ++k) {
        const double th = 2.0 * kPi * k / tol.n_seed;
        seeds.push_back(
            on_shell(q.crit.y_c + tol.seed_eps * std::cos(th), tol.seed_eps * std::sin(th)));
      }
      break;
    }
  }
  return seeds;
}

bool MorseDiagram::has_edge(int from, int to) const {
  return std::binary_search(edges.begin(), edges.end(), MorseEdge{from, to});
}

std::string MorseDiagram::to_dot() const {
  std::ostringstream os;
  os.precision(10);
  os << "digraph morse {\n  rankdir=LR;\n";
  for (size_t i = 0; i < nodes.size(); ++i) {
    const auto& q = nodes[i];
    os << "  q" << i << " [label=\"" << (q.crit.kind == CritKind::Minimum ? "min" : "max")
       << " " << radial_kind_name(q.kind) << "\\ny=" << q.crit.y_c << "\\nnu=" << q.nu_t
       << "\"];\n";
  }
  for (const auto& e : edges) os << "  q" << e.from << " -> q" << e.to << ";\n";
  os << "}\n";
  return os.str();
}

MorseDiagram morse_diagram(const BoundaryData& b, double lambda, const Tolerances& tol, int jobs) {
  MorseDiagram md;
  md.lambda = lambda;
  const auto all = radial_points(b, lambda, tol);
  std::vector<int> node_of(all.size(), -1);
  for (size_t j = 0; j < all.size(); ++j)
    if (all[j].outgoing()) {
      node_of[j] = int(md.nodes.size());
      md.nodes.push_back(all[j]);
    }
  if (md.nodes.empty()) return md;

  struct Task {
    int node;
    PhasePoint seed;
  };
  std::vector<Task> tasks;
  for (size_t i = 0; i < md.nodes.size(); ++i) {
    const auto& q = md.nodes[i];
    if (q.kind != RadialKind::Saddle) continue;
    for (const auto& s : unstable_directions(q, b, tol)) tasks.push_back({int(i), s});
  }

  FlowOptions fo = FlowOptions::from(tol);
  fo.record = false;
  std::vector<Bicharacteristic> results(tasks.size());
  auto run = [&](size_t k) {
    results[k] = integrate(tasks[k].seed, b, lambda, all, Direction::Forward, fo);
  };
  jobs = std::max(1, jobs);
  for (size_t start = 0; start < tasks.size(); start += size_t(jobs)) {
    std::vector<std::future<void>> fs;
    for (size_t k = start; k < std::min(tasks.size(), start + size_t(jobs)); ++k)
      fs.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, run, k));
    for (auto& f : fs) f.get();
  }
  for (size_t k = 0; k < tasks.size(); ++k) {
    const auto& r = results[k];
    if (!r.omega_limit) {
      std::ostringstream os;
      os << "seed from node " << tasks[k].node << " not captured within max_time";
      md.unresolved.push_back(os.str());
      continue;
    }
    const int to = node_of[*r.omega_limit];
    if (to >= 0 && to != tasks[k].node) md.edges.push_back({tasks[k].node, to});
  }
  std::sort(md.edges.begin(), md.edges.end());
  md.edges.erase(std::unique(md.edges.begin(), md.edges.end()), md.edges.end());

  md.a_min = INFINITY;
  for (const auto& q : md.nodes) md.a_min = std::min(md.a_min, q.nu_t);
  std::vector<int> order(md.nodes.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int c) { return md.nodes[a].nu_t > md.nodes[c].nu_t; });
  std::vector<int> acc;
  for (int i : order) {
    acc.push_back(i);
    md.filtration.push_back(acc);
  }
  return md;
}

PhasePoint random_energy_point(const BoundaryData& b, double lambda, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uy(0.0, b.circumference());
  std::uniform_real_distribution<double> ua(0.0, 2.0 * kPi);
  for (int tries = 0; tries < 100000; ++tries) {
    const double y = uy(rng);
    const double rem = lambda - b.v0().value(y);
    if (rem <= 0.0) continue;
    const double th = ua(rng), rho = std::sqrt(rem);
    return {y, rho * std::cos(th), rho * std::sin(th)};
  }
  fail(ErrorCode::InvalidInput, "energy surface is empty");
}

}  // namespace radscat
