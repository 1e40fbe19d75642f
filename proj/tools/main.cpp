#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "acceptance.hpp"
#include "parallel.hpp"
#include "radscat/smatrix.hpp"
#include "run.hpp"

using nlohmann::json;
using namespace radscat;
using cli::Run;

namespace {

struct ProblemArgs {
  std::string problem;
  double lambda = 0.0;
};

struct GridArgs {
  double x_min = 1e-3, x_max = 0.3;
  size_t nx = 512, ny = 256;
  double window = 0.0;  // y half-width about the radial point; 0: whole circle
  std::string format = "block";
};

const std::string kComplexHelp = "comma-separated complex numbers, each 're' or 're:im'";

bool parse_complex(const std::string& s, cplx& out) {
  try {
    size_t pos = 0;
    const auto colon = s.find(':');
    const double re = std::stod(s.substr(0, colon), &pos);
    if (pos != (colon == std::string::npos ? s.size() : colon)) return false;
    double im = 0.0;
    if (colon != std::string::npos) {
      im = std::stod(s.substr(colon + 1), &pos);
      if (pos != s.size() - colon - 1) return false;
    }
    out = cplx(re, im);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

const CLI::Validator kComplex(
    [](std::string& s) {
      cplx c;
      return parse_complex(s, c) ? std::string() : "not a complex number: " + s;
    },
    "COMPLEX");

CplxVec to_complex(const std::vector<std::string>& items) {
  CplxVec out;
  for (const auto& s : items) {
    cplx c;
    parse_complex(s, c);
    out.push_back(c);
  }
  return out;
}

json cjson(cplx c) { return json::array({c.real(), c.imag()}); }

json matrix_json(const Eigen::MatrixXcd& M) {
  json data = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r)
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
      data.push_back(M(r, c).real());
      data.push_back(M(r, c).imag());
    }
  return {{"rows", M.rows()}, {"cols", M.cols()}, {"layout", "row-major (re, im) pairs"}, {"data", data}};
}

json tolerances_json(const Tolerances& t) {
  return {{"morse_tol", t.morse_tol},       {"root_tol", t.root_tol},
          {"cv_tol", t.cv_tol},             {"hess_tol", t.hess_tol},
          {"energy_tol", t.energy_tol},     {"capture_radius", t.capture_radius},
          {"seed_eps", t.seed_eps},         {"n_seed", t.n_seed},
          {"max_time", t.max_time},         {"resonance_tol", t.resonance_tol},
          {"near_resonance", t.near_resonance}, {"jet_handoff", t.jet_handoff},
          {"n_jet", t.n_jet},               {"eik_tol", t.eik_tol},
          {"fold_tol", t.fold_tol},         {"j_max", t.j_max},
          {"series_tol", t.series_tol},     {"transport_tol", t.transport_tol},
          {"flux_tol", t.flux_tol},         {"biorth_tol", t.biorth_tol},
          {"fit_tol", t.fit_tol},           {"j_s", t.j_s}};
}

void add_tolerance_options(CLI::App& app, Tolerances& t) {
  auto* g = app.add_option_group("Tolerances");
  g->add_option("--morse-tol", t.morse_tol);
  g->add_option("--root-tol", t.root_tol);
  g->add_option("--cv-tol", t.cv_tol);
  g->add_option("--hess-tol", t.hess_tol);
  g->add_option("--energy-tol", t.energy_tol);
  g->add_option("--capture-radius", t.capture_radius);
  g->add_option("--seed-eps", t.seed_eps);
  g->add_option("--n-seed", t.n_seed);
  g->add_option("--max-time", t.max_time);
  g->add_option("--resonance-tol", t.resonance_tol);
  g->add_option("--near-resonance", t.near_resonance);
  g->add_option("--jet-handoff", t.jet_handoff);
  g->add_option("--n-jet", t.n_jet);
  g->add_option("--eik-tol", t.eik_tol);
  g->add_option("--fold-tol", t.fold_tol);
  g->add_option("--j-max", t.j_max);
  g->add_option("--series-tol", t.series_tol);
  g->add_option("--transport-tol", t.transport_tol);
  g->add_option("--flux-tol", t.flux_tol);
  g->add_option("--biorth-tol", t.biorth_tol);
  g->add_option("--fit-tol", t.fit_tol);
  g->add_option("--j-s", t.j_s);
}

void add_problem(CLI::App* sc, ProblemArgs& p) {
  sc->add_option("--problem", p.problem, "problem JSON {v0, v1, circumference}")
      ->required()
      ->check(CLI::ExistingFile);
  sc->add_option("--lambda", p.lambda, "energy")->required();
}

void add_grid(CLI::App* sc, GridArgs& g, double window) {
  g.window = window;
  sc->add_option("--x-min", g.x_min)->check(CLI::PositiveNumber);
  sc->add_option("--x-max", g.x_max)->check(CLI::PositiveNumber);
  sc->add_option("--nx", g.nx)->check(CLI::Range(8, 1 << 20));
  sc->add_option("--ny", g.ny)->check(CLI::Range(8, 1 << 20));
  sc->add_option("--window", g.window, "y half-width about the radial point; 0 = whole circle");
  sc->add_option("--format", g.format, "field output")->check(CLI::IsMember({"block", "csv"}));
}

void add_oracle_options(CLI::App* sc, OracleConfig& c) {
  sc->add_option("--nx", c.nx, "0: from --ppw");
  sc->add_option("--ny", c.ny)->check(CLI::Range(8, 1 << 16));
  sc->add_option("--x-min", c.x_min)->check(CLI::PositiveNumber);
  sc->add_option("--x-max", c.x_max)->check(CLI::PositiveNumber);
  sc->add_option("--eps", c.eps, "global absorption; < 0: 1e-2 lambda");
  sc->add_option("--x-abs", c.x_abs, "absorber edge; 0: 1.5 x_min");
  sc->add_option("--absorber", c.absorber_strength, "absorber peak; 0: max(lambda, 1)");
  sc->add_option("--ppw", c.ppw, "points per wavelength in s");
  sc->add_option("--solver", c.solver, "direct or krylov")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, OracleSolver>{{"direct", OracleSolver::Direct}, {"krylov", OracleSolver::Krylov}},
          CLI::ignore_case));
  sc->add_option("--solver-tol", c.solver_tol);
  sc->add_option("--max-iter", c.max_iter);
  sc->add_option("--restart", c.restart);
  sc->add_option("--fmap-window", c.fmap_window);
}

BoundaryData load_problem(Run& run, const std::string& path) {
  return BoundaryData::from_json_text(run.read_input(path));
}

CollarGrid load_field(Run& run, const std::string& path) {
  std::istringstream in(run.read_input(path));
  return read_field_block(in);
}

// Radial point by index in the classify listing, or the first outgoing one
// whose kind passes `want`.
RadialPoint pick(const BoundaryData& b, double lambda, int at, const Tolerances& tol,
                 const std::function<bool(const RadialPoint&)>& want, const std::string& what) {
  const auto rps = radial_points(b, lambda, tol);
  if (at >= 0) {
    if (size_t(at) >= rps.size())
      fail(ErrorCode::InvalidInput, "--at " + std::to_string(at) + " but only " + std::to_string(rps.size()) +
                                        " radial points");
    if (!want(rps[size_t(at)])) fail(ErrorCode::WrongKind, "radial point " + std::to_string(at) + " is not " + what);
    return rps[size_t(at)];
  }
  for (const auto& q : rps)
    if (q.outgoing() && want(q)) return q;
  fail(ErrorCode::WrongKind, "no outgoing radial point is " + what + " at this energy");
}

json point_json(const RadialPoint& q) {
  return {{"y", q.crit.y_c},
          {"critical", q.crit.kind == CritKind::Minimum ? "minimum" : "maximum"},
          {"sign", q.outgoing() ? "outgoing" : "incoming"},
          {"nu", q.nu_t},
          {"kind", radial_kind_name(q.kind)},
          {"r1", q.r1.real()},
          {"r2", q.r2.real()},
          {"r_im", q.r1.imag()},
          {"resonant", q.resonant},
          {"near_resonant", q.near_resonant},
          {"resonance_order", q.resonance_order}};
}

CollarGrid layout_for(const BoundaryData& b, double lambda, const GridArgs& g, double y_c) {
  if (g.window > 0)
    return CollarGrid::windowed(b, lambda, g.x_min, g.x_max, g.nx, y_c - g.window, y_c + g.window, g.ny);
  return CollarGrid::log_uniform(b, lambda, g.x_min, g.x_max, g.nx, g.ny);
}

void write_field(Run& run, const CollarGrid& f, const std::string& format, const std::string& stem) {
  if (format == "block") {
    std::ostringstream os;
    write_field_block(os, f);
    run.write(stem + ".bin", os.str());
    return;
  }
  std::string csv = "x,y,re,im\n";
  for (size_t i = 0; i < f.nx(); ++i)
    for (size_t j = 0; j < f.ny(); ++j) {
      const cplx u = f.field(i, j);
      csv += cli::csv_num(f.x[i]) + "," + cli::csv_num(f.y[j]) + "," + cli::csv_num(u.real()) + "," +
             cli::csv_num(u.imag()) + "\n";
    }
  run.write(stem + ".csv", csv);
}

json residual_json(const ResidualReport& r) {
  return {{"slope", r.fit.slope}, {"intercept", r.fit.intercept}, {"std_err", r.fit.std_err},
          {"band", r.fit.band},   {"n", r.fit.n},                  {"norm", r.norm == ResidualNorm::Sup ? "sup" : "l2"}};
}

void write_residual(Run& run, const ResidualReport& r, const std::string& stem) {
  std::string csv = "x,l2,sup,field_sup\n";
  for (const auto& s : r.shells)
    csv += cli::csv_num(s.x) + "," + cli::csv_num(s.l2) + "," + cli::csv_num(s.sup) + "," +
           cli::csv_num(s.field_sup) + "\n";
  run.write(stem + ".csv", csv);
  run.write(stem + ".gp", cli::gnuplot_script("residual by shell", stem + ".png",
                                              "set logscale xy\nset xlabel 'x'\n"
                                              "plot '" + stem + ".csv' using 1:3 with linespoints, '' using 1:2 "
                                              "with linespoints\n"));
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"radscat: radial-point scattering numerics on the boundary circle"};
  app.option_defaults()->always_capture_default();
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file; flags override it");
  std::string out_dir = ".";
  int jobs = 1;
  Tolerances tol = default_tolerances();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  add_tolerance_options(app, tol);

  std::vector<std::pair<CLI::App*, std::function<void(Run&)>>> handlers;
  auto command = [&](CLI::App* sc, std::function<void(Run&)> fn) { handlers.emplace_back(sc, std::move(fn)); };

  // classify
  ProblemArgs cp;
  auto* classify = app.add_subcommand("classify", "radial points and thresholds at one energy");
  add_problem(classify, cp);
  command(classify, [&](Run& run) {
    const auto b = load_problem(run, cp.problem);
    const auto th = thresholds(b, tol);
    const auto rps = radial_points(b, cp.lambda, tol);
    json pts = json::array();
    for (size_t i = 0; i < rps.size(); ++i) {
      auto p = point_json(rps[i]);
      p["index"] = i;
      pts.push_back(p);
    }
    json hess = json::array();
    for (const auto& [y, l] : th.hess) hess.push_back({{"y", y}, {"lambda_hess", l}});
    const json j = {{"schema", "radscat.classify/1"},
                    {"lambda", cp.lambda},
                    {"energy_range", energy_range_name(th.classify(cp.lambda))},
                    {"thresholds", {{"kappa", th.kappa}, {"K", th.K_sup}, {"critical_values", th.cv}, {"hess", hess}}},
                    {"radial_points", pts}};
    run.write_json("classify.json", j);
    print(j);
  });

  // flow
  ProblemArgs fp;
  double f_y = 0.0, f_mu = 0.0;
  int f_sign = -1, f_random = 0;
  unsigned long long f_seed = 1;
  std::string f_dir = "forward";
  auto* flow = app.add_subcommand("flow", "integrate the boundary flow on the energy surface");
  add_problem(flow, fp);
  flow->add_option("--y", f_y, "start position");
  flow->add_option("--mu", f_mu, "start fibre momentum");
  flow->add_option("--nu-sign", f_sign, "sign of nu at the start")->check(CLI::IsMember({-1, 1}));
  flow->add_option("--direction", f_dir)->check(CLI::IsMember({"forward", "backward"}));
  flow->add_option("--random", f_random, "number of random starts instead of one")->check(CLI::NonNegativeNumber);
  flow->add_option("--seed", f_seed);
  command(flow, [&](Run& run) {
    const auto b = load_problem(run, fp.problem);
    const auto rps = radial_points(b, fp.lambda, tol);
    const Direction dir = f_dir == "forward" ? Direction::Forward : Direction::Backward;
    FlowOptions fo = FlowOptions::from(tol);
    auto limit = [&](const std::optional<int>& k) -> json {
      if (!k) return nullptr;
      return {{"index", *k}, {"y", rps[size_t(*k)].crit.y_c}, {"nu", rps[size_t(*k)].nu_t},
              {"kind", radial_kind_name(rps[size_t(*k)].kind)}};
    };
    if (f_random > 0) {
      std::mt19937_64 rng(f_seed);
      std::vector<PhasePoint> starts(static_cast<size_t>(f_random));
      for (auto& p : starts) p = random_energy_point(b, fp.lambda, rng);
      fo.record = false;
      std::vector<Bicharacteristic> res(starts.size());
      tools::parallel_for(starts.size(), jobs, [&](size_t i) {
        res[i] = integrate(starts[i], b, fp.lambda, rps, dir, fo);
      });
      std::string csv = "i,y,nu,mu,status,limit,energy_drift\n";
      size_t captured = 0;
      double drift = 0.0;
      std::map<int, size_t> counts;
      for (size_t i = 0; i < res.size(); ++i) {
        const auto& lim = dir == Direction::Forward ? res[i].omega_limit : res[i].alpha_limit;
        if (lim) ++captured, ++counts[*lim];
        drift = std::max(drift, res[i].max_energy_drift);
        csv += std::to_string(i) + "," + cli::csv_num(starts[i].y) + "," + cli::csv_num(starts[i].nu) + "," +
               cli::csv_num(starts[i].mu) + "," + flow_status_name(res[i].status) + "," +
               (lim ? std::to_string(*lim) : "") + "," + cli::csv_num(res[i].max_energy_drift) + "\n";
      }
      json lims = json::array();
      for (const auto& [k, n] : counts) lims.push_back({{"limit", limit(k)}, {"count", n}});
      const json j = {{"schema", "radscat.flow-sweep/1"}, {"lambda", fp.lambda}, {"direction", f_dir},
                      {"starts", res.size()}, {"seed", f_seed}, {"captured_fraction", double(captured) / double(res.size())},
                      {"max_energy_drift", drift}, {"limits", lims}};
      run.write("flow_sweep.csv", csv);
      run.write_json("flow.json", j);
      print(j);
      return;
    }
    const double nu2 = fp.lambda - b.v0().value(f_y) - f_mu * f_mu;
    if (nu2 < 0) fail(ErrorCode::InvalidInput, "start is not on the energy surface (nu^2 < 0)");
    const PhasePoint p0{f_y, f_sign * std::sqrt(nu2), f_mu};
    const auto bc = integrate(p0, b, fp.lambda, rps, dir, fo);
    std::string csv = "t,y,nu,mu,energy_error\n";
    for (const auto& s : bc.samples)
      csv += cli::csv_num(s.t) + "," + cli::csv_num(s.p.y) + "," + cli::csv_num(s.p.nu) + "," +
             cli::csv_num(s.p.mu) + "," + cli::csv_num(energy(s.p, b) - fp.lambda) + "\n";
    const json j = {{"schema", "radscat.flow/1"},
                    {"lambda", fp.lambda},
                    {"start", {{"y", p0.y}, {"nu", p0.nu}, {"mu", p0.mu}}},
                    {"direction", f_dir},
                    {"status", flow_status_name(bc.status)},
                    {"alpha_limit", limit(bc.alpha_limit)},
                    {"omega_limit", limit(bc.omega_limit)},
                    {"max_energy_drift", bc.max_energy_drift},
                    {"samples", bc.samples.size()}};
    run.write("flow.csv", csv);
    run.write("flow.gp", cli::gnuplot_script("bicharacteristic", "flow.png",
                                             "set xlabel 'y'\nset ylabel 'nu'\n"
                                             "plot 'flow.csv' using 2:3 with lines\n"));
    run.write_json("flow.json", j);
    print(j);
  });

  // morse
  ProblemArgs mp;
  auto* morse = app.add_subcommand("morse", "flow graph between outgoing radial points (DOT)");
  add_problem(morse, mp);
  command(morse, [&](Run& run) {
    const auto b = load_problem(run, mp.problem);
    const auto md = morse_diagram(b, mp.lambda, tol, jobs);
    json nodes = json::array(), edges = json::array();
    for (size_t i = 0; i < md.nodes.size(); ++i) {
      auto p = point_json(md.nodes[i]);
      p["index"] = i;
      nodes.push_back(p);
    }
    for (const auto& e : md.edges) edges.push_back({e.from, e.to});
    const json j = {{"schema", "radscat.morse/1"}, {"lambda", md.lambda}, {"nodes", nodes}, {"edges", edges},
                    {"a_min", md.a_min}, {"filtration", md.filtration}, {"unresolved", md.unresolved}};
    const std::string dot = md.to_dot();
    run.write("morse.dot", dot);
    run.write_json("morse.json", j);
    std::cout << dot;
  });

  // eikonal
  ProblemArgs ep;
  int e_at = -1, e_branch = 1, e_samples = 1001;
  double e_half = 0.5;
  auto* eik = app.add_subcommand("eikonal", "Legendre phase through a sink or saddle");
  add_problem(eik, ep);
  eik->add_option("--at", e_at, "radial point index from classify; default: first outgoing non-center");
  eik->add_option("--branch", e_branch, "1: Phi'' = -nu r1, 2: -nu r2")->check(CLI::IsMember({1, 2}));
  eik->add_option("--half-width", e_half, "continue over |y - y_c| <= half-width")->check(CLI::PositiveNumber);
  eik->add_option("--samples", e_samples)->check(CLI::Range(2, 1 << 24));
  command(eik, [&](Run& run) {
    const auto b = load_problem(run, ep.problem);
    const auto q = pick(b, ep.lambda, e_at, tol,
                        [](const RadialPoint& p) {
                          return p.kind == RadialKind::SinkOrSource || p.kind == RadialKind::Saddle;
                        },
                        "a sink/source or saddle");
    const auto jet = phase_jet(q, b, e_branch, tol.n_jet, ResonancePolicy::Throw, tol);
    const double yc = q.crit.y_c;
    const auto ph = continue_phase(jet, b, yc - e_half, yc + e_half, ContinueOptions::from(tol));
    std::string csv = "y,Phi,dPhi,residual\n";
    double worst = 0.0;
    for (int i = 0; i < e_samples; ++i) {
      const double z = ph.z_min() + (ph.z_max() - ph.z_min()) * i / double(e_samples - 1);
      const double phi = ph.value(yc + z), dphi = ph.deriv(yc + z);
      const double res = eikonal_residual(phi, dphi, yc + z, b, ep.lambda);
      worst = std::max(worst, std::abs(res));
      csv += cli::csv_num(yc + z) + "," + cli::csv_num(phi) + "," + cli::csv_num(dphi) + "," + cli::csv_num(res) +
             "\n";
    }
    double d[3];
    phase_derivs(ph, b, 0.0, d);
    const json j = {{"schema", "radscat.eikonal/1"},
                    {"lambda", ep.lambda},
                    {"radial_point", point_json(q)},
                    {"branch", e_branch},
                    {"r", ph.r},
                    {"d2phi_at_yc", d[2]},
                    {"predicted_d2phi", -q.nu_t * ph.r},
                    {"y_range", {yc + ph.z_min(), yc + ph.z_max()}},
                    {"fold_lo", ph.fold_lo},
                    {"fold_hi", ph.fold_hi},
                    {"max_residual", worst},
                    {"jet", ph.jet}};
    run.write("eikonal.csv", csv);
    run.write("eikonal.gp", cli::gnuplot_script("Legendre phase", "eikonal.png",
                                                "set xlabel 'y'\n"
                                                "plot 'eikonal.csv' using 1:2 with lines, '' using 1:3 with lines\n"));
    run.write_json("eikonal.json", j);
    print(j);
  });

  // expand
  auto* expand = app.add_subcommand("expand", "build a microlocal eigenfunction on a collar grid");
  expand->require_subcommand(1);
  struct ExpandArgs {
    ProblemArgs p;
    GridArgs g;
    int at = -1;
    std::vector<std::string> coeffs{"1"};
    bool residual = false;
    double fit_lo = 1e-3, fit_hi = 1e-1;
  };
  auto add_expand = [&](CLI::App* sc, ExpandArgs& a, double window) {
    add_problem(sc, a.p);
    add_grid(sc, a.g, window);
    sc->add_option("--at", a.at, "radial point index from classify");
    sc->add_option("--coeffs", a.coeffs, kComplexHelp)->delimiter(',')->check(kComplex);
    sc->add_flag("--residual", a.residual, "also fit the model-route residual");
    sc->add_option("--fit-lo", a.fit_lo);
    sc->add_option("--fit-hi", a.fit_hi);
  };
  auto finish_expand = [&](Run& run, const ExpandArgs& a, const FieldModel* model, const CollarGrid& f, json j) {
    write_field(run, f, a.g.format, "field");
    if (a.residual) {
      const auto rep = residual(*model, f, ResidualNorm::Sup, a.fit_lo, a.fit_hi, jobs);
      write_residual(run, rep, "residual");
      j["residual"] = residual_json(rep);
    }
    j["grid"] = {{"nx", f.nx()}, {"ny", f.ny()}, {"x_min", f.x.front()}, {"x_max", f.x.back()},
                 {"y_min", f.y.front()}, {"y_max", f.y.back()}, {"periodic", f.periodic_y},
                 {"format", a.g.format}};
    run.write_json("expand.json", j);
    print(j);
  };

  ExpandArgs xc;
  auto* x_center = expand->add_subcommand("center", "center modes below lambda_Hess");
  add_expand(x_center, xc, 0.0);
  command(x_center, [&](Run& run) {
    const auto b = load_problem(run, xc.p.problem);
    const auto q = pick(b, xc.p.lambda, xc.at, tol, [](const RadialPoint& p) { return p.kind == RadialKind::Center; },
                        "a center");
    auto e = center_modes(q, b, tol.j_max);
    const auto g = to_complex(xc.coeffs);
    if (int(g.size()) > e.j_max()) fail(ErrorCode::InvalidInput, "more coefficients than --j-max");
    std::fill(e.gammas.begin(), e.gammas.end(), 0.0);
    std::copy(g.begin(), g.end(), e.gammas.begin());
    const auto f = build_center_eigenfunction(e, layout_for(b, xc.p.lambda, xc.g, q.crit.y_c), tol);
    json ex = json::array();
    for (size_t k = 0; k < g.size(); ++k) ex.push_back(cjson(e.exponent(int(k))));
    const CenterModel model(e);
    finish_expand(run, xc, &model, f,
                  {{"schema", "radscat.expand/1"}, {"kind", "center"}, {"lambda", xc.p.lambda},
                   {"radial_point", point_json(q)}, {"alpha", e.alpha}, {"exponents", ex}});
  });

  ExpandArgs xs;
  double s_scale = 1.0, s_half = 1.0;
  auto* x_sink = expand->add_subcommand("sink", "sink profile above lambda_Hess");
  add_expand(x_sink, xs, 0.9);
  x_sink->add_option("--scale", s_scale, "oscillator scale of the profile in Y")->check(CLI::PositiveNumber);
  x_sink->add_option("--half-width", s_half, "phase continuation half-width")->check(CLI::PositiveNumber);
  command(x_sink, [&](Run& run) {
    const auto b = load_problem(run, xs.p.problem);
    const auto q = pick(b, xs.p.lambda, xs.at, tol,
                        [](const RadialPoint& p) { return p.kind == RadialKind::SinkOrSource; }, "a sink");
    const auto e = sink_expansion(q, b, HermiteProfile{to_complex(xs.coeffs), s_scale}, s_half, tol);
    const auto f = build_sink_eigenfunction(e, layout_for(b, xs.p.lambda, xs.g, q.crit.y_c));
    const SinkModel model(e, b);
    json j = {{"schema", "radscat.expand/1"}, {"kind", "sink"}, {"lambda", xs.p.lambda},
              {"radial_point", point_json(q)}, {"r1", e.r1}, {"r2", e.r2}, {"beta", cjson(e.beta)},
              {"index_generators", e.index_generators}, {"resonant", e.resonant()},
              {"fold", e.phase.fold_lo || e.phase.fold_hi}};
    if (e.resonant_c) j["resonant_c"] = *e.resonant_c;
    finish_expand(run, xs, &model, f, j);
  });

  ExpandArgs xt;
  double t_scale = 1.0;
  auto* x_thr = expand->add_subcommand("threshold", "degenerate center at lambda = lambda_Hess");
  add_expand(x_thr, xt, 0.5);
  x_thr->add_option("--scale", t_scale, "oscillator scale of the Fourier-side profile")->check(CLI::PositiveNumber);
  command(x_thr, [&](Run& run) {
    const auto b = load_problem(run, xt.p.problem);
    const auto q = pick(b, xt.p.lambda, xt.at, tol,
                        [](const RadialPoint& p) { return p.kind == RadialKind::DegenerateCenter; },
                        "a degenerate center");
    const auto e = threshold_expansion(q, b, HermiteProfile{to_complex(xt.coeffs), t_scale}, tol.n_jet);
    const auto f = build_threshold_eigenfunction(e, layout_for(b, xt.p.lambda, xt.g, q.crit.y_c));
    const ThresholdModel model(e);
    finish_expand(run, xt, &model, f,
                  {{"schema", "radscat.expand/1"}, {"kind", "threshold"}, {"lambda", xt.p.lambda},
                   {"radial_point", point_json(q)}, {"beta", cjson(e.beta)}});
  });

  ExpandArgs xd;
  int d_order = 1;
  std::string d_dir = "outgoing";
  auto* x_sad = expand->add_subcommand("saddle", "generalized power series at a saddle");
  add_expand(x_sad, xd, 0.2);
  x_sad->add_option("--order", d_order, "x-corrections kept")->check(CLI::NonNegativeNumber);
  x_sad->add_option("--direction", d_dir)->check(CLI::IsMember({"outgoing", "incoming"}));
  command(x_sad, [&](Run& run) {
    const auto b = load_problem(run, xd.p.problem);
    const auto q = pick(b, xd.p.lambda, xd.at, tol, [](const RadialPoint& p) { return p.kind == RadialKind::Saddle; },
                        "a saddle");
    const auto co = to_complex(xd.coeffs);
    SaddleOptions so;
    so.n_jet = std::max(so.n_jet, tol.n_jet);
    if (xd.g.window > 0) so.window = xd.g.window;
    const auto dir = d_dir == "outgoing" ? SaddleDirection::Outgoing : SaddleDirection::Incoming;
    const auto s = saddle_models(q, b, dir, int(co.size()) - 1, d_order, so, ResonancePolicy::Throw, tol);
    const auto f = build_saddle_eigenfunction(s, co, layout_for(b, xd.p.lambda, xd.g, q.crit.y_c));
    const SaddleModel model(s, co);
    json j = {{"schema", "radscat.expand/1"}, {"kind", "saddle"}, {"direction", d_dir},
              {"lambda", xd.p.lambda}, {"radial_point", point_json(q)}, {"r", s.r},
              {"beta", cjson(s.beta)}, {"order", s.order}, {"residual_gap", s.residual_gap()}};
    if (s.resonance) j["resonance"] = *s.resonance;
    finish_expand(run, xd, &model, f, j);
  });

  // residual
  std::string r_field, r_norm = "sup";
  double r_lo = 0.0, r_hi = 1e300;
  auto* resid = app.add_subcommand("residual", "grid-route residual of a stored field");
  resid->add_option("--field", r_field, "field block file")->required()->check(CLI::ExistingFile);
  resid->add_option("--norm", r_norm)->check(CLI::IsMember({"sup", "l2"}));
  resid->add_option("--fit-lo", r_lo);
  resid->add_option("--fit-hi", r_hi);
  command(resid, [&](Run& run) {
    const auto f = load_field(run, r_field);
    const auto rep = residual(f, r_norm == "sup" ? ResidualNorm::Sup : ResidualNorm::L2, r_lo, r_hi);
    write_residual(run, rep, "residual");
    const json j = {{"schema", "radscat.residual/1"}, {"lambda", f.lambda}, {"fit", residual_json(rep)},
                    {"shells", rep.shells.size()}};
    run.write_json("residual.json", j);
    print(j);
  });

  // pair
  std::string p_f1, p_f2;
  FluxOptions p_flux;
  ProblemArgs pp;
  int p_at = -1;
  std::vector<std::string> p_g1, p_g2;
  auto* pair = app.add_subcommand("pair", "boundary pairing B(u1, u2) by flux limit or mode formula");
  auto* flux_group = pair->add_option_group("flux", "flux limit of two stored fields");
  auto* o_f1 = flux_group->add_option("--field1", p_f1)->check(CLI::ExistingFile);
  flux_group->add_option("--field2", p_f2)->check(CLI::ExistingFile)->needs(o_f1);
  o_f1->needs(flux_group->get_option("--field2"));
  flux_group->add_option("--r0", p_flux.r0, "largest cutoff scale; 0: smallest the grid admits");
  flux_group->add_option("--window", p_flux.window, "y half-width about --y-c; 0: none");
  flux_group->add_option("--y-c", p_flux.y_c);
  auto* mode_group = pair->add_option_group("modes", "mode formula for center coefficients");
  auto* o_prob = mode_group->add_option("--problem", pp.problem)->check(CLI::ExistingFile);
  mode_group->add_option("--lambda", pp.lambda)->needs(o_prob);
  mode_group->add_option("--at", p_at);
  mode_group->add_option("--gammas1", p_g1, kComplexHelp)->delimiter(',')->check(kComplex)->needs(o_prob);
  mode_group->add_option("--gammas2", p_g2, kComplexHelp)->delimiter(',')->check(kComplex)->needs(o_prob);
  o_f1->excludes(o_prob);
  command(pair, [&](Run& run) {
    PairingResult r;
    if (!p_f1.empty()) {
      r = pair_flux(load_field(run, p_f1), load_field(run, p_f2), p_flux, tol);
    } else if (!pp.problem.empty()) {
      const auto b = load_problem(run, pp.problem);
      const auto q = pick(b, pp.lambda, p_at, tol, [](const RadialPoint& p) { return p.kind == RadialKind::Center; },
                          "a center");
      r = pair_modes(ModeTrace::center(q, to_complex(p_g1)), ModeTrace::center(q, to_complex(p_g2)));
    } else {
      throw CLI::RequiredError("--field1/--field2 or --problem with --gammas1/--gammas2");
    }
    const json j = {{"schema", "radscat.pair/1"}, {"method", pairing_method_name(r.method)},
                    {"value", cjson(r.value)}, {"estimated_error", r.estimated_error}};
    run.write_json("pair.json", j);
    print(j);
  });

  // smatrix
  ProblemArgs sp;
  SMatrixOptions so;
  so.j_s = tol.j_s;
  auto* smat = app.add_subcommand("smatrix", "scattering matrix on the minima's mode bases");
  add_problem(smat, sp);
  add_oracle_options(smat, so.oracle);
  smat->add_option("--modes", so.j_s, "basis modes per minimum; default --j-s")->check(CLI::PositiveNumber);
  smat->add_option("--sink-scale", so.sink_scale)->check(CLI::PositiveNumber);
  smat->add_option("--x-cut", so.x_cut)->check(CLI::PositiveNumber);
  smat->add_option("--y-half-width", so.y_half_width, "0: from the geometry");
  smat->add_option("--trace-tol", so.fit_tol, "largest accepted trace misfit");
  smat->add_option("--filter-margin", so.filter_margin);
  command(smat, [&](Run& run) {
    const auto b = load_problem(run, sp.problem);
    if (smat->get_option("--modes")->count() == 0) so.j_s = tol.j_s;
    const auto S = assemble_smatrix(b, sp.lambda, so);
    json basis = json::array();
    for (const auto& e : S.basis)
      basis.push_back({{"y", e.q.crit.y_c}, {"kind", radial_kind_name(e.q.kind)}, {"j", e.j}, {"label", e.label}});
    const json j = {{"schema", "radscat.smatrix/1"}, {"lambda", S.lambda}, {"basis", basis},
                    {"matrix", matrix_json(S.matrix)}, {"unitarity_defect", S.unitarity_defect},
                    {"residuals", S.residuals}, {"misfits", S.misfits}};
    run.write_json("smatrix.json", j);
    print(j);
  });

  // oracle-solve
  ProblemArgs op;
  OracleConfig oc;
  std::string o_rhs, o_format = "block";
  std::vector<double> o_srange{1.2, 2.2}, o_profile, o_eps;
  auto* osolve = app.add_subcommand("oracle-solve", "finite-difference resolvent on the collar");
  add_problem(osolve, op);
  add_oracle_options(osolve, oc);
  osolve->add_option("--rhs", o_rhs, "right-hand side field block; default: a bump in s")->check(CLI::ExistingFile);
  osolve->add_option("--s-range", o_srange, "bump support in s = 1/x")->delimiter(',')->expected(2);
  osolve->add_option("--profile", o_profile, "bump y-profile 1 + sum_k c_k cos(k y / L)")->delimiter(',');
  osolve->add_option("--eps-list", o_eps, "decreasing eps values for continuation")->delimiter(',');
  osolve->add_option("--format", o_format)->check(CLI::IsMember({"block", "csv"}));
  command(osolve, [&](Run& run) {
    const auto b = load_problem(run, op.problem);
    const double lam = op.lambda;
    CollarGrid f;
    std::string rhs_desc;
    if (!o_rhs.empty()) {
      f = load_field(run, o_rhs);
      rhs_desc = "file " + o_rhs;
    } else {
      if (!(o_srange[1] > o_srange[0])) fail(ErrorCode::InvalidInput, "--s-range must be increasing");
      f = oc.layout(b, lam).empty_like();
      f.phase.reset();
      const double sa = o_srange[0], sb = o_srange[1], L = b.L();
      for (size_t i = 0; i < f.nx(); ++i) {
        const double t = (1.0 / f.x[i] - sa) / (sb - sa);
        if (t <= 0 || t >= 1) continue;
        const double w = std::exp(4.0 - 1.0 / (t * (1.0 - t)));
        for (size_t jy = 0; jy < f.ny(); ++jy) {
          double prof = 1.0;
          for (size_t k = 0; k < o_profile.size(); ++k) prof += o_profile[k] * std::cos(double(k + 1) * f.y[jy] / L);
          f.at(i, jy) = w * prof;
        }
      }
      rhs_desc = "bump";
    }
    json j = {{"schema", "radscat.oracle/1"}, {"lambda", lam}, {"rhs", rhs_desc}};
    OracleSolution sol;
    if (!o_eps.empty()) {
      const auto E = eps_continuation(b, lam, f, oc, o_eps);
      j["eps_continuation"] = {{"eps", E.eps}, {"diffs", E.diffs}, {"monotone", E.monotone}};
      if (E.warning) j["eps_continuation"]["warning"] = *E.warning;
      write_field(run, E.extrapolated, o_format, "extrapolated");
      sol = E.solutions.back();
    } else {
      sol = solve(b, lam, f, oc);
    }
    write_field(run, sol.field, o_format, "field");
    j["solver"] = oracle_solver_name(sol.solver);
    j["eps"] = sol.eps;
    j["x_abs"] = sol.x_abs;
    j["residual"] = sol.residual;
    j["iterations"] = sol.iterations;
    j["y_tail"] = sol.y_tail;
    j["grid"] = {{"nx", sol.field.nx()}, {"ny", sol.field.ny()}, {"x_min", sol.field.x.front()},
                 {"x_max", sol.field.x.back()}};
    // Frequency map: full table as CSV, and the measured nu along each critical line.
    const auto& F = sol.fmap;
    std::string csv = "x,y,nu,amp\n";
    for (size_t w = 0; w < F.x.size(); ++w)
      for (size_t jy = 0; jy < F.y.size(); ++jy)
        csv += cli::csv_num(F.x[w]) + "," + cli::csv_num(F.y[jy]) + "," + cli::csv_num(F.at(w, jy)) + "," +
               cli::csv_num(F.amp_at(w, jy)) + "\n";
    run.write("fmap.csv", csv);
    run.write("fmap.gp", cli::gnuplot_script("frequency map", "fmap.png",
                                             "set logscale x\nset xlabel 'x'\nset ylabel 'y'\nset view map\n"
                                             "splot 'fmap.csv' using 1:2:3 with points pointtype 5 palette\n"));
    json lines = json::array(), decay = json::array();
    for (const auto& c : find_critical_points(b, tol)) {
      size_t jc = 0;
      for (size_t jy = 1; jy < F.y.size(); ++jy)
        if (std::abs(b.periodic_diff(F.y[jy], c.y_c)) < std::abs(b.periodic_diff(F.y[jc], c.y_c))) jc = jy;
      json xs = json::array(), nus = json::array();
      for (size_t w = 0; w < F.x.size(); ++w)
        if (F.x[w] >= 1.25 * sol.x_abs) {
          xs.push_back(F.x[w]);
          nus.push_back(F.at(w, jc));
        }
      const double nu_t = lam > c.value ? std::sqrt(lam - c.value) : 0.0;
      const char* kind = c.kind == CritKind::Minimum ? "minimum" : "maximum";
      lines.push_back({{"y", c.y_c}, {"critical", kind}, {"outgoing_nu", nu_t}, {"x", xs}, {"nu", nus}});
      json d = {{"y", c.y_c}, {"critical", kind}};
      try {
        const auto fit = measure_decay(sol, c.y_c);
        d["slope"] = fit.fit.slope;
        d["band"] = fit.fit.band;
        d["n"] = fit.fit.n;
        d["noise_flag"] = fit.noise_flag;
      } catch (const Error& e) {
        d["error"] = error_name(e.code());
        d["message"] = e.what();
      }
      decay.push_back(d);
    }
    j["frequency_map"] = {{"windows", F.x.size()}, {"lines", lines}};
    j["decay"] = decay;
    run.write_json("oracle.json", j);
    print(j);
  });

  // accept
  std::string a_tier = "fast";
  std::vector<int> a_only;
  auto* acc = app.add_subcommand("accept", "run the acceptance suite");
  acc->add_option("--tier", a_tier)->check(CLI::IsMember({"fast", "full"}));
  acc->add_option("--only", a_only, "criterion ids")->delimiter(',');
  bool a_failed = false;
  command(acc, [&](Run& run) {
    const auto tier = a_tier == "fast" ? accept::Tier::Fast : accept::Tier::Full;
    json rows = json::array(), failed = json::array();
    for (const auto& c : accept::criteria()) {
      if (tier == accept::Tier::Fast && c.tier != accept::Tier::Fast) continue;
      if (!a_only.empty() && std::find(a_only.begin(), a_only.end(), c.id) == a_only.end()) continue;
      const auto o = accept::run_one(c, jobs);
      std::cout << accept::summary_line(o) << "\n" << accept::failure_details(o) << std::flush;
      json checks = json::array(), metrics = json::object();
      for (const auto& ck : o.checks) checks.push_back({{"name", ck.name}, {"pass", ck.pass}, {"detail", ck.detail}});
      for (const auto& [k, v] : o.metrics) metrics[k] = v;
      rows.push_back({{"id", o.id}, {"title", o.title}, {"tier", accept::tier_name(o.tier)}, {"pass", o.pass()},
                      {"seconds", o.seconds}, {"checks", checks}, {"metrics", metrics}, {"error", o.error}});
      if (!o.pass()) failed.push_back(o.id);
    }
    run.write_json("accept.json", {{"schema", "radscat.accept/1"}, {"tier", a_tier}, {"criteria", rows}});
    if (!failed.empty()) {
      a_failed = true;
      std::cerr << json{{"schema", "radscat.error/1"}, {"error", "AcceptanceFailed"}, {"failed", failed}}.dump()
                << "\n";
    }
  });

  try {
    app.parse(argc, argv);
    tol.validate();
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kUsageError;
  } catch (const Error& e) {
    std::cerr << json{{"schema", "radscat.error/1"}, {"error", error_name(e.code())}, {"message", e.what()}}.dump()
              << "\n";
    return cli::kUsageError;
  }

  CLI::App* leaf = nullptr;
  std::function<void(Run&)>* fn = nullptr;
  for (auto& [sc, h] : handlers)
    if (sc->parsed()) leaf = sc, fn = &h;
  std::string name = leaf->get_name();
  if (leaf->get_parent() != &app) name = leaf->get_parent()->get_name() + " " + name;

  // Resolved options, including values from the config file and defaults.
  std::function<json(const CLI::App*)> snapshot = [&](const CLI::App* a) {
    json j = json::object();
    for (const CLI::Option* o : a->get_options()) {
      if (o->get_lnames().empty() || o->get_lnames()[0] == "help" || o->get_lnames()[0] == "config") continue;
      const auto& r = o->results();
      if (!r.empty())
        j[o->get_lnames()[0]] = r.size() == 1 ? json(r[0]) : json(r);
      else
        j[o->get_lnames()[0]] = o->get_default_str();
    }
    for (const CLI::App* s : a->get_subcommands()) j[s->get_name()] = snapshot(s);
    return j;
  };
  json config = snapshot(&app);
  config["tolerances"] = tolerances_json(tol);
  const std::vector<std::string> args(argv, argv + argc);

  try {
    Run run(name, out_dir);
    (*fn)(run);
    run.finish(config, args);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kUsageError;
  } catch (const Error& e) {
    std::cerr << json{{"schema", "radscat.error/1"}, {"error", error_name(e.code())}, {"message", e.what()}}.dump()
              << "\n";
    return cli::kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << json{{"schema", "radscat.error/1"}, {"error", "Runtime"}, {"message", e.what()}}.dump() << "\n";
    return cli::kNumericalError;
  }
  return a_failed ? cli::kNumericalError : 0;
}
