#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "radscat/radscat.hpp"

using namespace radscat;

namespace {

const double kPi = std::acos(-1.0);

BoundaryData cos_problem() { return BoundaryData({{1, 1.0, 0.0}}, {}, 2 * kPi); }

RadialPoint outgoing(const BoundaryData& b, double lam, RadialKind kind) {
  for (const auto& q : radial_points(b, lam))
    if (q.outgoing() && q.kind == kind) return q;
  throw std::runtime_error("no such radial point");
}

void BM_RadialPoints(benchmark::State& state) {
  BoundaryData b({{1, 1.0, 0.0}, {2, 0.3, 0.1}, {3, 0.05, -0.02}}, {{1, 0.0, 0.2}}, 2 * kPi);
  for (auto _ : state) benchmark::DoNotOptimize(radial_points(b, 5.0));
}
BENCHMARK(BM_RadialPoints);

void BM_IntegrateToCapture(benchmark::State& state) {
  const auto b = cos_problem();
  const auto rps = radial_points(b, 5.0);
  const auto fo = FlowOptions::from(default_tolerances());
  std::mt19937_64 rng(1);
  for (auto _ : state) {
    state.PauseTiming();
    const auto p = random_energy_point(b, 5.0, rng);
    state.ResumeTiming();
    benchmark::DoNotOptimize(integrate(p, b, 5.0, rps, Direction::Forward, fo));
  }
}
BENCHMARK(BM_IntegrateToCapture)->Unit(benchmark::kMicrosecond);

void BM_MorseDiagram(benchmark::State& state) {
  const auto b = cos_problem();
  for (auto _ : state) benchmark::DoNotOptimize(morse_diagram(b, 5.0, default_tolerances(), int(state.range(0))));
}
BENCHMARK(BM_MorseDiagram)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_ContinuePhase(benchmark::State& state) {
  const auto b = cos_problem();
  const auto q = outgoing(b, 5.0, RadialKind::Saddle);
  const auto jet = phase_jet(q, b, 2, 8);
  for (auto _ : state) benchmark::DoNotOptimize(continue_phase(jet, b, -0.5, 0.5));
}
BENCHMARK(BM_ContinuePhase)->Unit(benchmark::kMicrosecond);

void BM_CenterModes(benchmark::State& state) {
  const auto b = cos_problem();
  const auto q = outgoing(b, 0.5, RadialKind::Center);
  for (auto _ : state) benchmark::DoNotOptimize(center_modes(q, b, int(state.range(0))));
}
BENCHMARK(BM_CenterModes)->Arg(8)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_BuildCenterField(benchmark::State& state) {
  const auto b = cos_problem();
  auto e = center_modes(outgoing(b, 0.5, RadialKind::Center), b, 8);
  e.gammas.assign(e.gammas.size(), 0.0);
  e.gammas[0] = 1.0;
  e.gammas[2] = 0.5;
  const auto n = size_t(state.range(0));
  const auto lay = CollarGrid::log_uniform(b, 0.5, 1e-3, 0.3, n, n / 2);
  for (auto _ : state) benchmark::DoNotOptimize(build_center_eigenfunction(e, lay));
  state.SetItemsProcessed(state.iterations() * int64_t(n * n / 2));
}
BENCHMARK(BM_BuildCenterField)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_SaddleResidual(benchmark::State& state) {
  const auto b = cos_problem();
  const auto q = outgoing(b, 5.0, RadialKind::Saddle);
  const auto s = saddle_models(q, b, SaddleDirection::Outgoing, 2, 1);
  const CplxVec co{1.0, 0.5, 0.25};
  const SaddleModel m(s, co);
  const auto lay = CollarGrid::windowed(b, 5.0, 1e-3, 0.3, 256, -0.2, 0.2, 64);
  for (auto _ : state)
    benchmark::DoNotOptimize(residual(m, lay, ResidualNorm::Sup, 1e-3, 1e-1, int(state.range(0))));
}
BENCHMARK(BM_SaddleResidual)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_OracleSolve(benchmark::State& state) {
  const auto b = cos_problem();
  OracleConfig cfg;
  cfg.x_min = 0.02;
  cfg.ny = int(state.range(0));
  auto f = cfg.layout(b, 2.0).empty_like();
  f.phase.reset();
  for (size_t i = 0; i < f.nx(); ++i) {
    const double t = (1.0 / f.x[i] - 1.2);
    if (t <= 0 || t >= 1) continue;
    for (size_t j = 0; j < f.ny(); ++j) f.at(i, j) = std::exp(4.0 - 1.0 / (t * (1.0 - t)));
  }
  for (auto _ : state) benchmark::DoNotOptimize(solve(b, 2.0, f, cfg));
}
BENCHMARK(BM_OracleSolve)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
