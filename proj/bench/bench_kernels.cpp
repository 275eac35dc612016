// Serial references against the optimised kernels.
//   ./bench_kernels --benchmark_filter=Ensemble
// The ensemble pair only differs when OMP_NUM_THREADS > 1.

#include "phasedrift/delta_dynamics.hpp"
#include "phasedrift/field.hpp"
#include "phasedrift/limit_dynamics.hpp"

#include <benchmark/benchmark.h>

using namespace phasedrift;

namespace {

const CorrelationModel& model() {
  static const CorrelationModel m{CorrelationParams{}};
  return m;
}

void field_eval(benchmark::State& state, bool reference) {
  const FieldRealization f = sample_field(model(), static_cast<int>(state.range(0)), 3);
  Vec3 y(0.1, -0.4, 2.0);
  for (auto _ : state) {
    const FieldSample s = reference ? f.evaluate_reference(y) : f.evaluate(y);
    benchmark::DoNotOptimize(s);
    y.z() += 1e-3;
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_FieldEvaluate(benchmark::State& s) { field_eval(s, false); }
void BM_FieldEvaluateReference(benchmark::State& s) { field_eval(s, true); }

DeltaEnsembleParams ensemble_params(int n_paths) {
  DeltaEnsembleParams p;
  p.delta = 0.05;
  p.t_end = 0.2;
  p.n_paths = n_paths;
  p.n_modes = 512;
  return p;
}

void BM_DeltaEnsemble(benchmark::State& state) {
  const DeltaEnsembleParams p = ensemble_params(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_ensemble(model(), p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_DeltaEnsembleSerial(benchmark::State& state) {
  const DeltaEnsembleParams p = ensemble_params(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_ensemble_serial(model(), p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

LimitEnsembleParams limit_params(int n_paths) {
  LimitEnsembleParams p;
  p.n_paths = n_paths;
  p.t_end = 0.2;
  return p;
}

void BM_LimitEnsemble(benchmark::State& state) {
  const LimitEnsembleParams p = limit_params(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_limit_ensemble(model(), p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_LimitEnsembleSerial(benchmark::State& state) {
  const LimitEnsembleParams p = limit_params(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_limit_ensemble_serial(model(), p));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_FieldEvaluate)->Arg(1024)->Arg(4096);
BENCHMARK(BM_FieldEvaluateReference)->Arg(1024)->Arg(4096);
BENCHMARK(BM_DeltaEnsemble)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DeltaEnsembleSerial)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LimitEnsemble)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LimitEnsembleSerial)->Arg(2000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
