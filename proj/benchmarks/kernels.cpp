#include <benchmark/benchmark.h>

#include "sfdg/bench.hpp"
#include "sfdg/dg.hpp"
#include "sfdg/simd_exec.hpp"

using namespace sfdg;

namespace
{

// The d + 1 evaluation kernels of the volume integral for degree k.
std::vector<SumfactKernelSpec> volume_eval_kernels(int k)
{
  const GridConfig grid{3, 2, k, 0};
  auto all = integral_kernels(grid, Integral{IntegralKind::Volume, -1, Side::Lower}, base_quadrature(grid));
  all.resize(4);
  return all;
}

void BM_ScalarKernels(benchmark::State& state)
{
  const auto kernels = volume_eval_kernels(static_cast<int>(state.range(0)));
  const auto x = random_dofs(extent_product(kernels[0].input_extents()), 1);
  std::vector<double> y(extent_product(kernels[0].output_extents()));
  SumfactScratch<double> scratch;
  for (auto _ : state)
  {
    for (const auto& k : kernels)
      sumfact_apply<double>(k, x, y, scratch);
    benchmark::DoNotOptimize(y.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * 4);
}

void BM_FusedKernel(benchmark::State& state)
{
  const auto kernels = volume_eval_kernels(static_cast<int>(state.range(0)));
  const auto vk = build_vectorized_kernel(kernels, 4, 1, 4, 1);
  const auto x = random_dofs(extent_product(kernels[0].input_extents()), 1);
  std::vector<double> y(extent_product(vk.lane_output_extents()) * 4 + 32);
  VecScratch<double> scratch;
  const double* xp = x.data();
  for (auto _ : state)
  {
    exec_vectorized<double>(vk, std::span<const double* const>(&xp, 1), y.data(), scratch);
    benchmark::DoNotOptimize(y.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * 4);
}

void BM_OperatorApply(benchmark::State& state)
{
  const GridConfig grid{3, 8, static_cast<int>(state.range(0)), 0};
  const int width = static_cast<int>(state.range(1));
  const Operator op(grid, ProblemData::manufactured(),
                    plan_operator(grid, width, width == 1 ? StrategyChoice::parse("scalar") : StrategyChoice{}));
  const auto u = random_dofs(grid.num_dofs(), 2);
  std::vector<double> r(u.size());
  for (auto _ : state)
  {
    op.apply<double>(u, r, ResidualMode::Operator);
    benchmark::DoNotOptimize(r.data());
  }
  state.counters["dofs/s"] =
      benchmark::Counter(static_cast<double>(grid.num_dofs()), benchmark::Counter::kIsIterationInvariantRate);
}

} // namespace

BENCHMARK(BM_ScalarKernels)->DenseRange(2, 6, 1);
BENCHMARK(BM_FusedKernel)->DenseRange(2, 6, 1);
BENCHMARK(BM_OperatorApply)->ArgsProduct({{2, 3, 4}, {1, 4}})->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
