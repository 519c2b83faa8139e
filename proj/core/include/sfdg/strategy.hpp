#pragma once

// Search over vectorization strategies: enumeration of fusion/splitting
// layouts for groups of parallelizable kernels, heuristic and measured cost
// models, and the outer search over raised direction-0 quadrature.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfdg/sumfact.hpp"
#include "sfdg/vecplan.hpp"

namespace sfdg
{

struct CostModel
{
  enum class Kind
  {
    Heuristic,
    Autotune,
  };

  Kind kind = Kind::Heuristic;
  double c0 = 0.5; // ilp penalty per log2(s)
  double c1 = 0.25; // load penalty per log2(num_inputs)
  int repeats = 5;

  static CostModel heuristic(double c0 = 0.5, double c1 = 0.25);
  static CostModel autotune(int repeats = 5);
  void validate() const;
};

const char* to_string(CostModel::Kind kind);

/// Raised when a requested layout cannot be realized for a kernel group.
class StrategyError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/**
 * Layout of one vectorized kernel before its matrices are built: member ids
 * (input-major) of f quantities per input, s slices, p inputs. w == 1 is the
 * scalar fallback.
 */
struct GroupLayout
{
  std::vector<int> members;
  int f = 1;
  int s = 1;
  int p = 1;
  int w = 1;

  friend bool operator==(const GroupLayout&, const GroupLayout&) = default;
};

/// One enumerated way to cover a kernel group.
using PartialPlan = std::vector<GroupLayout>;

struct StrategyPlan
{
  Extents quadrature;                    // q
  int width = 1;                         // SIMD width the plan was made for
  std::vector<VectorizedKernel> kernels; // executed kernels
  std::vector<double> costs;             // per executed kernel
  std::vector<int> assignment;           // kernel id -> index into kernels
  double total_cost = 0.0;
  std::vector<int> evaluated_q0; // candidates considered by optimize_quadrature

  int total_slices() const;
  /// Rebuilds every kernel and checks coverage; throws on violation.
  void validate(std::size_t num_kernels) const;
};

/// flops * (1 + c0 log2 s) * (1 + c1 log2 p), flops of one member at m_0 / s.
double cost_heuristic(const VectorizedKernel& vk, const CostModel& model = CostModel::heuristic());
double cost_heuristic(const SumfactKernelSpec& member, const GroupLayout& layout, const CostModel& model);

/// Sum of kernel flops at q over the same at the baseline quadrature.
double autotune_penalty(std::span<const SumfactKernelSpec> kernels_at_q,
                        std::span<const SumfactKernelSpec> kernels_at_baseline);

/// Median wall time (ns) of repeated executions on seeded synthetic data,
/// times penalty. Measurements are cached per layout signature.
double cost_autotune(const VectorizedKernel& vk, double penalty, int repeats);

void clear_autotune_cache();

/**
 * All plans for one group of parallelizable kernels (ids index into group).
 * Ordered: fused/split layouts by increasing f, two-input layouts, then the
 * scalar fallback at each recursion level.
 */
std::vector<PartialPlan> vectorization_strategies(std::span<const SumfactKernelSpec> group, int width);

/// Kernel ids partitioned by parallel key, groups in first-appearance order.
std::vector<std::vector<int>> parallel_groups(std::span<const SumfactKernelSpec> kernels);

/// Materializes layouts over the full kernel list into an executable plan.
StrategyPlan build_plan(std::span<const SumfactKernelSpec> kernels, const std::vector<GroupLayout>& layouts,
                        int width, Extents q, const CostModel& model, double penalty = 1.0);

/// Cheapest plan per parallel group at fixed quadrature.
StrategyPlan fixed_qp_minimal_strategy(std::span<const SumfactKernelSpec> kernels, int width, Extents q,
                                       const CostModel& model, double penalty = 1.0);

/// Builds the kernel set for a quadrature tuple q.
using KernelFactory = std::function<std::vector<SumfactKernelSpec>(const Extents& q)>;

/// Candidate direction-0 point counts ceil(m0 / i) * i for i = 1, 2, 4, ..., w, deduplicated.
std::vector<int> quadrature_candidates(int m0, int width);

StrategyPlan optimize_quadrature(const KernelFactory& factory, int width, const Extents& m_base,
                                 const CostModel& model);

/// Every kernel executed alone in one lane.
StrategyPlan scalar_strategy(std::span<const SumfactKernelSpec> kernels, Extents q);

/**
 * The same (f, s) layout for every group: members of an input are taken f at
 * a time. With two_inputs, groups reading two inputs pair them in the lane
 * halves (f * s = w / 2). Groups whose direction 0 has a single point
 * (facets normal to direction 0) use s = 1. Throws StrategyError when m_0 of
 * a group is not divisible by s.
 */
StrategyPlan uniform_strategy(std::span<const SumfactKernelSpec> kernels, int width, int f, int s, bool two_inputs,
                              Extents q, const CostModel& model = CostModel::heuristic());

/// One enumerated plan per group, drawn uniformly.
StrategyPlan random_strategy(std::span<const SumfactKernelSpec> kernels, int width, Extents q, std::mt19937_64& rng);

/// Per-kernel f, s, num_inputs, q and cost as JSON text.
std::string plan_to_json(const StrategyPlan& plan, int indent = 2);

} // namespace sfdg
