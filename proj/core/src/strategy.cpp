#include "sfdg/strategy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include <json.hpp>

#include "sfdg/simd_exec.hpp"

namespace sfdg
{

CostModel CostModel::heuristic(double c0, double c1)
{
  CostModel m;
  m.kind = Kind::Heuristic;
  m.c0 = c0;
  m.c1 = c1;
  m.validate();
  return m;
}

CostModel CostModel::autotune(int repeats)
{
  CostModel m;
  m.kind = Kind::Autotune;
  m.repeats = repeats;
  m.validate();
  return m;
}

void CostModel::validate() const
{
  if (c0 < 0.0 || c1 < 0.0)
    throw std::invalid_argument("CostModel: c0 and c1 must be non-negative");
  if (kind == Kind::Autotune && repeats < 3)
    throw std::invalid_argument("CostModel: autotuning needs at least 3 repeats");
}

const char* to_string(CostModel::Kind kind)
{
  return kind == CostModel::Kind::Heuristic ? "heuristic" : "autotune";
}

namespace
{

bool cost_less(double a, double b)
{
  return a < b - 1e-12 * std::max(std::abs(a), std::abs(b));
}

// Per-input queues of kernel ids (positions in the group), first-appearance order.
std::vector<std::vector<int>> queues_by_input(std::span<const SumfactKernelSpec> group)
{
  std::vector<int> ids;
  std::vector<std::vector<int>> queues;
  for (std::size_t i = 0; i < group.size(); ++i)
  {
    auto it = std::find(ids.begin(), ids.end(), group[i].input_id);
    if (it == ids.end())
    {
      ids.push_back(group[i].input_id);
      queues.emplace_back();
      it = ids.end() - 1;
    }
    queues[it - ids.begin()].push_back(static_cast<int>(i));
  }
  return queues;
}

struct Enumerator
{
  const std::vector<std::vector<int>>& queues;
  int width;
  int m0;
  std::vector<PartialPlan>& out;

  void run(std::vector<std::size_t>& pos, PartialPlan& current)
  {
    std::vector<int> live;
    for (std::size_t i = 0; i < queues.size(); ++i)
      if (pos[i] < queues[i].size())
        live.push_back(static_cast<int>(i));
    if (live.empty())
    {
      out.push_back(current);
      return;
    }

    for (int p = 1; p <= 2; ++p)
    {
      if (static_cast<int>(live.size()) < p)
        break;
      for (int f = 1; f * p <= width; f *= 2)
      {
        const int s = width / (f * p);
        if (f * p * s != width || m0 % s != 0)
          continue;
        GroupLayout layout{{}, f, s, p, width};
        const std::vector<std::size_t> saved = pos;
        for (int i = 0; i < p; ++i)
        {
          const auto& q = queues[live[i]];
          std::size_t& at = pos[live[i]];
          for (int t = 0; t < f && at < q.size(); ++t)
            layout.members.push_back(q[at++]);
        }
        current.push_back(std::move(layout));
        run(pos, current);
        current.pop_back();
        pos = saved;
      }
    }

    if (width > 1)
    {
      std::size_t& at = pos[live[0]];
      current.push_back(GroupLayout{{queues[live[0]][at]}, 1, 1, 1, 1});
      ++at;
      run(pos, current);
      --at;
      current.pop_back();
    }
  }
};

int plan_slices(const PartialPlan& plan)
{
  int total = 0;
  for (const auto& g : plan)
    total += g.s;
  return total;
}

using LayoutKey = std::tuple<int, int, int, int>;

LayoutKey layout_key(const GroupLayout& g)
{
  return {g.f, g.s, g.p, g.w};
}

std::vector<SumfactKernelSpec> select(std::span<const SumfactKernelSpec> kernels, const std::vector<int>& ids)
{
  std::vector<SumfactKernelSpec> out;
  out.reserve(ids.size());
  for (int id : ids)
    out.push_back(kernels[id]);
  return out;
}

VectorizedKernel materialize(std::span<const SumfactKernelSpec> kernels, const GroupLayout& g)
{
  return build_vectorized_kernel(select(kernels, g.members), g.f, g.s, g.w, g.p, g.members);
}

double layout_cost(std::span<const SumfactKernelSpec> kernels, const GroupLayout& g, const CostModel& model,
                   double penalty)
{
  if (model.kind == CostModel::Kind::Heuristic)
    return cost_heuristic(kernels[g.members.front()], g, model);
  return cost_autotune(materialize(kernels, g), penalty, model.repeats);
}

} // namespace

int StrategyPlan::total_slices() const
{
  int total = 0;
  for (const auto& vk : kernels)
    total += vk.s;
  return total;
}

void StrategyPlan::validate(std::size_t num_kernels) const
{
  if (assignment.size() != num_kernels)
    throw StrategyError("StrategyPlan: assignment covers " + std::to_string(assignment.size()) + " of " +
                        std::to_string(num_kernels) + " kernels");
  std::vector<int> seen(num_kernels, 0);
  for (std::size_t g = 0; g < kernels.size(); ++g)
  {
    const auto& vk = kernels[g];
    build_vectorized_kernel(vk.members, vk.f, vk.s, vk.w, vk.num_inputs, vk.member_ids);
    for (int id : vk.member_ids)
    {
      if (id < 0 || static_cast<std::size_t>(id) >= num_kernels || assignment[id] != static_cast<int>(g))
        throw StrategyError("StrategyPlan: kernel " + std::to_string(id) + " not assigned to its group");
      ++seen[id];
    }
  }
  for (std::size_t id = 0; id < num_kernels; ++id)
    if (seen[id] != 1)
      throw StrategyError("StrategyPlan: kernel " + std::to_string(id) + " appears " + std::to_string(seen[id]) +
                          " times");
}

double cost_heuristic(const SumfactKernelSpec& member, const GroupLayout& layout, const CostModel& model)
{
  const double flops = static_cast<double>(kernel_flop_cost(member, layout.s));
  const double ilp = 1.0 + model.c0 * std::log2(static_cast<double>(layout.s));
  const double loads = 1.0 + model.c1 * std::log2(static_cast<double>(layout.p));
  return flops * ilp * loads;
}

double cost_heuristic(const VectorizedKernel& vk, const CostModel& model)
{
  GroupLayout g{vk.member_ids, vk.f, vk.s, vk.num_inputs, vk.w};
  return cost_heuristic(vk.members.front(), g, model);
}

double autotune_penalty(std::span<const SumfactKernelSpec> kernels_at_q,
                        std::span<const SumfactKernelSpec> kernels_at_baseline)
{
  double at_q = 0.0, at_base = 0.0;
  for (const auto& k : kernels_at_q)
    at_q += static_cast<double>(kernel_flop_cost(k));
  for (const auto& k : kernels_at_baseline)
    at_base += static_cast<double>(kernel_flop_cost(k));
  return at_base > 0.0 ? at_q / at_base : 1.0;
}

namespace
{

std::mutex autotune_mutex;
std::map<std::string, double> autotune_cache;

std::string signature(const VectorizedKernel& vk)
{
  const auto& spec = vk.members.front();
  return std::string(to_string(vk.stage())) + to_string(spec.quad_extents()) + to_string(spec.coeff_extents()) +
         "/" + std::to_string(vk.f) + "/" + std::to_string(vk.s) + "/" + std::to_string(vk.w) + "/" +
         std::to_string(vk.num_inputs);
}

double measure_ns(const VectorizedKernel& vk, int repeats)
{
  using clock = std::chrono::steady_clock;
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);

  const std::size_t in_scalars = extent_product(vk.lane_input_extents()) *
                                 (vk.stage() == Stage::Evaluation ? 1 : static_cast<std::size_t>(vk.w));
  std::vector<std::vector<double>> inputs(vk.stage() == Stage::Evaluation ? vk.num_inputs : 1,
                                          std::vector<double>(in_scalars));
  for (auto& x : inputs)
    for (auto& v : x)
      v = dist(rng);
  std::vector<const double*> ptrs;
  for (const auto& x : inputs)
    ptrs.push_back(x.data());
  std::vector<double> out(extent_product(vk.lane_output_extents()) * vk.w);
  VecScratch<double> scratch;

  auto run = [&] { exec_vectorized<double>(vk, ptrs, out.data(), scratch); };
  run();

  auto t0 = clock::now();
  run();
  const double once = static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - t0).count());
  const int inner = std::clamp(static_cast<int>(20000.0 / std::max(once, 1.0)), 1, 10000);

  std::vector<double> samples;
  for (int r = 0; r < repeats; ++r)
  {
    t0 = clock::now();
    for (int i = 0; i < inner; ++i)
      run();
    const auto dt = std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - t0).count();
    samples.push_back(static_cast<double>(dt) / inner);
  }
  std::nth_element(samples.begin(), samples.begin() + samples.size() / 2, samples.end());
  return samples[samples.size() / 2];
}

} // namespace

double cost_autotune(const VectorizedKernel& vk, double penalty, int repeats)
{
  const std::string key = signature(vk) + "#" + std::to_string(repeats);
  std::lock_guard lock(autotune_mutex);
  auto it = autotune_cache.find(key);
  if (it == autotune_cache.end())
    it = autotune_cache.emplace(key, measure_ns(vk, repeats)).first;
  return it->second * penalty;
}

void clear_autotune_cache()
{
  std::lock_guard lock(autotune_mutex);
  autotune_cache.clear();
}

std::vector<PartialPlan> vectorization_strategies(std::span<const SumfactKernelSpec> group, int width)
{
  if (width < 1 || (width & (width - 1)) != 0)
    throw std::invalid_argument("vectorization_strategies: width must be a power of two");
  std::vector<PartialPlan> out;
  if (group.empty())
    return out;
  const ParallelKey key = parallel_key(group.front());
  for (const auto& k : group)
    if (!(parallel_key(k) == key))
      throw std::invalid_argument("vectorization_strategies: group members are not parallelizable");

  const auto queues = queues_by_input(group);
  std::vector<std::size_t> pos(queues.size(), 0);
  PartialPlan current;
  Enumerator{queues, width, key.m[0], out}.run(pos, current);
  return out;
}

std::vector<std::vector<int>> parallel_groups(std::span<const SumfactKernelSpec> kernels)
{
  std::vector<ParallelKey> keys;
  std::vector<std::vector<int>> groups;
  for (std::size_t i = 0; i < kernels.size(); ++i)
  {
    const ParallelKey key = parallel_key(kernels[i]);
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end())
    {
      keys.push_back(key);
      groups.emplace_back();
      it = keys.end() - 1;
    }
    groups[it - keys.begin()].push_back(static_cast<int>(i));
  }
  return groups;
}

StrategyPlan build_plan(std::span<const SumfactKernelSpec> kernels, const std::vector<GroupLayout>& layouts,
                        int width, Extents q, const CostModel& model, double penalty)
{
  StrategyPlan plan;
  plan.quadrature = std::move(q);
  plan.width = width;
  plan.assignment.assign(kernels.size(), -1);
  for (const auto& g : layouts)
  {
    if (g.w != 1 && g.w != width)
      throw StrategyError("build_plan: layout width " + std::to_string(g.w) + " differs from plan width " +
                          std::to_string(width));
    const int index = static_cast<int>(plan.kernels.size());
    for (int id : g.members)
    {
      if (id < 0 || static_cast<std::size_t>(id) >= kernels.size())
        throw StrategyError("build_plan: kernel id out of range");
      if (plan.assignment[id] != -1)
        throw StrategyError("build_plan: kernel " + std::to_string(id) + " assigned to two groups");
      plan.assignment[id] = index;
    }
    plan.kernels.push_back(materialize(kernels, g));
    const double cost = model.kind == CostModel::Kind::Heuristic
                            ? cost_heuristic(plan.kernels.back(), model)
                            : cost_autotune(plan.kernels.back(), penalty, model.repeats);
    plan.costs.push_back(cost);
    plan.total_cost += cost;
  }
  for (std::size_t id = 0; id < kernels.size(); ++id)
    if (plan.assignment[id] == -1)
      throw StrategyError("build_plan: kernel " + std::to_string(id) + " has no group");
  return plan;
}

StrategyPlan fixed_qp_minimal_strategy(std::span<const SumfactKernelSpec> kernels, int width, Extents q,
                                       const CostModel& model, double penalty)
{
  model.validate();
  std::vector<GroupLayout> chosen;
  for (const auto& ids : parallel_groups(kernels))
  {
    const auto group = select(kernels, ids);
    const auto plans = vectorization_strategies(group, width);

    std::map<LayoutKey, double> memo;
    std::size_t best = 0;
    double best_cost = 0.0;
    int best_slices = 0;
    for (std::size_t i = 0; i < plans.size(); ++i)
    {
      double cost = 0.0;
      for (const auto& g : plans[i])
      {
        auto it = memo.find(layout_key(g));
        if (it == memo.end())
          it = memo.emplace(layout_key(g), layout_cost(group, g, model, penalty)).first;
        cost += it->second;
      }
      const int slices = plan_slices(plans[i]);
      if (i == 0 || cost_less(cost, best_cost) || (!cost_less(best_cost, cost) && slices < best_slices))
      {
        best = i;
        best_cost = cost;
        best_slices = slices;
      }
    }
    for (GroupLayout g : plans[best])
    {
      for (int& id : g.members)
        id = ids[id];
      chosen.push_back(std::move(g));
    }
  }
  return build_plan(kernels, chosen, width, std::move(q), model, penalty);
}

std::vector<int> quadrature_candidates(int m0, int width)
{
  if (m0 < 1 || width < 1)
    throw std::invalid_argument("quadrature_candidates: arguments must be positive");
  std::vector<int> out;
  for (int i = 1; i <= width; i *= 2)
  {
    const int q0 = (m0 + i - 1) / i * i;
    if (std::find(out.begin(), out.end(), q0) == out.end())
      out.push_back(q0);
  }
  return out;
}

StrategyPlan optimize_quadrature(const KernelFactory& factory, int width, const Extents& m_base, const CostModel& model)
{
  if (m_base.empty())
    throw std::invalid_argument("optimize_quadrature: empty base quadrature");
  const auto candidates = quadrature_candidates(m_base[0], width);
  const auto baseline = factory(m_base);

  std::optional<StrategyPlan> best;
  for (int q0 : candidates)
  {
    Extents q = m_base;
    q[0] = q0;
    const auto kernels = q0 == m_base[0] ? baseline : factory(q);
    const double penalty = model.kind == CostModel::Kind::Autotune ? autotune_penalty(kernels, baseline) : 1.0;
    StrategyPlan plan = fixed_qp_minimal_strategy(kernels, width, q, model, penalty);
    if (!best || cost_less(plan.total_cost, best->total_cost) ||
        (!cost_less(best->total_cost, plan.total_cost) &&
         std::make_pair(q0, plan.total_slices()) < std::make_pair(best->quadrature[0], best->total_slices())))
      best = std::move(plan);
  }
  best->evaluated_q0 = candidates;
  return *best;
}

StrategyPlan scalar_strategy(std::span<const SumfactKernelSpec> kernels, Extents q)
{
  std::vector<GroupLayout> layouts;
  for (std::size_t i = 0; i < kernels.size(); ++i)
    layouts.push_back(GroupLayout{{static_cast<int>(i)}, 1, 1, 1, 1});
  return build_plan(kernels, layouts, 1, std::move(q), CostModel::heuristic());
}

StrategyPlan uniform_strategy(std::span<const SumfactKernelSpec> kernels, int width, int f, int s, bool two_inputs,
                              Extents q, const CostModel& model)
{
  if (f < 1 || s < 1 || f * s != width)
    throw StrategyError("uniform_strategy: f*s = " + std::to_string(f * s) + " must equal width " +
                        std::to_string(width));
  std::vector<GroupLayout> layouts;
  for (const auto& ids : parallel_groups(kernels))
  {
    const auto group = select(kernels, ids);
    auto queues = queues_by_input(group);
    const int m0 = group.front().quad_extents()[0];
    const int p = two_inputs && queues.size() >= 2 ? 2 : 1;

    int fg = f, sg = s;
    if (m0 == 1)
    {
      fg = width;
      sg = 1;
    }
    if (m0 % sg != 0)
      throw StrategyError("kernel '" + group.front().name + "': " + std::to_string(m0) +
                          " quadrature points in direction 0 are not divisible by s = " + std::to_string(sg));
    // Paired layout: halve f, or s when f is already 1.
    const int fp = fg >= 2 ? fg / 2 : fg;
    const int sp = fg >= 2 ? sg : sg / 2;

    std::vector<std::size_t> pos(queues.size(), 0);
    auto remaining = [&](std::size_t i) { return pos[i] < queues[i].size(); };
    auto take = [&](std::size_t i, int count, GroupLayout& g) {
      for (int t = 0; t < count && remaining(i); ++t)
        g.members.push_back(ids[queues[i][pos[i]++]]);
    };
    if (p == 2 && sp >= 1)
      while (remaining(0) && remaining(1))
      {
        GroupLayout g{{}, fp, sp, 2, width};
        take(0, fp, g);
        take(1, fp, g);
        layouts.push_back(std::move(g));
      }
    for (std::size_t i = 0; i < queues.size(); ++i)
      while (remaining(i))
      {
        GroupLayout g{{}, fg, sg, 1, width};
        take(i, fg, g);
        layouts.push_back(std::move(g));
      }
  }
  return build_plan(kernels, layouts, width, std::move(q), model);
}

StrategyPlan random_strategy(std::span<const SumfactKernelSpec> kernels, int width, Extents q, std::mt19937_64& rng)
{
  std::vector<GroupLayout> layouts;
  for (const auto& ids : parallel_groups(kernels))
  {
    const auto plans = vectorization_strategies(select(kernels, ids), width);
    std::uniform_int_distribution<std::size_t> pick(0, plans.size() - 1);
    for (GroupLayout g : plans[pick(rng)])
    {
      for (int& id : g.members)
        id = ids[id];
      layouts.push_back(std::move(g));
    }
  }
  return build_plan(kernels, layouts, width, std::move(q), CostModel::heuristic());
}

std::string plan_to_json(const StrategyPlan& plan, int indent)
{
  using nlohmann::json;
  json j;
  j["quadrature"] = plan.quadrature;
  j["width"] = plan.width;
  j["total_cost"] = plan.total_cost;
  if (!plan.evaluated_q0.empty())
    j["evaluated_q0"] = plan.evaluated_q0;
  json groups = json::array();
  for (std::size_t g = 0; g < plan.kernels.size(); ++g)
  {
    const auto& vk = plan.kernels[g];
    json names = json::array();
    for (const auto& m : vk.members)
      names.push_back(m.name);
    groups.push_back({{"stage", to_string(vk.stage())},
                      {"members", names},
                      {"member_ids", vk.member_ids},
                      {"f", vk.f},
                      {"s", vk.s},
                      {"num_inputs", vk.num_inputs},
                      {"w", vk.w},
                      {"idle_lanes", vk.padding_lanes()},
                      {"q", vk.members.front().quad_extents()},
                      {"cost", plan.costs[g]}});
  }
  j["kernels"] = groups;
  return j.dump(indent);
}

} // namespace sfdg
