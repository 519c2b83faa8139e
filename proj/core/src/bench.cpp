#include "sfdg/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sfdg
{

namespace
{

using Clock = std::chrono::steady_clock;

double elapsed_ns(Clock::time_point a, Clock::time_point b)
{
  return static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count());
}

double& bucket(StageBreakdown& s, IntegralKind kind, Part part)
{
  if (kind != IntegralKind::Volume)
    return s.facet;
  switch (part)
  {
  case Part::Eval:
    return s.eval;
  case Part::QuadLoop:
    return s.quadloop;
  case Part::TestMult:
    return s.testmult;
  }
  return s.facet;
}

class StageTimer : public Probe
{
public:
  explicit StageTimer(double overhead) : overhead_(overhead) {}
  void enter_part(IntegralKind, Part) override { start_ = Clock::now(); }
  void leave_part(IntegralKind kind, Part part) override
  {
    bucket(totals, kind, part) += std::max(0.0, elapsed_ns(start_, Clock::now()) - overhead_);
  }
  StageBreakdown totals;

private:
  double overhead_;
  Clock::time_point start_;
};

class CellTimer : public Probe
{
public:
  explicit CellTimer(double overhead) : overhead_(overhead) {}
  void enter_integral(IntegralKind) override { start_ = Clock::now(); }
  void leave_integral(IntegralKind kind) override
  {
    const double t = std::max(0.0, elapsed_ns(start_, Clock::now()) - overhead_);
    samples[kind == IntegralKind::Volume ? "volume" : kind == IntegralKind::InteriorFacet ? "interior_facet"
                                                                                         : "boundary_facet"]
        .push_back(t);
  }
  std::map<std::string, std::vector<double>> samples;

private:
  double overhead_;
  Clock::time_point start_;
};

class StageCounter : public Probe
{
public:
  void enter_part(IntegralKind, Part) override { start_ = flop_counter(); }
  void leave_part(IntegralKind kind, Part part) override
  {
    bucket(totals, kind, part) += static_cast<double>((flop_counter() - start_).total());
  }
  StageBreakdown totals;

private:
  FlopCounter start_;
};

std::string sci(double v)
{
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

double relative_inf_error(std::span<const double> a, std::span<const double> b)
{
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return scale > 0.0 ? diff / scale : diff;
}

} // namespace

Granularity parse_granularity(const std::string& text)
{
  if (text == "operator")
    return Granularity::Operator;
  if (text == "cell")
    return Granularity::Cell;
  if (text == "stage")
    return Granularity::Stage;
  throw std::invalid_argument("invalid granularity '" + text + "' (expected operator, cell or stage)");
}

Mode parse_mode(const std::string& text)
{
  if (text == "flops")
    return Mode::Flops;
  if (text == "time")
    return Mode::Time;
  throw std::invalid_argument("invalid mode '" + text + "' (expected flops or time)");
}

const char* to_string(Granularity g)
{
  switch (g)
  {
  case Granularity::Operator:
    return "operator";
  case Granularity::Cell:
    return "cell";
  case Granularity::Stage:
    return "stage";
  }
  return "";
}

const char* to_string(Mode m)
{
  return m == Mode::Flops ? "flops" : "time";
}

void MeasurementConfig::validate() const
{
  grid().validate();
  if (width != 1 && width != 2 && width != 4 && width != 8)
    throw std::invalid_argument("width must be 1, 2, 4 or 8, got " + std::to_string(width));
  if (repeats < 1)
    throw std::invalid_argument("repeats must be positive");
  if (cost_model != "heuristic" && cost_model != "autotune")
    throw std::invalid_argument("invalid cost model '" + cost_model + "' (expected heuristic or autotune)");
  if (format != "json" && format != "csv")
    throw std::invalid_argument("invalid format '" + format + "' (expected json or csv)");
  StrategyChoice::parse(strategy);
}

GridConfig MeasurementConfig::grid() const
{
  return GridConfig{dim, cells, degree, quad_points};
}

TimeStats summarize(std::vector<double> samples)
{
  if (samples.empty())
    return {};
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  const double median = n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
  return {median, samples.front(), samples.back()};
}

double calibrate_timer(int pairs)
{
  pairs = std::max(pairs, 1000);
  std::vector<double> samples(pairs);
  for (int i = 0; i < pairs; ++i)
  {
    const auto a = Clock::now();
    const auto b = Clock::now();
    samples[i] = elapsed_ns(a, b);
  }
  return std::max(0.0, summarize(std::move(samples)).median);
}

int effective_cells(const MeasurementConfig& config)
{
  GridConfig grid = config.grid();
  while (config.min_bytes > 0 && grid.num_dofs() * sizeof(double) < config.min_bytes)
    ++grid.cells;
  return grid.cells;
}

OperatorPlan make_plan(const MeasurementConfig& config)
{
  const CostModel model = config.cost_model == "autotune" ? CostModel::autotune(std::max(config.repeats, 3))
                                                           : CostModel::heuristic();
  GridConfig grid = config.grid();
  grid.cells = effective_cells(config);
  return plan_operator(grid, config.width, StrategyChoice::parse(config.strategy), model);
}

std::vector<double> random_dofs(std::size_t n, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> u(n);
  for (auto& v : u)
    v = dist(rng);
  return u;
}

FlopTally count_flops(const Operator& op, std::uint64_t seed)
{
  const auto values = random_dofs(op.grid().num_dofs(), seed);
  std::vector<CountingScalar> u(values.begin(), values.end());
  std::vector<CountingScalar> r(u.size());
  StageCounter probe;
  reset_flop_counter();
  op.apply<CountingScalar>(u, r, ResidualMode::Operator, &probe);
  FlopTally tally;
  tally.detail = flop_counter();
  tally.total = tally.detail.total();
  tally.stages = probe.totals;
  reset_flop_counter();
  return tally;
}

FlopTally count_flops(const MeasurementConfig& config)
{
  config.validate();
  GridConfig grid = config.grid();
  grid.cells = effective_cells(config);
  Operator op(grid, ProblemData::manufactured(), make_plan(config));
  return count_flops(op, config.seed);
}

BenchReport run_benchmark(const MeasurementConfig& config)
{
  config.validate();
  BenchReport report;
  report.config = config;
  report.config.cells = effective_cells(config);
  const GridConfig grid = report.config.grid();
  report.dofs = grid.num_dofs();

  Operator op(grid, ProblemData::manufactured(), make_plan(report.config));
  report.strategy_json = op.plan().to_json(-1);

  if (config.mode == Mode::Flops)
  {
    const FlopTally tally = count_flops(op, config.seed);
    report.flop_count = tally.total;
    if (config.granularity == Granularity::Stage)
      report.per_stage = tally.stages;
    return report;
  }

  report.timer_overhead_ns = calibrate_timer();
  const auto u = random_dofs(report.dofs, config.seed);
  std::vector<double> r(u.size());
  op.apply<double>(u, r, ResidualMode::Operator);

  switch (config.granularity)
  {
  case Granularity::Operator:
  {
    std::vector<double> samples;
    for (int rep = 0; rep < config.repeats; ++rep)
    {
      const auto t0 = Clock::now();
      op.apply<double>(u, r, ResidualMode::Operator);
      samples.push_back(std::max(0.0, elapsed_ns(t0, Clock::now()) - report.timer_overhead_ns));
    }
    double total = 0.0;
    for (double t : samples)
      total += t;
    report.wall_time_ns = summarize(samples);
    if (total > 0.0)
      report.dofs_per_second = static_cast<double>(report.dofs) * config.repeats / (total * 1e-9);
    // Separate counting run with the same config and seed.
    const FlopTally tally = count_flops(op, config.seed);
    report.flop_count = tally.total;
    if (report.wall_time_ns->median > 0.0)
      report.gflops = static_cast<double>(tally.total) / report.wall_time_ns->median;
    break;
  }
  case Granularity::Stage:
  {
    std::vector<double> eval, quad, test, facet;
    for (int rep = 0; rep < config.repeats; ++rep)
    {
      StageTimer probe(report.timer_overhead_ns);
      op.apply<double>(u, r, ResidualMode::Operator, &probe);
      eval.push_back(probe.totals.eval);
      quad.push_back(probe.totals.quadloop);
      test.push_back(probe.totals.testmult);
      facet.push_back(probe.totals.facet);
    }
    report.per_stage = StageBreakdown{summarize(eval).median, summarize(quad).median, summarize(test).median,
                                      summarize(facet).median};
    break;
  }
  case Granularity::Cell:
  {
    CellTimer probe(report.timer_overhead_ns);
    for (int rep = 0; rep < config.repeats; ++rep)
      op.apply<double>(u, r, ResidualMode::Operator, &probe);
    std::map<std::string, double> medians;
    for (auto& [kind, samples] : probe.samples)
      medians[kind] = summarize(samples).median;
    report.cell_kernel_ns = medians;
    break;
  }
  }
  return report;
}

std::string report_to_json(const BenchReport& report, int indent)
{
  using nlohmann::json;
  const auto& c = report.config;
  json config = {{"dim", c.dim},
                 {"degree", c.degree},
                 {"cells", c.cells},
                 {"width", c.width},
                 {"strategy", c.strategy},
                 {"cost_model", c.cost_model},
                 {"quad_points", c.grid().quad()},
                 {"granularity", to_string(c.granularity)},
                 {"mode", to_string(c.mode)},
                 {"repeats", c.repeats},
                 {"seed", c.seed},
                 {"min_bytes", c.min_bytes}};

  json metrics = {{"dofs", report.dofs}};
  if (c.mode == Mode::Time)
    metrics["timer_overhead_ns"] = report.timer_overhead_ns;
  if (report.flop_count)
    metrics["flop_count"] = *report.flop_count;
  if (report.wall_time_ns)
    metrics["wall_time_ns"] = {{"median", report.wall_time_ns->median},
                               {"min", report.wall_time_ns->min},
                               {"max", report.wall_time_ns->max}};
  if (report.gflops)
    metrics["gflops"] = *report.gflops;
  if (report.dofs_per_second)
    metrics["dofs_per_second"] = *report.dofs_per_second;
  if (report.per_stage)
  {
    const auto& s = *report.per_stage;
    metrics["per_stage"] = {{"unit", c.mode == Mode::Flops ? "flops" : "ns"},
                            {"eval", s.eval},
                            {"quadloop", s.quadloop},
                            {"testmult", s.testmult},
                            {"facet", s.facet}};
  }
  if (report.cell_kernel_ns)
    metrics["cell_kernel_ns"] = *report.cell_kernel_ns;

  json out;
  out["config"] = config;
  out["metrics"] = metrics;
  out["strategy"] = report.strategy_json.empty() ? json::object() : json::parse(report.strategy_json);
  return out.dump(indent);
}

std::string report_to_csv(const BenchReport& report)
{
  const auto& c = report.config;
  std::ostringstream os;
  os << "dim,degree,cells,width,strategy,cost_model,quad_points,mode,granularity,repeats,seed,dofs,flop_count,"
        "wall_median_ns,wall_min_ns,wall_max_ns,gflops,dofs_per_second,eval,quadloop,testmult,facet\n";
  os << c.dim << ',' << c.degree << ',' << c.cells << ',' << c.width << ',' << '"' << c.strategy << '"' << ','
     << c.cost_model << ',' << c.grid().quad() << ',' << to_string(c.mode) << ',' << to_string(c.granularity) << ','
     << c.repeats << ',' << c.seed << ',' << report.dofs << ',';
  if (report.flop_count)
    os << *report.flop_count;
  os << ',';
  if (report.wall_time_ns)
    os << report.wall_time_ns->median << ',' << report.wall_time_ns->min << ',' << report.wall_time_ns->max;
  else
    os << ",,";
  os << ',';
  if (report.gflops)
    os << *report.gflops;
  os << ',';
  if (report.dofs_per_second)
    os << *report.dofs_per_second;
  os << ',';
  if (report.per_stage)
    os << report.per_stage->eval << ',' << report.per_stage->quadloop << ',' << report.per_stage->testmult << ','
       << report.per_stage->facet;
  else
    os << ",,,";
  os << '\n';
  return os.str();
}

std::vector<VerificationCheck> run_verification(const MeasurementConfig& config)
{
  std::vector<VerificationCheck> checks;
  std::mt19937_64 rng(config.seed);

  {
    VerificationCheck check{"sumfact_vs_naive", true, ""};
    std::uniform_int_distribution<int> dim(2, 3), deg(1, 4), pts(1, 6);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial)
    {
      const int d = dim(rng);
      SumfactKernelSpec spec;
      for (int j = 0; j < d; ++j)
      {
        const int n = deg(rng) + 1, m = pts(rng);
        KernelMatrix a{m, n, std::vector<double>(static_cast<std::size_t>(m) * n), MatrixKind::Evaluation};
        for (auto& e : a.entries)
          e = val(rng);
        spec.matrices.push_back(std::move(a));
      }
      Tensor<double> x(spec.coeff_extents());
      for (auto& e : x.storage())
        e = val(rng);
      const auto fast = sumfact_apply(spec, x);
      const auto naive = kronecker_apply_naive(spec.matrices, x);
      worst = std::max(worst, relative_inf_error(fast.data(), naive.data()));
    }
    check.passed = worst <= 1e-13;
    check.detail = "max relative error " + sci(worst);
    checks.push_back(check);
  }

  GridConfig grid{3, 2, std::max(config.degree, 1), config.quad_points};
  const auto u = random_dofs(grid.num_dofs(), config.seed);
  std::vector<std::string> strategies{"auto", "fuse"};
  for (int s = 2; s <= config.width; s *= 2)
    strategies.push_back("split:" + std::to_string(s));
  for (int f = 2; f < config.width; f *= 2)
    strategies.push_back("hybrid:" + std::to_string(f) + "," + std::to_string(config.width / f));
  for (const auto& name : strategies)
  {
    VerificationCheck check{"strategy_" + name, false, ""};
    try
    {
      const OperatorPlan plan = plan_operator(grid, config.width, StrategyChoice::parse(name),
                                              CostModel::heuristic(), true);
      const Operator vec(grid, ProblemData::manufactured(), plan);
      const Operator ref(grid, ProblemData::manufactured(), scalar_plan_like(grid, plan));
      const auto a = apply_residual<double>(vec, u);
      const auto b = apply_residual<double>(ref, u);
      const double err = relative_inf_error(a, b);
      check.passed = err <= 1e-12;
      check.detail = "relative difference to scalar plan " + sci(err);
    }
    catch (const std::exception& e)
    {
      check.detail = e.what();
    }
    checks.push_back(check);
  }

  {
    VerificationCheck check{"manufactured_solution", false, ""};
    GridConfig mgrid{3, 2, std::max(config.degree, 2), 0};
    mgrid.quad_points = mgrid.degree + 2;
    const ProblemData data = ProblemData::manufactured();
    const Operator op(mgrid, data, plan_operator(mgrid, config.width, StrategyChoice{}, CostModel::heuristic()));
    const auto g = interpolate(mgrid, [&](std::span<const double> x) { return data.dirichlet(x); });
    const auto r = apply_residual<double>(op, g);
    double norm = 0.0;
    for (double v : r)
      norm = std::max(norm, std::abs(v));
    const double scale = std::max(1.0, std::pow(mgrid.h(), 3) * op.penalty());
    check.passed = norm <= 1e-10 * scale;
    check.detail = "residual max norm " + sci(norm) + " (bound " + sci(1e-10 * scale) + ")";
    checks.push_back(check);
  }
  return checks;
}

} // namespace sfdg
