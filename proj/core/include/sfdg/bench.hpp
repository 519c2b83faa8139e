#pragma once

// Measurement harness: timer calibration, exact flop counting with
// CountingScalar, timed operator applications at several granularities and
// report serialization.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sfdg/counting_scalar.hpp"
#include "sfdg/dg.hpp"

namespace sfdg
{

enum class Granularity
{
  Operator, // full operator applications
  Cell,     // single cell or facet integrals
  Stage,    // evaluation, quadrature loop and test-function multiplication separately
};

enum class Mode
{
  Flops,
  Time,
};

Granularity parse_granularity(const std::string& text);
Mode parse_mode(const std::string& text);
const char* to_string(Granularity g);
const char* to_string(Mode m);

struct MeasurementConfig
{
  int dim = 3;
  int degree = 3;
  int cells = 8;
  int width = 4;
  std::string strategy = "auto";
  std::string cost_model = "heuristic";
  int quad_points = 0; // 0: degree + 1
  Granularity granularity = Granularity::Operator;
  Mode mode = Mode::Time;
  int repeats = 5;
  std::uint64_t seed = 1;
  std::size_t min_bytes = 0; // grow cells until the dof vector is at least this large
  std::string output;        // empty: stdout
  std::string format = "json";

  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
  GridConfig grid() const;
};

struct TimeStats
{
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
};

TimeStats summarize(std::vector<double> samples);

/// Per-stage tallies: volume evaluation, volume quadrature loop, volume test-function multiplication, all facets.
struct StageBreakdown
{
  double eval = 0.0;
  double quadloop = 0.0;
  double testmult = 0.0;
  double facet = 0.0;
};

struct FlopTally
{
  std::uint64_t total = 0;
  FlopCounter detail;
  StageBreakdown stages; // flops per stage
};

struct BenchReport
{
  MeasurementConfig config; // effective config (cells after min_bytes growth)
  std::size_t dofs = 0;
  double timer_overhead_ns = 0.0;
  std::optional<std::uint64_t> flop_count;
  std::optional<TimeStats> wall_time_ns;
  std::optional<double> gflops;
  std::optional<double> dofs_per_second;
  std::optional<StageBreakdown> per_stage;           // time (ns, medians) or flops, per granularity=stage
  std::optional<std::map<std::string, double>> cell_kernel_ns; // granularity=cell, median per integral kind
  std::string strategy_json;
};

/// Median overhead (ns) of an empty start/stop pair on the steady clock, at least 0.
double calibrate_timer(int pairs = 1000);

/// Cells per direction after growing for min_bytes.
int effective_cells(const MeasurementConfig& config);

/// Builds the operator plan named by the config. Throws StrategyError / invalid_argument on bad strategies.
OperatorPlan make_plan(const MeasurementConfig& config);

/// One operator application with CountingScalar.
FlopTally count_flops(const MeasurementConfig& config);
FlopTally count_flops(const Operator& op, std::uint64_t seed);

BenchReport run_benchmark(const MeasurementConfig& config);

std::string report_to_json(const BenchReport& report, int indent = 2);
std::string report_to_csv(const BenchReport& report);

/// Random dof vector in [-1, 1].
std::vector<double> random_dofs(std::size_t n, std::uint64_t seed);

struct VerificationCheck
{
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Oracle-equivalence checks: sum factorization against the naive product,
/// each forced strategy against the scalar plan, and the manufactured solution.
std::vector<VerificationCheck> run_verification(const MeasurementConfig& config);

} // namespace sfdg
