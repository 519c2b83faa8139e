// sumfact-dg: benchmark, plan inspection and self-verification front end.

#include <fstream>
#include <iostream>
#include <stdexcept>

#include <CLI11.hpp>

#include "sfdg/bench.hpp"

namespace
{

enum Exit
{
  ok = 0,
  config_error = 2,
  verification_failure = 3,
};

void add_problem_options(CLI::App* cmd, sfdg::MeasurementConfig& c)
{
  cmd->add_option("--dim", c.dim, "Spatial dimension (2 or 3)")->capture_default_str();
  cmd->add_option("--degree,-k", c.degree, "Polynomial degree k")->capture_default_str();
  cmd->add_option("--cells,-N", c.cells, "Cells per direction")->capture_default_str();
  cmd->add_option("--width,-w", c.width, "SIMD width in doubles (1, 2, 4 or 8)")->capture_default_str();
  cmd->add_option("--strategy", c.strategy, "auto | scalar | fuse | split:S | hybrid:F,S")->capture_default_str();
  cmd->add_option("--cost-model", c.cost_model, "heuristic | autotune")->capture_default_str();
  cmd->add_option("--quad-points", c.quad_points, "Quadrature points per direction (0: degree + 1)")
      ->capture_default_str();
}

void write_output(const std::string& path, const std::string& text)
{
  if (path.empty())
  {
    std::cout << text;
    if (!text.empty() && text.back() != '\n')
      std::cout << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out)
    throw std::invalid_argument("cannot open output file " + path);
  out << text << '\n';
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Sum factorized SIPG operator: benchmarks and strategy inspection"};
  app.require_subcommand(1);

  sfdg::MeasurementConfig bench_cfg;
  std::string mode = "time", granularity = "operator";
  auto* bench = app.add_subcommand("bench", "Time or count flops of operator applications");
  add_problem_options(bench, bench_cfg);
  bench->add_option("--mode", mode, "flops | time")->capture_default_str();
  bench->add_option("--granularity", granularity, "operator | cell | stage")->capture_default_str();
  bench->add_option("--repeats", bench_cfg.repeats, "Timed repetitions")->capture_default_str();
  bench->add_option("--seed", bench_cfg.seed, "Seed of the input vector")->capture_default_str();
  bench->add_option("--min-bytes", bench_cfg.min_bytes, "Grow cells until the dof vector has this many bytes");
  bench->add_option("--output,-o", bench_cfg.output, "Output file (default: stdout)");
  bench->add_option("--format", bench_cfg.format, "json | csv")->capture_default_str();

  sfdg::MeasurementConfig explain_cfg;
  auto* explain = app.add_subcommand("explain", "Print the chosen strategy plan as JSON");
  add_problem_options(explain, explain_cfg);

  sfdg::MeasurementConfig verify_cfg;
  verify_cfg.degree = 2;
  auto* verify = app.add_subcommand("verify", "Check vectorized kernels and strategies against scalar oracles");
  verify->add_option("--degree,-k", verify_cfg.degree, "Polynomial degree k")->capture_default_str();
  verify->add_option("--width,-w", verify_cfg.width, "SIMD width")->capture_default_str();
  verify->add_option("--seed", verify_cfg.seed, "Seed")->capture_default_str();

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }

  try
  {
    if (*bench)
    {
      bench_cfg.mode = sfdg::parse_mode(mode);
      bench_cfg.granularity = sfdg::parse_granularity(granularity);
      const auto report = sfdg::run_benchmark(bench_cfg);
      write_output(bench_cfg.output,
                   bench_cfg.format == "csv" ? sfdg::report_to_csv(report) : sfdg::report_to_json(report));
      return ok;
    }
    if (*explain)
    {
      explain_cfg.validate();
      std::cout << sfdg::make_plan(explain_cfg).to_json() << '\n';
      return ok;
    }
    if (*verify)
    {
      if (verify_cfg.width != 1 && verify_cfg.width != 2 && verify_cfg.width != 4 && verify_cfg.width != 8)
        throw std::invalid_argument("width must be 1, 2, 4 or 8");
      bool all = true;
      for (const auto& check : sfdg::run_verification(verify_cfg))
      {
        std::cout << (check.passed ? "PASS " : "FAIL ") << check.name << ": " << check.detail << '\n';
        all = all && check.passed;
      }
      return all ? ok : verification_failure;
    }
  }
  catch (const std::invalid_argument& e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return config_error;
  }
  return ok;
}
