#include "sfdg/sumfact.hpp"

#include <numeric>
#include <stdexcept>

namespace sfdg
{

const char* to_string(Stage stage)
{
  return stage == Stage::Evaluation ? "evaluation" : "test_multiply";
}

Extents SumfactKernelSpec::quad_extents() const
{
  Extents m(matrices.size());
  for (std::size_t k = 0; k < matrices.size(); ++k)
    m[k] = matrices[k].rows;
  return m;
}

Extents SumfactKernelSpec::coeff_extents() const
{
  Extents n(matrices.size());
  for (std::size_t k = 0; k < matrices.size(); ++k)
    n[k] = matrices[k].cols;
  return n;
}

void validate(const SumfactKernelSpec& spec)
{
  if (spec.matrices.empty())
    throw std::invalid_argument("SumfactKernelSpec: no direction matrices");
  for (const auto& m : spec.matrices)
    if (m.rows < 1 || m.cols < 1 || m.entries.size() != static_cast<std::size_t>(m.rows) * m.cols)
      throw std::invalid_argument("SumfactKernelSpec: malformed direction matrix");
}

std::int64_t flop_cost(std::span<const int> m, std::span<const int> n)
{
  const std::size_t d = m.size();
  std::int64_t total = 0;
  for (std::size_t k = 0; k < d; ++k)
  {
    std::int64_t term = 1;
    for (std::size_t i = 0; i <= k; ++i)
      term *= m[i];
    for (std::size_t j = k; j < d; ++j)
      term *= n[j];
    total += term;
  }
  return 2 * total;
}

std::int64_t kernel_flop_cost(const SumfactKernelSpec& spec, int slices)
{
  Extents m = spec.quad_extents();
  const Extents n = spec.coeff_extents();
  if (slices < 1 || m[0] % slices != 0)
    throw std::invalid_argument("kernel_flop_cost: " + std::to_string(m[0]) + " quadrature points in direction 0 are not divisible by " +
                                std::to_string(slices) + " slices");
  m[0] /= slices;
  return spec.stage == Stage::Evaluation ? flop_cost(m, n) : flop_cost(n, m);
}

Rational quadrature_increase_factor(int m0, int w)
{
  if (m0 < 1 || w < 1)
    throw std::invalid_argument("quadrature_increase_factor: arguments must be positive");
  const std::int64_t raised = static_cast<std::int64_t>((m0 + w - 1) / w) * w;
  const std::int64_t g = std::gcd(raised, static_cast<std::int64_t>(m0));
  return {raised / g, m0 / g};
}

std::size_t sumfact_scratch_size(std::span<const int> a, std::span<const int> b)
{
  const std::size_t d = a.size();
  std::size_t best = 1;
  for (std::size_t k = 0; k < d; ++k)
  {
    std::size_t size = 1;
    for (std::size_t j = 0; j <= k; ++j)
      size *= static_cast<std::size_t>(b[j]);
    for (std::size_t j = k + 1; j < d; ++j)
      size *= static_cast<std::size_t>(a[j]);
    best = std::max(best, size);
  }
  return best;
}

} // namespace sfdg
