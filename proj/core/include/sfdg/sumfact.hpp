#pragma once

// Scalar sum factorization kernels: d successive single-direction
// contractions in direction order 0, 1, ..., d-1. Each contraction consumes
// the fastest index and appends the produced index as the slowest one, so
// after d steps the result is back in vec order.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfdg/arith.hpp"
#include "sfdg/basis.hpp"
#include "sfdg/tensor.hpp"

namespace sfdg
{

enum class Stage
{
  Evaluation,   // coefficients -> quadrature points, matrices as given
  TestMultiply, // quadrature points -> coefficients, transposed matrices, accumulates
};

const char* to_string(Stage stage);

struct SumfactKernelSpec
{
  std::vector<KernelMatrix> matrices; // one m_k x n_k matrix per direction
  Stage stage = Stage::Evaluation;
  int input_id = 0;
  std::optional<FaceEmbedding> embedding;
  std::string name;

  int dim() const { return static_cast<int>(matrices.size()); }
  /// m-tuple (quadrature side).
  Extents quad_extents() const;
  /// n-tuple (coefficient side).
  Extents coeff_extents() const;
  Extents input_extents() const { return stage == Stage::Evaluation ? coeff_extents() : quad_extents(); }
  Extents output_extents() const { return stage == Stage::Evaluation ? quad_extents() : coeff_extents(); }
};

/// Throws std::invalid_argument when the matrices are not a valid kernel (empty, zero sized).
void validate(const SumfactKernelSpec& spec);

/// 2 * sum_k prod_{i<=k} m_i * prod_{j>=k} n_j
std::int64_t flop_cost(std::span<const int> m, std::span<const int> n);

/// Flops of one application of spec with direction 0 split into s slices.
std::int64_t kernel_flop_cost(const SumfactKernelSpec& spec, int slices = 1);

struct Rational
{
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

/// ceil(m0 / w) * w / m0, reduced.
Rational quadrature_increase_factor(int m0, int w);

/// Largest intermediate tensor a kernel with these extents produces.
std::size_t sumfact_scratch_size(std::span<const int> a, std::span<const int> b);

namespace detail
{

/// out[r + rest * i] = sum_a coef(i, a) * load(a + n_a * r), i < rows, r < rest.
template <typename V, typename Load, typename Coef>
inline void contract_rotate(Load&& load, V* out, int n_a, std::size_t rest, int rows, Coef&& coef)
{
  for (std::size_t r = 0; r < rest; ++r)
  {
    const std::size_t base = static_cast<std::size_t>(n_a) * r;
    for (int i = 0; i < rows; ++i)
    {
      V acc{};
      for (int a = 0; a < n_a; ++a)
        acc = muladd(coef(i, a), load(base + a), acc);
      out[r + rest * static_cast<std::size_t>(i)] = acc;
    }
  }
}

/**
 * Runs the d contraction steps. load_input(flat) supplies the input tensor
 * in vec order, coef(k, i, a) the entry of the direction-k operator mapping
 * index a to index i, and the final result is written to out. in_ext and
 * out_ext are the per-direction extents before and after contraction.
 */
template <typename V, typename Load, typename Coef>
void sumfact_sweep(Load&& load_input, V* out, std::span<const int> in_ext, std::span<const int> out_ext,
                   Coef&& coef, V* scratch_a, V* scratch_b)
{
  const int d = static_cast<int>(in_ext.size());

  std::size_t rest = 1;
  for (int k = 1; k < d; ++k)
    rest *= static_cast<std::size_t>(in_ext[k]);

  V* current = nullptr;
  for (int k = 0; k < d; ++k)
  {
    V* target = k == d - 1 ? out : (k % 2 == 0 ? scratch_a : scratch_b);
    auto c = [&](int i, int a) { return coef(k, i, a); };
    if (k == 0)
      contract_rotate<V>(load_input, target, in_ext[0], rest, out_ext[0], c);
    else
    {
      const V* src = current;
      contract_rotate<V>([src](std::size_t idx) { return src[idx]; }, target, in_ext[k], rest, out_ext[k], c);
    }
    current = target;
    if (k + 1 < d)
      rest = rest / static_cast<std::size_t>(in_ext[k + 1]) * static_cast<std::size_t>(out_ext[k]);
  }
}

} // namespace detail

/// Reusable buffers for sumfact_apply; one per thread.
template <typename T>
struct SumfactScratch
{
  std::vector<T> a, b, result;
};

/**
 * Applies the kernel to in (extents spec.input_extents()) and writes
 * (Evaluation) or adds (TestMultiply) the result into out.
 */
template <typename T>
void sumfact_apply(const SumfactKernelSpec& spec, std::span<const T> in, std::span<T> out, SumfactScratch<T>& scratch)
{
  const Extents in_ext = spec.input_extents();
  const Extents out_ext = spec.output_extents();
  if (in.size() < extent_product(in_ext) || out.size() < extent_product(out_ext))
    throw std::invalid_argument("sumfact_apply: buffer too small for kernel extents " + to_string(in_ext) +
                                " -> " + to_string(out_ext));

  const std::size_t need = sumfact_scratch_size(in_ext, out_ext);
  if (scratch.a.size() < need)
    scratch.a.resize(need);
  if (scratch.b.size() < need)
    scratch.b.resize(need);

  auto load = [in](std::size_t idx) { return in[idx]; };
  if (spec.stage == Stage::Evaluation)
  {
    auto coef = [&spec](int k, int i, int a) { return from_double<T>(spec.matrices[k](i, a)); };
    detail::sumfact_sweep<T>(load, out.data(), in_ext, out_ext, coef, scratch.a.data(), scratch.b.data());
    return;
  }

  const std::size_t n_out = extent_product(out_ext);
  if (scratch.result.size() < n_out)
    scratch.result.resize(n_out);
  auto coef = [&spec](int k, int i, int a) { return from_double<T>(spec.matrices[k](a, i)); };
  detail::sumfact_sweep<T>(load, scratch.result.data(), in_ext, out_ext, coef, scratch.a.data(), scratch.b.data());
  for (std::size_t i = 0; i < n_out; ++i)
    out[i] = out[i] + scratch.result[i];
}

/// Convenience form: returns the kernel result (for TestMultiply, the product without accumulation).
template <typename T>
Tensor<T> sumfact_apply(const SumfactKernelSpec& spec, const Tensor<T>& x)
{
  if (x.dims() != spec.input_extents())
    throw std::invalid_argument("sumfact_apply: input extents " + to_string(x.dims()) + " do not match kernel " +
                                to_string(spec.input_extents()));
  Tensor<T> out(spec.output_extents());
  SumfactScratch<T> scratch;
  sumfact_apply<T>(spec, x.data(), out.data(), scratch);
  return out;
}

} // namespace sfdg
