#pragma once

// Execution of vectorized kernels on fixed-width lane bundles. A bundle is a
// plain array of W scalars with elementwise arithmetic; with -O3 and a native
// target the fixed-width loops compile to SIMD instructions.

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfdg/arith.hpp"
#include "sfdg/sumfact.hpp"
#include "sfdg/tensor.hpp"
#include "sfdg/vecplan.hpp"

namespace sfdg
{

template <typename T, int W>
struct LaneBundle
{
  std::array<T, W> v{};

  static LaneBundle broadcast(const T& x)
  {
    LaneBundle b;
    for (int l = 0; l < W; ++l)
      b.v[l] = x;
    return b;
  }

  static LaneBundle load(const T* p)
  {
    LaneBundle b;
    for (int l = 0; l < W; ++l)
      b.v[l] = p[l];
    return b;
  }

  void store(T* p) const
  {
    for (int l = 0; l < W; ++l)
      p[l] = v[l];
  }

  T& operator[](int l) { return v[l]; }
  const T& operator[](int l) const { return v[l]; }

  friend LaneBundle operator+(const LaneBundle& a, const LaneBundle& b)
  {
    LaneBundle r;
    for (int l = 0; l < W; ++l)
      r.v[l] = a.v[l] + b.v[l];
    return r;
  }
  friend LaneBundle operator-(const LaneBundle& a, const LaneBundle& b)
  {
    LaneBundle r;
    for (int l = 0; l < W; ++l)
      r.v[l] = a.v[l] - b.v[l];
    return r;
  }
  friend LaneBundle operator*(const LaneBundle& a, const LaneBundle& b)
  {
    LaneBundle r;
    for (int l = 0; l < W; ++l)
      r.v[l] = a.v[l] * b.v[l];
    return r;
  }
  friend LaneBundle operator-(const LaneBundle& a)
  {
    LaneBundle r;
    for (int l = 0; l < W; ++l)
      r.v[l] = -a.v[l];
    return r;
  }
  friend LaneBundle muladd(const LaneBundle& a, const LaneBundle& b, const LaneBundle& c)
  {
    LaneBundle r;
    for (int l = 0; l < W; ++l)
      r.v[l] = muladd(a.v[l], b.v[l], c.v[l]);
    return r;
  }
};

/// Calls fn.template operator()<W>() for a runtime width in {1, 2, 4, 8}.
template <typename Fn>
decltype(auto) dispatch_width(int w, Fn&& fn)
{
  switch (w)
  {
  case 1:
    return fn.template operator()<1>();
  case 2:
    return fn.template operator()<2>();
  case 4:
    return fn.template operator()<4>();
  case 8:
    return fn.template operator()<8>();
  default:
    throw std::invalid_argument("unsupported lane width " + std::to_string(w) + " (expected 1, 2, 4 or 8)");
  }
}

/// f quantities, s slices per quantity, w = f * s lanes.
struct ShuffleSpec
{
  int f = 1;
  int s = 1;
  int w = 1;
};

/**
 * in: f registers of w lanes as stored in an interleaved tensor (register j
 * holds s consecutive quadrature points of every quantity). out[t] holds
 * quantity t at w consecutive flat quadrature indices:
 *   out[t][k] = in[k / s][t * s + k % s].
 */
template <typename In, typename Out>
inline void transpose_registers(const In* in, Out* out, int f, int s)
{
  const int w = f * s;
  for (int t = 0; t < f; ++t)
    for (int k = 0; k < w; ++k)
      out[t][k] = in[k / s][t * s + k % s];
}

template <typename In, typename Out>
inline void transpose_registers_inverse(const In* in, Out* out, int f, int s)
{
  const int w = f * s;
  for (int t = 0; t < f; ++t)
    for (int k = 0; k < w; ++k)
      out[k / s][t * s + k % s] = in[t][k];
}

/// Flat form: vectors holds f registers of w scalars back to back.
std::vector<double> transpose_registers(std::span<const double> vectors, ShuffleSpec spec);
std::vector<double> transpose_registers_inverse(std::span<const double> vectors, ShuffleSpec spec);

template <typename T>
struct VecScratch
{
  std::vector<T> a, b, out;
};

namespace detail
{

template <typename T, int W>
inline LaneBundle<T, W> load_stacked(const StackedMatrix& m, int i, int j)
{
  const double* p = m.data.data() + (static_cast<std::size_t>(i) * m.cols + j) * W;
  LaneBundle<T, W> b;
  for (int l = 0; l < W; ++l)
    b.v[l] = from_double<T>(p[l]);
  return b;
}

template <typename T, int W>
void exec_vectorized_raw(const VectorizedKernel& vk, std::span<const T* const> inputs, T* out, VecScratch<T>& scratch)
{
  using V = LaneBundle<T, W>;
  static_assert(sizeof(V) == W * sizeof(T));
  const Extents in_ext = vk.lane_input_extents();
  const Extents out_ext = vk.lane_output_extents();

  const std::size_t need = sumfact_scratch_size(in_ext, out_ext) * W;
  if (scratch.a.size() < need)
    scratch.a.resize(need);
  if (scratch.b.size() < need)
    scratch.b.resize(need);
  V* va = reinterpret_cast<V*>(scratch.a.data());
  V* vb = reinterpret_cast<V*>(scratch.b.data());
  auto coef = [&vk](int k, int i, int a) { return load_stacked<T, W>(vk.stacked[k], i, a); };

  V* out_bundles = reinterpret_cast<V*>(out);
  if (vk.stage() == Stage::Evaluation)
  {
    if (static_cast<int>(inputs.size()) != vk.num_inputs)
      throw std::invalid_argument("exec_vectorized: kernel expects " + std::to_string(vk.num_inputs) + " inputs");
    const T* x0 = inputs[0];
    const T* x1 = vk.num_inputs == 2 ? inputs[1] : inputs[0];
    const int half = W / vk.num_inputs;
    auto load = [x0, x1, half](std::size_t idx) {
      V b;
      for (int l = 0; l < W; ++l)
        b.v[l] = l < half ? x0[idx] : x1[idx];
      return b;
    };
    detail::sumfact_sweep<V>(load, out_bundles, in_ext, out_ext, coef, va, vb);
  }
  else
  {
    const V* src = reinterpret_cast<const V*>(inputs[0]);
    auto load = [src](std::size_t idx) { return src[idx]; };
    detail::sumfact_sweep<V>(load, out_bundles, in_ext, out_ext, coef, va, vb);
  }
}

} // namespace detail

/**
 * Raw entry point. Evaluation kernels read num_inputs scalar tensors with
 * extents vk.lane_input_extents(); TestMultiply kernels read one interleaved
 * tensor (w lanes). out receives the interleaved result (w lanes).
 */
template <typename T>
void exec_vectorized(const VectorizedKernel& vk, std::span<const T* const> inputs, T* out, VecScratch<T>& scratch)
{
  dispatch_width(vk.w, [&]<int W>() { detail::exec_vectorized_raw<T, W>(vk, inputs, out, scratch); });
}

template <typename T>
InterleavedTensor<T> exec_vectorized(const VectorizedKernel& vk, std::span<const Tensor<T>> inputs)
{
  if (vk.stage() != Stage::Evaluation)
    throw std::invalid_argument("exec_vectorized: tensor inputs require an evaluation kernel");
  if (static_cast<int>(inputs.size()) != vk.num_inputs)
    throw std::invalid_argument("exec_vectorized: kernel expects " + std::to_string(vk.num_inputs) + " inputs, got " +
                                std::to_string(inputs.size()));
  std::vector<const T*> ptrs;
  for (const auto& x : inputs)
  {
    if (x.dims() != vk.lane_input_extents())
      throw std::invalid_argument("exec_vectorized: input extents " + to_string(x.dims()) + " do not match kernel " +
                                  to_string(vk.lane_input_extents()));
    ptrs.push_back(x.data().data());
  }
  InterleavedTensor<T> out(vk.lane_output_extents(), vk.w);
  VecScratch<T> scratch;
  exec_vectorized<T>(vk, ptrs, out.data().data(), scratch);
  return out;
}

template <typename T>
InterleavedTensor<T> exec_vectorized(const VectorizedKernel& vk, const InterleavedTensor<T>& input)
{
  if (vk.stage() != Stage::TestMultiply)
    throw std::invalid_argument("exec_vectorized: interleaved input requires a test-multiply kernel");
  if (input.dims() != vk.lane_input_extents() || input.lanes() != vk.w)
    throw std::invalid_argument("exec_vectorized: interleaved input does not match kernel layout");
  InterleavedTensor<T> out(vk.lane_output_extents(), vk.w);
  VecScratch<T> scratch;
  const T* p = input.data().data();
  exec_vectorized<T>(vk, std::span<const T* const>(&p, 1), out.data().data(), scratch);
  return out;
}

/**
 * R[n] += sum of the non-idle lanes of output at n. Lanes fed by input slot
 * i are added to targets[i] (two targets for two-input kernels).
 */
template <typename T>
void accumulate_reduce(const VectorizedKernel& vk, const T* output, std::span<T* const> targets, std::size_t n)
{
  const int w = vk.w;
  for (int slot = 0; slot < vk.num_inputs; ++slot)
  {
    T* target = targets[slot];
    const int lo = slot * (w / vk.num_inputs);
    const int hi = lo + w / vk.num_inputs;
    for (std::size_t i = 0; i < n; ++i)
    {
      const T* lanes = output + i * w;
      T sum{};
      bool any = false;
      for (int l = lo; l < hi; ++l)
      {
        if (vk.lane_idle(l))
          continue;
        sum = any ? sum + lanes[l] : lanes[l];
        any = true;
      }
      if (any)
        target[i] = target[i] + sum;
    }
  }
}

template <typename T>
void accumulate_reduce(const VectorizedKernel& vk, const InterleavedTensor<T>& output, std::span<Tensor<T>* const> targets)
{
  std::vector<T*> ptrs;
  for (auto* t : targets)
  {
    if (t->dims() != output.dims())
      throw std::invalid_argument("accumulate_reduce: target extents do not match kernel output");
    ptrs.push_back(t->data().data());
  }
  accumulate_reduce<T>(vk, output.data().data(), ptrs, output.elements());
}

/// Sums all lanes of vk_output into R (every lane live).
template <typename T>
void accumulate_reduce(const InterleavedTensor<T>& vk_output, Tensor<T>& r)
{
  if (vk_output.dims() != r.dims())
    throw std::invalid_argument("accumulate_reduce: extents mismatch");
  const int L = vk_output.lanes();
  for (std::size_t i = 0; i < r.size(); ++i)
  {
    T sum = vk_output(i, 0);
    for (int l = 1; l < L; ++l)
      sum = sum + vk_output(i, l);
    r[i] = r[i] + sum;
  }
}

/// One quadrature-loop operand: an interleaved buffer with its quantity/slice layout.
template <typename Ptr>
struct QuadOperand
{
  Ptr data = nullptr;
  std::size_t capacity = 0; // scalars addressable through data
  int quantities = 1;       // F
  int slices = 1;           // s
  int lanes = 1;            // F * s, or 1 for unvectorized kernels
  std::vector<int> roles;   // per quantity: role index, -1 for idle slots
};

/// Scalars an operand must provide for M points processed W at a time.
inline std::size_t quadrature_loop_extent(std::size_t points, int width, int quantities)
{
  const std::size_t blocks = (points + width - 1) / width;
  return blocks * static_cast<std::size_t>(width) * static_cast<std::size_t>(quantities);
}

/**
 * Quadrature loop over M flat points, W at a time, with no tail loop: the
 * final partial block reads and writes the padded part of every operand.
 * Per block, every input group is transposed to quantity-major bundles,
 * point_fn(block, in, out) evaluates the pointwise functions (bundles indexed
 * by role) and the results are transposed back into each output group.
 * Returns the number of blocks executed.
 */
template <typename T, int W, typename PointFn>
std::size_t quadrature_loop(std::span<const QuadOperand<const T*>> inputs, std::span<const QuadOperand<T*>> outputs,
                            std::size_t points, int input_roles, int output_roles, PointFn&& point_fn)
{
  using V = LaneBundle<T, W>;
  auto check = [&](const auto& op) {
    if (op.lanes != 1 && op.lanes != W)
      throw std::invalid_argument("quadrature_loop: operand lane count " + std::to_string(op.lanes) +
                                  " incompatible with width " + std::to_string(W));
    if (op.lanes == W && op.quantities * op.slices != W)
      throw std::invalid_argument("quadrature_loop: operand layout violates f*s = w");
    if (op.capacity < quadrature_loop_extent(points, W, op.lanes == 1 ? 1 : op.quantities))
      throw std::invalid_argument("quadrature_loop: operand storage too small for the padded final block");
  };
  for (const auto& op : inputs)
    check(op);
  for (const auto& op : outputs)
    check(op);

  std::vector<V> in(input_roles), out(output_roles);
  std::array<V, W> regs, shuffled;
  const std::size_t blocks = (points + W - 1) / W;
  for (std::size_t b = 0; b < blocks; ++b)
  {
    for (const auto& op : inputs)
    {
      if (op.lanes == 1)
      {
        if (op.roles[0] >= 0)
          in[op.roles[0]] = V::load(op.data + b * W);
        continue;
      }
      const T* base = op.data + b * static_cast<std::size_t>(W) * op.quantities;
      for (int j = 0; j < op.quantities; ++j)
        regs[j] = V::load(base + static_cast<std::size_t>(j) * W);
      transpose_registers(regs.data(), shuffled.data(), op.quantities, op.slices);
      for (int t = 0; t < op.quantities; ++t)
        if (op.roles[t] >= 0)
          in[op.roles[t]] = shuffled[t];
    }

    point_fn(b, static_cast<const V*>(in.data()), out.data());

    for (const auto& op : outputs)
    {
      if (op.lanes == 1)
      {
        if (op.roles[0] >= 0)
          out[op.roles[0]].store(op.data + b * W);
        continue;
      }
      for (int t = 0; t < op.quantities; ++t)
        shuffled[t] = op.roles[t] >= 0 ? out[op.roles[t]] : V{};
      transpose_registers_inverse(shuffled.data(), regs.data(), op.quantities, op.slices);
      T* base = op.data + b * static_cast<std::size_t>(W) * op.quantities;
      for (int j = 0; j < op.quantities; ++j)
        regs[j].store(base + static_cast<std::size_t>(j) * W);
    }
  }
  return blocks;
}

} // namespace sfdg
