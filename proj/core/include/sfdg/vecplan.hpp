#pragma once

// Descriptors for vectorized sum factorization kernels: stacked (lane
// interleaved) basis matrices, circular slicing of direction 0 and the lane
// layout of fused/split/hybrid kernel groups.

#include <optional>
#include <span>
#include <vector>

#include "sfdg/basis.hpp"
#include "sfdg/sumfact.hpp"
#include "sfdg/tensor.hpp"

namespace sfdg
{

/// L matrices of identical shape, element (i, j, lane) at (i * cols + j) * L + lane.
struct StackedMatrix
{
  int rows = 0;
  int cols = 0;
  int lanes = 1;
  std::vector<double> data;
  bool broadcast = false; // every lane holds the same matrix

  double operator()(int i, int j, int lane) const
  {
    return data[(static_cast<std::size_t>(i) * cols + j) * lanes + lane];
  }
};

StackedMatrix stack_matrices(std::span<const KernelMatrix> mats, int lanes);

/// Slice r keeps rows r, r + s, r + 2s, ... of mat.
std::vector<KernelMatrix> slice_matrix_circular(const KernelMatrix& mat, int s);

KernelMatrix transpose(const KernelMatrix& mat);

/// Position of one lane in a vectorized kernel.
struct LaneSlot
{
  int quantity = 0; // t, counted over all inputs (input-major)
  int slice = 0;    // r
  friend bool operator==(const LaneSlot&, const LaneSlot&) = default;
};

/**
 * A group of f quantities per input, each split into s circular slices of
 * direction 0, executed in w = f * s * num_inputs lanes. Lane t * s + r
 * carries slice r of quantity t; quantities of input 0 fill the lower half
 * of the lanes and those of input 1 the upper half. Quantity slots without a
 * live member replicate the last member of their input and are idle.
 */
struct VectorizedKernel
{
  std::vector<SumfactKernelSpec> members; // live members, input-major
  std::vector<int> member_ids;            // caller ids, parallel to members
  int f = 1;
  int s = 1;
  int w = 1;
  int num_inputs = 1;
  std::vector<int> input_ids;     // distinct input ids in lane-half order
  std::vector<int> slot_member;   // per quantity slot: index into members
  std::vector<bool> slot_idle;    // per quantity slot
  std::vector<LaneSlot> lane_map; // per lane
  std::vector<StackedMatrix> stacked;

  Stage stage() const { return members.front().stage; }
  int dim() const { return members.front().dim(); }
  int quantities() const { return f * num_inputs; }
  int padding_lanes() const;
  bool lane_idle(int lane) const { return slot_idle[lane_map[lane].quantity]; }
  /// Input tensor slot (0 or 1) feeding a lane.
  int lane_input(int lane) const { return lane_map[lane].quantity / f; }
  /// Per-lane extents before/after the kernel (direction 0 divided by s on the quadrature side).
  Extents lane_input_extents() const;
  Extents lane_output_extents() const;
  Extents lane_quad_extents() const;
};

/// Key under which kernels may share a vectorized kernel: stage, bounds and facet normal.
struct ParallelKey
{
  Stage stage = Stage::Evaluation;
  Extents m;
  Extents n;
  int normal_direction = -1;

  friend bool operator==(const ParallelKey&, const ParallelKey&) = default;
  friend auto operator<=>(const ParallelKey&, const ParallelKey&) = default;
};

ParallelKey parallel_key(const SumfactKernelSpec& spec);

/**
 * Builds the stacked matrices of a kernel group. Throws std::invalid_argument
 * when members are not fusable, m_0 is not divisible by s, f * s * num_inputs
 * != w, an input has more than f members, or the number of distinct input ids
 * differs from num_inputs (at most 2). When lane_map is given it must equal
 * the canonical layout; layouts separating slices of one quantity are rejected.
 */
VectorizedKernel build_vectorized_kernel(std::vector<SumfactKernelSpec> members, int f, int s, int w,
                                         int num_inputs, std::vector<int> member_ids = {},
                                         std::optional<std::vector<LaneSlot>> lane_map = std::nullopt);

/// Exact (bitwise) equality of the flattened data.
bool vec_identity_check(const Tensor<double>& original, const InterleavedTensor<double>& slices_interleaved);

} // namespace sfdg
