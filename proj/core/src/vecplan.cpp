#include "sfdg/vecplan.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>
#include <string>

namespace sfdg
{

StackedMatrix stack_matrices(std::span<const KernelMatrix> mats, int lanes)
{
  if (lanes < 1 || static_cast<int>(mats.size()) != lanes)
    throw std::invalid_argument("stack_matrices: expected " + std::to_string(lanes) + " matrices, got " +
                                std::to_string(mats.size()));
  const KernelMatrix& first = mats.front();
  StackedMatrix out;
  out.rows = first.rows;
  out.cols = first.cols;
  out.lanes = lanes;
  out.broadcast = true;
  for (const auto& m : mats)
  {
    if (!m.same_shape(first))
      throw std::invalid_argument("stack_matrices: shape mismatch");
    if (m.entries != first.entries)
      out.broadcast = false;
  }
  out.data.resize(first.entries.size() * lanes);
  for (int i = 0; i < out.rows; ++i)
    for (int j = 0; j < out.cols; ++j)
      for (int l = 0; l < lanes; ++l)
        out.data[(static_cast<std::size_t>(i) * out.cols + j) * lanes + l] = mats[l](i, j);
  return out;
}

std::vector<KernelMatrix> slice_matrix_circular(const KernelMatrix& mat, int s)
{
  if (s < 1 || mat.rows % s != 0)
    throw std::invalid_argument("slice_matrix_circular: " + std::to_string(mat.rows) + " rows not divisible by " +
                                std::to_string(s) + " slices");
  std::vector<KernelMatrix> slices;
  slices.reserve(s);
  const int rows = mat.rows / s;
  for (int r = 0; r < s; ++r)
  {
    KernelMatrix slice{rows, mat.cols, std::vector<double>(static_cast<std::size_t>(rows) * mat.cols), mat.kind};
    for (int p = 0; p < rows; ++p)
      for (int j = 0; j < mat.cols; ++j)
        slice(p, j) = mat(p * s + r, j);
    slices.push_back(std::move(slice));
  }
  return slices;
}

KernelMatrix transpose(const KernelMatrix& mat)
{
  KernelMatrix t{mat.cols, mat.rows, std::vector<double>(mat.entries.size()), mat.kind};
  for (int i = 0; i < mat.rows; ++i)
    for (int j = 0; j < mat.cols; ++j)
      t(j, i) = mat(i, j);
  return t;
}

int VectorizedKernel::padding_lanes() const
{
  int idle = 0;
  for (int l = 0; l < w; ++l)
    idle += lane_idle(l) ? 1 : 0;
  return idle;
}

Extents VectorizedKernel::lane_quad_extents() const
{
  Extents m = members.front().quad_extents();
  m[0] /= s;
  return m;
}

Extents VectorizedKernel::lane_input_extents() const
{
  return stage() == Stage::Evaluation ? members.front().coeff_extents() : lane_quad_extents();
}

Extents VectorizedKernel::lane_output_extents() const
{
  return stage() == Stage::Evaluation ? lane_quad_extents() : members.front().coeff_extents();
}

ParallelKey parallel_key(const SumfactKernelSpec& spec)
{
  return ParallelKey{spec.stage, spec.quad_extents(), spec.coeff_extents(),
                     spec.embedding ? spec.embedding->normal_direction : -1};
}

VectorizedKernel build_vectorized_kernel(std::vector<SumfactKernelSpec> members, int f, int s, int w, int num_inputs,
                                         std::vector<int> member_ids, std::optional<std::vector<LaneSlot>> lane_map)
{
  if (members.empty())
    throw std::invalid_argument("build_vectorized_kernel: no members");
  if (num_inputs < 1 || num_inputs > 2)
    throw std::invalid_argument("build_vectorized_kernel: at most two input tensors can be fused, got " +
                                std::to_string(num_inputs));
  if (f < 1 || s < 1 || f * s * num_inputs != w)
    throw std::invalid_argument("build_vectorized_kernel: f*s*inputs = " + std::to_string(f * s * num_inputs) +
                                " does not match width " + std::to_string(w));
  if (member_ids.empty())
    for (std::size_t i = 0; i < members.size(); ++i)
      member_ids.push_back(static_cast<int>(i));
  if (member_ids.size() != members.size())
    throw std::invalid_argument("build_vectorized_kernel: member id list has wrong length");

  const ParallelKey key = parallel_key(members.front());
  for (const auto& m : members)
  {
    validate(m);
    if (!(parallel_key(m) == key))
      throw std::invalid_argument("build_vectorized_kernel: members differ in stage, bounds or facet normal");
  }
  const int m0 = key.m[0];
  if (m0 % s != 0)
    throw std::invalid_argument("build_vectorized_kernel: " + std::to_string(m0) +
                                " quadrature points in direction 0 not divisible by " + std::to_string(s) + " slices");

  // Group members by input id, keeping first-appearance order.
  std::vector<int> input_ids;
  std::vector<std::vector<int>> by_input;
  for (std::size_t i = 0; i < members.size(); ++i)
  {
    auto it = std::find(input_ids.begin(), input_ids.end(), members[i].input_id);
    if (it == input_ids.end())
    {
      input_ids.push_back(members[i].input_id);
      by_input.emplace_back();
      it = input_ids.end() - 1;
    }
    by_input[it - input_ids.begin()].push_back(static_cast<int>(i));
  }
  if (static_cast<int>(input_ids.size()) != num_inputs)
    throw std::invalid_argument("build_vectorized_kernel: members read " + std::to_string(input_ids.size()) +
                                " distinct inputs, layout expects " + std::to_string(num_inputs));
  for (const auto& group : by_input)
    if (static_cast<int>(group.size()) > f)
      throw std::invalid_argument("build_vectorized_kernel: more than f = " + std::to_string(f) +
                                  " members for one input");

  VectorizedKernel vk;
  vk.f = f;
  vk.s = s;
  vk.w = w;
  vk.num_inputs = num_inputs;
  vk.input_ids = input_ids;

  // Reorder members input-major.
  for (const auto& group : by_input)
    for (int i : group)
    {
      vk.members.push_back(members[i]);
      vk.member_ids.push_back(member_ids[i]);
    }

  int offset = 0;
  for (const auto& group : by_input)
  {
    const int live = static_cast<int>(group.size());
    for (int t = 0; t < f; ++t)
    {
      vk.slot_member.push_back(offset + std::min(t, live - 1));
      vk.slot_idle.push_back(t >= live);
    }
    offset += live;
  }

  for (int q = 0; q < vk.quantities(); ++q)
    for (int r = 0; r < s; ++r)
      vk.lane_map.push_back({q, r});
  if (lane_map)
  {
    if (static_cast<int>(lane_map->size()) != w)
      throw std::invalid_argument("build_vectorized_kernel: lane map must have one entry per lane");
    if (*lane_map != vk.lane_map)
      throw std::invalid_argument("build_vectorized_kernel: lane map does not place slices of a quantity in "
                                  "adjacent lanes (expected lane = quantity * s + slice)");
  }

  const int d = key.m.size();
  const bool transposed = key.stage == Stage::TestMultiply;
  for (int k = 0; k < d; ++k)
  {
    std::vector<KernelMatrix> per_lane;
    per_lane.reserve(w);
    std::vector<std::vector<KernelMatrix>> sliced(vk.members.size());
    for (int l = 0; l < w; ++l)
    {
      const LaneSlot slot = vk.lane_map[l];
      const int member = vk.slot_member[slot.quantity];
      const KernelMatrix& mat = vk.members[member].matrices[k];
      if (k == 0 && s > 1)
      {
        if (sliced[member].empty())
          sliced[member] = slice_matrix_circular(mat, s);
        per_lane.push_back(transposed ? transpose(sliced[member][slot.slice]) : sliced[member][slot.slice]);
      }
      else
        per_lane.push_back(transposed ? transpose(mat) : mat);
    }
    vk.stacked.push_back(stack_matrices(per_lane, w));
  }
  return vk;
}

bool vec_identity_check(const Tensor<double>& original, const InterleavedTensor<double>& slices_interleaved)
{
  const auto flat = slices_interleaved.logical_data();
  if (flat.size() != original.size())
    return false;
  return std::memcmp(flat.data(), original.data().data(), flat.size() * sizeof(double)) == 0;
}

} // namespace sfdg
