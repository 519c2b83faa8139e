#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sfdg/simd_exec.hpp"
#include "sfdg/vecplan.hpp"

using namespace sfdg;

namespace
{

std::vector<SumfactKernelSpec> same_shape_kernels(int count, std::mt19937_64& rng, std::vector<int> m = {4, 3, 3},
                                                  std::vector<int> n = {3, 3, 3})
{
  std::vector<SumfactKernelSpec> out;
  for (int i = 0; i < count; ++i)
    out.push_back(oracle::random_kernel(m, n, rng));
  return out;
}

} // namespace

TEST(StackMatrices, LaneIsFastest)
{
  std::mt19937_64 rng(1);
  std::vector<KernelMatrix> mats{oracle::random_matrix(2, 3, rng), oracle::random_matrix(2, 3, rng)};
  const auto st = stack_matrices(mats, 2);
  EXPECT_FALSE(st.broadcast);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j)
      for (int l = 0; l < 2; ++l)
      {
        EXPECT_EQ(st(i, j, l), mats[l](i, j));
        EXPECT_EQ(st.data[(i * 3 + j) * 2 + l], mats[l](i, j));
      }
  std::vector<KernelMatrix> same{mats[0], mats[0], mats[0], mats[0]};
  EXPECT_TRUE(stack_matrices(same, 4).broadcast);
}

TEST(StackMatrices, RejectsShapeMismatch)
{
  std::mt19937_64 rng(1);
  std::vector<KernelMatrix> mats{oracle::random_matrix(2, 3, rng), oracle::random_matrix(3, 3, rng)};
  EXPECT_THROW(stack_matrices(mats, 2), std::invalid_argument);
  EXPECT_THROW(stack_matrices(mats, 4), std::invalid_argument);
}

TEST(SliceCircular, RowsInterleaveBySlice)
{
  std::mt19937_64 rng(2);
  const auto a = oracle::random_matrix(8, 3, rng);
  const auto slices = slice_matrix_circular(a, 4);
  ASSERT_EQ(slices.size(), 4u);
  for (int r = 0; r < 4; ++r)
  {
    EXPECT_EQ(slices[r].rows, 2);
    for (int p = 0; p < 2; ++p)
      for (int j = 0; j < 3; ++j)
        EXPECT_EQ(slices[r](p, j), a(p * 4 + r, j));
  }
  EXPECT_THROW(slice_matrix_circular(oracle::random_matrix(6, 3, rng), 4), std::invalid_argument);
}

TEST(BuildVectorizedKernel, FusionLayout)
{
  std::mt19937_64 rng(3);
  const auto members = same_shape_kernels(4, rng);
  const auto vk = build_vectorized_kernel(members, 4, 1, 4, 1);
  EXPECT_EQ(vk.quantities(), 4);
  EXPECT_EQ(vk.padding_lanes(), 0);
  ASSERT_EQ(vk.stacked.size(), 3u);
  for (int l = 0; l < 4; ++l)
    EXPECT_EQ(vk.stacked[1](2, 1, l), members[l].matrices[1](2, 1));
}

TEST(BuildVectorizedKernel, PaddingReplicatesLastMember)
{
  std::mt19937_64 rng(3);
  const auto members = same_shape_kernels(3, rng);
  const auto vk = build_vectorized_kernel(members, 4, 1, 4, 1);
  EXPECT_EQ(vk.padding_lanes(), 1);
  EXPECT_TRUE(vk.lane_idle(3));
  EXPECT_EQ(vk.slot_member[3], 2);
  EXPECT_EQ(vk.stacked[0](1, 1, 3), members[2].matrices[0](1, 1));
}

TEST(BuildVectorizedKernel, HybridLanesKeepSlicesAdjacent)
{
  std::mt19937_64 rng(4);
  const auto members = same_shape_kernels(2, rng);
  const auto vk = build_vectorized_kernel(members, 2, 2, 4, 1);
  EXPECT_EQ(vk.lane_quad_extents(), (Extents{2, 3, 3}));
  const std::vector<LaneSlot> expected{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  EXPECT_EQ(vk.lane_map, expected);
  // Lane 1 carries slice 1 of member 0: rows 1, 3 of its direction-0 matrix.
  EXPECT_EQ(vk.stacked[0](1, 2, 1), members[0].matrices[0](3, 2));
  std::vector<LaneSlot> scattered{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  EXPECT_THROW(build_vectorized_kernel(members, 2, 2, 4, 1, {}, scattered), std::invalid_argument);
}

TEST(BuildVectorizedKernel, TwoInputsFillLaneHalves)
{
  std::mt19937_64 rng(5);
  auto members = same_shape_kernels(2, rng);
  members[1].input_id = 1;
  const auto vk = build_vectorized_kernel(members, 1, 2, 4, 2);
  EXPECT_EQ(vk.lane_input(0), 0);
  EXPECT_EQ(vk.lane_input(1), 0);
  EXPECT_EQ(vk.lane_input(2), 1);
  EXPECT_EQ(vk.lane_input(3), 1);
  EXPECT_EQ(vk.input_ids, (std::vector<int>{0, 1}));
}

TEST(BuildVectorizedKernel, RejectsInvalidLayouts)
{
  std::mt19937_64 rng(6);
  auto members = same_shape_kernels(4, rng, {5, 3, 3});
  EXPECT_THROW(build_vectorized_kernel({members[0]}, 1, 4, 4, 1), std::invalid_argument); // 5 % 4
  EXPECT_THROW(build_vectorized_kernel(members, 2, 1, 4, 1), std::invalid_argument);      // f*s != w
  EXPECT_THROW(build_vectorized_kernel(members, 2, 2, 4, 1), std::invalid_argument);      // > f per input
  EXPECT_THROW(build_vectorized_kernel({members[0]}, 2, 1, 4, 2), std::invalid_argument); // one input, p = 2
  auto other = oracle::random_kernel({5, 3, 2}, {3, 3, 3}, rng);
  EXPECT_THROW(build_vectorized_kernel({members[0], other}, 2, 1, 2, 1), std::invalid_argument);
  auto third = members;
  third[1].input_id = 1;
  third[2].input_id = 2;
  EXPECT_THROW(build_vectorized_kernel({third[0], third[1], third[2]}, 1, 1, 3, 3), std::invalid_argument);
}

TEST(ParallelKey, SideDoesNotSeparateFacetKernels)
{
  std::mt19937_64 rng(7);
  auto a = oracle::random_kernel({1, 3, 3}, {3, 3, 3}, rng);
  auto b = a;
  a.embedding = FaceEmbedding{0, Side::Upper};
  b.embedding = FaceEmbedding{0, Side::Lower};
  EXPECT_EQ(parallel_key(a), parallel_key(b));
  b.embedding = FaceEmbedding{1, Side::Lower};
  EXPECT_FALSE(parallel_key(a) == parallel_key(b));
  b.embedding.reset();
  b.stage = Stage::TestMultiply;
  EXPECT_FALSE(parallel_key(a) == parallel_key(b));
}

TEST(VecIdentity, SlicedOutputEqualsFlatTensorBitwise)
{
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> ext(2, 5);
  for (int s : {2, 4, 8})
  {
    std::vector<int> m{2 * s, ext(rng), ext(rng)}, n{ext(rng), ext(rng), ext(rng)};
    const auto spec = oracle::random_kernel(m, n, rng);
    const auto x = oracle::random_tensor(n, rng);
    const auto full = sumfact_apply(spec, x);
    const auto vk = build_vectorized_kernel({spec}, 1, s, s, 1);
    std::vector<Tensor<double>> inputs{x};
    const auto sliced = exec_vectorized<double>(vk, inputs);
    EXPECT_TRUE(vec_identity_check(full, sliced));
  }
}
