#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sfdg/counting_scalar.hpp"
#include "sfdg/sumfact.hpp"

using namespace sfdg;

TEST(Sumfact, MatchesNaiveProduct)
{
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> deg(1, 4), pts(1, 6);
  for (int d = 2; d <= 3; ++d)
    for (int trial = 0; trial < 25; ++trial)
    {
      std::vector<int> m(d), n(d);
      for (int j = 0; j < d; ++j)
      {
        m[j] = pts(rng);
        n[j] = deg(rng) + 1;
      }
      const auto spec = oracle::random_kernel(m, n, rng);
      const auto x = oracle::random_tensor(n, rng);
      const auto y = sumfact_apply(spec, x);
      const auto ref = kronecker_apply_naive(spec.matrices, x);
      EXPECT_LE(oracle::relative_inf_error(y.storage(), ref.storage()), 1e-13);
    }
}

TEST(Sumfact, IdentityKernelIsIdentity)
{
  std::mt19937_64 rng(1);
  SumfactKernelSpec spec;
  spec.matrices = {identity_matrix(3), identity_matrix(4), identity_matrix(2)};
  const auto x = oracle::random_tensor({3, 4, 2}, rng);
  EXPECT_EQ(sumfact_apply(spec, x), x);
}

TEST(Sumfact, TestMultiplyUsesTransposesAndAccumulates)
{
  std::mt19937_64 rng(5);
  auto spec = oracle::random_kernel({4, 3, 5}, {2, 3, 3}, rng, Stage::TestMultiply);
  const auto x = oracle::random_tensor(spec.quad_extents(), rng);
  std::vector<KernelMatrix> transposed;
  for (const auto& a : spec.matrices)
  {
    KernelMatrix t{a.cols, a.rows, std::vector<double>(a.entries.size())};
    for (int i = 0; i < a.rows; ++i)
      for (int j = 0; j < a.cols; ++j)
        t(j, i) = a(i, j);
    transposed.push_back(t);
  }
  const auto ref = oracle::brute_force_kron(transposed, x.storage());

  std::vector<double> out(ref.size(), 1.0);
  SumfactScratch<double> scratch;
  sumfact_apply<double>(spec, x.data(), out, scratch);
  for (std::size_t i = 0; i < ref.size(); ++i)
    EXPECT_NEAR(out[i], ref[i] + 1.0, 1e-13);
}

TEST(Sumfact, RejectsWrongExtents)
{
  std::mt19937_64 rng(2);
  const auto spec = oracle::random_kernel({3, 3}, {2, 2}, rng);
  EXPECT_THROW(sumfact_apply(spec, Tensor<double>({3, 2})), std::invalid_argument);
  SumfactKernelSpec empty;
  EXPECT_THROW(validate(empty), std::invalid_argument);
}

TEST(FlopCost, KnownValue)
{
  const std::vector<int> two{2, 2, 2};
  EXPECT_EQ(flop_cost(two, two), 96);
}

TEST(FlopCost, MatchesLoopSimulation)
{
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> e(1, 7);
  for (int trial = 0; trial < 40; ++trial)
  {
    const int d = 1 + trial % 3;
    std::vector<int> m(d), n(d);
    for (int j = 0; j < d; ++j)
    {
      m[j] = e(rng);
      n[j] = e(rng);
    }
    EXPECT_EQ(flop_cost(m, n), oracle::simulated_flops(m, n));
  }
}

TEST(FlopCost, CountedOperationsMatch)
{
  std::mt19937_64 rng(4);
  for (const auto& [m, n] : std::vector<std::pair<std::vector<int>, std::vector<int>>>{
           {{2, 2, 2}, {2, 2, 2}}, {{4, 5, 6}, {3, 3, 3}}, {{7, 3}, {2, 5}}, {{1, 4, 4}, {4, 4, 4}}})
  {
    const auto spec = oracle::random_kernel(m, n, rng);
    std::vector<CountingScalar> x(extent_product(n), CountingScalar(0.5)), y(extent_product(m));
    SumfactScratch<CountingScalar> scratch;
    reset_flop_counter();
    sumfact_apply<CountingScalar>(spec, x, y, scratch);
    EXPECT_EQ(static_cast<std::int64_t>(flop_counter().total()), flop_cost(m, n));
  }
}

TEST(FlopCost, SlicingDividesDirectionZero)
{
  std::mt19937_64 rng(4);
  const auto spec = oracle::random_kernel({8, 4, 4}, {4, 4, 4}, rng);
  EXPECT_EQ(kernel_flop_cost(spec, 4), flop_cost(std::vector<int>{2, 4, 4}, std::vector<int>{4, 4, 4}));
  EXPECT_EQ(4 * kernel_flop_cost(spec, 4), kernel_flop_cost(spec, 1));
  EXPECT_THROW(kernel_flop_cost(spec, 3), std::invalid_argument);
  const auto test = oracle::random_kernel({8, 4, 4}, {4, 4, 4}, rng, Stage::TestMultiply);
  EXPECT_EQ(kernel_flop_cost(test), flop_cost(std::vector<int>{4, 4, 4}, std::vector<int>{8, 4, 4}));
}

TEST(QuadratureIncrease, Factors)
{
  EXPECT_EQ(quadrature_increase_factor(3, 4), (Rational{4, 3}));
  EXPECT_EQ(quadrature_increase_factor(5, 4), (Rational{8, 5}));
  EXPECT_EQ(quadrature_increase_factor(8, 4), (Rational{1, 1}));
  EXPECT_EQ(quadrature_increase_factor(2, 8), (Rational{4, 1}));
}

TEST(Sumfact, ScratchSizeCoversIntermediates)
{
  EXPECT_EQ(sumfact_scratch_size(std::vector<int>{2, 2, 2}, std::vector<int>{6, 6, 6}), 216u);
  EXPECT_EQ(sumfact_scratch_size(std::vector<int>{6, 6, 6}, std::vector<int>{2, 2, 2}), 72u);
}
