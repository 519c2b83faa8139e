#pragma once

// Independent reference implementations used by the tests.

#include <cstdint>
#include <random>
#include <vector>

#include "sfdg/basis.hpp"
#include "sfdg/sumfact.hpp"
#include "sfdg/tensor.hpp"

namespace sfdg::oracle
{

/// Lagrange polynomial j of the nodes at x by the product formula.
double lagrange_product(const std::vector<double>& nodes, int j, double x);
/// Its derivative by the product rule.
double lagrange_product_derivative(const std::vector<double>& nodes, int j, double x);

/// y = (A_{d-1} x ... x A_0) x by explicit summation over all index pairs.
std::vector<double> brute_force_kron(const std::vector<KernelMatrix>& mats, const std::vector<double>& x);

/// Multiply-add count of a direction-by-direction contraction, counted by walking the loops.
std::int64_t simulated_flops(const std::vector<int>& m, const std::vector<int>& n);

KernelMatrix random_matrix(int rows, int cols, std::mt19937_64& rng, MatrixKind kind = MatrixKind::Evaluation);
Tensor<double> random_tensor(const Extents& dims, std::mt19937_64& rng);

/// Kernel with random matrices of the given m and n.
SumfactKernelSpec random_kernel(const std::vector<int>& m, const std::vector<int>& n, std::mt19937_64& rng,
                                Stage stage = Stage::Evaluation, int input_id = 0);

double max_abs(const std::vector<double>& v);
double relative_inf_error(const std::vector<double>& a, const std::vector<double>& b);

} // namespace sfdg::oracle
