#pragma once

// Direct quadrature assembly of the SIPG residual, independent of the sum
// factorized kernels: every basis function is evaluated at every quadrature
// point as a full tensor product.

#include <vector>

#include "sfdg/dg.hpp"

namespace sfdg::oracle
{

std::vector<double> reference_residual(const GridConfig& grid, const ProblemData& data, const std::vector<double>& u,
                                       ResidualMode mode);

} // namespace sfdg::oracle
