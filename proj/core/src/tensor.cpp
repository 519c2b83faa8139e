#include "sfdg/tensor.hpp"

#include <sstream>

namespace sfdg
{

std::string to_string(std::span<const int> dims)
{
  std::ostringstream os;
  os << '(';
  for (std::size_t k = 0; k < dims.size(); ++k)
    os << (k ? "," : "") << dims[k];
  os << ')';
  return os.str();
}

void for_each_index(std::span<const int> dims, const std::function<void(std::span<const int>)>& fn)
{
  std::vector<int> index(dims.size(), 0);
  const std::size_t total = extent_product(dims);
  for (std::size_t flat = 0; flat < total; ++flat)
  {
    fn(index);
    for (std::size_t k = 0; k < dims.size(); ++k)
    {
      if (++index[k] < dims[k])
        break;
      index[k] = 0;
    }
  }
}

Tensor<double> kronecker_apply_naive(std::span<const KernelMatrix> matrices, const Tensor<double>& x)
{
  if (matrices.size() != x.dims().size())
    throw std::invalid_argument("kronecker_apply_naive: " + std::to_string(matrices.size()) +
                                " matrices for a rank " + std::to_string(x.rank()) + " tensor");
  Extents out_dims(matrices.size());
  for (std::size_t k = 0; k < matrices.size(); ++k)
  {
    if (matrices[k].cols != x.dims()[k])
      throw std::invalid_argument("kronecker_apply_naive: matrix " + std::to_string(k) + " has " +
                                  std::to_string(matrices[k].cols) + " columns, tensor extent is " +
                                  std::to_string(x.dims()[k]));
    out_dims[k] = matrices[k].rows;
  }

  Tensor<double> out(out_dims);
  for_each_index(out_dims, [&](std::span<const int> i) {
    double sum = 0.0;
    for_each_index(x.dims(), [&](std::span<const int> j) {
      double product = x.at(j);
      for (std::size_t k = 0; k < matrices.size(); ++k)
        product *= matrices[k](i[k], j[k]);
      sum += product;
    });
    out.at(i) = sum;
  });
  return out;
}

} // namespace sfdg
