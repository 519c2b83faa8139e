#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace sfdg::oracle
{

double lagrange_product(const std::vector<double>& nodes, int j, double x)
{
  double v = 1.0;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (static_cast<int>(i) != j)
      v *= (x - nodes[i]) / (nodes[j] - nodes[i]);
  return v;
}

double lagrange_product_derivative(const std::vector<double>& nodes, int j, double x)
{
  double sum = 0.0;
  for (std::size_t l = 0; l < nodes.size(); ++l)
  {
    if (static_cast<int>(l) == j)
      continue;
    double term = 1.0 / (nodes[j] - nodes[l]);
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (static_cast<int>(i) != j && i != l)
        term *= (x - nodes[i]) / (nodes[j] - nodes[i]);
    sum += term;
  }
  return sum;
}

std::vector<double> brute_force_kron(const std::vector<KernelMatrix>& mats, const std::vector<double>& x)
{
  const int d = static_cast<int>(mats.size());
  std::size_t rows = 1, cols = 1;
  for (const auto& a : mats)
  {
    rows *= a.rows;
    cols *= a.cols;
  }
  std::vector<double> y(rows, 0.0);
  std::vector<int> i(d), j(d);
  for (std::size_t r = 0; r < rows; ++r)
  {
    std::size_t rr = r;
    for (int k = 0; k < d; ++k)
    {
      i[k] = static_cast<int>(rr % mats[k].rows);
      rr /= mats[k].rows;
    }
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c)
    {
      std::size_t cc = c;
      double coef = 1.0;
      for (int k = 0; k < d; ++k)
      {
        j[k] = static_cast<int>(cc % mats[k].cols);
        cc /= mats[k].cols;
        coef *= mats[k](i[k], j[k]);
      }
      acc += coef * x[c];
    }
    y[r] = acc;
  }
  return y;
}

std::int64_t simulated_flops(const std::vector<int>& m, const std::vector<int>& n)
{
  // Direction k maps n_k -> m_k; before it, directions < k already have m extents.
  std::int64_t flops = 0;
  for (std::size_t k = 0; k < m.size(); ++k)
  {
    std::int64_t outputs = 1;
    for (std::size_t j = 0; j < m.size(); ++j)
      outputs *= j <= k ? m[j] : n[j];
    for (std::int64_t o = 0; o < outputs; ++o)
      for (int a = 0; a < n[k]; ++a)
        flops += 2; // one multiply, one add
  }
  return flops;
}

KernelMatrix random_matrix(int rows, int cols, std::mt19937_64& rng, MatrixKind kind)
{
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  KernelMatrix a{rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols), kind};
  for (auto& e : a.entries)
    e = dist(rng);
  return a;
}

Tensor<double> random_tensor(const Extents& dims, std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Tensor<double> t(dims);
  for (auto& e : t.storage())
    e = dist(rng);
  return t;
}

SumfactKernelSpec random_kernel(const std::vector<int>& m, const std::vector<int>& n, std::mt19937_64& rng,
                                Stage stage, int input_id)
{
  SumfactKernelSpec spec;
  spec.stage = stage;
  spec.input_id = input_id;
  for (std::size_t k = 0; k < m.size(); ++k)
    spec.matrices.push_back(random_matrix(m[k], n[k], rng));
  return spec;
}

double max_abs(const std::vector<double>& v)
{
  double r = 0.0;
  for (double x : v)
    r = std::max(r, std::abs(x));
  return r;
}

double relative_inf_error(const std::vector<double>& a, const std::vector<double>& b)
{
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    diff = std::max(diff, std::abs(a[i] - b[i]));
  const double scale = max_abs(b);
  return scale > 0.0 ? diff / scale : diff;
}

} // namespace sfdg::oracle
