#include "sfdg/basis.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sfdg
{

namespace
{

// Legendre polynomial P_m(t) and its derivative by the three-term recurrence.
std::pair<double, double> legendre_with_derivative(int m, double t)
{
  double p0 = 1.0;
  double p1 = t;
  if (m == 0)
    return {1.0, 0.0};
  for (int k = 2; k <= m; ++k)
  {
    const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  const double dp = m * (t * p1 - p0) / (t * t - 1.0);
  return {p1, dp};
}

} // namespace

QuadratureRule1D gauss_legendre(int m)
{
  if (m < 1)
    throw std::invalid_argument("gauss_legendre: number of points must be positive, got " + std::to_string(m));

  QuadratureRule1D rule;
  rule.points.resize(m);
  rule.weights.resize(m);
  rule.order = 2 * m - 1;

  if (m == 1)
  {
    rule.points[0] = 0.5;
    rule.weights[0] = 1.0;
    return rule;
  }

  constexpr double tolerance = 1e-15;
  constexpr int max_iterations = 100;

  // Roots come in symmetric pairs; compute the negative half and mirror.
  for (int i = 0; i < (m + 1) / 2; ++i)
  {
    double t = -std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < max_iterations; ++it)
    {
      const auto [p, d] = legendre_with_derivative(m, t);
      dp = d;
      const double step = p / d;
      t -= step;
      if (std::abs(step) <= tolerance)
        break;
    }
    dp = legendre_with_derivative(m, t).second;
    const double w = 2.0 / ((1.0 - t * t) * dp * dp);

    rule.points[i] = 0.5 * (1.0 + t);
    rule.weights[i] = 0.5 * w;
    rule.points[m - 1 - i] = 0.5 * (1.0 - t);
    rule.weights[m - 1 - i] = 0.5 * w;
  }
  if (m % 2 == 1)
    rule.points[m / 2] = 0.5;
  return rule;
}

Basis1D::Basis1D(std::vector<double> nodes) : nodes_(std::move(nodes))
{
  if (nodes_.size() < 2)
    throw std::invalid_argument("Basis1D: need at least two nodes");
  const int n = size();
  bary_.assign(n, 1.0);
  for (int j = 0; j < n; ++j)
  {
    for (int i = 0; i < n; ++i)
    {
      if (i == j)
        continue;
      const double diff = nodes_[j] - nodes_[i];
      if (diff == 0.0)
        throw std::invalid_argument("Basis1D: nodes must be pairwise distinct");
      bary_[j] /= diff;
    }
  }
}

void Basis1D::values(double x, std::span<double> out) const
{
  const int n = size();
  for (int j = 0; j < n; ++j)
  {
    if (x == nodes_[j])
    {
      for (int i = 0; i < n; ++i)
        out[i] = i == j ? 1.0 : 0.0;
      return;
    }
  }
  double denominator = 0.0;
  for (int j = 0; j < n; ++j)
  {
    out[j] = bary_[j] / (x - nodes_[j]);
    denominator += out[j];
  }
  for (int j = 0; j < n; ++j)
    out[j] /= denominator;
}

void Basis1D::derivatives(double x, std::span<double> out) const
{
  const int n = size();
  for (int k = 0; k < n; ++k)
  {
    if (x != nodes_[k])
      continue;
    double diagonal = 0.0;
    for (int j = 0; j < n; ++j)
    {
      if (j == k)
        continue;
      out[j] = (bary_[j] / bary_[k]) / (nodes_[k] - nodes_[j]);
      diagonal -= out[j];
    }
    out[k] = diagonal;
    return;
  }

  std::vector<double> ell(n);
  values(x, ell);
  for (int j = 0; j < n; ++j)
  {
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
      if (i != j)
        sum += 1.0 / (x - nodes_[i]);
    out[j] = ell[j] * sum;
  }
}

std::vector<double> Basis1D::values(double x) const
{
  std::vector<double> out(size());
  values(x, out);
  return out;
}

std::vector<double> Basis1D::derivatives(double x) const
{
  std::vector<double> out(size());
  derivatives(x, out);
  return out;
}

Basis1D equidistant_basis(int degree)
{
  if (degree < 1)
    throw std::invalid_argument("equidistant_basis: degree must be >= 1, got " + std::to_string(degree));
  std::vector<double> nodes(degree + 1);
  for (int i = 0; i <= degree; ++i)
    nodes[i] = static_cast<double>(i) / degree;
  return Basis1D(std::move(nodes));
}

KernelMatrix identity_matrix(int n)
{
  KernelMatrix id{n, n, std::vector<double>(static_cast<std::size_t>(n) * n, 0.0), MatrixKind::Evaluation};
  for (int i = 0; i < n; ++i)
    id(i, i) = 1.0;
  return id;
}

namespace
{

template <typename Fill>
KernelMatrix tabulate(const Basis1D& basis, std::span<const double> points, MatrixKind kind, Fill&& fill)
{
  KernelMatrix mat;
  mat.rows = static_cast<int>(points.size());
  mat.cols = basis.size();
  mat.kind = kind;
  mat.entries.resize(static_cast<std::size_t>(mat.rows) * mat.cols);
  for (int i = 0; i < mat.rows; ++i)
    fill(points[i], std::span<double>(mat.entries).subspan(static_cast<std::size_t>(i) * mat.cols, mat.cols));
  return mat;
}

} // namespace

KernelMatrix evaluation_matrix(const Basis1D& basis, const QuadratureRule1D& rule)
{
  return tabulate(basis, rule.points, MatrixKind::Evaluation,
                  [&](double x, std::span<double> row) { basis.values(x, row); });
}

KernelMatrix derivative_matrix(const Basis1D& basis, const QuadratureRule1D& rule)
{
  return tabulate(basis, rule.points, MatrixKind::Derivative,
                  [&](double x, std::span<double> row) { basis.derivatives(x, row); });
}

KernelMatrix face_restriction_matrix(const Basis1D& basis, Side side)
{
  const double x = side_coordinate(side);
  return tabulate(basis, std::span<const double>(&x, 1), MatrixKind::FaceRestriction,
                  [&](double p, std::span<double> row) { basis.values(p, row); });
}

KernelMatrix face_derivative_matrix(const Basis1D& basis, Side side)
{
  const double x = side_coordinate(side);
  return tabulate(basis, std::span<const double>(&x, 1), MatrixKind::Derivative,
                  [&](double p, std::span<double> row) { basis.derivatives(p, row); });
}

} // namespace sfdg
