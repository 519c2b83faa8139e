#pragma once

// One dimensional building blocks: Gauss-Legendre rules on [0,1], nodal
// Lagrange bases and the per-direction matrices consumed by sum
// factorization kernels.

#include <cstddef>
#include <span>
#include <vector>

namespace sfdg
{

struct QuadratureRule1D
{
  std::vector<double> points;
  std::vector<double> weights;
  /// Highest polynomial degree integrated exactly (2m-1).
  int order = 0;

  int size() const { return static_cast<int>(points.size()); }
};

/// m-point Gauss-Legendre rule mapped to [0,1]. Throws std::invalid_argument for m < 1.
QuadratureRule1D gauss_legendre(int m);

/**
 * Nodal Lagrange basis of degree k on [0,1].
 *
 * Values and derivatives are computed with the barycentric formula. At a
 * node the basis is evaluated exactly (Kronecker delta) and the derivative
 * falls back to the differentiation-matrix form.
 */
class Basis1D
{
public:
  explicit Basis1D(std::vector<double> nodes);

  int degree() const { return static_cast<int>(nodes_.size()) - 1; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<double>& nodes() const { return nodes_; }

  /// All basis functions at x; out.size() == size().
  void values(double x, std::span<double> out) const;
  /// All basis function derivatives at x; out.size() == size().
  void derivatives(double x, std::span<double> out) const;

  std::vector<double> values(double x) const;
  std::vector<double> derivatives(double x) const;

private:
  std::vector<double> nodes_;
  std::vector<double> bary_;
};

/// Equidistant nodes i/k, i = 0..k. Throws std::invalid_argument for k < 1.
Basis1D equidistant_basis(int degree);

enum class MatrixKind
{
  Evaluation,
  Derivative,
  FaceRestriction,
};

/// Dense row-major m x n matrix of 1D basis data at quadrature points.
struct KernelMatrix
{
  int rows = 0;
  int cols = 0;
  std::vector<double> entries;
  MatrixKind kind = MatrixKind::Evaluation;

  double operator()(int i, int j) const { return entries[static_cast<std::size_t>(i) * cols + j]; }
  double& operator()(int i, int j) { return entries[static_cast<std::size_t>(i) * cols + j]; }

  bool same_shape(const KernelMatrix& other) const { return rows == other.rows && cols == other.cols; }
  friend bool operator==(const KernelMatrix&, const KernelMatrix&) = default;
};

KernelMatrix identity_matrix(int n);

enum class Side
{
  Lower, // reference coordinate 0
  Upper, // reference coordinate 1
};

struct FaceEmbedding
{
  int normal_direction = 0;
  Side side = Side::Lower;

  friend bool operator==(const FaceEmbedding&, const FaceEmbedding&) = default;
};

inline double side_coordinate(Side side) { return side == Side::Lower ? 0.0 : 1.0; }

KernelMatrix evaluation_matrix(const Basis1D& basis, const QuadratureRule1D& rule);
KernelMatrix derivative_matrix(const Basis1D& basis, const QuadratureRule1D& rule);
KernelMatrix face_restriction_matrix(const Basis1D& basis, Side side);
/// 1 x n matrix of basis derivatives at the facet coordinate (normal derivative on a facet).
KernelMatrix face_derivative_matrix(const Basis1D& basis, Side side);

} // namespace sfdg
