#pragma once

// Dense d-way tensors. Flattening convention: index 0 is fastest,
//   offset(i_0, ..., i_{d-1}) = i_0 + n_0 * (i_1 + n_1 * (i_2 + ...)).

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfdg/basis.hpp"

namespace sfdg
{

using Extents = std::vector<int>;

inline std::size_t extent_product(std::span<const int> dims)
{
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         [](std::size_t acc, int n) { return acc * static_cast<std::size_t>(n); });
}

inline std::size_t flat_offset(std::span<const int> dims, std::span<const int> index)
{
  std::size_t offset = 0;
  for (std::size_t k = dims.size(); k-- > 0;)
    offset = offset * static_cast<std::size_t>(dims[k]) + static_cast<std::size_t>(index[k]);
  return offset;
}

std::string to_string(std::span<const int> dims);

template <typename T>
class Tensor
{
public:
  Tensor() = default;

  explicit Tensor(Extents dims) : dims_(std::move(dims)), data_(extent_product(dims_), T{}) { check_dims(); }

  Tensor(Extents dims, std::vector<T> data) : dims_(std::move(dims)), data_(std::move(data))
  {
    check_dims();
    if (data_.size() != extent_product(dims_))
      throw std::invalid_argument("Tensor: data length " + std::to_string(data_.size()) +
                                  " does not match extents " + to_string(dims_));
  }

  const Extents& dims() const { return dims_; }
  int rank() const { return static_cast<int>(dims_.size()); }
  std::size_t size() const { return data_.size(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& operator[](std::size_t flat) { return data_[flat]; }
  const T& operator[](std::size_t flat) const { return data_[flat]; }

  T& at(std::span<const int> index) { return data_[flat_offset(dims_, index)]; }
  const T& at(std::span<const int> index) const { return data_[flat_offset(dims_, index)]; }
  T& at(std::initializer_list<int> index) { return at(std::span<const int>(index.begin(), index.size())); }
  const T& at(std::initializer_list<int> index) const
  {
    return at(std::span<const int>(index.begin(), index.size()));
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

private:
  void check_dims() const
  {
    for (int n : dims_)
      if (n < 1)
        throw std::invalid_argument("Tensor: extents must be positive, got " + to_string(dims_));
  }

  Extents dims_;
  std::vector<T> data_;
};

/// Scalars per lane used when rounding interleaved allocations up.
inline constexpr int interleave_pad_width = 8;

/**
 * A stack of L tensors with identical extents, the lane axis having stride 1:
 * element (index, lane) lives at offset(index) * L + lane. Storage is
 * rounded up to a multiple of L * 8 scalars so that full-width blocks may run
 * past the logical end.
 */
template <typename T>
class InterleavedTensor
{
public:
  InterleavedTensor() = default;

  InterleavedTensor(Extents dims, int lanes) : dims_(std::move(dims)), lanes_(lanes)
  {
    if (lanes_ < 1)
      throw std::invalid_argument("InterleavedTensor: lanes must be positive");
    const std::size_t block = static_cast<std::size_t>(lanes_) * interleave_pad_width;
    const std::size_t logical = logical_size();
    data_.assign((logical + block - 1) / block * block, T{});
  }

  const Extents& dims() const { return dims_; }
  int lanes() const { return lanes_; }
  std::size_t elements() const { return extent_product(dims_); }
  std::size_t logical_size() const { return elements() * static_cast<std::size_t>(lanes_); }
  std::size_t padded_size() const { return data_.size(); }

  T& operator()(std::size_t flat, int lane) { return data_[flat * lanes_ + lane]; }
  const T& operator()(std::size_t flat, int lane) const { return data_[flat * lanes_ + lane]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  /// Logical part only (without the padding).
  std::span<const T> logical_data() const { return std::span<const T>(data_).first(logical_size()); }

private:
  Extents dims_;
  int lanes_ = 1;
  std::vector<T> data_;
};

template <typename T>
InterleavedTensor<T> interleave(std::span<const Tensor<T>> tensors)
{
  if (tensors.empty())
    throw std::invalid_argument("interleave: empty tensor list");
  const Extents& dims = tensors.front().dims();
  for (const auto& t : tensors)
    if (t.dims() != dims)
      throw std::invalid_argument("interleave: mismatched extents " + to_string(t.dims()) + " vs " +
                                  to_string(dims));
  const int lanes = static_cast<int>(tensors.size());
  InterleavedTensor<T> out(dims, lanes);
  const std::size_t n = out.elements();
  for (int lane = 0; lane < lanes; ++lane)
    for (std::size_t i = 0; i < n; ++i)
      out(i, lane) = tensors[lane][i];
  return out;
}

template <typename T>
InterleavedTensor<T> interleave(const std::vector<Tensor<T>>& tensors)
{
  return interleave(std::span<const Tensor<T>>(tensors));
}

template <typename T>
std::vector<Tensor<T>> deinterleave(const InterleavedTensor<T>& t)
{
  std::vector<Tensor<T>> out;
  out.reserve(t.lanes());
  const std::size_t n = t.elements();
  for (int lane = 0; lane < t.lanes(); ++lane)
  {
    std::vector<T> data(n);
    for (std::size_t i = 0; i < n; ++i)
      data[i] = t(i, lane);
    out.emplace_back(t.dims(), std::move(data));
  }
  return out;
}

/// Unfactorized Kronecker product application, O(p^{2d}). Reference only.
Tensor<double> kronecker_apply_naive(std::span<const KernelMatrix> matrices, const Tensor<double>& x);

/// Calls fn(index) for every multi-index of dims in flat (vec) order.
void for_each_index(std::span<const int> dims, const std::function<void(std::span<const int>)>& fn);

} // namespace sfdg
