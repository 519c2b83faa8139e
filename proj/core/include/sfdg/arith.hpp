#pragma once

#include <cmath>

namespace sfdg
{

/// a * b + c. Scalar types with their own cost accounting provide a
/// non-template overload that is found by ADL and preferred.
template <typename T>
inline T muladd(const T& a, const T& b, const T& c)
{
  return a * b + c;
}

/// Doubles are fused explicitly when the target has FMA and never
/// implicitly (the library builds with -ffp-contract=off), so scalar and
/// lane-parallel code paths round identically.
inline double muladd(double a, double b, double c)
{
#ifdef __FMA__
  return std::fma(a, b, c);
#else
  return a * b + c;
#endif
}

/// Converts stored double data (basis matrices, weights) into the kernel
/// scalar type. Conversion is not an arithmetic operation.
template <typename T>
inline T from_double(double v)
{
  return T(v);
}

} // namespace sfdg
