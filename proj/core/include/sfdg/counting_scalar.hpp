#pragma once

// Scalar type that tallies floating point operations in a process-wide
// counter and forwards to double. A fused multiply-add counts as 2 flops.

#include <cstdint>

namespace sfdg
{

struct FlopCounter
{
  std::uint64_t adds = 0; // additions and subtractions
  std::uint64_t muls = 0;
  std::uint64_t fused = 0;
  std::uint64_t divs = 0;

  std::uint64_t total() const { return adds + muls + 2 * fused + divs; }

  friend FlopCounter operator-(const FlopCounter& a, const FlopCounter& b)
  {
    return {a.adds - b.adds, a.muls - b.muls, a.fused - b.fused, a.divs - b.divs};
  }
  friend bool operator==(const FlopCounter&, const FlopCounter&) = default;
};

inline FlopCounter& flop_counter()
{
  static FlopCounter counter;
  return counter;
}

inline void reset_flop_counter()
{
  flop_counter() = FlopCounter{};
}

class CountingScalar
{
public:
  CountingScalar() = default;
  CountingScalar(double v) : value_(v) {}

  double value() const { return value_; }

  friend CountingScalar operator+(CountingScalar a, CountingScalar b)
  {
    ++flop_counter().adds;
    return a.value_ + b.value_;
  }
  friend CountingScalar operator-(CountingScalar a, CountingScalar b)
  {
    ++flop_counter().adds;
    return a.value_ - b.value_;
  }
  friend CountingScalar operator*(CountingScalar a, CountingScalar b)
  {
    ++flop_counter().muls;
    return a.value_ * b.value_;
  }
  friend CountingScalar operator/(CountingScalar a, CountingScalar b)
  {
    ++flop_counter().divs;
    return a.value_ / b.value_;
  }
  // Sign flips are not counted.
  friend CountingScalar operator-(CountingScalar a) { return -a.value_; }

  CountingScalar& operator+=(CountingScalar b) { return *this = *this + b; }
  CountingScalar& operator-=(CountingScalar b) { return *this = *this - b; }
  CountingScalar& operator*=(CountingScalar b) { return *this = *this * b; }
  CountingScalar& operator/=(CountingScalar b) { return *this = *this / b; }

  friend CountingScalar muladd(const CountingScalar& a, const CountingScalar& b, const CountingScalar& c)
  {
    ++flop_counter().fused;
    return a.value_ * b.value_ + c.value_;
  }

  friend bool operator==(CountingScalar a, CountingScalar b) { return a.value_ == b.value_; }
  friend auto operator<=>(CountingScalar a, CountingScalar b) { return a.value_ <=> b.value_; }

private:
  double value_ = 0.0;
};

} // namespace sfdg
