#include "sfdg/simd_exec.hpp"

namespace sfdg
{

namespace
{

struct FlatRegister
{
  double* p;
  double& operator[](int k) const { return p[k]; }
};

struct ConstFlatRegister
{
  const double* p;
  double operator[](int k) const { return p[k]; }
};

void check(std::span<const double> vectors, const ShuffleSpec& spec)
{
  if (spec.f < 1 || spec.s < 1 || spec.f * spec.s != spec.w)
    throw std::invalid_argument("transpose_registers: f*s must equal w");
  if (vectors.size() != static_cast<std::size_t>(spec.f) * spec.w)
    throw std::invalid_argument("transpose_registers: expected f*w scalars");
}

template <bool Inverse>
std::vector<double> shuffle(std::span<const double> vectors, ShuffleSpec spec)
{
  check(vectors, spec);
  std::vector<double> out(vectors.size());
  std::vector<ConstFlatRegister> in_regs;
  std::vector<FlatRegister> out_regs;
  for (int j = 0; j < spec.f; ++j)
  {
    in_regs.push_back({vectors.data() + static_cast<std::size_t>(j) * spec.w});
    out_regs.push_back({out.data() + static_cast<std::size_t>(j) * spec.w});
  }
  if constexpr (Inverse)
    transpose_registers_inverse(in_regs.data(), out_regs.data(), spec.f, spec.s);
  else
    transpose_registers(in_regs.data(), out_regs.data(), spec.f, spec.s);
  return out;
}

} // namespace

std::vector<double> transpose_registers(std::span<const double> vectors, ShuffleSpec spec)
{
  return shuffle<false>(vectors, spec);
}

std::vector<double> transpose_registers_inverse(std::span<const double> vectors, ShuffleSpec spec)
{
  return shuffle<true>(vectors, spec);
}

} // namespace sfdg
