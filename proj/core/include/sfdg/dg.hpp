#pragma once

// SIPG discretization of -div(K grad u) + c u = f on the unit cube with
// Dirichlet data g, on a uniform grid of N^d cells. Residual and operator
// application run cell and facet integrals through the three-stage
// algorithm: sum-factorized evaluation, a quadrature loop, and sum-factorized
// multiplication with the test functions.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sfdg/arith.hpp"
#include "sfdg/basis.hpp"
#include "sfdg/simd_exec.hpp"
#include "sfdg/strategy.hpp"
#include "sfdg/sumfact.hpp"

namespace sfdg
{

struct GridConfig
{
  int dim = 3;
  int cells = 4;       // N per direction
  int degree = 2;      // k
  int quad_points = 0; // m per direction, 0 selects k + 1

  double h() const { return 1.0 / cells; }
  int quad() const { return quad_points > 0 ? quad_points : degree + 1; }
  int dofs_per_cell() const;
  std::size_t num_cells() const;
  std::size_t num_dofs() const;
  void validate() const;
};

/// Global coefficients: cell-major blocks of (k+1)^d, cells lexicographic, blocks in vec order.
template <typename T>
using DofVector = std::vector<T>;

struct CellGeometry
{
  int dim = 3;
  std::array<double, 3> origin{};
  double h = 1.0;

  double volume() const { return std::pow(h, dim); }
  double face_measure() const { return std::pow(h, dim - 1); }
};

std::array<int, 3> cell_coordinates(const GridConfig& grid, std::size_t cell);
std::size_t cell_index(const GridConfig& grid, const std::array<int, 3>& coords);
CellGeometry cell_geometry(const GridConfig& grid, std::size_t cell);

enum class Diffusion
{
  Identity,
  QuadraticPlusIdentity, // K(x) = x x^T + I
};

enum class DirichletData
{
  Zero,
  SquaredNorm, // g(x) = |x|^2
};

struct ProblemData
{
  Diffusion diffusion = Diffusion::QuadraticPlusIdentity;
  double c = 10.0;
  double f = -6.0;
  DirichletData g = DirichletData::SquaredNorm;
  double alpha = 3.0;
  double theta = -1.0;

  /// K = x x^T + I, c = 10, f = -6, g = |x|^2: g solves the problem exactly in 3D.
  static ProblemData manufactured();
  /// K = I, c = 0, f = 1, g = 0.
  static ProblemData poisson();

  double k_entry(std::span<const double> x, int i, int j) const;
  double dirichlet(std::span<const double> x) const;

  /// out = K(x) v
  template <typename V>
  void apply_k(const V* x, const V* v, V* out, int d) const
  {
    if (diffusion == Diffusion::Identity)
    {
      for (int j = 0; j < d; ++j)
        out[j] = v[j];
      return;
    }
    V dot = x[0] * v[0];
    for (int j = 1; j < d; ++j)
      dot = muladd(x[j], v[j], dot);
    for (int j = 0; j < d; ++j)
      out[j] = muladd(x[j], dot, v[j]);
  }

  /// out = K(x) e_dir
  template <typename V>
  void k_column(const V* x, int dir, V* out, int d, const V& one) const
  {
    for (int j = 0; j < d; ++j)
    {
      if (diffusion == Diffusion::Identity)
        out[j] = j == dir ? one : V{};
      else
        out[j] = j == dir ? muladd(x[j], x[dir], one) : x[j] * x[dir];
    }
  }

  template <typename V>
  V dirichlet(const V* x, int d) const
  {
    if (g == DirichletData::Zero)
      return V{};
    V r = x[0] * x[0];
    for (int j = 1; j < d; ++j)
      r = muladd(x[j], x[j], r);
    return r;
  }
};

/// alpha k (k + d - 1) |F| / min(|T-|, |T+|)
double penalty_factor(double alpha, int degree, int dim, double face_measure, double volume_minus,
                      double volume_plus);
/// Uniform grid: interior and boundary facets share one value.
double penalty_factor(const GridConfig& grid, const ProblemData& data);

enum class IntegralKind
{
  Volume,
  InteriorFacet, // inside cell below, outside cell above in the normal direction
  BoundaryFacet,
};

struct Integral
{
  IntegralKind kind = IntegralKind::Volume;
  int direction = -1;
  Side side = Side::Lower; // boundary facets only

  std::string name() const;
  friend bool operator==(const Integral&, const Integral&) = default;
};

/// Volume, interior facets per direction, boundary facets per direction and side.
std::vector<Integral> all_integrals(int dim);

/// d copies of grid.quad().
Extents base_quadrature(const GridConfig& grid);

/**
 * Kernels of one integral, evaluation kernels first. Per input cell the
 * evaluation kernels produce d reference derivatives then the value; the
 * test-multiply kernels mirror them. q gives the points per direction; facet
 * kernels ignore the normal entry (a single point on the facet).
 */
std::vector<SumfactKernelSpec> integral_kernels(const GridConfig& grid, const Integral& integral, const Extents& q);

struct OperatorPlan
{
  int width = 1;
  std::vector<Integral> integrals;
  std::vector<StrategyPlan> plans; // parallel to integrals

  const StrategyPlan& plan_for(const Integral& integral) const;
  std::string to_json(int indent = 2) const;
};

struct StrategyChoice
{
  enum class Kind
  {
    Auto,
    Scalar,
    Fuse,   // f = w, s = 1
    Split,  // f = w / s
    Hybrid, // f * s = w
  };

  Kind kind = Kind::Auto;
  int f = 0;
  int s = 0;

  /// auto | scalar | fuse | split:S | hybrid:F,S
  static StrategyChoice parse(const std::string& text);
  std::string to_string() const;
};

/// Plans every integral. Forced layouts throw StrategyError when a kernel's
/// direction-0 point count is not divisible by s, unless raise_quadrature.
OperatorPlan plan_operator(const GridConfig& grid, int width, const StrategyChoice& choice,
                           const CostModel& model = CostModel::heuristic(), bool raise_quadrature = false);

/// Scalar plans at the quadrature of each integral of plan.
OperatorPlan scalar_plan_like(const GridConfig& grid, const OperatorPlan& plan);

/// Plans each integral with planner(kernels at q, q), q the base quadrature
/// with direction 0 possibly raised to a multiple of raise_to.
OperatorPlan plan_operator_with(
    const GridConfig& grid, int width, int raise_to,
    const std::function<StrategyPlan(std::span<const SumfactKernelSpec>, const Extents&)>& planner);

enum class ResidualMode
{
  Residual, // all terms
  Operator, // f and g dropped: the linear part
};

enum class Part
{
  Eval,
  QuadLoop,
  TestMult,
};

/// Instrumentation hooks around integrals and their three parts.
class Probe
{
public:
  virtual ~Probe() = default;
  virtual void enter_integral(IntegralKind) {}
  virtual void leave_integral(IntegralKind) {}
  virtual void enter_part(IntegralKind, Part) {}
  virtual void leave_part(IntegralKind, Part) {}
};

class Operator
{
public:
  Operator(GridConfig grid, ProblemData data, OperatorPlan plan);

  const GridConfig& grid() const { return grid_; }
  const ProblemData& data() const { return data_; }
  const OperatorPlan& plan() const { return plan_; }
  double penalty() const { return gamma_; }

  /// r = R(u) (Residual) or A u (Operator); r is overwritten.
  template <typename T>
  void apply(std::span<const T> u, std::span<T> r, ResidualMode mode, Probe* probe = nullptr) const;

  /// Local contributions: x are coefficient blocks, results are added to r.
  template <typename T>
  void volume(std::size_t cell, const T* x, T* r, ResidualMode mode) const;
  template <typename T>
  void interior_facet(int dir, std::size_t inside, const T* x_in, const T* x_out, T* r_in, T* r_out,
                      ResidualMode mode) const;
  template <typename T>
  void boundary_facet(int dir, Side side, std::size_t cell, const T* x, T* r, ResidualMode mode) const;

  struct IntegralData
  {
    Integral integral;
    const StrategyPlan* plan = nullptr;
    int num_eval = 0;
    Extents point_extents;
    std::size_t num_points = 0;
    std::vector<std::vector<double>> xi; // per direction, padded
    std::vector<double> weight;          // quadrature weight times measure, padded with 0
  };

private:
  template <typename T>
  struct Workspace;

  template <typename T>
  void run(const IntegralData& id, const std::size_t* cells, const T* const* x, T* const* r, ResidualMode mode,
           Probe* probe, Workspace<T>& ws) const;

  template <typename T, int W>
  void points(const IntegralData& id, const std::size_t* cells, ResidualMode mode, Workspace<T>& ws) const;

  const IntegralData& integral_data(const Integral& integral) const;

  GridConfig grid_;
  ProblemData data_;
  OperatorPlan plan_;
  double gamma_ = 0.0;
  std::vector<IntegralData> integrals_;
};

template <typename T>
std::vector<T> apply_residual(const Operator& op, std::span<const T> u, Probe* probe = nullptr)
{
  std::vector<T> r(u.size());
  op.apply<T>(u, r, ResidualMode::Residual, probe);
  return r;
}

template <typename T>
std::vector<T> apply_operator(const Operator& op, std::span<const T> z, Probe* probe = nullptr)
{
  std::vector<T> r(z.size());
  op.apply<T>(z, r, ResidualMode::Operator, probe);
  return r;
}

/// Nodal interpolant of fn on the grid (the basis is nodal, so coefficients are point values).
DofVector<double> interpolate(const GridConfig& grid, const std::function<double(std::span<const double>)>& fn);

// ---------------------------------------------------------------------------

template <typename T>
struct Operator::Workspace
{
  std::vector<std::vector<T>> bufs_in;  // per executed kernel: stage-1 output / stage-3 input
  std::vector<std::vector<T>> bufs_out; // per executed kernel: stage-3 output
  VecScratch<T> scratch;

  void prepare(const IntegralData& id)
  {
    const auto& plan = *id.plan;
    bufs_in.resize(plan.kernels.size());
    bufs_out.resize(plan.kernels.size());
    const int W = plan.width;
    for (std::size_t g = 0; g < plan.kernels.size(); ++g)
    {
      const auto& vk = plan.kernels[g];
      const int quantities = vk.w == 1 ? 1 : vk.quantities();
      const std::size_t quad =
          std::max(extent_product(vk.lane_quad_extents()) * vk.w, quadrature_loop_extent(id.num_points, W, quantities));
      bufs_in[g].assign(quad, T{});
      if (vk.stage() == Stage::TestMultiply)
        bufs_out[g].assign(extent_product(vk.lane_output_extents()) * vk.w, T{});
    }
  }
};

namespace detail
{

template <typename T, int W>
inline LaneBundle<T, W> load_table(const double* p)
{
  LaneBundle<T, W> b;
  for (int l = 0; l < W; ++l)
    b.v[l] = from_double<T>(p[l]);
  return b;
}

} // namespace detail

template <typename T>
void Operator::run(const IntegralData& id, const std::size_t* cells, const T* const* x, T* const* r,
                   ResidualMode mode, Probe* probe, Workspace<T>& ws) const
{
  const auto& plan = *id.plan;
  const auto kind = id.integral.kind;
  if (probe)
    probe->enter_integral(kind);

  if (probe)
    probe->enter_part(kind, Part::Eval);
  for (std::size_t g = 0; g < plan.kernels.size(); ++g)
  {
    const auto& vk = plan.kernels[g];
    if (vk.stage() != Stage::Evaluation)
      continue;
    std::array<const T*, 2> in{};
    for (int i = 0; i < vk.num_inputs; ++i)
      in[i] = x[vk.input_ids[i]];
    exec_vectorized<T>(vk, std::span<const T* const>(in.data(), vk.num_inputs), ws.bufs_in[g].data(), ws.scratch);
  }
  if (probe)
    probe->leave_part(kind, Part::Eval);

  if (probe)
    probe->enter_part(kind, Part::QuadLoop);
  dispatch_width(plan.width, [&]<int W>() { points<T, W>(id, cells, mode, ws); });
  if (probe)
    probe->leave_part(kind, Part::QuadLoop);

  if (probe)
    probe->enter_part(kind, Part::TestMult);
  const std::size_t n = static_cast<std::size_t>(grid_.dofs_per_cell());
  for (std::size_t g = 0; g < plan.kernels.size(); ++g)
  {
    const auto& vk = plan.kernels[g];
    if (vk.stage() != Stage::TestMultiply)
      continue;
    const T* in = ws.bufs_in[g].data();
    exec_vectorized<T>(vk, std::span<const T* const>(&in, 1), ws.bufs_out[g].data(), ws.scratch);
    std::array<T*, 2> targets{};
    for (int i = 0; i < vk.num_inputs; ++i)
      targets[i] = r[vk.input_ids[i]];
    accumulate_reduce<T>(vk, ws.bufs_out[g].data(), std::span<T* const>(targets.data(), vk.num_inputs), n);
  }
  if (probe)
    probe->leave_part(kind, Part::TestMult);

  if (probe)
    probe->leave_integral(kind);
}

template <typename T, int W>
void Operator::points(const IntegralData& id, const std::size_t* cells, ResidualMode mode, Workspace<T>& ws) const
{
  using V = LaneBundle<T, W>;
  const auto& plan = *id.plan;
  const int d = grid_.dim;

  std::vector<QuadOperand<const T*>> inputs;
  std::vector<QuadOperand<T*>> outputs;
  int in_roles = 0, out_roles = 0;
  for (std::size_t g = 0; g < plan.kernels.size(); ++g)
  {
    const auto& vk = plan.kernels[g];
    const bool eval = vk.stage() == Stage::Evaluation;
    std::vector<int> roles;
    for (int t = 0; t < vk.quantities(); ++t)
      roles.push_back(vk.slot_idle[t] ? -1 : vk.member_ids[vk.slot_member[t]] - (eval ? 0 : id.num_eval));
    for (int role : roles)
      (eval ? in_roles : out_roles) = std::max(eval ? in_roles : out_roles, role + 1);
    const int quantities = vk.w == 1 ? 1 : vk.quantities();
    if (eval)
      inputs.push_back({ws.bufs_in[g].data(), ws.bufs_in[g].size(), quantities, vk.s, vk.w, std::move(roles)});
    else
      outputs.push_back({ws.bufs_in[g].data(), ws.bufs_in[g].size(), quantities, vk.s, vk.w, std::move(roles)});
  }

  const CellGeometry geo = cell_geometry(grid_, cells[0]);
  std::array<V, 3> origin, hv;
  for (int j = 0; j < d; ++j)
  {
    origin[j] = V::broadcast(from_double<T>(geo.origin[j]));
    hv[j] = V::broadcast(from_double<T>(geo.h));
  }
  const bool residual = mode == ResidualMode::Residual;
  const V inv_h = V::broadcast(from_double<T>(1.0 / geo.h));
  const V one = V::broadcast(from_double<T>(1.0));
  const V gamma = V::broadcast(from_double<T>(gamma_));
  const V theta_half = V::broadcast(from_double<T>(0.5 * data_.theta));
  const V theta = V::broadcast(from_double<T>(data_.theta));
  const V half = V::broadcast(from_double<T>(0.5));
  const V c = V::broadcast(from_double<T>(data_.c));
  const V f = V::broadcast(from_double<T>(data_.f));
  const Integral& integral = id.integral;
  const int dir = integral.direction;
  const bool needs_x = data_.diffusion != Diffusion::Identity || (residual && integral.kind == IntegralKind::BoundaryFacet);

  const V sigma = integral.kind == IntegralKind::BoundaryFacet && integral.side == Side::Lower ? -one : one;

  std::array<V, 3> x{};
  auto point_fn = [&](std::size_t b, const V* in, V* out) {
    const std::size_t at = b * W;
    const V weight = detail::load_table<T, W>(id.weight.data() + at);
    if (needs_x)
      for (int j = 0; j < d; ++j)
        x[j] = muladd(hv[j], detail::load_table<T, W>(id.xi[j].data() + at), origin[j]);

    if (integral.kind == IntegralKind::Volume)
    {
      std::array<V, 3> kg;
      data_.apply_k(x.data(), in, kg.data(), d);
      const V scale = weight * inv_h * inv_h;
      for (int j = 0; j < d; ++j)
        out[j] = kg[j] * scale;
      out[d] = residual ? weight * (c * in[d] - f) : weight * (c * in[d]);
      return;
    }

    std::array<V, 3> kn;
    data_.k_column(x.data(), dir, kn.data(), d, one);
    if (integral.kind == IntegralKind::BoundaryFacet)
      for (int j = 0; j < d; ++j)
        kn[j] = sigma * kn[j];

    if (integral.kind == IntegralKind::InteriorFacet)
    {
      const V* in_minus = in;
      const V* in_plus = in + d + 1;
      V flux = kn[0] * (in_minus[0] + in_plus[0]);
      for (int j = 1; j < d; ++j)
        flux = muladd(kn[j], in_minus[j] + in_plus[j], flux);
      flux = half * inv_h * flux;
      const V jump = in_minus[d] - in_plus[d];
      const V rv = weight * (gamma * jump - flux);
      const V sym = weight * theta_half * jump * inv_h;
      for (int j = 0; j < d; ++j)
      {
        out[j] = sym * kn[j];
        out[d + 1 + j] = out[j];
      }
      out[d] = rv;
      out[2 * d + 1] = -rv;
      return;
    }

    V flux = kn[0] * in[0];
    for (int j = 1; j < d; ++j)
      flux = muladd(kn[j], in[j], flux);
    flux = inv_h * flux;
    const V diff = residual ? in[d] - data_.dirichlet(x.data(), d) : in[d];
    out[d] = weight * (gamma * diff - flux);
    const V sym = weight * theta * diff * inv_h;
    for (int j = 0; j < d; ++j)
      out[j] = sym * kn[j];
  };

  quadrature_loop<T, W>(inputs, outputs, id.num_points, in_roles, out_roles, point_fn);
}

template <typename T>
void Operator::volume(std::size_t cell, const T* x, T* r, ResidualMode mode) const
{
  const auto& id = integral_data(Integral{IntegralKind::Volume, -1, Side::Lower});
  Workspace<T> ws;
  ws.prepare(id);
  std::size_t cells[2] = {cell, cell};
  const T* xs[2] = {x, x};
  T* rs[2] = {r, r};
  run<T>(id, cells, xs, rs, mode, nullptr, ws);
}

template <typename T>
void Operator::interior_facet(int dir, std::size_t inside, const T* x_in, const T* x_out, T* r_in, T* r_out,
                              ResidualMode mode) const
{
  const auto& id = integral_data(Integral{IntegralKind::InteriorFacet, dir, Side::Lower});
  Workspace<T> ws;
  ws.prepare(id);
  std::size_t cells[2] = {inside, inside};
  const T* xs[2] = {x_in, x_out};
  T* rs[2] = {r_in, r_out};
  run<T>(id, cells, xs, rs, mode, nullptr, ws);
}

template <typename T>
void Operator::boundary_facet(int dir, Side side, std::size_t cell, const T* x, T* r, ResidualMode mode) const
{
  const auto& id = integral_data(Integral{IntegralKind::BoundaryFacet, dir, side});
  Workspace<T> ws;
  ws.prepare(id);
  std::size_t cells[2] = {cell, cell};
  const T* xs[2] = {x, x};
  T* rs[2] = {r, r};
  run<T>(id, cells, xs, rs, mode, nullptr, ws);
}

template <typename T>
void Operator::apply(std::span<const T> u, std::span<T> r, ResidualMode mode, Probe* probe) const
{
  const std::size_t ndofs = grid_.num_dofs();
  if (u.size() != ndofs || r.size() != ndofs)
    throw std::invalid_argument("Operator::apply: vectors must have " + std::to_string(ndofs) + " entries");
  for (auto& v : r)
    v = T{};

  const std::size_t n = static_cast<std::size_t>(grid_.dofs_per_cell());
  const int N = grid_.cells;
  const std::size_t num_cells = grid_.num_cells();
  auto block = [&](std::size_t cell) { return u.data() + cell * n; };
  auto rblock = [&](std::size_t cell) { return r.data() + cell * n; };

  Workspace<T> ws;
  for (const auto& id : integrals_)
  {
    ws.prepare(id);
    const Integral& integral = id.integral;
    std::size_t stride = 1;
    for (int j = 0; j < integral.direction; ++j)
      stride *= static_cast<std::size_t>(N);

    for (std::size_t cell = 0; cell < num_cells; ++cell)
    {
      std::size_t cells[2] = {cell, cell};
      const T* xs[2] = {block(cell), block(cell)};
      T* rs[2] = {rblock(cell), rblock(cell)};
      if (integral.kind == IntegralKind::InteriorFacet)
      {
        if (cell_coordinates(grid_, cell)[integral.direction] == N - 1)
          continue;
        cells[1] = cell + stride;
        xs[1] = block(cells[1]);
        rs[1] = rblock(cells[1]);
      }
      else if (integral.kind == IntegralKind::BoundaryFacet)
      {
        const int want = integral.side == Side::Lower ? 0 : N - 1;
        if (cell_coordinates(grid_, cell)[integral.direction] != want)
          continue;
      }
      run<T>(id, cells, xs, rs, mode, probe, ws);
    }
  }
}

} // namespace sfdg
