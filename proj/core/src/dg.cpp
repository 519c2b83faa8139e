#include "sfdg/dg.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

#include <json.hpp>

namespace sfdg
{

int GridConfig::dofs_per_cell() const
{
  int n = 1;
  for (int j = 0; j < dim; ++j)
    n *= degree + 1;
  return n;
}

std::size_t GridConfig::num_cells() const
{
  std::size_t n = 1;
  for (int j = 0; j < dim; ++j)
    n *= static_cast<std::size_t>(cells);
  return n;
}

std::size_t GridConfig::num_dofs() const
{
  return num_cells() * static_cast<std::size_t>(dofs_per_cell());
}

void GridConfig::validate() const
{
  if (dim != 2 && dim != 3)
    throw std::invalid_argument("GridConfig: dimension must be 2 or 3, got " + std::to_string(dim));
  if (cells < 2)
    throw std::invalid_argument("GridConfig: need at least 2 cells per direction, got " + std::to_string(cells));
  if (degree < 1)
    throw std::invalid_argument("GridConfig: degree must be at least 1, got " + std::to_string(degree));
  if (quad_points < 0)
    throw std::invalid_argument("GridConfig: quadrature point count must be positive");
}

std::array<int, 3> cell_coordinates(const GridConfig& grid, std::size_t cell)
{
  std::array<int, 3> c{};
  for (int j = 0; j < grid.dim; ++j)
  {
    c[j] = static_cast<int>(cell % static_cast<std::size_t>(grid.cells));
    cell /= static_cast<std::size_t>(grid.cells);
  }
  return c;
}

std::size_t cell_index(const GridConfig& grid, const std::array<int, 3>& coords)
{
  std::size_t index = 0;
  for (int j = grid.dim; j-- > 0;)
    index = index * static_cast<std::size_t>(grid.cells) + static_cast<std::size_t>(coords[j]);
  return index;
}

CellGeometry cell_geometry(const GridConfig& grid, std::size_t cell)
{
  CellGeometry geo;
  geo.dim = grid.dim;
  geo.h = grid.h();
  const auto c = cell_coordinates(grid, cell);
  for (int j = 0; j < grid.dim; ++j)
    geo.origin[j] = c[j] * geo.h;
  return geo;
}

ProblemData ProblemData::manufactured()
{
  return ProblemData{};
}

ProblemData ProblemData::poisson()
{
  ProblemData p;
  p.diffusion = Diffusion::Identity;
  p.c = 0.0;
  p.f = 1.0;
  p.g = DirichletData::Zero;
  return p;
}

double ProblemData::k_entry(std::span<const double> x, int i, int j) const
{
  const double delta = i == j ? 1.0 : 0.0;
  return diffusion == Diffusion::Identity ? delta : x[i] * x[j] + delta;
}

double ProblemData::dirichlet(std::span<const double> x) const
{
  if (g == DirichletData::Zero)
    return 0.0;
  double r = 0.0;
  for (double v : x)
    r += v * v;
  return r;
}

double penalty_factor(double alpha, int degree, int dim, double face_measure, double volume_minus,
                      double volume_plus)
{
  return alpha * degree * (degree + dim - 1) * face_measure / std::min(volume_minus, volume_plus);
}

double penalty_factor(const GridConfig& grid, const ProblemData& data)
{
  const double h = grid.h();
  const double volume = std::pow(h, grid.dim);
  return penalty_factor(data.alpha, grid.degree, grid.dim, std::pow(h, grid.dim - 1), volume, volume);
}

std::string Integral::name() const
{
  switch (kind)
  {
  case IntegralKind::Volume:
    return "volume";
  case IntegralKind::InteriorFacet:
    return "interior_facet_" + std::to_string(direction);
  case IntegralKind::BoundaryFacet:
    return "boundary_facet_" + std::to_string(direction) + (side == Side::Lower ? "_lower" : "_upper");
  }
  return {};
}

std::vector<Integral> all_integrals(int dim)
{
  std::vector<Integral> out{Integral{IntegralKind::Volume, -1, Side::Lower}};
  for (int dir = 0; dir < dim; ++dir)
    out.push_back(Integral{IntegralKind::InteriorFacet, dir, Side::Lower});
  for (int dir = 0; dir < dim; ++dir)
    for (Side side : {Side::Lower, Side::Upper})
      out.push_back(Integral{IntegralKind::BoundaryFacet, dir, side});
  return out;
}

Extents base_quadrature(const GridConfig& grid)
{
  return Extents(grid.dim, grid.quad());
}

namespace
{

// Kernels of one side of an integral: d derivative kernels, then the value kernel.
void side_kernels(std::vector<SumfactKernelSpec>& out, const std::string& prefix, Stage stage, int input_id,
                  const std::vector<KernelMatrix>& eval, const std::vector<KernelMatrix>& deriv,
                  std::optional<FaceEmbedding> face, const Basis1D& basis)
{
  const int d = static_cast<int>(eval.size());
  const char* fn = stage == Stage::Evaluation ? "u" : "v";
  for (int i = 0; i <= d; ++i)
  {
    SumfactKernelSpec spec;
    spec.stage = stage;
    spec.input_id = input_id;
    spec.embedding = face;
    spec.name = prefix + (i < d ? "d" + std::to_string(i) + fn : std::string(fn));
    for (int j = 0; j < d; ++j)
    {
      if (face && j == face->normal_direction)
        spec.matrices.push_back(i == j ? face_derivative_matrix(basis, face->side)
                                       : face_restriction_matrix(basis, face->side));
      else
        spec.matrices.push_back(i == j ? deriv[j] : eval[j]);
    }
    out.push_back(std::move(spec));
  }
}

} // namespace

std::vector<SumfactKernelSpec> integral_kernels(const GridConfig& grid, const Integral& integral, const Extents& q)
{
  grid.validate();
  const int d = grid.dim;
  if (static_cast<int>(q.size()) != d)
    throw std::invalid_argument("integral_kernels: quadrature tuple must have " + std::to_string(d) + " entries");
  const Basis1D basis = equidistant_basis(grid.degree);
  std::vector<KernelMatrix> eval, deriv;
  for (int j = 0; j < d; ++j)
  {
    if (j == integral.direction)
    {
      // Placeholder, replaced by facet matrices.
      eval.push_back(identity_matrix(1));
      deriv.push_back(identity_matrix(1));
      continue;
    }
    const auto rule = gauss_legendre(q[j]);
    eval.push_back(evaluation_matrix(basis, rule));
    deriv.push_back(derivative_matrix(basis, rule));
  }

  std::vector<SumfactKernelSpec> out;
  const std::string name = integral.name() + "/";
  for (Stage stage : {Stage::Evaluation, Stage::TestMultiply})
  {
    const std::string prefix = name + (stage == Stage::Evaluation ? "eval/" : "test/");
    switch (integral.kind)
    {
    case IntegralKind::Volume:
      side_kernels(out, prefix, stage, 0, eval, deriv, std::nullopt, basis);
      break;
    case IntegralKind::InteriorFacet:
      side_kernels(out, prefix + "inside/", stage, 0, eval, deriv, FaceEmbedding{integral.direction, Side::Upper},
                   basis);
      side_kernels(out, prefix + "outside/", stage, 1, eval, deriv, FaceEmbedding{integral.direction, Side::Lower},
                   basis);
      break;
    case IntegralKind::BoundaryFacet:
      side_kernels(out, prefix, stage, 0, eval, deriv, FaceEmbedding{integral.direction, integral.side}, basis);
      break;
    }
  }
  return out;
}

const StrategyPlan& OperatorPlan::plan_for(const Integral& integral) const
{
  for (std::size_t i = 0; i < integrals.size(); ++i)
    if (integrals[i] == integral)
      return plans[i];
  throw std::out_of_range("OperatorPlan: no plan for " + integral.name());
}

std::string OperatorPlan::to_json(int indent) const
{
  using nlohmann::json;
  json j;
  j["width"] = width;
  json list = json::array();
  for (std::size_t i = 0; i < integrals.size(); ++i)
    list.push_back({{"integral", integrals[i].name()}, {"plan", json::parse(plan_to_json(plans[i], -1))}});
  j["integrals"] = list;
  return j.dump(indent);
}

StrategyChoice StrategyChoice::parse(const std::string& text)
{
  auto number = [&](std::string_view part) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc{} || ptr != part.data() + part.size() || value < 1)
      throw std::invalid_argument("invalid strategy '" + text + "'");
    return value;
  };
  StrategyChoice c;
  if (text == "auto")
    c.kind = Kind::Auto;
  else if (text == "scalar")
    c.kind = Kind::Scalar;
  else if (text == "fuse")
    c.kind = Kind::Fuse;
  else if (text.rfind("split:", 0) == 0)
  {
    c.kind = Kind::Split;
    c.s = number(std::string_view(text).substr(6));
  }
  else if (text.rfind("hybrid:", 0) == 0)
  {
    c.kind = Kind::Hybrid;
    const std::string_view rest = std::string_view(text).substr(7);
    const auto comma = rest.find(',');
    if (comma == std::string_view::npos)
      throw std::invalid_argument("invalid strategy '" + text + "' (expected hybrid:F,S)");
    c.f = number(rest.substr(0, comma));
    c.s = number(rest.substr(comma + 1));
  }
  else
    throw std::invalid_argument("invalid strategy '" + text + "' (expected auto, scalar, fuse, split:S or hybrid:F,S)");
  return c;
}

std::string StrategyChoice::to_string() const
{
  switch (kind)
  {
  case Kind::Auto:
    return "auto";
  case Kind::Scalar:
    return "scalar";
  case Kind::Fuse:
    return "fuse";
  case Kind::Split:
    return "split:" + std::to_string(s);
  case Kind::Hybrid:
    return "hybrid:" + std::to_string(f) + "," + std::to_string(s);
  }
  return {};
}

OperatorPlan plan_operator_with(
    const GridConfig& grid, int width, int raise_to,
    const std::function<StrategyPlan(std::span<const SumfactKernelSpec>, const Extents&)>& planner)
{
  grid.validate();
  OperatorPlan out;
  out.width = width;
  for (const Integral& integral : all_integrals(grid.dim))
  {
    Extents q = base_quadrature(grid);
    if (raise_to > 1)
      q[0] = (q[0] + raise_to - 1) / raise_to * raise_to;
    const auto kernels = integral_kernels(grid, integral, q);
    StrategyPlan plan = planner(kernels, q);
    plan.validate(kernels.size());
    out.integrals.push_back(integral);
    out.plans.push_back(std::move(plan));
  }
  return out;
}

OperatorPlan plan_operator(const GridConfig& grid, int width, const StrategyChoice& choice, const CostModel& model,
                           bool raise_quadrature)
{
  grid.validate();
  if (width != 1 && width != 2 && width != 4 && width != 8)
    throw std::invalid_argument("width must be 1, 2, 4 or 8, got " + std::to_string(width));

  switch (choice.kind)
  {
  case StrategyChoice::Kind::Auto:
  {
    OperatorPlan out;
    out.width = width;
    for (const Integral& integral : all_integrals(grid.dim))
    {
      auto factory = [&](const Extents& q) { return integral_kernels(grid, integral, q); };
      StrategyPlan plan = optimize_quadrature(factory, width, base_quadrature(grid), model);
      plan.validate(integral_kernels(grid, integral, plan.quadrature).size());
      out.integrals.push_back(integral);
      out.plans.push_back(std::move(plan));
    }
    return out;
  }
  case StrategyChoice::Kind::Scalar:
    return plan_operator_with(grid, 1, 1, [](std::span<const SumfactKernelSpec> kernels, const Extents& q) {
      return scalar_strategy(kernels, q);
    });
  default:
    break;
  }

  int f = width, s = 1;
  if (choice.kind == StrategyChoice::Kind::Split)
  {
    s = choice.s;
    if (s < 1 || width % s != 0)
      throw StrategyError("split:" + std::to_string(s) + " requires s to divide the width " + std::to_string(width));
    f = width / s;
  }
  else if (choice.kind == StrategyChoice::Kind::Hybrid)
  {
    f = choice.f;
    s = choice.s;
    if (f * s != width)
      throw StrategyError("hybrid:" + std::to_string(f) + "," + std::to_string(s) + " requires f*s = width " +
                          std::to_string(width));
  }
  return plan_operator_with(grid, width, raise_quadrature ? s : 1,
                            [&](std::span<const SumfactKernelSpec> kernels, const Extents& q) {
                              return uniform_strategy(kernels, width, f, s, false, q, model);
                            });
}

OperatorPlan scalar_plan_like(const GridConfig& grid, const OperatorPlan& plan)
{
  OperatorPlan out;
  out.width = 1;
  for (std::size_t i = 0; i < plan.integrals.size(); ++i)
  {
    const Extents& q = plan.plans[i].quadrature;
    out.integrals.push_back(plan.integrals[i]);
    out.plans.push_back(scalar_strategy(integral_kernels(grid, plan.integrals[i], q), q));
  }
  return out;
}

Operator::Operator(GridConfig grid, ProblemData data, OperatorPlan plan)
    : grid_(grid), data_(data), plan_(std::move(plan))
{
  grid_.validate();
  if (plan_.integrals.size() != plan_.plans.size())
    throw std::invalid_argument("Operator: plan lists differ in length");
  gamma_ = penalty_factor(grid_, data_);
  const int d = grid_.dim;
  const double h = grid_.h();

  for (std::size_t i = 0; i < plan_.integrals.size(); ++i)
  {
    IntegralData id;
    id.integral = plan_.integrals[i];
    id.plan = &plan_.plans[i];
    const StrategyPlan& sp = *id.plan;
    if (sp.width != 1 && sp.width != 2 && sp.width != 4 && sp.width != 8)
      throw std::invalid_argument("Operator: unsupported plan width " + std::to_string(sp.width));
    if (static_cast<int>(sp.quadrature.size()) != d)
      throw std::invalid_argument("Operator: plan quadrature has wrong dimension");

    const bool facet = id.integral.kind != IntegralKind::Volume;
    id.point_extents = sp.quadrature;
    if (facet)
      id.point_extents[id.integral.direction] = 1;
    id.num_points = extent_product(id.point_extents);

    for (const auto& vk : sp.kernels)
    {
      if (vk.w != 1 && vk.w != sp.width)
        throw std::invalid_argument("Operator: kernel width differs from plan width");
      if (vk.members.front().quad_extents() != id.point_extents)
        throw std::invalid_argument("Operator: kernel quadrature " + to_string(vk.members.front().quad_extents()) +
                                    " does not match " + id.integral.name() + " points " +
                                    to_string(id.point_extents));
      if (vk.stage() == Stage::Evaluation)
        id.num_eval += static_cast<int>(vk.member_ids.size());
    }

    const std::size_t padded = quadrature_loop_extent(id.num_points, interleave_pad_width, 1);
    id.xi.assign(d, std::vector<double>(padded, 0.0));
    id.weight.assign(padded, 0.0);
    std::vector<QuadratureRule1D> rules(d);
    for (int j = 0; j < d; ++j)
      if (!(facet && j == id.integral.direction))
        rules[j] = gauss_legendre(sp.quadrature[j]);
    const double normal_xi = id.integral.kind == IntegralKind::InteriorFacet ? 1.0 : side_coordinate(id.integral.side);
    const double measure = facet ? std::pow(h, d - 1) : std::pow(h, d);

    std::size_t p = 0;
    for_each_index(id.point_extents, [&](std::span<const int> index) {
      double w = measure;
      for (int j = 0; j < d; ++j)
      {
        if (facet && j == id.integral.direction)
        {
          id.xi[j][p] = normal_xi;
          continue;
        }
        id.xi[j][p] = rules[j].points[index[j]];
        w *= rules[j].weights[index[j]];
      }
      id.weight[p] = w;
      ++p;
    });
    integrals_.push_back(std::move(id));
  }
}

const Operator::IntegralData& Operator::integral_data(const Integral& integral) const
{
  for (const auto& id : integrals_)
    if (id.integral == integral)
      return id;
  throw std::out_of_range("Operator: plan has no integral " + integral.name());
}

DofVector<double> interpolate(const GridConfig& grid, const std::function<double(std::span<const double>)>& fn)
{
  grid.validate();
  const Basis1D basis = equidistant_basis(grid.degree);
  const std::size_t n = static_cast<std::size_t>(grid.dofs_per_cell());
  const Extents local(grid.dim, grid.degree + 1);
  DofVector<double> u(grid.num_dofs());
  for (std::size_t cell = 0; cell < grid.num_cells(); ++cell)
  {
    const CellGeometry geo = cell_geometry(grid, cell);
    std::size_t i = 0;
    for_each_index(local, [&](std::span<const int> index) {
      std::array<double, 3> x{};
      for (int j = 0; j < grid.dim; ++j)
        x[j] = geo.origin[j] + geo.h * basis.nodes()[index[j]];
      u[cell * n + i++] = fn(std::span<const double>(x.data(), grid.dim));
    });
  }
  return u;
}

} // namespace sfdg
