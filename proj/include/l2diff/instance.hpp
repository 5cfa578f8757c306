#pragma once

#include <vector>

#include "l2diff/graph.hpp"
#include "l2diff/vwf.hpp"

namespace l2diff {

inline constexpr double kFeasibilityTol = 1e-12;

// (graph, per-vertex VWF, per-vertex lower bound b <= 0). Immutable.
class DiffusionInstance {
 public:
  DiffusionInstance(GraphPtr graph, std::vector<Vwf> vwfs, std::vector<double> lower);

  const Graph& graph() const noexcept { return *graph_; }
  const GraphPtr& graph_ptr() const noexcept { return graph_; }
  VertexId vertex_count() const noexcept { return graph_->vertex_count(); }
  const Vwf& vwf(VertexId v) const { return vwfs_[static_cast<std::size_t>(v)]; }
  const std::vector<Vwf>& vwfs() const noexcept { return vwfs_; }
  double lower(VertexId v) const { return lower_[static_cast<std::size_t>(v)]; }
  const std::vector<double>& lower_bounds() const noexcept { return lower_; }
  // Σ|f_u| + m
  std::size_t size() const noexcept;

 private:
  GraphPtr graph_;
  std::vector<Vwf> vwfs_;
  std::vector<double> lower_;
};

struct EnergyReport {
  double quadratic = 0.0;
  double separable = 0.0;
  double total = 0.0;
};

// f_u(x) = d_u x on [0, inf), b = 0. Throws FeasibilityError when some connected
// component has negative total demand (the objective is unbounded there).
DiffusionInstance make_l2_instance(GraphPtr g, const Vector& d);

// Throws FeasibilityError naming the worst vertex when x < b - tol; entries
// within tolerance are clamped to b.
Potential clamp_feasible(const DiffusionInstance& inst, const Potential& x);
EnergyReport energy(const DiffusionInstance& inst, const Potential& x);
double energy_value(const DiffusionInstance& inst, const Potential& x);

DiffusionInstance residual(const DiffusionInstance& inst, const Potential& x);

// Same graph and bounds; f_u replaced by f_u + w_u t - f_u(0).
DiffusionInstance shifted_instance(const DiffusionInstance& inst, GraphPtr graph, const Vector& w);

// Throws FeasibilityError when some component's total tail slope is negative.
void check_bounded(const DiffusionInstance& inst);

// Sub-instance on `vertices` (new ids follow the given order).
DiffusionInstance sub_instance(const DiffusionInstance& inst, const std::vector<VertexId>& vertices);

}  // namespace l2diff
