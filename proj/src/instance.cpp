#include "l2diff/instance.hpp"

#include <cmath>
#include <sstream>

#include "l2diff/error.hpp"

namespace l2diff {

DiffusionInstance::DiffusionInstance(GraphPtr graph, std::vector<Vwf> vwfs, std::vector<double> lower)
    : graph_(std::move(graph)), vwfs_(std::move(vwfs)), lower_(std::move(lower)) {
  if (!graph_) throw UsageError("instance needs a graph");
  const auto n = static_cast<std::size_t>(graph_->vertex_count());
  if (vwfs_.size() != n || lower_.size() != n) {
    throw UsageError("instance: expected " + std::to_string(n) + " VWFs and lower bounds");
  }
  for (std::size_t u = 0; u < n; ++u) {
    if (!(lower_[u] <= 0.0) || !std::isfinite(lower_[u])) {
      throw ValidationError("instance: lower bound of vertex " + std::to_string(u) + " must be finite and <= 0");
    }
    if (vwfs_[u].domain_start() > lower_[u]) {
      throw ValidationError("instance: VWF of vertex " + std::to_string(u) + " does not cover [b_u, inf)");
    }
  }
}

std::size_t DiffusionInstance::size() const noexcept {
  std::size_t s = static_cast<std::size_t>(graph_->edge_count());
  for (const Vwf& f : vwfs_) s += f.size();
  return s;
}

DiffusionInstance make_l2_instance(GraphPtr g, const Vector& d) {
  if (!g) throw UsageError("make_l2_instance: null graph");
  if (d.size() != g->vertex_count()) throw UsageError("make_l2_instance: demand dimension mismatch");
  VertexId count = 0;
  const std::vector<VertexId> comp = g->components(&count);
  std::vector<double> sum(static_cast<std::size_t>(count), 0.0);
  std::vector<double> mag(static_cast<std::size_t>(count), 0.0);
  for (VertexId v = 0; v < g->vertex_count(); ++v) {
    if (!std::isfinite(d[v])) throw DomainError("demand is not finite at vertex " + std::to_string(v));
    sum[comp[v]] += d[v];
    mag[comp[v]] += std::abs(d[v]);
  }
  for (VertexId c = 0; c < count; ++c) {
    if (sum[c] < -1e-12 * mag[c]) {
      std::ostringstream msg;
      msg << "infeasible demand: component " << c << " has total demand " << sum[c] << " < 0";
      throw FeasibilityError(msg.str());
    }
  }
  std::vector<Vwf> vwfs;
  vwfs.reserve(static_cast<std::size_t>(g->vertex_count()));
  for (VertexId v = 0; v < g->vertex_count(); ++v) vwfs.push_back(Vwf::linear(d[v]));
  std::vector<double> lower(static_cast<std::size_t>(g->vertex_count()), 0.0);
  return DiffusionInstance(std::move(g), std::move(vwfs), std::move(lower));
}

Potential clamp_feasible(const DiffusionInstance& inst, const Potential& x) {
  if (x.size() != inst.vertex_count()) throw UsageError("potential dimension mismatch");
  Potential y = x;
  double worst = 0.0;
  VertexId worst_v = kNoVertex;
  for (VertexId v = 0; v < inst.vertex_count(); ++v) {
    const double gap = inst.lower(v) - x[v];
    if (std::isnan(x[v])) throw FeasibilityError("potential is NaN at vertex " + std::to_string(v));
    if (gap > 0.0) {
      if (gap > kFeasibilityTol && gap > worst) {
        worst = gap;
        worst_v = v;
      }
      y[v] = inst.lower(v);
    }
  }
  if (worst_v != kNoVertex) {
    std::ostringstream msg;
    msg << "infeasible potential: vertex " << worst_v << " is " << worst << " below its lower bound";
    throw FeasibilityError(msg.str());
  }
  return y;
}

EnergyReport energy(const DiffusionInstance& inst, const Potential& x) {
  const Potential y = clamp_feasible(inst, x);
  EnergyReport rep;
  rep.quadratic = quadratic_form(inst.graph(), y);
  for (VertexId v = 0; v < inst.vertex_count(); ++v) rep.separable += inst.vwf(v).eval(y[v]);
  rep.total = rep.quadratic + rep.separable;
  return rep;
}

double energy_value(const DiffusionInstance& inst, const Potential& x) { return energy(inst, x).total; }

DiffusionInstance residual(const DiffusionInstance& inst, const Potential& x) {
  const Potential y = clamp_feasible(inst, x);
  const Potential lx = laplacian_apply(inst.graph(), y);
  std::vector<Vwf> vwfs;
  std::vector<double> lower;
  vwfs.reserve(static_cast<std::size_t>(inst.vertex_count()));
  lower.reserve(static_cast<std::size_t>(inst.vertex_count()));
  for (VertexId v = 0; v < inst.vertex_count(); ++v) {
    vwfs.push_back(vwf_reorigin(inst.vwf(v), y[v], lx[v]));
    lower.push_back(std::min(0.0, inst.lower(v) - y[v]));
  }
  return DiffusionInstance(inst.graph_ptr(), std::move(vwfs), std::move(lower));
}

DiffusionInstance shifted_instance(const DiffusionInstance& inst, GraphPtr graph, const Vector& w) {
  if (!graph || graph->vertex_count() != inst.vertex_count() || w.size() != inst.vertex_count()) {
    throw UsageError("shifted_instance: dimension mismatch");
  }
  std::vector<Vwf> vwfs;
  vwfs.reserve(static_cast<std::size_t>(inst.vertex_count()));
  for (VertexId v = 0; v < inst.vertex_count(); ++v) {
    vwfs.push_back(vwf_add_affine(inst.vwf(v), w[v], -inst.vwf(v).eval(0.0)));
  }
  return DiffusionInstance(std::move(graph), std::move(vwfs), inst.lower_bounds());
}

void check_bounded(const DiffusionInstance& inst) {
  VertexId count = 0;
  const std::vector<VertexId> comp = inst.graph().components(&count);
  std::vector<double> sum(static_cast<std::size_t>(count), 0.0);
  std::vector<double> mag(static_cast<std::size_t>(count), 0.0);
  for (VertexId v = 0; v < inst.vertex_count(); ++v) {
    sum[comp[v]] += inst.vwf(v).tail_slope();
    mag[comp[v]] += std::abs(inst.vwf(v).tail_slope());
  }
  for (VertexId c = 0; c < count; ++c) {
    if (sum[c] < -1e-12 * mag[c]) {
      std::ostringstream msg;
      msg << "objective unbounded below: component " << c << " has total tail slope " << sum[c];
      throw FeasibilityError(msg.str());
    }
  }
}

DiffusionInstance sub_instance(const DiffusionInstance& inst, const std::vector<VertexId>& vertices) {
  auto g = std::make_shared<const Graph>(induced_subgraph(inst.graph(), vertices));
  std::vector<Vwf> vwfs;
  std::vector<double> lower;
  for (VertexId v : vertices) {
    vwfs.push_back(inst.vwf(v));
    lower.push_back(inst.lower(v));
  }
  return DiffusionInstance(std::move(g), std::move(vwfs), std::move(lower));
}

}  // namespace l2diff
