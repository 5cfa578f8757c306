#include "l2diff/eliminate.hpp"

#include <functional>
#include <optional>
#include <queue>

#include "l2diff/error.hpp"

namespace l2diff {

RecoveryMap::RecoveryMap(VertexId original_count, std::vector<VertexId> survivors,
                         std::vector<EliminationRecord> records)
    : n_(original_count), survivors_(std::move(survivors)), records_(std::move(records)) {}

Potential RecoveryMap::recover(const Potential& reduced) const {
  if (reduced.size() != static_cast<Eigen::Index>(survivors_.size())) {
    throw UsageError("recover: expected " + std::to_string(survivors_.size()) + " reduced potentials, got " +
                     std::to_string(reduced.size()));
  }
  Potential x = Potential::Zero(n_);
  for (std::size_t i = 0; i < survivors_.size(); ++i) x[survivors_[i]] = reduced[static_cast<Eigen::Index>(i)];
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) x[it->u] = it->lifted.optimal_x(x[it->v]);
  return x;
}

Elimination vertex_elimination(const DiffusionInstance& inst, std::span<const VertexId> keep) {
  const VertexId n = inst.vertex_count();
  const Graph merged = inst.graph().merged();
  std::vector<char> pinned(static_cast<std::size_t>(n), 0);
  for (VertexId v : keep) {
    if (v < 0 || v >= n) throw UsageError("vertex_elimination: kept vertex out of range");
    pinned[v] = 1;
  }
  std::vector<VertexId> deg(static_cast<std::size_t>(n));
  std::vector<char> alive(static_cast<std::size_t>(n), 1);
  std::priority_queue<VertexId, std::vector<VertexId>, std::greater<>> leaves;
  for (VertexId v = 0; v < n; ++v) {
    deg[v] = merged.degree(v);
    if (deg[v] == 1 && !pinned[v]) leaves.push(v);
  }

  auto pool = std::make_shared<VwfPool>();
  std::vector<std::optional<VwfTree>> trees(static_cast<std::size_t>(n));
  auto tree_of = [&](VertexId v) -> VwfTree& {
    if (!trees[v]) {
      trees[v].emplace(pool, inst.vwf(v));
      trees[v]->clip(inst.lower(v));
    }
    return *trees[v];
  };

  std::vector<EliminationRecord> records;
  while (!leaves.empty()) {
    VertexId u = leaves.top();
    leaves.pop();
    if (!alive[u] || deg[u] != 1) continue;
    VertexId v = kNoVertex;
    double c = 0.0;
    for (const Incidence& inc : merged.incident(u)) {
      if (alive[inc.neighbor]) {
        v = inc.neighbor;
        c = merged.edge(inc.edge).conductance;
        break;
      }
    }
    // Last edge of a component: keep the smaller id.
    if (deg[v] == 1 && !pinned[v] && v > u) std::swap(u, v);
    VwfTree& tu = tree_of(u);
    tu.lift(c);
    records.push_back({u, v, c, inst.lower(u), tu.snapshot()});
    tree_of(v).add(tu);
    trees[u].reset();
    alive[u] = 0;
    if (--deg[v] == 1 && !pinned[v]) leaves.push(v);
  }

  std::vector<VertexId> survivors;
  for (VertexId v = 0; v < n; ++v) {
    if (alive[v]) survivors.push_back(v);
  }
  std::vector<Vwf> vwfs;
  std::vector<double> lower;
  vwfs.reserve(survivors.size());
  for (VertexId v : survivors) {
    vwfs.push_back(trees[v] ? trees[v]->to_vwf() : inst.vwf(v));
    lower.push_back(inst.lower(v));
  }
  auto g = std::make_shared<const Graph>(induced_subgraph(inst.graph(), survivors));
  DiffusionInstance reduced(std::move(g), std::move(vwfs), std::move(lower));
  return {std::move(reduced), RecoveryMap(n, std::move(survivors), std::move(records))};
}

}  // namespace l2diff
