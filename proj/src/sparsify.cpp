#include "l2diff/sparsify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <queue>
#include <random>

#include "l2diff/error.hpp"
#include "l2diff/oracle.hpp"

namespace l2diff {

namespace {

struct Dsu {
  std::vector<VertexId> p;
  explicit Dsu(VertexId n) : p(static_cast<std::size_t>(n)) { std::iota(p.begin(), p.end(), 0); }
  VertexId find(VertexId x) {
    while (p[x] != x) x = p[x] = p[p[x]];
    return x;
  }
  bool unite(VertexId a, VertexId b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    p[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

VertexId heaviest_vertex(const Graph& g) {
  VertexId best = 0;
  for (VertexId v = 1; v < g.vertex_count(); ++v) {
    if (g.weighted_degree(v) > g.weighted_degree(best)) best = v;
  }
  return best;
}

std::vector<char> shortest_path_tree(const Graph& g, VertexId root) {
  const VertexId n = g.vertex_count();
  std::vector<double> dist(static_cast<std::size_t>(n), kInf);
  std::vector<EdgeId> pred(static_cast<std::size_t>(n), -1);
  using Item = std::pair<double, VertexId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[root] = 0.0;
  pq.push({0.0, root});
  while (!pq.empty()) {
    auto [d, v] = pq.top();
    pq.pop();
    if (d > dist[v]) continue;
    for (const Incidence& inc : g.incident(v)) {
      const double nd = d + 1.0 / g.edge(inc.edge).conductance;
      if (nd < dist[inc.neighbor]) {
        dist[inc.neighbor] = nd;
        pred[inc.neighbor] = inc.edge;
        pq.push({nd, inc.neighbor});
      }
    }
  }
  std::vector<char> in(static_cast<std::size_t>(g.edge_count()), 0);
  for (VertexId v = 0; v < n; ++v) {
    if (pred[v] >= 0) in[pred[v]] = 1;
  }
  return in;
}

std::vector<char> max_conductance_tree(const Graph& g) {
  std::vector<EdgeId> order(static_cast<std::size_t>(g.edge_count()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](EdgeId a, EdgeId b) { return g.edge(a).conductance > g.edge(b).conductance; });
  Dsu dsu(g.vertex_count());
  std::vector<char> in(static_cast<std::size_t>(g.edge_count()), 0);
  for (EdgeId e : order) {
    if (dsu.unite(g.edge(e).u, g.edge(e).v)) in[e] = 1;
  }
  return in;
}

// Repeated exponential-shift clustering on the contracted graph; the
// shortest-path forests of every round are kept as tree edges.
std::vector<char> clustering_tree(const Graph& g, std::uint64_t seed) {
  const VertexId n = g.vertex_count();
  std::mt19937_64 rng(seed);
  std::vector<VertexId> cluster(static_cast<std::size_t>(n));
  std::iota(cluster.begin(), cluster.end(), 0);
  VertexId k = n;
  std::vector<char> in(static_cast<std::size_t>(g.edge_count()), 0);
  double scale = 2.0;
  while (k > 1) {
    // Contracted adjacency.
    std::vector<std::vector<std::pair<VertexId, EdgeId>>> adj(static_cast<std::size_t>(k));
    std::vector<double> lengths;
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
      const VertexId a = cluster[g.edge(e).u], b = cluster[g.edge(e).v];
      if (a == b) continue;
      adj[a].push_back({b, e});
      adj[b].push_back({a, e});
      lengths.push_back(1.0 / g.edge(e).conductance);
    }
    if (lengths.empty()) break;
    std::nth_element(lengths.begin(), lengths.begin() + static_cast<std::ptrdiff_t>(lengths.size() / 2), lengths.end());
    const double median = lengths[lengths.size() / 2];
    std::exponential_distribution<double> shift(1.0 / (scale * median));
    std::vector<double> delta(static_cast<std::size_t>(k));
    double top = 0.0;
    for (double& d : delta) {
      d = shift(rng);
      top = std::max(top, d);
    }
    std::vector<double> dist(static_cast<std::size_t>(k));
    std::vector<VertexId> owner(static_cast<std::size_t>(k));
    std::vector<EdgeId> pred(static_cast<std::size_t>(k), -1);
    using Item = std::pair<double, VertexId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    for (VertexId a = 0; a < k; ++a) {
      dist[a] = top - delta[a];
      owner[a] = a;
      pq.push({dist[a], a});
    }
    std::vector<char> done(static_cast<std::size_t>(k), 0);
    while (!pq.empty()) {
      auto [d, a] = pq.top();
      pq.pop();
      if (done[a] || d > dist[a]) continue;
      done[a] = 1;
      for (auto [b, e] : adj[a]) {
        const double nd = d + 1.0 / g.edge(e).conductance;
        if (!done[b] && nd < dist[b]) {
          dist[b] = nd;
          owner[b] = owner[a];
          pred[b] = e;
          pq.push({nd, b});
        }
      }
    }
    std::vector<VertexId> relabel(static_cast<std::size_t>(k), kNoVertex);
    VertexId next = 0;
    for (VertexId a = 0; a < k; ++a) {
      if (owner[a] == a) relabel[a] = next++;
    }
    if (next == k) {
      scale *= 2.0;
      continue;
    }
    for (VertexId a = 0; a < k; ++a) {
      if (pred[a] >= 0) in[pred[a]] = 1;
    }
    for (VertexId v = 0; v < n; ++v) cluster[v] = relabel[owner[cluster[v]]];
    k = next;
  }
  return in;
}

}  // namespace

RootedForest forest_from_edges(const Graph& g, std::span<const char> in_forest, std::span<const VertexId> roots) {
  const VertexId n = g.vertex_count();
  if (in_forest.size() != static_cast<std::size_t>(g.edge_count())) throw UsageError("forest_from_edges: size mismatch");
  RootedForest f;
  f.parent.assign(static_cast<std::size_t>(n), kNoVertex);
  f.parent_edge.assign(static_cast<std::size_t>(n), -1);
  f.parent_conductance.assign(static_cast<std::size_t>(n), 0.0);
  f.root_of.assign(static_cast<std::size_t>(n), kNoVertex);
  f.component.assign(static_cast<std::size_t>(n), kNoVertex);
  f.root_distance.assign(static_cast<std::size_t>(n), 0.0);
  f.roots.assign(roots.begin(), roots.end());
  std::sort(f.roots.begin(), f.roots.end());
  f.order.reserve(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < f.roots.size(); ++i) {
    const VertexId r = f.roots[i];
    if (f.root_of[r] != kNoVertex) throw ValidationError("forest: two roots in one tree");
    f.root_of[r] = r;
    f.component[r] = static_cast<VertexId>(i);
    std::size_t head = f.order.size();
    f.order.push_back(r);
    while (head < f.order.size()) {
      const VertexId v = f.order[head++];
      for (const Incidence& inc : g.incident(v)) {
        if (!in_forest[inc.edge] || inc.edge == f.parent_edge[v]) continue;
        const VertexId w = inc.neighbor;
        if (f.root_of[w] != kNoVertex) throw ValidationError("forest: edges contain a cycle or join two roots");
        f.root_of[w] = r;
        f.component[w] = static_cast<VertexId>(i);
        f.parent[w] = v;
        f.parent_edge[w] = inc.edge;
        f.parent_conductance[w] = g.edge(inc.edge).conductance;
        f.root_distance[w] = f.root_distance[v] + 1.0 / f.parent_conductance[w];
        f.order.push_back(w);
      }
    }
  }
  if (f.order.size() != static_cast<std::size_t>(n)) throw ValidationError("forest: some vertex has no root");
  return f;
}

ForestLca::ForestLca(const RootedForest& f) : f_(&f) {
  const VertexId n = f.vertex_count();
  depth_.assign(static_cast<std::size_t>(n), 0);
  std::int32_t max_depth = 0;
  for (VertexId v : f.order) {
    if (f.parent[v] != kNoVertex) depth_[v] = depth_[f.parent[v]] + 1;
    max_depth = std::max(max_depth, depth_[v]);
  }
  int levels = 1;
  while ((1 << levels) <= max_depth) ++levels;
  up_.assign(static_cast<std::size_t>(levels), std::vector<VertexId>(static_cast<std::size_t>(n)));
  for (VertexId v = 0; v < n; ++v) up_[0][v] = f.parent[v] == kNoVertex ? v : f.parent[v];
  for (int k = 1; k < levels; ++k) {
    for (VertexId v = 0; v < n; ++v) up_[k][v] = up_[k - 1][up_[k - 1][v]];
  }
}

VertexId ForestLca::lca(VertexId a, VertexId b) const {
  if (f_->root_of[a] != f_->root_of[b]) return kNoVertex;
  if (depth_[a] < depth_[b]) std::swap(a, b);
  std::int32_t diff = depth_[a] - depth_[b];
  for (std::size_t k = 0; diff; ++k, diff >>= 1) {
    if (diff & 1) a = up_[k][a];
  }
  if (a == b) return a;
  for (std::size_t k = up_.size(); k-- > 0;) {
    if (up_[k][a] != up_[k][b]) {
      a = up_[k][a];
      b = up_[k][b];
    }
  }
  return f_->parent[a];
}

double ForestLca::distance(VertexId a, VertexId b) const {
  const VertexId c = lca(a, b);
  if (c == kNoVertex) return kInf;
  return f_->root_distance[a] + f_->root_distance[b] - 2.0 * f_->root_distance[c];
}

std::vector<double> tree_stretch(const Graph& g, const RootedForest& t) {
  ForestLca lca(t);
  std::vector<double> s(static_cast<std::size_t>(g.edge_count()));
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const Edge& ed = g.edge(e);
    s[e] = ed.conductance * lca.distance(ed.u, ed.v);
  }
  return s;
}

LowStretchTree low_stretch_tree(const Graph& g, std::uint64_t seed) {
  if (g.vertex_count() == 0) throw UsageError("low_stretch_tree: empty graph");
  if (!g.connected()) throw UsageError("low_stretch_tree: graph is not connected");
  const VertexId root = heaviest_vertex(g);
  const std::vector<VertexId> roots{root};
  struct Candidate {
    const char* name;
    std::vector<char> edges;
  };
  std::vector<Candidate> candidates;
  candidates.push_back({"clustering", clustering_tree(g, seed)});
  candidates.push_back({"shortest-path", shortest_path_tree(g, root)});
  candidates.push_back({"max-conductance", max_conductance_tree(g)});
  LowStretchTree best;
  best.total_stretch = kInf;
  for (const Candidate& c : candidates) {
    RootedForest t = forest_from_edges(g, c.edges, roots);
    std::vector<double> s = tree_stretch(g, t);
    const double total = std::accumulate(s.begin(), s.end(), 0.0);
    if (total < best.total_stretch) {
      best.tree = std::move(t);
      best.stretch = std::move(s);
      best.total_stretch = total;
      best.method = c.name;
    }
  }
  return best;
}

namespace {

Decomposition decompose_at(const Graph& g, const RootedForest& t, std::span<const double> omega, double beta) {
  const VertexId n = g.vertex_count();
  std::vector<std::vector<VertexId>> children(static_cast<std::size_t>(n));
  for (VertexId v : t.order) {
    if (t.parent[v] != kNoVertex) children[t.parent[v]].push_back(v);
  }
  // Cut a vertex when the weight gathered below it exceeds beta.
  std::vector<double> acc(omega.begin(), omega.end());
  std::vector<char> in_c(static_cast<std::size_t>(n), 0);
  for (auto it = t.order.rbegin(); it != t.order.rend(); ++it) {
    const VertexId v = *it;
    if (acc[v] > beta) {
      in_c[v] = 1;
    } else if (t.parent[v] != kNoVertex) {
      acc[t.parent[v]] += acc[v];
    }
  }
  // Close under lowest common ancestors: add every branching vertex with two
  // marked child subtrees.
  std::vector<char> marked(in_c.begin(), in_c.end());
  for (auto it = t.order.rbegin(); it != t.order.rend(); ++it) {
    const VertexId v = *it;
    int branches = 0;
    for (VertexId c : children[v]) branches += marked[c] ? 1 : 0;
    if (branches >= 2) in_c[v] = 1;
    if (branches > 0 || in_c[v]) marked[v] = 1;
  }

  // Components of T - C.
  std::vector<std::int32_t> comp(static_cast<std::size_t>(n), -1);
  std::int32_t ncomp = 0;
  std::vector<VertexId> comp_top;
  for (VertexId v : t.order) {
    if (in_c[v]) continue;
    const VertexId p = t.parent[v];
    if (p != kNoVertex && !in_c[p]) {
      comp[v] = comp[p];
    } else {
      comp[v] = ncomp++;
      comp_top.push_back(v);
    }
  }
  std::vector<std::vector<VertexId>> members(static_cast<std::size_t>(ncomp));
  std::vector<double> weight(static_cast<std::size_t>(ncomp), 0.0);
  std::vector<VertexId> above(static_cast<std::size_t>(ncomp), kNoVertex);
  std::vector<VertexId> below(static_cast<std::size_t>(ncomp), kNoVertex);
  for (VertexId v : t.order) {
    if (in_c[v]) {
      const VertexId p = t.parent[v];
      if (p != kNoVertex && !in_c[p]) {
        if (below[comp[p]] != kNoVertex && below[comp[p]] != v) {
          throw VerificationError("decompose_tree: component with two lower boundary vertices");
        }
        below[comp[p]] = v;
      }
      continue;
    }
    members[comp[v]].push_back(v);
    weight[comp[v]] += omega[v];
  }
  for (std::int32_t k = 0; k < ncomp; ++k) {
    const VertexId p = t.parent[comp_top[k]];
    if (p != kNoVertex) above[k] = p;
  }

  Decomposition d;
  d.threshold = beta;
  for (VertexId v = 0; v < n; ++v) {
    if (in_c[v]) {
      d.sets.push_back({v});
      d.boundary.push_back(v);
    }
  }
  auto add_set = [&](std::vector<VertexId> set) {
    std::sort(set.begin(), set.end());
    d.sets.push_back(std::move(set));
  };
  // One-boundary components grouped per boundary vertex up to beta.
  std::map<VertexId, std::vector<std::int32_t>> hanging;
  for (std::int32_t k = 0; k < ncomp; ++k) {
    const int nb = (above[k] != kNoVertex) + (below[k] != kNoVertex);
    if (nb == 2) {
      std::vector<VertexId> set = members[k];
      set.push_back(above[k]);
      set.push_back(below[k]);
      add_set(std::move(set));
    } else if (nb == 1) {
      hanging[above[k] != kNoVertex ? above[k] : below[k]].push_back(k);
    } else {
      add_set(members[k]);
    }
  }
  for (auto& [c, comps] : hanging) {
    std::vector<VertexId> set;
    double w = 0.0;
    for (std::int32_t k : comps) {
      if (!set.empty() && w + weight[k] > beta) {
        set.push_back(c);
        add_set(std::move(set));
        set.clear();
        w = 0.0;
      }
      set.insert(set.end(), members[k].begin(), members[k].end());
      w += weight[k];
    }
    set.push_back(c);
    add_set(std::move(set));
  }
  // Tree edges between two boundary vertices.
  for (VertexId v = 0; v < n; ++v) {
    const VertexId p = t.parent[v];
    if (p != kNoVertex && in_c[v] && in_c[p]) add_set({v, p});
  }
  return d;
}

}  // namespace

Decomposition decompose_tree(const Graph& g, const RootedForest& t, std::span<const double> w, int j) {
  const VertexId n = g.vertex_count();
  if (j < 1) throw UsageError("decompose_tree: j must be positive");
  if (t.tree_count() != 1 || t.vertex_count() != n) throw UsageError("decompose_tree: expected a spanning tree");
  if (w.size() != static_cast<std::size_t>(g.edge_count())) throw UsageError("decompose_tree: weight size mismatch");
  std::vector<double> omega(static_cast<std::size_t>(n), 0.0);
  double total = 0.0;
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    if (w[e] < 0.0) throw DomainError("decompose_tree: negative weight");
    omega[g.edge(e).u] += w[e];
    omega[g.edge(e).v] += w[e];
    total += w[e];
  }
  double beta = total > 0.0 ? total / j : kInf;
  Decomposition d;
  while (true) {
    d = decompose_at(g, t, omega, beta);
    if (static_cast<int>(d.sets.size()) <= j) break;
    beta *= 2.0;
  }
  // rho: each endpoint goes to the set holding it as an interior vertex, or
  // to its singleton when it is a boundary vertex.
  std::vector<std::int32_t> home(static_cast<std::size_t>(n), -1);
  std::vector<char> shared(static_cast<std::size_t>(n), 0);
  for (VertexId b : d.boundary) shared[b] = 1;
  for (std::size_t i = 0; i < d.sets.size(); ++i) {
    const auto& s = d.sets[i];
    for (VertexId v : s) {
      if (shared[v] ? s.size() == 1 : true) home[v] = static_cast<std::int32_t>(i);
    }
  }
  std::vector<double> set_weight(d.sets.size(), 0.0);
  d.rho.assign(static_cast<std::size_t>(g.edge_count()), {-1, -1});
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const std::int32_t a = home[g.edge(e).u], b = home[g.edge(e).v];
    d.rho[e] = a == b ? std::array<std::int32_t, 2>{a, -1} : std::array<std::int32_t, 2>{a, b};
    set_weight[a] += w[e];
    if (b != a) set_weight[b] += w[e];
  }
  d.max_weight = 0.0;
  for (std::size_t i = 0; i < d.sets.size(); ++i) {
    if (d.sets[i].size() > 1) d.max_weight = std::max(d.max_weight, set_weight[i]);
  }
  return d;
}

std::vector<double> local_stretch(const Graph& g, const RootedForest& f) {
  ForestLca lca(f);
  std::vector<double> total(f.roots.size(), 0.0);
  for (const Edge& e : g.edges()) {
    if (f.root_of[e.u] == f.root_of[e.v]) {
      total[f.component[e.u]] += e.conductance * lca.distance(e.u, e.v);
    } else {
      total[f.component[e.u]] += e.conductance * f.root_distance[e.u];
      total[f.component[e.v]] += e.conductance * f.root_distance[e.v];
    }
  }
  return total;
}

ForestResult find_forest(const Graph& g, int j, std::uint64_t seed) {
  if (j < 10) throw UsageError("find_forest: j must be at least 10");
  LowStretchTree lsst = low_stretch_tree(g, seed);
  const RootedForest& t = lsst.tree;
  Decomposition dec = decompose_tree(g, t, lsst.stretch, j + 1);
  std::vector<VertexId> roots = dec.boundary;
  if (roots.empty()) roots = t.roots;

  // Weighted congestion of every tree edge (v, parent v), stored at v.
  ForestLca lca(t);
  std::vector<double> cong(static_cast<std::size_t>(g.vertex_count()), 0.0);
  for (const Edge& e : g.edges()) {
    cong[e.u] += e.conductance;
    cong[e.v] += e.conductance;
    cong[lca.lca(e.u, e.v)] -= 2.0 * e.conductance;
  }
  for (auto it = t.order.rbegin(); it != t.order.rend(); ++it) {
    if (t.parent[*it] != kNoVertex) cong[t.parent[*it]] += cong[*it];
  }

  std::vector<char> in(static_cast<std::size_t>(g.edge_count()), 0);
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (t.parent_edge[v] >= 0) in[t.parent_edge[v]] = 1;
  }
  std::vector<char> is_root(static_cast<std::size_t>(g.vertex_count()), 0);
  for (VertexId r : roots) is_root[r] = 1;
  for (const auto& set : dec.sets) {
    std::vector<VertexId> ends;
    for (VertexId v : set) {
      if (is_root[v]) ends.push_back(v);
    }
    if (ends.size() > 2) throw VerificationError("find_forest: decomposition is not refined");
    if (ends.size() != 2) continue;
    const VertexId top = lca.lca(ends[0], ends[1]);
    VertexId best = kNoVertex;
    for (VertexId s : ends) {
      for (VertexId v = s; v != top; v = t.parent[v]) {
        if (best == kNoVertex || cong[v] < cong[best] ||
            (cong[v] == cong[best] && t.parent_edge[v] < t.parent_edge[best])) {
          best = v;
        }
      }
    }
    in[t.parent_edge[best]] = 0;
  }
  ForestResult out;
  out.forest = forest_from_edges(g, in, roots);
  const std::vector<double> local = local_stretch(g, out.forest);
  out.max_local_stretch = local.empty() ? 0.0 : *std::max_element(local.begin(), local.end());
  out.tree_stretch = lsst.total_stretch;
  return out;
}

namespace {

struct CoreEdges {
  std::vector<Edge> edges;  // on original vertex ids, merged, scaled by 10
};

CoreEdges move_edges(const Graph& g, const RootedForest& f) {
  std::map<std::pair<VertexId, VertexId>, double> merged;
  for (const Edge& e : g.edges()) {
    VertexId a = f.root_of[e.u], b = f.root_of[e.v];
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    merged[{a, b}] += e.conductance;
  }
  CoreEdges out;
  for (const auto& [key, c] : merged) out.edges.push_back({key.first, key.second, 10.0 * c});
  return out;
}

GraphPtr assemble(const RootedForest& f, double kappa, const std::vector<Edge>& core) {
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(f.vertex_count()) + core.size());
  for (VertexId v : f.order) {
    if (f.parent[v] != kNoVertex) edges.push_back({v, f.parent[v], 10.0 * kappa * f.parent_conductance[v]});
  }
  edges.insert(edges.end(), core.begin(), core.end());
  return make_graph(f.vertex_count(), std::move(edges));
}

}  // namespace

JTree canonical_jtree(const Graph& g, const RootedForest& f, double kappa) {
  if (!(kappa >= 1.0)) throw DomainError("canonical_jtree: kappa must be at least 1");
  if (f.vertex_count() != g.vertex_count()) throw UsageError("canonical_jtree: forest does not span the graph");
  JTree jt;
  const CoreEdges core = move_edges(g, f);
  jt.graph = assemble(f, kappa, core.edges);
  jt.envelope = f;
  jt.core = f.roots;
  jt.core_edges = static_cast<EdgeId>(core.edges.size());
  jt.kappa = kappa;
  jt.quality_bound = 100.0 * kappa;
  return jt;
}

Graph spectral_sparsify_core(const Graph& g, const SparsifyOptions& opt) {
  const Graph m = g.merged();
  const VertexId n = m.vertex_count();
  if (n < 2) return g;
  const double threshold = opt.edge_factor * n * std::log2(static_cast<double>(n));
  if (m.edge_count() <= threshold || n > opt.max_core_vertices) return g;
  if (!m.connected()) throw UsageError("spectral_sparsify_core: graph is not connected");

  const Eigen::MatrixXd pinv = laplacian_pinv(m);
  std::vector<double> lev(static_cast<std::size_t>(m.edge_count()));
  for (EdgeId e = 0; e < m.edge_count(); ++e) {
    const Edge& ed = m.edge(e);
    const double r = pinv(ed.u, ed.u) + pinv(ed.v, ed.v) - 2.0 * pinv(ed.u, ed.v);
    lev[e] = std::clamp(ed.conductance * r, 1e-12, 1.0);
  }
  const double lev_total = std::accumulate(lev.begin(), lev.end(), 0.0);
  std::mt19937_64 rng(opt.seed);
  std::discrete_distribution<EdgeId> pick(lev.begin(), lev.end());
  auto q = static_cast<std::int64_t>(std::ceil(8.0 * n * std::log(static_cast<double>(n))));
  for (int attempt = 0; attempt < 3; ++attempt, q *= 2) {
    std::vector<double> w(static_cast<std::size_t>(m.edge_count()), 0.0);
    for (std::int64_t s = 0; s < q; ++s) {
      const EdgeId e = pick(rng);
      w[e] += m.edge(e).conductance * lev_total / (static_cast<double>(q) * lev[e]);
    }
    std::vector<Edge> kept;
    for (EdgeId e = 0; e < m.edge_count(); ++e) {
      if (w[e] > 0.0) kept.push_back({m.edge(e).u, m.edge(e).v, w[e]});
    }
    Graph h(n, kept);
    if (!h.connected()) continue;
    const PencilBounds pb = pencil_bounds(h, m);
    if (!(pb.lambda_min > 0.0) || pb.lambda_max > 2.0 * pb.lambda_min) continue;
    for (Edge& e : kept) e.conductance /= pb.lambda_min;
    return Graph(n, std::move(kept));
  }
  throw NumericalError("spectral_sparsify_core: no certified 2-approximation after 3 samples");
}

JTree jtree_sparsify(const Graph& g, int j, const SparsifyOptions& opt) {
  if (!g.connected()) throw UsageError("jtree_sparsify: graph is not connected");
  const ForestResult ff = find_forest(g, j, opt.seed);
  const double kappa = std::max(1.0, ff.max_local_stretch);
  JTree jt = canonical_jtree(g, ff.forest, kappa);
  if (jt.core.size() < 3) return jt;

  // Core on its own ids.
  std::vector<VertexId> local(static_cast<std::size_t>(g.vertex_count()), kNoVertex);
  for (std::size_t i = 0; i < jt.core.size(); ++i) local[jt.core[i]] = static_cast<VertexId>(i);
  const CoreEdges core = move_edges(g, ff.forest);
  std::vector<Edge> ce;
  for (const Edge& e : core.edges) ce.push_back({local[e.u], local[e.v], e.conductance});
  const Graph core_graph(static_cast<VertexId>(jt.core.size()), ce);
  Graph sparse = spectral_sparsify_core(core_graph, opt);
  if (sparse.edge_count() == core_graph.edge_count() && sparse.id() == core_graph.id()) return jt;
  std::vector<Edge> back;
  for (const Edge& e : sparse.edges()) back.push_back({jt.core[e.u], jt.core[e.v], e.conductance});
  jt.graph = assemble(ff.forest, kappa, back);
  jt.core_edges = static_cast<EdgeId>(back.size());
  jt.quality_bound = 200.0 * kappa;
  jt.core_sparsified = true;
  return jt;
}

SupportBounds support_bounds(const Graph& g, const JTree& jt) {
  const RootedForest& f = jt.envelope;
  if (f.vertex_count() != g.vertex_count()) throw UsageError("support_bounds: forest does not span the graph");
  const double tree_scale = 10.0 * jt.kappa;
  const double core_factor = jt.core_sparsified ? 2.0 : 1.0;
  const auto n = static_cast<std::size_t>(g.vertex_count());
  std::map<std::pair<VertexId, VertexId>, double> core;
  for (const Edge& e : g.edges()) {
    VertexId a = f.root_of[e.u], b = f.root_of[e.v];
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    core[{a, b}] += 10.0 * e.conductance;
  }
  ForestLca lca(f);
  // into_h: load of routing G through H, per tree edge (stored at the child) and per core pair.
  // into_g: load of routing the core through G.
  std::vector<double> into_h(n, 0.0), into_g(n, 0.0);
  std::map<std::pair<VertexId, VertexId>, double> core_load;
  double upper = 0.0;
  for (EdgeId id = 0; id < g.edge_count(); ++id) {
    const Edge& e = g.edge(id);
    if (f.parent_edge[e.u] == id || f.parent_edge[e.v] == id) continue;
    VertexId a = f.root_of[e.u], b = f.root_of[e.v];
    if (a == b) {
      const double load = e.conductance * lca.distance(e.u, e.v) / tree_scale;
      into_h[e.u] += load;
      into_h[e.v] += load;
      into_h[lca.lca(e.u, e.v)] -= 2.0 * load;
      continue;
    }
    if (a > b) std::swap(a, b);
    const double spread = f.root_distance[e.u] + f.root_distance[e.v];
    const double load = e.conductance * (spread / tree_scale + 1.0 / core.at({a, b}));
    into_h[e.u] += load;
    into_h[e.v] += load;
    core_load[{a, b}] += load;
    const double s = 10.0 * core_factor * (1.0 + e.conductance * spread);
    into_g[e.u] += s;
    into_g[e.v] += s;
    upper = std::max(upper, s);
  }
  double rho = 0.0;
  for (const auto& [key, load] : core_load) rho = std::max(rho, load);
  for (auto it = f.order.rbegin(); it != f.order.rend(); ++it) {
    const VertexId v = *it;
    if (f.parent[v] == kNoVertex) continue;
    into_h[f.parent[v]] += into_h[v];
    into_g[f.parent[v]] += into_g[v];
    rho = std::max(rho, 1.0 / tree_scale + into_h[v]);
    upper = std::max(upper, tree_scale + into_g[v]);
  }
  if (!(rho > 0.0)) rho = 1.0 / tree_scale;
  return {1.0 / rho, std::max(upper, tree_scale)};
}

void write_forest(std::ostream& out, const RootedForest& f) {
  for (VertexId v = 0; v < f.vertex_count(); ++v) {
    out << v << ' ' << (f.parent[v] == kNoVertex ? -1 : f.parent[v]) << ' ' << f.root_of[v] << ' ' << f.component[v]
        << '\n';
  }
}

}  // namespace l2diff
