#include "l2diff/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "l2diff/error.hpp"

namespace l2diff::gen {

namespace {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

void add_spanning_links(VertexId n, std::vector<Edge>& edges, Rng& rng, double c) {
  Graph tmp(n, edges);
  VertexId count = 0;
  std::vector<VertexId> comp = tmp.components(&count);
  if (count <= 1) return;
  std::vector<std::vector<VertexId>> members(static_cast<std::size_t>(count));
  for (VertexId v = 0; v < n; ++v) members[comp[v]].push_back(v);
  std::vector<VertexId> order(static_cast<std::size_t>(count));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    const auto& a = members[order[i]];
    const auto& b = members[order[i + 1]];
    const VertexId u = a[std::uniform_int_distribution<std::size_t>(0, a.size() - 1)(rng)];
    const VertexId v = b[std::uniform_int_distribution<std::size_t>(0, b.size() - 1)(rng)];
    edges.push_back({u, v, c});
  }
}

}  // namespace

Graph path(VertexId n, double c) {
  std::vector<Edge> e;
  for (VertexId i = 0; i + 1 < n; ++i) e.push_back({i, i + 1, c});
  return Graph(n, std::move(e));
}

Graph ring(VertexId n, double c) {
  std::vector<Edge> e;
  for (VertexId i = 0; i < n; ++i) e.push_back({i, (i + 1) % n, c});
  return Graph(n, std::move(e));
}

Graph grid(VertexId rows, VertexId cols, double c) {
  std::vector<Edge> e;
  auto id = [cols](VertexId r, VertexId k) { return r * cols + k; };
  for (VertexId r = 0; r < rows; ++r) {
    for (VertexId k = 0; k < cols; ++k) {
      if (k + 1 < cols) e.push_back({id(r, k), id(r, k + 1), c});
      if (r + 1 < rows) e.push_back({id(r, k), id(r + 1, k), c});
    }
  }
  return Graph(rows * cols, std::move(e));
}

Graph complete(VertexId n, double c) {
  std::vector<Edge> e;
  for (VertexId i = 0; i < n; ++i) {
    for (VertexId j = i + 1; j < n; ++j) e.push_back({i, j, c});
  }
  return Graph(n, std::move(e));
}

Graph star(VertexId leaves, double c) {
  std::vector<Edge> e;
  for (VertexId i = 1; i <= leaves; ++i) e.push_back({0, i, c});
  return Graph(leaves + 1, std::move(e));
}

Graph random_tree(VertexId n, Rng& rng, double c) {
  std::vector<Edge> e;
  for (VertexId i = 1; i < n; ++i) e.push_back({std::uniform_int_distribution<VertexId>(0, i - 1)(rng), i, c});
  return Graph(n, std::move(e));
}

Graph barbell(VertexId k, double bridge) {
  std::vector<Edge> e;
  for (VertexId side = 0; side < 2; ++side) {
    for (VertexId i = 0; i < k; ++i) {
      for (VertexId j = i + 1; j < k; ++j) e.push_back({side * k + i, side * k + j, 1.0});
    }
  }
  e.push_back({k - 1, k, bridge});
  return Graph(2 * k, std::move(e));
}

Graph erdos_renyi(VertexId n, double p, Rng& rng, bool connect) {
  std::vector<Edge> e;
  std::bernoulli_distribution coin(std::clamp(p, 0.0, 1.0));
  for (VertexId i = 0; i < n; ++i) {
    for (VertexId j = i + 1; j < n; ++j) {
      if (coin(rng)) e.push_back({i, j, 1.0});
    }
  }
  if (connect) add_spanning_links(n, e, rng, 1.0);
  return Graph(n, std::move(e));
}

Graph expander(VertexId n, int degree, Rng& rng) {
  if (n < 3) return complete(n);
  std::set<std::pair<VertexId, VertexId>> seen;
  std::vector<Edge> e;
  std::vector<VertexId> perm(static_cast<std::size_t>(n));
  for (int round = 0; round < std::max(1, degree / 2); ++round) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (VertexId i = 0; i < n; ++i) {
      VertexId u = perm[i], v = perm[(i + 1) % n];
      if (u > v) std::swap(u, v);
      if (seen.insert({u, v}).second) e.push_back({u, v, 1.0});
    }
  }
  return Graph(n, std::move(e));
}

Graph planted_partition(VertexId n1, VertexId n2, double p_in, double p_out, Rng& rng) {
  const Graph a = erdos_renyi(n1, p_in, rng, true);
  const Graph b = erdos_renyi(n2, p_in, rng, true);
  std::vector<Edge> e(a.edges().begin(), a.edges().end());
  for (const Edge& ed : b.edges()) e.push_back({ed.u + n1, ed.v + n1, ed.conductance});
  std::bernoulli_distribution out(p_out);
  bool crossed = false;
  for (VertexId i = 0; i < n1; ++i) {
    for (VertexId j = n1; j < n1 + n2; ++j) {
      if (out(rng)) {
        e.push_back({i, j, 1.0});
        crossed = true;
      }
    }
  }
  if (!crossed) e.push_back({n1 - 1, n1, 1.0});
  return Graph(n1 + n2, std::move(e));
}

Graph reweight(const Graph& g, double lo, double hi, Rng& rng) {
  std::vector<Edge> e(g.edges().begin(), g.edges().end());
  for (Edge& ed : e) ed.conductance = std::exp(uniform(rng, std::log(lo), std::log(hi)));
  return Graph(g.vertex_count(), std::move(e));
}

Vwf random_vwf(Rng& rng, int pieces, double start) {
  pieces = std::max(1, pieces);
  std::vector<double> breaks{start};
  double s = std::isfinite(start) ? start : -1.0;
  for (int i = 1; i < pieces; ++i) {
    s += uniform(rng, 0.05, 1.5);
    breaks.push_back(s);
  }
  std::vector<double> curv(breaks.size(), 0.0);
  double r = uniform(rng, 0.0, 3.0);
  for (std::size_t i = 0; i + 1 < curv.size(); ++i) {
    curv[i] = r;
    r *= uniform(rng, 0.0, 1.0);
  }
  const double value0 = std::bernoulli_distribution(0.5)(rng) ? 0.0 : -uniform(rng, 0.0, 1.0);
  const double slope0 = uniform(rng, -2.0, 2.0);
  return vwf_from_curvature(breaks, curv, value0, slope0);
}

Vector random_demand(const Graph& g, Rng& rng) {
  const VertexId n = g.vertex_count();
  Vector d(n);
  for (VertexId v = 0; v < n; ++v) d[v] = uniform(rng, -1.0, 1.0) * std::max(1.0, g.weighted_degree(v));
  VertexId count = 0;
  const std::vector<VertexId> comp = g.components(&count);
  std::vector<double> sum(static_cast<std::size_t>(count), 0.0);
  std::vector<VertexId> last(static_cast<std::size_t>(count), 0);
  for (VertexId v = 0; v < n; ++v) {
    sum[comp[v]] += d[v];
    last[comp[v]] = v;
  }
  for (VertexId c = 0; c < count; ++c) {
    if (sum[c] < 0.0) d[last[c]] += -sum[c] * (1.0 + uniform(rng, 0.0, 0.5));
  }
  return d;
}

DiffusionInstance random_instance(GraphPtr g, Rng& rng, int max_pieces) {
  const VertexId n = g->vertex_count();
  std::vector<Vwf> vwfs;
  std::vector<double> lower;
  std::uniform_int_distribution<int> count(1, std::max(1, max_pieces));
  for (VertexId v = 0; v < n; ++v) {
    const double start = std::bernoulli_distribution(0.5)(rng) ? 0.0 : -uniform(rng, 0.0, 2.0);
    vwfs.push_back(random_vwf(rng, count(rng), start));
    lower.push_back(std::bernoulli_distribution(0.5)(rng) ? start : uniform(rng, start, 0.0));
  }
  VertexId ncomp = 0;
  const std::vector<VertexId> comp = g->components(&ncomp);
  std::vector<double> tail(static_cast<std::size_t>(ncomp), 0.0);
  std::vector<VertexId> last(static_cast<std::size_t>(ncomp), 0);
  for (VertexId v = 0; v < n; ++v) {
    tail[comp[v]] += vwfs[v].tail_slope();
    last[comp[v]] = v;
  }
  for (VertexId c = 0; c < ncomp; ++c) {
    if (tail[c] < 0.0) {
      const VertexId v = last[c];
      vwfs[v] = vwf_add_affine(vwfs[v], -tail[c] + uniform(rng, 0.1, 1.0), 0.0);
    }
  }
  return DiffusionInstance(std::move(g), std::move(vwfs), std::move(lower));
}

}  // namespace l2diff::gen
