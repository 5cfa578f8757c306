#include "l2diff/graph.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <sstream>

#include "l2diff/error.hpp"

namespace l2diff {

namespace {

std::uint64_t next_graph_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

void check_dim(const Graph& g, Eigen::Index size, const char* what) {
  if (size != g.vertex_count()) {
    throw UsageError(std::string(what) + ": potential has dimension " + std::to_string(size) +
                     ", graph has " + std::to_string(g.vertex_count()) + " vertices");
  }
}

}  // namespace

Graph::Graph() : offsets_(1, 0), id_(next_graph_id()) {}

Graph::Graph(VertexId vertex_count, std::vector<Edge> edges)
    : n_(vertex_count), edges_(std::move(edges)), id_(next_graph_id()) {
  if (n_ < 0) throw UsageError("negative vertex count");
  if (edges_.size() > static_cast<std::size_t>(std::numeric_limits<EdgeId>::max())) {
    throw UsageError("too many edges");
  }
  offsets_.assign(static_cast<std::size_t>(n_) + 1, 0);
  weighted_degree_.assign(static_cast<std::size_t>(n_), 0.0);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const Edge& ed = edges_[e];
    if (ed.u < 0 || ed.u >= n_ || ed.v < 0 || ed.v >= n_) {
      throw ValidationError("edge " + std::to_string(e) + " has an endpoint out of range");
    }
    if (ed.u == ed.v) throw ValidationError("edge " + std::to_string(e) + " is a self-loop");
    if (!(ed.conductance > 0.0) || !std::isfinite(ed.conductance)) {
      throw ValidationError("edge " + std::to_string(e) + " has non-positive or non-finite conductance");
    }
    ++offsets_[ed.u + 1];
    ++offsets_[ed.v + 1];
    weighted_degree_[ed.u] += ed.conductance;
    weighted_degree_[ed.v] += ed.conductance;
  }
  for (VertexId v = 0; v < n_; ++v) offsets_[v + 1] += offsets_[v];
  adjacency_.resize(2 * edges_.size());
  std::vector<VertexId> fill(offsets_.begin(), offsets_.end() - 1);
  for (EdgeId e = 0; e < edge_count(); ++e) {
    const Edge& ed = edges_[e];
    adjacency_[fill[ed.u]++] = {ed.v, e};
    adjacency_[fill[ed.v]++] = {ed.u, e};
  }
  volume_ = std::accumulate(weighted_degree_.begin(), weighted_degree_.end(), 0.0);
}

double Graph::conductance_ratio() const noexcept {
  if (edges_.empty()) return 1.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const Edge& e : edges_) {
    lo = std::min(lo, e.conductance);
    hi = std::max(hi, e.conductance);
  }
  return hi / lo;
}

Graph Graph::merged() const {
  std::vector<Edge> sorted(edges_);
  for (Edge& e : sorted) {
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(sorted.begin(), sorted.end(), [](const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  std::vector<Edge> out;
  out.reserve(sorted.size());
  for (const Edge& e : sorted) {
    if (!out.empty() && out.back().u == e.u && out.back().v == e.v) {
      out.back().conductance += e.conductance;
    } else {
      out.push_back(e);
    }
  }
  return Graph(n_, std::move(out));
}

std::vector<VertexId> Graph::components(VertexId* count) const {
  std::vector<VertexId> comp(static_cast<std::size_t>(n_), kNoVertex);
  std::vector<VertexId> stack;
  VertexId next = 0;
  for (VertexId s = 0; s < n_; ++s) {
    if (comp[s] != kNoVertex) continue;
    comp[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      VertexId v = stack.back();
      stack.pop_back();
      for (const Incidence& inc : incident(v)) {
        if (comp[inc.neighbor] == kNoVertex) {
          comp[inc.neighbor] = next;
          stack.push_back(inc.neighbor);
        }
      }
    }
    ++next;
  }
  if (count) *count = next;
  return comp;
}

bool Graph::connected() const {
  VertexId count = 0;
  components(&count);
  return count <= 1;
}

GraphPtr make_graph(VertexId vertex_count, std::vector<Edge> edges) {
  return std::make_shared<const Graph>(vertex_count, std::move(edges));
}

void validate_conductance_range(const Graph& g, double exponent) {
  const double n = std::max<double>(2.0, g.vertex_count());
  const double limit = std::pow(n, exponent);
  const double ratio = g.conductance_ratio();
  if (ratio > limit) {
    std::ostringstream msg;
    msg << "conductance ratio " << ratio << " exceeds n^" << exponent << " = " << limit;
    throw DomainError(msg.str());
  }
}

Potential laplacian_apply(const Graph& g, const Potential& x) {
  check_dim(g, x.size(), "laplacian_apply");
  Potential y = Potential::Zero(g.vertex_count());
  for (const Edge& e : g.edges()) {
    const double t = e.conductance * (x[e.u] - x[e.v]);
    y[e.u] += t;
    y[e.v] -= t;
  }
  return y;
}

Flow potential_flow(const Graph& g, const Potential& x) {
  check_dim(g, x.size(), "potential_flow");
  Flow f(g.edge_count());
  for (EdgeId i = 0; i < g.edge_count(); ++i) {
    const Edge& e = g.edge(i);
    f[i] = -e.conductance * (x[e.u] - x[e.v]);
  }
  return f;
}

Vector residue(const Graph& g, const Flow& f) {
  if (f.size() != g.edge_count()) throw UsageError("residue: flow dimension mismatch");
  Vector r = Vector::Zero(g.vertex_count());
  for (EdgeId i = 0; i < g.edge_count(); ++i) {
    const Edge& e = g.edge(i);
    r[e.u] += f[i];
    r[e.v] -= f[i];
  }
  return r;
}

double quadratic_form(const Graph& g, const Potential& x) {
  check_dim(g, x.size(), "quadratic_form");
  double s = 0.0;
  for (const Edge& e : g.edges()) {
    const double d = x[e.u] - x[e.v];
    s += e.conductance * d * d;
  }
  return 0.5 * s;
}

double volume(const Graph& g, std::span<const VertexId> set) {
  double vol = 0.0;
  for (VertexId v : set) vol += g.weighted_degree(v);
  return vol;
}

double conductance(const Graph& g, std::span<const VertexId> set, bool global) {
  std::vector<char> in(static_cast<std::size_t>(g.vertex_count()), 0);
  std::size_t distinct = 0;
  for (VertexId v : set) {
    if (v < 0 || v >= g.vertex_count()) throw DomainError("conductance: vertex out of range");
    if (!in[v]) {
      in[v] = 1;
      ++distinct;
    }
  }
  if (distinct == 0) throw DomainError("conductance: empty set");
  if (distinct == static_cast<std::size_t>(g.vertex_count())) {
    throw DomainError("conductance: set equals the whole vertex set");
  }
  double cut = 0.0;
  double vol = 0.0;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (!in[v]) continue;
    vol += g.weighted_degree(v);
    for (const Incidence& inc : g.incident(v)) {
      if (!in[inc.neighbor]) cut += g.edge(inc.edge).conductance;
    }
  }
  const double denom = global ? std::min(vol, g.volume() - vol) : vol;
  if (denom <= 0.0) return std::numeric_limits<double>::infinity();
  return cut / denom;
}

SweepResult sweep_cut(const Graph& g, const Potential& x, bool global) {
  check_dim(g, x.size(), "sweep_cut");
  std::vector<VertexId> order;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (x[v] < 0.0) throw DomainError("sweep_cut: potential must be non-negative");
    if (x[v] > 0.0) order.push_back(v);
  }
  if (order.empty()) throw DomainError("empty diffusion support");
  std::stable_sort(order.begin(), order.end(), [&](VertexId a, VertexId b) { return x[a] > x[b]; });

  std::vector<char> in(static_cast<std::size_t>(g.vertex_count()), 0);
  double cut = 0.0;
  double vol = 0.0;
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_len = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const VertexId v = order[i];
    in[v] = 1;
    vol += g.weighted_degree(v);
    for (const Incidence& inc : g.incident(v)) {
      const double c = g.edge(inc.edge).conductance;
      cut += in[inc.neighbor] ? -c : c;
    }
    if (i + 1 == static_cast<std::size_t>(g.vertex_count())) break;
    const double denom = global ? std::min(vol, g.volume() - vol) : vol;
    const double phi = denom > 0.0 ? std::max(0.0, cut) / denom : std::numeric_limits<double>::infinity();
    if (phi < best) {
      best = phi;
      best_len = i + 1;
    }
  }
  if (best_len == 0) throw DomainError("sweep_cut: support covers every vertex, no proper prefix");
  SweepResult out;
  out.set.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(best_len));
  // Recompute exactly to avoid drift from incremental updates.
  out.conductance = conductance(g, out.set, global);
  return out;
}

Graph induced_subgraph(const Graph& g, std::span<const VertexId> vertices, std::vector<EdgeId>* edge_map) {
  std::vector<VertexId> index(static_cast<std::size_t>(g.vertex_count()), kNoVertex);
  for (std::size_t i = 0; i < vertices.size(); ++i) index[vertices[i]] = static_cast<VertexId>(i);
  std::vector<Edge> edges;
  if (edge_map) edge_map->clear();
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    const Edge& ed = g.edge(e);
    if (index[ed.u] != kNoVertex && index[ed.v] != kNoVertex) {
      edges.push_back({index[ed.u], index[ed.v], ed.conductance});
      if (edge_map) edge_map->push_back(e);
    }
  }
  return Graph(static_cast<VertexId>(vertices.size()), std::move(edges));
}

Graph read_edge_list(std::istream& in, VertexId min_vertex_count) {
  std::vector<Edge> edges;
  VertexId n = min_vertex_count;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("# vertices ", 0) == 0) {
      try {
        n = std::max(n, static_cast<VertexId>(std::stol(line.substr(11))));
      } catch (const std::exception&) {
        throw ParseError("invalid vertex count header", lineno);
      }
      continue;
    }
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string tu, tv, tc, extra;
    if (!(ss >> tu)) continue;
    if (!(ss >> tv)) throw ParseError("expected 'u v [c]'", lineno);
    ss >> tc;
    if (ss >> extra) throw ParseError("trailing token '" + extra + "'", lineno);
    auto parse_id = [&](const std::string& t) {
      std::size_t pos = 0;
      long long val = 0;
      try {
        val = std::stoll(t, &pos);
      } catch (const std::exception&) {
        throw ParseError("invalid vertex id '" + t + "'", lineno);
      }
      if (pos != t.size() || val < 0 || val >= std::numeric_limits<VertexId>::max()) {
        throw ParseError("invalid vertex id '" + t + "'", lineno);
      }
      return static_cast<VertexId>(val);
    };
    Edge e{parse_id(tu), parse_id(tv), 1.0};
    if (!tc.empty()) {
      std::size_t pos = 0;
      try {
        e.conductance = std::stod(tc, &pos);
      } catch (const std::exception&) {
        throw ParseError("invalid conductance '" + tc + "'", lineno);
      }
      if (pos != tc.size()) throw ParseError("invalid conductance '" + tc + "'", lineno);
    }
    if (!(e.conductance > 0.0) || !std::isfinite(e.conductance)) {
      throw ParseError("conductance must be positive and finite", lineno);
    }
    if (e.u == e.v) throw ParseError("self-loop", lineno);
    n = std::max({n, e.u + 1, e.v + 1});
    edges.push_back(e);
  }
  return Graph(n, std::move(edges));
}

Graph read_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  return read_edge_list(in);
}

void write_edge_list(std::ostream& out, const Graph& g) {
  const auto old = out.precision(17);
  out << "# vertices " << g.vertex_count() << '\n';
  for (const Edge& e : g.edges()) out << e.u << ' ' << e.v << ' ' << e.conductance << '\n';
  out.precision(old);
}

}  // namespace l2diff
