#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace l2diff {

using VertexId = std::int32_t;
using EdgeId = std::int32_t;
inline constexpr VertexId kNoVertex = -1;

using Vector = Eigen::VectorXd;
// Indexed by vertex.
using Potential = Vector;
// Indexed by edge, signed with respect to the stored orientation (u, v).
using Flow = Vector;

struct Edge {
  VertexId u;
  VertexId v;
  double conductance;
};

struct Incidence {
  VertexId neighbor;
  EdgeId edge;
};

// Immutable weighted undirected multigraph. Parallel edges are kept distinct;
// merged() sums them. Every graph gets a process-unique id usable as a cache key.
class Graph {
 public:
  Graph();
  Graph(VertexId vertex_count, std::vector<Edge> edges);

  VertexId vertex_count() const noexcept { return n_; }
  EdgeId edge_count() const noexcept { return static_cast<EdgeId>(edges_.size()); }
  std::span<const Edge> edges() const noexcept { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_[static_cast<std::size_t>(e)]; }

  std::span<const Incidence> incident(VertexId v) const noexcept {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }
  VertexId degree(VertexId v) const noexcept { return offsets_[v + 1] - offsets_[v]; }
  double weighted_degree(VertexId v) const noexcept { return weighted_degree_[v]; }
  std::span<const double> weighted_degrees() const noexcept { return weighted_degree_; }
  double volume() const noexcept { return volume_; }
  std::uint64_t id() const noexcept { return id_; }

  // Max over min conductance; 1 for edgeless graphs.
  double conductance_ratio() const noexcept;

  // Simple graph with parallel edges merged (conductances summed), edges
  // ordered by (min endpoint, max endpoint) and oriented u < v.
  Graph merged() const;

  // Component index per vertex, components numbered by smallest vertex.
  std::vector<VertexId> components(VertexId* count = nullptr) const;
  bool connected() const;

 private:
  VertexId n_ = 0;
  std::vector<Edge> edges_;
  std::vector<VertexId> offsets_;
  std::vector<Incidence> adjacency_;
  std::vector<double> weighted_degree_;
  double volume_ = 0.0;
  std::uint64_t id_ = 0;
};

using GraphPtr = std::shared_ptr<const Graph>;

GraphPtr make_graph(VertexId vertex_count, std::vector<Edge> edges);

// Throws DomainError when max/min conductance exceeds n^exponent (n >= 2).
void validate_conductance_range(const Graph& g, double exponent = 6.0);

Potential laplacian_apply(const Graph& g, const Potential& x);
Flow potential_flow(const Graph& g, const Potential& x);
// B^T f: net flow into each vertex minus flow out, so residue(potential_flow(x)) = -Lx.
Vector residue(const Graph& g, const Flow& f);
double quadratic_form(const Graph& g, const Potential& x);

double volume(const Graph& g, std::span<const VertexId> set);
// cut(S) / vol(S). With global = true the denominator is min(vol S, vol V\S).
double conductance(const Graph& g, std::span<const VertexId> set, bool global = false);

struct SweepResult {
  std::vector<VertexId> set;
  double conductance = 0.0;
};

SweepResult sweep_cut(const Graph& g, const Potential& x, bool global = false);

// Subgraph induced by `vertices` (in the given order, which defines new ids).
// `edge_map`, if given, receives the original edge id of every new edge.
Graph induced_subgraph(const Graph& g, std::span<const VertexId> vertices,
                       std::vector<EdgeId>* edge_map = nullptr);

// Edge-list text format: "u v [c]" per line, '#' comments, blank lines skipped.
Graph read_edge_list(std::istream& in, VertexId min_vertex_count = 0);
Graph read_edge_list_file(const std::string& path);
void write_edge_list(std::ostream& out, const Graph& g);

}  // namespace l2diff
