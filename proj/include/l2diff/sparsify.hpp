#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "l2diff/graph.hpp"

namespace l2diff {

// Spanning forest of a graph, each tree hanging from one root. Parent edges
// refer to edge ids of the graph the forest was built on.
struct RootedForest {
  std::vector<VertexId> parent;       // kNoVertex at roots
  std::vector<EdgeId> parent_edge;    // -1 at roots
  std::vector<double> parent_conductance;
  std::vector<VertexId> root_of;
  std::vector<VertexId> component;    // index into roots
  std::vector<VertexId> roots;        // ascending
  std::vector<VertexId> order;        // parents before children
  std::vector<double> root_distance;  // resistance to the root

  VertexId vertex_count() const noexcept { return static_cast<VertexId>(parent.size()); }
  std::size_t tree_count() const noexcept { return roots.size(); }
};

// Builds the forest spanned by `in_forest` edges, rooting each tree at the given
// root (each tree must contain exactly one). Throws ValidationError otherwise.
RootedForest forest_from_edges(const Graph& g, std::span<const char> in_forest, std::span<const VertexId> roots);

// Lowest common ancestors by binary lifting; vertices of different trees have none.
class ForestLca {
 public:
  explicit ForestLca(const RootedForest& f);
  VertexId lca(VertexId a, VertexId b) const;
  double distance(VertexId a, VertexId b) const;

 private:
  const RootedForest* f_;
  std::vector<std::int32_t> depth_;
  std::vector<std::vector<VertexId>> up_;
};

// Per-edge stretch c(e) · r(T[u, v]) of every edge of g against a spanning tree.
std::vector<double> tree_stretch(const Graph& g, const RootedForest& t);

struct LowStretchTree {
  RootedForest tree;
  std::vector<double> stretch;
  double total_stretch = 0.0;
  const char* method = "";
};

// Best of several heuristics (hierarchical exponential-shift clustering,
// shortest-path tree in the resistance metric, max-conductance tree), ranked by
// exactly measured total stretch.
LowStretchTree low_stretch_tree(const Graph& g, std::uint64_t seed = 1);

struct Decomposition {
  std::vector<std::vector<VertexId>> sets;
  // One or two set indices per edge of g; the second is -1 for single-set edges.
  std::vector<std::array<std::int32_t, 2>> rho;
  std::vector<VertexId> boundary;  // vertices in more than one set, ascending
  double max_weight = 0.0;         // max rho-weight over sets with more than one vertex
  double threshold = 0.0;          // the splitting threshold that was used
};

Decomposition decompose_tree(const Graph& g, const RootedForest& t, std::span<const double> w, int j);

struct ForestResult {
  RootedForest forest;
  double max_local_stretch = 0.0;
  double tree_stretch = 0.0;
};

// Total local stretch of every component of f (indexed like f.roots).
std::vector<double> local_stretch(const Graph& g, const RootedForest& f);

ForestResult find_forest(const Graph& g, int j, std::uint64_t seed = 1);

struct JTree {
  GraphPtr graph;           // envelope plus core on all of V
  RootedForest envelope;    // with the unscaled conductances of the source graph
  std::vector<VertexId> core;
  EdgeId core_edges = 0;
  double kappa = 1.0;
  double quality_bound = 1.0;  // L(G) <= L(H) <= quality_bound L(G)
  bool core_sparsified = false;
};

// Envelope conductances scaled by 10 kappa, core edges Move_F(e) merged and scaled by 10.
JTree canonical_jtree(const Graph& g, const RootedForest& f, double kappa);

struct SparsifyOptions {
  std::uint64_t seed = 1;
  double edge_factor = 4.0;          // sparsify the core when m > edge_factor n log2 n
  VertexId max_core_vertices = 2000;
};

// Effective-resistance sampling certified by the pencil to L(G) <= L(H) <= 2 L(G).
// Returns g itself when it is already sparse.
Graph spectral_sparsify_core(const Graph& g, const SparsifyOptions& opt = {});

JTree jtree_sparsify(const Graph& g, int j, const SparsifyOptions& opt = {});

// Certified pencil interval lower L(G) <= L(H) <= upper L(G) for H = *jt.graph,
// from path embeddings of G into H and of the core back into G.
struct SupportBounds {
  double lower = 1.0;
  double upper = 1.0;
};
SupportBounds support_bounds(const Graph& g, const JTree& jt);

// "v parent root component" per vertex.
void write_forest(std::ostream& out, const RootedForest& f);

}  // namespace l2diff
