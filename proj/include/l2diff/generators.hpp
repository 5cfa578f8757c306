#pragma once

#include <random>

#include "l2diff/instance.hpp"

namespace l2diff::gen {

using Rng = std::mt19937_64;

Graph path(VertexId n, double c = 1.0);
Graph ring(VertexId n, double c = 1.0);
Graph grid(VertexId rows, VertexId cols, double c = 1.0);
Graph complete(VertexId n, double c = 1.0);
Graph star(VertexId leaves, double c = 1.0);
// Vertex i > 0 attaches to a uniform earlier vertex.
Graph random_tree(VertexId n, Rng& rng, double c = 1.0);
// Two cliques K_k joined by one bridge between vertex k-1 and vertex k.
Graph barbell(VertexId k, double bridge = 1.0);
// G(n, p); when `connect` is set a random spanning path over the components is added.
Graph erdos_renyi(VertexId n, double p, Rng& rng, bool connect = true);
// Union of degree/2 random Hamiltonian cycles.
Graph expander(VertexId n, int degree, Rng& rng);
// Two dense blocks of sizes n1, n2 with few cross edges; always connected.
Graph planted_partition(VertexId n1, VertexId n2, double p_in, double p_out, Rng& rng);
// Same topology with conductances drawn log-uniformly from [lo, hi].
Graph reweight(const Graph& g, double lo, double hi, Rng& rng);

// Random VWF with `pieces` pieces on [start, inf) and f(0) <= 0.
Vwf random_vwf(Rng& rng, int pieces, double start);
// Demand with non-negative total per component.
Vector random_demand(const Graph& g, Rng& rng);
// Generalized instance with random multi-piece VWFs and lower bounds in [s_0, 0].
DiffusionInstance random_instance(GraphPtr g, Rng& rng, int max_pieces = 4);

}  // namespace l2diff::gen
