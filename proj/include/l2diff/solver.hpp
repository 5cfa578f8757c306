#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "l2diff/instance.hpp"
#include "l2diff/sparsify.hpp"

namespace l2diff {

// A potential plus a lower bound on the optimal energy of the instance it was
// computed for; -inf when the oracle has no certificate.
struct OracleAnswer {
  Potential x;
  double lower_bound = -kInf;
};

using Oracle = std::function<OracleAnswer(const DiffusionInstance&)>;

struct SolverConfig {
  double eps = 1e-6;
  double kappa = 0.0;  // 0: clamp(log2(n)^4, 16, m)
  int j = 0;           // 0: ceil(j_scale m ln n lnln n / kappa)
  double j_scale = 1.0;
  double j_sqrt = 0.0;  // > 0: j = ceil(j_sqrt sqrt(n)) instead
  EdgeId base_case_edges = 64;
  double inner_delta = 1e-10;
  double agd_steps_factor = 10.0;
  std::uint64_t rng_seed = 1;
  int max_recursion_depth = 8;
  // Stop loops once the lower bounds certify the target accuracy.
  bool early_stop = true;
  // Tighten the preconditioner with a dense pencil computation up to this size.
  VertexId pencil_max_vertices = 400;
};

struct LevelStats {
  std::int64_t calls = 0;
  std::int64_t oracle_calls = 0;
  std::int64_t eliminations = 0;
  std::int64_t agd_iterations = 0;
  std::int64_t base_solves = 0;
  double wall_ms = 0.0;
};

struct SolveStats {
  std::deque<LevelStats> levels;
  std::vector<double> energies;  // top-level refinement, from x = 0
  int refinement_steps = 0;
  double lower_bound = -kInf;
  bool certified = false;
  double wall_ms = 0.0;

  LevelStats& level(int depth);
};

struct IterOptions {
  bool early_stop = true;
  std::vector<double>* energies = nullptr;  // energy after every step, x = 0 first
};

struct IterResult {
  Potential x;
  double energy = 0.0;
  double lower_bound = -kInf;
  int steps = 0;
  bool certified = false;
};

// Iterative refinement: T = ceil(alpha ln(1/eps)) rounds of residual, oracle, add.
IterResult iter_refine(const DiffusionInstance& inst, double eps, const Oracle& oracle, double alpha,
                       const IterOptions& opt = {});

struct ProxOptions {
  double steps_factor = 10.0;
  double inner_delta = 1e-10;
  bool early_stop = true;
  LevelStats* stats = nullptr;
};

struct ProxResult {
  Potential x;
  double energy = 0.0;
  double lower_bound = -kInf;
  int iterations = 0;
};

// Accelerated proximal descent preconditioned by h, where L(G) <= L(h) <= kappa L(G)
// must hold for the instance graph G. Returns the best iterate; halves the gap.
ProxResult prox_agd(const DiffusionInstance& inst, GraphPtr h, double kappa, const Oracle& inner,
                    const ProxOptions& opt = {});

// Instance on h whose energy at y is Φ̄_x(y) - Φ̄_x(0), Φ̄_x the model of inst around x.
DiffusionInstance prox_instance(const DiffusionInstance& inst, GraphPtr h, const Potential& x);

// Eliminates everything outside `core`, refines the core instance with a
// compressing wrapper around core_oracle, and maps the result back.
// `core_graph` may carry the precomputed induced core graph.
OracleAnswer jtree_solve(const DiffusionInstance& inst, std::span<const VertexId> core, double eps,
                         const Oracle& core_oracle, GraphPtr core_graph = nullptr, LevelStats* stats = nullptr);

// Caches sparsifiers per graph; one instance per top-level solve.
class RecursiveSolver {
 public:
  explicit RecursiveSolver(SolverConfig cfg, SolveStats* stats = nullptr);
  // 2-approximate optimum with a lower bound.
  OracleAnswer solve(const DiffusionInstance& inst, int depth = 0);

 private:
  struct Plan {
    bool base = false;
    GraphPtr h;
    GraphPtr core_graph;
    std::vector<VertexId> core;
    double kappa = 1.0;
  };
  const Plan& plan_for(const Graph& g, int depth);
  OracleAnswer base_solve(const DiffusionInstance& inst, int depth);

  SolverConfig cfg_;
  SolveStats own_stats_;
  SolveStats* stats_;
  std::unordered_map<std::uint64_t, std::unique_ptr<Plan>> plans_;
};

OracleAnswer recursive_approx_diffusion(const DiffusionInstance& inst, const SolverConfig& cfg, int depth = 0);

// Exact-QP oracle with its energy as the lower bound (less a rounding slack).
OracleAnswer exact_oracle(const DiffusionInstance& inst);

struct DiffusionResult {
  Potential x;
  Flow flow;
  double energy = 0.0;
  SolveStats stats;
};

// Generalized instances: per-component refinement over the recursive solver.
DiffusionResult solve_instance(const DiffusionInstance& inst, const SolverConfig& cfg = {});

// min_{x >= 0} ½xᵀLx + dᵀx and its flow f = -CBx.
DiffusionResult l2_diffusion(GraphPtr g, const Vector& d, const SolverConfig& cfg = {});

DiffusionInstance compress_instance(const DiffusionInstance& inst);
Graph scaled_graph(const Graph& g, double factor);

}  // namespace l2diff
