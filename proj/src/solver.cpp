#include "l2diff/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "l2diff/eliminate.hpp"
#include "l2diff/error.hpp"
#include "l2diff/oracle.hpp"

namespace l2diff {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double h_norm_sq(const Graph& h, const Potential& v) { return quadratic_form(h, v) * 2.0; }

}  // namespace

LevelStats& SolveStats::level(int depth) {
  while (static_cast<int>(levels.size()) <= depth) levels.emplace_back();
  return levels[static_cast<std::size_t>(depth)];
}

DiffusionInstance compress_instance(const DiffusionInstance& inst) {
  std::vector<Vwf> vwfs;
  vwfs.reserve(inst.vwfs().size());
  for (const Vwf& f : inst.vwfs()) vwfs.push_back(compress_vwf(f));
  return DiffusionInstance(inst.graph_ptr(), std::move(vwfs), inst.lower_bounds());
}

Graph scaled_graph(const Graph& g, double factor) {
  std::vector<Edge> edges(g.edges().begin(), g.edges().end());
  for (Edge& e : edges) e.conductance *= factor;
  return Graph(g.vertex_count(), std::move(edges));
}

OracleAnswer exact_oracle(const DiffusionInstance& inst) {
  QpResult r = qp_solve_exact(inst);
  const Potential x = clamp_feasible(inst, r.x);
  double scale = quadratic_form(inst.graph(), x);
  double total = scale;
  for (VertexId v = 0; v < inst.vertex_count(); ++v) {
    const double fv = inst.vwf(v).eval(x[v]);
    scale += std::abs(fv);
    total += fv;
  }
  return {x, total - 1e-12 * scale};
}

IterResult iter_refine(const DiffusionInstance& inst, double eps, const Oracle& oracle, double alpha,
                       const IterOptions& opt) {
  if (!(eps > 0.0) || !(alpha >= 1.0)) throw UsageError("iter_refine: need eps > 0 and alpha >= 1");
  const int steps = std::max(1, static_cast<int>(std::ceil(alpha * std::log(1.0 / eps))));
  IterResult out;
  out.x = clamp_feasible(inst, Potential::Zero(inst.vertex_count()));
  out.energy = energy_value(inst, out.x);
  if (opt.energies) opt.energies->push_back(out.energy);
  for (int i = 0; i < steps; ++i) {
    const DiffusionInstance r = residual(inst, out.x);
    const OracleAnswer ans = oracle(r);
    const Potential delta = clamp_feasible(r, ans.x);
    const double gain = energy_value(r, delta);
    // Without a certificate the oracle contract gives E*(r) >= alpha E^r(delta).
    double lb_r = std::isfinite(ans.lower_bound) ? ans.lower_bound : alpha * std::min(gain, 0.0);
    lb_r = std::min(lb_r, 0.0);
    out.lower_bound = std::max(out.lower_bound, out.energy + lb_r);
    if (gain < 0.0) {
      out.x = clamp_feasible(inst, out.x + delta);
      out.energy += gain;
    }
    out.steps = i + 1;
    if (opt.energies) opt.energies->push_back(out.energy);
    if (out.energy - out.lower_bound <= 0.5 * eps * std::abs(out.energy)) {
      out.certified = true;
      if (opt.early_stop) break;
    }
  }
  out.energy = energy_value(inst, out.x);
  return out;
}

DiffusionInstance prox_instance(const DiffusionInstance& inst, GraphPtr h, const Potential& x) {
  const Vector w = laplacian_apply(inst.graph(), x) - laplacian_apply(*h, x);
  return shifted_instance(inst, std::move(h), w);
}

ProxResult prox_agd(const DiffusionInstance& inst, GraphPtr h, double kappa, const Oracle& inner,
                    const ProxOptions& opt) {
  if (!h) throw UsageError("prox_agd: missing preconditioner");
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) throw UsageError("prox_agd: preconditioner quality must be >= 1");
  if (h->vertex_count() != inst.vertex_count()) throw UsageError("prox_agd: preconditioner vertex count differs");
  const Graph& g = inst.graph();
  const int steps = std::max(1, static_cast<int>(std::ceil(opt.steps_factor * std::sqrt(kappa))));

  ProxResult out;
  Potential y = clamp_feasible(inst, Potential::Zero(inst.vertex_count()));
  Potential z = y;
  const double start = energy_value(inst, y);
  out.x = y;
  out.energy = start;
  for (int k = 0; k < steps; ++k) {
    const double a = (k + 2) / 2.0;
    const double tau = 1.0 / a;
    const Potential x = (1.0 - tau) * y + tau * z;
    const Vector lgx = laplacian_apply(g, x);
    const DiffusionInstance sub = shifted_instance(inst, h, lgx - laplacian_apply(*h, x));
    const OracleAnswer ans = inner(sub);
    const Potential q = clamp_feasible(sub, ans.x);
    const double e_sub = energy_value(sub, q);
    const double slack = std::isfinite(ans.lower_bound) ? std::max(0.0, e_sub - ans.lower_bound)
                                                        : opt.inner_delta * std::abs(e_sub);
    // Model value Φ̄_x(q); G ⪰ H/kappa bounds the true optimum below it.
    const Potential step = q - x;
    double model = 0.5 * x.dot(lgx) + lgx.dot(step) + 0.5 * h_norm_sq(*h, step);
    for (VertexId v = 0; v < inst.vertex_count(); ++v) model += inst.vwf(v).eval(q[v]);
    const double reach = std::sqrt(std::max(0.0, h_norm_sq(*h, step))) + std::sqrt(2.0 * slack);
    out.lower_bound = std::max(out.lower_bound, model - slack - 0.5 * (kappa - 1.0) * reach * reach);

    y = q;
    z += a * (y - x);
    const double e = energy_value(inst, y);
    if (e < out.energy) {
      out.energy = e;
      out.x = y;
    }
    out.iterations = k + 1;
    if (opt.stats) ++opt.stats->agd_iterations;
    if (opt.early_stop && out.energy <= 0.5 * (start + out.lower_bound)) break;
  }
  return out;
}

OracleAnswer jtree_solve(const DiffusionInstance& inst, std::span<const VertexId> core, double eps,
                         const Oracle& core_oracle, GraphPtr core_graph, LevelStats* stats) {
  Elimination el = vertex_elimination(inst, core);
  if (stats) ++stats->eliminations;
  if (!std::equal(el.map.survivors().begin(), el.map.survivors().end(), core.begin(), core.end())) {
    throw NumericalError("jtree_solve: elimination did not stop at the core");
  }
  const DiffusionInstance reduced =
      core_graph ? DiffusionInstance(core_graph, el.reduced.vwfs(), el.reduced.lower_bounds()) : el.reduced;

  if (reduced.vertex_count() == 1) {
    const ScalarMin s = vwf_min_scan(reduced.vwf(0), reduced.lower(0));
    Potential xc(1);
    xc[0] = s.x;
    return {recover(el.map, xc), s.value};
  }

  const Oracle compressed = [&](const DiffusionInstance& r) -> OracleAnswer {
    const OracleAnswer a = core_oracle(compress_instance(r));
    const Potential y = clamp_feasible(r, a.x);
    const Potential half = 0.5 * y;
    // The compressed objective sits between f and 2f(x/2); y/2 keeps the factor 4.
    if (energy_value(r, half) < energy_value(r, y)) return {half, a.lower_bound};
    return {y, a.lower_bound};
  };
  const IterResult it = iter_refine(reduced, eps, compressed, 4.0);
  return {recover(el.map, it.x), it.lower_bound};
}

RecursiveSolver::RecursiveSolver(SolverConfig cfg, SolveStats* stats)
    : cfg_(cfg), stats_(stats ? stats : &own_stats_) {}

const RecursiveSolver::Plan& RecursiveSolver::plan_for(const Graph& g, int depth) {
  auto it = plans_.find(g.id());
  if (it != plans_.end()) return *it->second;
  auto p = std::make_unique<Plan>();
  const VertexId n = g.vertex_count();
  const EdgeId m = g.edge_count();
  if (m <= cfg_.base_case_edges || n <= 2) {
    p->base = true;
  } else {
    const double log_n = std::log(static_cast<double>(n));
    double kappa = cfg_.kappa > 0.0 ? cfg_.kappa
                                    : std::clamp(std::pow(std::log2(static_cast<double>(n)), 4.0), 16.0,
                                                 static_cast<double>(m));
    kappa = std::clamp(kappa, 1.0, static_cast<double>(m));
    int j = cfg_.j;
    if (j <= 0) {
      const double raw = cfg_.j_sqrt > 0.0
                             ? cfg_.j_sqrt * std::sqrt(static_cast<double>(n))
                             : cfg_.j_scale * m * log_n * std::log(std::max(log_n, std::exp(1.0))) / kappa;
      j = static_cast<int>(std::min(std::ceil(raw), static_cast<double>(n)));
      j = std::min(j, std::max<int>(1, n / 2));
    }
    j = std::max(j, 10);
    SparsifyOptions so;
    so.seed = cfg_.rng_seed + static_cast<std::uint64_t>(depth);
    JTree jt = jtree_sparsify(g, j, so);
    if (static_cast<VertexId>(jt.core.size()) >= n) {
      if (n > QpOptions{}.max_vertices) {
        std::ostringstream msg;
        msg << "recursion does not contract: core keeps all " << n << " vertices (j = " << j << ")";
        throw NumericalError(msg.str());
      }
      p->base = true;
    } else {
      if (n <= cfg_.pencil_max_vertices) {
        const PencilBounds pb = pencil_bounds(*jt.graph, g);
        const double s = (1.0 + 1e-9) / pb.lambda_min;
        p->h = std::make_shared<const Graph>(scaled_graph(*jt.graph, s));
        p->kappa = std::max(1.0, pb.lambda_max * s * (1.0 + 1e-9));
      } else {
        const SupportBounds sb = support_bounds(g, jt);
        const double s = 1.0 / sb.lower;
        p->h = std::make_shared<const Graph>(scaled_graph(*jt.graph, s));
        p->kappa = std::max(1.0, s * std::min(sb.upper, jt.quality_bound));
      }
      p->core = jt.core;
      p->core_graph = std::make_shared<const Graph>(induced_subgraph(*p->h, p->core));
    }
  }
  return *plans_.emplace(g.id(), std::move(p)).first->second;
}

OracleAnswer RecursiveSolver::base_solve(const DiffusionInstance& inst, int depth) {
  ++stats_->level(depth).base_solves;
  if (inst.vertex_count() == 1) {
    const ScalarMin s = vwf_min_scan(inst.vwf(0), inst.lower(0));
    Potential x(1);
    x[0] = s.x;
    return {x, s.value};
  }
  return exact_oracle(inst);
}

OracleAnswer RecursiveSolver::solve(const DiffusionInstance& inst, int depth) {
  if (depth > cfg_.max_recursion_depth) {
    throw NumericalError("recursion depth " + std::to_string(depth) + " exceeds the cap; kappa/j do not contract");
  }
  const auto t0 = Clock::now();
  LevelStats& st = stats_->level(depth);
  ++st.calls;
  const Plan& p = plan_for(inst.graph(), depth);
  OracleAnswer ans;
  if (p.base) {
    ans = base_solve(inst, depth);
  } else {
    const Oracle core_oracle = [this, depth](const DiffusionInstance& c) { return solve(c, depth + 1); };
    const Oracle inner = [&](const DiffusionInstance& sub) {
      ++st.oracle_calls;
      return jtree_solve(sub, p.core, cfg_.inner_delta, core_oracle, p.core_graph, &st);
    };
    ProxOptions po;
    po.steps_factor = cfg_.agd_steps_factor;
    po.inner_delta = cfg_.inner_delta;
    po.early_stop = cfg_.early_stop;
    po.stats = &st;
    ProxResult r = prox_agd(inst, p.h, p.kappa, inner, po);
    ans = {std::move(r.x), r.lower_bound};
  }
  st.wall_ms += elapsed_ms(t0);
  return ans;
}

OracleAnswer recursive_approx_diffusion(const DiffusionInstance& inst, const SolverConfig& cfg, int depth) {
  RecursiveSolver solver(cfg);
  return solver.solve(inst, depth);
}

DiffusionResult solve_instance(const DiffusionInstance& inst, const SolverConfig& cfg) {
  if (!(cfg.eps > 0.0 && cfg.eps <= 1.0)) throw UsageError("eps must lie in (0, 1]");
  check_bounded(inst);
  const auto t0 = Clock::now();
  const VertexId n = inst.vertex_count();
  DiffusionResult out;
  out.x = Potential::Zero(n);
  out.stats.certified = true;
  out.stats.lower_bound = 0.0;
  RecursiveSolver solver(cfg, &out.stats);

  VertexId count = 0;
  const std::vector<VertexId> comp = inst.graph().components(&count);
  std::vector<std::vector<VertexId>> members(static_cast<std::size_t>(count));
  for (VertexId v = 0; v < n; ++v) members[comp[v]].push_back(v);

  std::vector<std::vector<double>> series;
  for (const std::vector<VertexId>& vs : members) {
    if (vs.size() == 1) {
      const VertexId v = vs[0];
      const ScalarMin s = vwf_min_scan(inst.vwf(v), inst.lower(v));
      out.x[v] = s.x;
      out.stats.lower_bound += s.value;
      series.push_back({inst.vwf(v).eval(std::max(0.0, inst.lower(v))), s.value});
      continue;
    }
    const DiffusionInstance sub = sub_instance(inst, vs);
    std::vector<double> energies;
    IterOptions io;
    io.early_stop = cfg.early_stop;
    io.energies = &energies;
    const IterResult r = iter_refine(
        sub, cfg.eps, [&](const DiffusionInstance& res) { return solver.solve(res, 0); }, 2.0, io);
    for (std::size_t i = 0; i < vs.size(); ++i) out.x[vs[i]] = r.x[static_cast<Eigen::Index>(i)];
    out.stats.lower_bound += r.lower_bound;
    out.stats.certified = out.stats.certified && r.certified;
    out.stats.refinement_steps = std::max(out.stats.refinement_steps, r.steps);
    series.push_back(std::move(energies));
  }
  std::size_t longest = 0;
  for (const auto& s : series) longest = std::max(longest, s.size());
  out.stats.energies.assign(longest, 0.0);
  for (const auto& s : series) {
    for (std::size_t i = 0; i < longest; ++i) out.stats.energies[i] += s[std::min(i, s.size() - 1)];
  }
  out.energy = energy_value(inst, out.x);
  out.flow = potential_flow(inst.graph(), out.x);
  out.stats.wall_ms = elapsed_ms(t0);
  return out;
}

DiffusionResult l2_diffusion(GraphPtr g, const Vector& d, const SolverConfig& cfg) {
  if (!g) throw UsageError("l2_diffusion: missing graph");
  if (d.size() != g->vertex_count()) throw UsageError("l2_diffusion: demand has the wrong length");
  return solve_instance(make_l2_instance(std::move(g), d), cfg);
}

}  // namespace l2diff
