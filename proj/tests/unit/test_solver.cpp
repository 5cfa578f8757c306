#include <cmath>

#include "doctest.h"
#include "l2diff/error.hpp"
#include "l2diff/generators.hpp"
#include "l2diff/oracle.hpp"
#include "l2diff/solver.hpp"

using namespace l2diff;

namespace {

DiffusionInstance two_node() {
  Vector d(2);
  d << -1, 1;
  return make_l2_instance(make_graph(2, {{0, 1, 1.0}}), d);
}

// Exact residual optimum scaled by 1/alpha: an alpha-approximation by convexity.
Oracle scaled_exact(double alpha) {
  return [alpha](const DiffusionInstance& r) {
    OracleAnswer a = exact_oracle(r);
    return OracleAnswer{a.x / alpha, -kInf};
  };
}

double optimum(const DiffusionInstance& inst) { return qp_solve_exact(inst).energy; }

DiffusionInstance random_l2(GraphPtr g, gen::Rng& rng) { return make_l2_instance(g, gen::random_demand(*g, rng)); }

double brute_min_conductance(const Graph& g) {
  const VertexId n = g.vertex_count();
  double best = kInf;
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    std::vector<VertexId> s;
    for (VertexId v = 0; v < n; ++v) {
      if (mask >> v & 1u) s.push_back(v);
    }
    best = std::min(best, conductance(g, s));
  }
  return best;
}

}  // namespace

TEST_CASE("iterative refinement") {
  Vector d = Vector::Ones(4);
  DiffusionInstance flat = make_l2_instance(std::make_shared<const Graph>(gen::path(4)), d);
  IterResult zero = iter_refine(flat, 1e-6, exact_oracle, 2.0);
  CHECK(zero.x.cwiseAbs().maxCoeff() == 0.0);
  CHECK(zero.energy == 0.0);

  IterResult two = iter_refine(two_node(), 1e-6, exact_oracle, 1.0);
  CHECK(two.energy <= -0.5 * (1 - 1e-6));
  CHECK(two.certified);

  gen::Rng rng(61);
  for (int trial = 0; trial < 10; ++trial) {
    auto g = std::make_shared<const Graph>(gen::reweight(gen::erdos_renyi(20, 0.2, rng), 0.5, 2.0, rng));
    DiffusionInstance inst = trial % 2 ? gen::random_instance(g, rng) : random_l2(g, rng);
    const double star = optimum(inst);
    std::vector<double> energies;
    IterResult r = iter_refine(inst, 1e-6, scaled_exact(2.0), 2.0, {false, &energies});
    CHECK(r.energy <= star / (1 + 1e-6) + 1e-12);
    CHECK(static_cast<int>(energies.size()) == r.steps + 1);
    for (std::size_t i = 1; i < energies.size(); ++i) {
      CHECK(energies[i] <= energies[i - 1]);
      const double before = energies[i - 1] - star;
      if (before > 1e-9 * std::abs(star)) CHECK((energies[i] - star) / before <= 0.5 + 1e-8);
    }
  }
  CHECK_THROWS_AS(iter_refine(two_node(), 0.0, exact_oracle, 2.0), UsageError);
}

TEST_CASE("prox subproblem identity") {
  gen::Rng rng(62);
  for (int trial = 0; trial < 20; ++trial) {
    auto g = std::make_shared<const Graph>(gen::reweight(gen::erdos_renyi(12, 0.3, rng), 0.5, 2.0, rng));
    auto h = std::make_shared<const Graph>(gen::reweight(gen::erdos_renyi(12, 0.4, rng), 0.5, 4.0, rng));
    DiffusionInstance inst = gen::random_instance(g, rng);
    const Potential x = Potential::Random(12);
    Potential y = Potential::Random(12).cwiseAbs();
    for (VertexId v = 0; v < 12; ++v) y[v] = std::max(y[v], inst.lower(v));
    const Eigen::MatrixXd lg = dense_laplacian(*g), lh = dense_laplacian(*h);
    const auto model = [&](const Potential& u) {
      double s = 0.5 * x.dot(lg * x) + (lg * x).dot(u - x) + 0.5 * (u - x).dot(lh * (u - x));
      for (VertexId v = 0; v < 12; ++v) s += inst.vwf(v).eval(u[v]);
      return s;
    };
    const DiffusionInstance p = prox_instance(inst, h, x);
    CHECK(energy_value(p, y) == doctest::Approx(model(y) - model(Potential::Zero(12))).epsilon(1e-10));
  }
}

TEST_CASE("prox agd") {
  gen::Rng rng(63);
  auto g = std::make_shared<const Graph>(gen::reweight(gen::erdos_renyi(25, 0.2, rng), 0.5, 2.0, rng));
  DiffusionInstance inst = random_l2(g, rng);
  const double star = optimum(inst);
  ProxResult same = prox_agd(inst, g, 1.0, exact_oracle);
  CHECK(same.iterations == 1);
  CHECK(same.energy == doctest::Approx(star).epsilon(1e-10));

  std::vector<Vwf> zeros(25, Vwf::zero(0.0));
  DiffusionInstance zero(g, zeros, std::vector<double>(25, 0.0));
  ProxResult z = prox_agd(zero, g, 4.0, exact_oracle);
  CHECK(z.x.cwiseAbs().maxCoeff() == 0.0);

  for (int trial = 0; trial < 8; ++trial) {
    auto g30 = std::make_shared<const Graph>(gen::reweight(gen::erdos_renyi(30, 0.15, rng), 0.5, 2.0, rng));
    DiffusionInstance r = residual(random_l2(g30, rng), Potential::Zero(30));
    JTree jt = jtree_sparsify(*g30, 10);
    ProxOptions opt;
    opt.early_stop = trial % 2 == 0;
    ProxResult p = prox_agd(r, jt.graph, jt.quality_bound, exact_oracle, opt);
    const double opt_e = optimum(r);
    CHECK(p.energy <= opt_e / 2 + 1e-12);
    CHECK(p.lower_bound <= opt_e + 1e-9 * std::abs(opt_e));
  }
  CHECK_THROWS_AS(prox_agd(inst, g, 0.5, exact_oracle), UsageError);
}

TEST_CASE("j-tree solve") {
  gen::Rng rng(64);
  auto tree = std::make_shared<const Graph>(gen::reweight(gen::random_tree(40, rng), 0.5, 2.0, rng));
  DiffusionInstance ti = random_l2(tree, rng);
  const std::vector<VertexId> root{0};
  int calls = 0;
  const Oracle counting = [&](const DiffusionInstance& c) {
    ++calls;
    return exact_oracle(c);
  };
  OracleAnswer t = jtree_solve(ti, root, 1e-10, counting);
  CHECK(calls == 0);
  CHECK(energy_value(ti, t.x) == doctest::Approx(optimum(ti)).epsilon(1e-9));

  const std::vector<VertexId> both{0, 1};
  OracleAnswer two = jtree_solve(two_node(), both, 1e-6, exact_oracle);
  CHECK(energy_value(two_node(), two.x) <= -0.5 / (1 + 1e-6));

  for (int trial = 0; trial < 6; ++trial) {
    Graph g = gen::reweight(gen::erdos_renyi(50, 0.08, rng), 0.5, 2.0, rng);
    JTree jt = jtree_sparsify(g, 10, {static_cast<std::uint64_t>(trial)});
    DiffusionInstance inst = trial % 2 ? gen::random_instance(jt.graph, rng) : random_l2(jt.graph, rng);
    const double star = optimum(inst);
    OracleAnswer a = jtree_solve(inst, jt.core, 1e-6, exact_oracle);
    CHECK(energy_value(inst, a.x) <= star / (1 + 1e-6) + 1e-12);
    CHECK(a.lower_bound <= star + 1e-9 * std::abs(star));
  }
}

TEST_CASE("recursive approximate diffusion") {
  gen::Rng rng(65);
  SolverConfig cfg;
  auto small = std::make_shared<const Graph>(gen::ring(20));
  DiffusionInstance s = random_l2(small, rng);
  SolveStats st;
  RecursiveSolver base(cfg, &st);
  CHECK(energy_value(s, base.solve(s).x) == doctest::Approx(optimum(s)).epsilon(1e-10));
  CHECK(st.levels.size() == 1);
  CHECK(st.levels[0].base_solves == 1);

  auto grid = std::make_shared<const Graph>(gen::grid(16, 16));
  DiffusionInstance gi = residual(random_l2(grid, rng), Potential::Zero(256));
  const double star = optimum(gi);
  OracleAnswer ga = recursive_approx_diffusion(gi, cfg);
  CHECK(energy_value(gi, ga.x) <= star / 2);
  CHECK(ga.lower_bound <= star + 1e-9 * std::abs(star));

  auto path = std::make_shared<const Graph>(gen::path(100));
  DiffusionInstance pi = residual(random_l2(path, rng), Potential::Zero(100));
  SolveStats ps;
  RecursiveSolver pr(cfg, &ps);
  OracleAnswer pa = pr.solve(pi);
  CHECK(energy_value(pi, pa.x) <= optimum(pi) / 2);
  REQUIRE(ps.levels.size() == 2);
  CHECK(ps.levels[1].base_solves > 0);
  CHECK(ps.levels[0].eliminations > 0);

  SolverConfig shallow = cfg;
  shallow.max_recursion_depth = 0;
  shallow.base_case_edges = 4;
  CHECK_THROWS_AS(recursive_approx_diffusion(pi, shallow), NumericalError);
}

TEST_CASE("l2 diffusion examples") {
  auto tri = std::make_shared<const Graph>(gen::complete(3));
  DiffusionResult nonneg = l2_diffusion(tri, Vector::Ones(3));
  CHECK(nonneg.x.cwiseAbs().maxCoeff() == 0.0);
  CHECK(nonneg.flow.cwiseAbs().maxCoeff() == 0.0);

  Vector d(2);
  d << -1, 1;
  DiffusionResult two = l2_diffusion(make_graph(2, {{0, 1, 1.0}}), d);
  CHECK(two.x[0] - two.x[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(two.energy == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(two.stats.certified);

  auto bar = std::make_shared<const Graph>(gen::barbell(3));
  Vector bd(6);
  for (VertexId v = 0; v < 6; ++v) bd[v] = bar->weighted_degree(v);
  bd[0] = -6.0;
  DiffusionResult b = l2_diffusion(bar, bd);
  SweepResult cut = sweep_cut(*bar, b.x);
  CHECK(cut.conductance == doctest::Approx(brute_min_conductance(*bar)));
  CHECK(cut.conductance == doctest::Approx(1.0 / 7.0));
  const Vector excess = residue(*bar, b.flow);
  for (VertexId v = 0; v < 6; ++v) CHECK(excess[v] <= bd[v] + 1e-6);

  // Isolated vertex and two components.
  std::vector<Edge> edges{{0, 1, 1.0}, {2, 3, 2.0}};
  auto split = make_graph(5, edges);
  Vector sd(5);
  sd << -1, 2, 1, -0.5, 0.3;
  DiffusionResult sr = l2_diffusion(split, sd);
  CHECK(sr.energy == doctest::Approx(optimum(make_l2_instance(split, sd))).epsilon(1e-6));
  CHECK(sr.x[4] == 0.0);

  SolverConfig bad;
  bad.eps = 0.0;
  CHECK_THROWS_AS(l2_diffusion(split, sd, bad), UsageError);
  Vector neg(2);
  neg << -1, 0.5;
  CHECK_THROWS_AS(l2_diffusion(make_graph(2, {{0, 1, 1.0}}), neg), FeasibilityError);
}

TEST_CASE("end to end against the oracle") {
  gen::Rng rng(66);
  SolverConfig cfg;
  for (int trial = 0; trial < 30; ++trial) {
    const VertexId n = 5 + static_cast<VertexId>(rng() % 46);
    GraphPtr g;
    switch (trial % 3) {
      case 0: g = std::make_shared<const Graph>(gen::erdos_renyi(n, 3.0 / n, rng)); break;
      case 1: g = std::make_shared<const Graph>(gen::grid(std::max<VertexId>(2, n / 7), 7)); break;
      default: g = std::make_shared<const Graph>(gen::ring(n)); break;
    }
    g = std::make_shared<const Graph>(gen::reweight(*g, 0.5, 2.0, rng));
    DiffusionInstance inst = trial % 2 ? gen::random_instance(g, rng) : random_l2(g, rng);
    DiffusionResult r = solve_instance(inst, cfg);
    const double star = optimum(inst);
    CHECK(r.energy <= star / (1 + cfg.eps) + 1e-12);
    for (std::size_t i = 1; i < r.stats.energies.size(); ++i) CHECK(r.stats.energies[i] <= r.stats.energies[i - 1]);
  }
}
