#include <queue>
#include <set>
#include <sstream>

#include "doctest.h"
#include "l2diff/eliminate.hpp"
#include "l2diff/error.hpp"
#include "l2diff/generators.hpp"
#include "l2diff/oracle.hpp"
#include "l2diff/sparsify.hpp"

using namespace l2diff;

namespace {

// Resistance distances inside the forest from `src`, by graph search over forest edges.
std::vector<double> forest_distances(const Graph& g, const RootedForest& f, VertexId src) {
  std::vector<double> dist(static_cast<std::size_t>(g.vertex_count()), kInf);
  std::vector<char> in(static_cast<std::size_t>(g.edge_count()), 0);
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (f.parent_edge[v] >= 0) in[f.parent_edge[v]] = 1;
  }
  std::queue<VertexId> q;
  dist[src] = 0.0;
  q.push(src);
  while (!q.empty()) {
    const VertexId v = q.front();
    q.pop();
    for (const Incidence& inc : g.incident(v)) {
      if (!in[inc.edge] || dist[inc.neighbor] < kInf) continue;
      dist[inc.neighbor] = dist[v] + 1.0 / g.edge(inc.edge).conductance;
      q.push(inc.neighbor);
    }
  }
  return dist;
}

double brute_total_stretch(const Graph& g, const RootedForest& t) {
  double total = 0.0;
  for (const Edge& e : g.edges()) total += e.conductance * forest_distances(g, t, e.u)[e.v];
  return total;
}

std::vector<double> brute_local_stretch(const Graph& g, const RootedForest& f) {
  std::vector<double> total(f.roots.size(), 0.0);
  for (const Edge& e : g.edges()) {
    const std::vector<double> du = forest_distances(g, f, e.u);
    if (du[e.v] < kInf) {
      total[f.component[e.u]] += e.conductance * du[e.v];
    } else {
      total[f.component[e.u]] += e.conductance * du[f.root_of[e.u]];
      total[f.component[e.v]] += e.conductance * forest_distances(g, f, e.v)[f.root_of[e.v]];
    }
  }
  return total;
}

void check_decomposition(const Graph& g, const RootedForest& t, const std::vector<double>& w, int j,
                         const Decomposition& d) {
  const VertexId n = g.vertex_count();
  CHECK(static_cast<int>(d.sets.size()) <= j);
  std::vector<int> count(static_cast<std::size_t>(n), 0);
  for (const auto& s : d.sets) {
    for (VertexId v : s) ++count[v];
  }
  for (VertexId v = 0; v < n; ++v) CHECK(count[v] >= 1);
  std::vector<VertexId> shared;
  for (VertexId v = 0; v < n; ++v) {
    if (count[v] > 1) shared.push_back(v);
  }
  CHECK(shared == d.boundary);
  for (std::size_t i = 0; i < d.sets.size(); ++i) {
    const std::set<VertexId> s(d.sets[i].begin(), d.sets[i].end());
    // T[W] is a tree: |W| - 1 internal tree edges and connected.
    int inner = 0;
    for (VertexId v : s) {
      if (t.parent[v] != kNoVertex && s.count(t.parent[v])) ++inner;
    }
    CHECK(inner == static_cast<int>(s.size()) - 1);
    int sh = 0;
    for (VertexId v : s) sh += count[v] > 1 ? 1 : 0;
    CHECK(sh <= 2);
    for (std::size_t k = i + 1; k < d.sets.size(); ++k) {
      int common = 0;
      for (VertexId v : d.sets[k]) common += s.count(v) ? 1 : 0;
      CHECK(common <= 1);
    }
  }
  double total = 0.0;
  std::vector<double> load(d.sets.size(), 0.0);
  for (EdgeId e = 0; e < g.edge_count(); ++e) {
    total += w[e];
    const auto [a, b] = d.rho[e];
    const auto in = [&](std::int32_t k, VertexId v) {
      return std::find(d.sets[k].begin(), d.sets[k].end(), v) != d.sets[k].end();
    };
    REQUIRE(a >= 0);
    if (b < 0) {
      CHECK(in(a, g.edge(e).u));
      CHECK(in(a, g.edge(e).v));
      load[a] += w[e];
    } else {
      CHECK(in(a, g.edge(e).u));
      CHECK(in(b, g.edge(e).v));
      load[a] += w[e];
      load[b] += w[e];
    }
  }
  for (std::size_t i = 0; i < d.sets.size(); ++i) {
    if (d.sets[i].size() > 1) CHECK(load[i] <= 20.0 / j * total * (1 + 1e-12));
  }
}

double pencil_max(const JTree& jt, const Graph& g) { return pencil_bounds(*jt.graph, g).lambda_max; }

}  // namespace

TEST_CASE("low stretch tree examples") {
  gen::Rng rng(51);
  Graph tree = gen::reweight(gen::random_tree(30, rng), 0.5, 2.0, rng);
  LowStretchTree t = low_stretch_tree(tree);
  CHECK(t.total_stretch == doctest::Approx(29.0));

  Graph cycle = gen::ring(12);
  LowStretchTree c = low_stretch_tree(cycle);
  CHECK(c.total_stretch == doctest::Approx(11.0 + 11.0));

  for (int trial = 0; trial < 10; ++trial) {
    Graph g = gen::reweight(gen::erdos_renyi(40, 0.12, rng), 0.2, 5.0, rng);
    LowStretchTree l = low_stretch_tree(g, 7 + trial);
    CHECK(l.tree.tree_count() == 1);
    CHECK(l.total_stretch == doctest::Approx(brute_total_stretch(g, l.tree)).epsilon(1e-10));
    CHECK(l.total_stretch >= g.edge_count() - 1e-9);
  }
  CHECK_THROWS_AS(low_stretch_tree(Graph(3, {{0, 1, 1.0}})), UsageError);
}

TEST_CASE("tree decomposition invariants") {
  Graph p8 = gen::path(8);
  LowStretchTree t = low_stretch_tree(p8);
  std::vector<double> w(7, 1.0);
  Decomposition one = decompose_tree(p8, t.tree, w, 1);
  CHECK(one.sets.size() == 1);
  check_decomposition(p8, t.tree, w, 1, one);
  check_decomposition(p8, t.tree, w, 4, decompose_tree(p8, t.tree, w, 4));

  Graph star = gen::star(8);
  LowStretchTree st = low_stretch_tree(star);
  std::vector<double> ws(8, 1.0);
  check_decomposition(star, st.tree, ws, 2, decompose_tree(star, st.tree, ws, 2));
  Decomposition sd = decompose_tree(star, st.tree, ws, 9);
  check_decomposition(star, st.tree, ws, 9, sd);

  gen::Rng rng(52);
  for (int trial = 0; trial < 30; ++trial) {
    const VertexId n = 10 + static_cast<VertexId>(rng() % 80);
    Graph g = gen::reweight(gen::erdos_renyi(n, 3.0 / n, rng), 0.5, 2.0, rng);
    LowStretchTree l = low_stretch_tree(g, trial);
    const int j = 1 + static_cast<int>(rng() % 20);
    check_decomposition(g, l.tree, l.stretch, j, decompose_tree(g, l.tree, l.stretch, j));
  }
}

TEST_CASE("find forest") {
  CHECK_THROWS_AS(find_forest(gen::ring(20), 9), UsageError);
  gen::Rng rng(53);
  Graph cycle = gen::ring(64);
  ForestResult f = find_forest(cycle, 10);
  CHECK(f.forest.tree_count() <= 10);
  CHECK(f.max_local_stretch <= 3.0 * 100.0 * f.tree_stretch / 10.0);

  Graph edge = gen::path(2);
  CHECK(std::isfinite(find_forest(edge, 10).max_local_stretch));

  for (int trial = 0; trial < 15; ++trial) {
    const VertexId n = 20 + static_cast<VertexId>(rng() % 60);
    Graph g = gen::reweight(gen::erdos_renyi(n, 4.0 / n, rng), 0.3, 3.0, rng);
    const int j = 10 + static_cast<int>(rng() % 10);
    ForestResult r = find_forest(g, j, trial);
    CHECK(r.forest.tree_count() <= static_cast<std::size_t>(j));
    const std::vector<double> brute = brute_local_stretch(g, r.forest);
    const std::vector<double> fast = local_stretch(g, r.forest);
    for (std::size_t i = 0; i < brute.size(); ++i) CHECK(fast[i] == doctest::Approx(brute[i]).epsilon(1e-10));
  }
}

TEST_CASE("canonical j-tree") {
  Graph sq(4, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 0, 1.0}});
  std::vector<char> in{1, 0, 1, 0};
  const std::vector<VertexId> roots{0, 2};
  RootedForest f = forest_from_edges(sq, in, roots);
  JTree jt = canonical_jtree(sq, f, 1.0);
  CHECK(jt.core == roots);
  CHECK(jt.core_edges == 1);
  CHECK(jt.graph->edge_count() == 3);
  CHECK(jt.graph->merged().edge(1).conductance == doctest::Approx(20.0));

  gen::Rng rng(54);
  Graph t = gen::random_tree(15, rng);
  LowStretchTree l = low_stretch_tree(t);
  JTree whole = canonical_jtree(t, l.tree, 3.0);
  CHECK(whole.core.size() == 1);
  CHECK(whole.core_edges == 0);
  for (const Edge& e : whole.graph->edges()) CHECK(e.conductance == doctest::Approx(30.0));

  for (int trial = 0; trial < 10; ++trial) {
    Graph g = gen::reweight(gen::erdos_renyi(60, 0.08, rng), 0.5, 2.0, rng);
    JTree j = jtree_sparsify(g, 12, {static_cast<std::uint64_t>(trial)});
    auto gp = std::make_shared<const Graph>(*j.graph);
    DiffusionInstance inst = make_l2_instance(gp, Vector::Ones(60));
    Elimination el = vertex_elimination(inst, j.core);
    CHECK(el.map.survivors() == j.core);
  }
}

TEST_CASE("core spectral sparsification") {
  Graph sparse = gen::ring(30);
  Graph same = spectral_sparsify_core(sparse);
  CHECK(same.id() == sparse.id());

  gen::Rng rng(55);
  Graph t = gen::random_tree(40, rng);
  CHECK(spectral_sparsify_core(t).edge_count() == t.edge_count());

  Graph k = gen::complete(20);
  SparsifyOptions opt;
  opt.edge_factor = 0.5;
  Graph h = spectral_sparsify_core(k, opt);
  CHECK(h.edge_count() < k.edge_count());
  PencilBounds pb = pencil_bounds(h, k);
  CHECK(pb.lambda_min >= 1.0 - 1e-9);
  CHECK(pb.lambda_max <= 2.1);
}

TEST_CASE("j-tree sparsifier certificate") {
  Graph grid = gen::grid(32, 32);
  JTree jt = jtree_sparsify(grid, 64);
  CHECK(jt.core.size() <= 64);
  PencilBounds pb = pencil_bounds(*jt.graph, grid);
  CHECK(pb.lambda_min >= 1.0 - 1e-6);
  CHECK(pb.lambda_max <= jt.quality_bound + 1e-6);

  Graph cycle = gen::ring(50);
  JTree jc = jtree_sparsify(cycle, 10);
  PencilBounds pc = pencil_bounds(*jc.graph, cycle);
  CHECK(pc.lambda_min >= 1.0 - 1e-6);
  CHECK(pc.lambda_max <= jc.quality_bound + 1e-6);

  gen::Rng rng(56);
  Graph tree = gen::random_tree(40, rng);
  JTree jtr = jtree_sparsify(tree, 10);
  CHECK(jtr.quality_bound == doctest::Approx(100.0 * jtr.kappa));
  CHECK(pencil_max(jtr, tree) <= jtr.quality_bound + 1e-6);

  std::ostringstream dump;
  write_forest(dump, jtr.envelope);
  const std::string text = dump.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 40);
}

TEST_CASE("support bounds contain the pencil") {
  gen::Rng rng(57);
  for (int trial = 0; trial < 12; ++trial) {
    const VertexId n = 30 + static_cast<VertexId>(rng() % 120);
    Graph g = trial % 3 == 0 ? gen::grid(n / 10, 10) : gen::reweight(gen::erdos_renyi(n, 5.0 / n, rng), 0.2, 5.0, rng);
    if (trial == 5) g = gen::complete(60);
    JTree jt = jtree_sparsify(g, 10 + trial, {static_cast<std::uint64_t>(trial), trial == 5 ? 0.5 : 4.0});
    const SupportBounds sb = support_bounds(g, jt);
    const PencilBounds pb = pencil_bounds(*jt.graph, g);
    CHECK(sb.lower <= pb.lambda_min * (1 + 1e-9));
    CHECK(sb.upper >= pb.lambda_max * (1 - 1e-9));
    CHECK(sb.lower >= 1.0 - 1e-9);
  }
}
