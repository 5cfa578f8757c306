#include <sstream>

#include "doctest.h"
#include "l2diff/error.hpp"
#include "l2diff/generators.hpp"
#include "l2diff/oracle.hpp"

using namespace l2diff;

namespace {

Graph triangle() { return Graph(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}}); }

Graph two_triangles() {
  return Graph(6, {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}, {3, 4, 1}, {4, 5, 1}, {3, 5, 1}, {2, 3, 1}});
}

// Minimum conductance over all prefixes of the sorted support.
double brute_prefix_min(const Graph& g, const Potential& x) {
  std::vector<VertexId> order;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (x[v] > 0) order.push_back(v);
  }
  std::stable_sort(order.begin(), order.end(), [&](VertexId a, VertexId b) { return x[a] > x[b]; });
  double best = kInf;
  for (std::size_t k = 1; k <= order.size() && k < static_cast<std::size_t>(g.vertex_count()); ++k) {
    std::vector<VertexId> s(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    double cut = 0, vol = 0;
    for (VertexId v : s) vol += g.weighted_degree(v);
    for (const Edge& e : g.edges()) {
      const bool iu = std::find(s.begin(), s.end(), e.u) != s.end();
      const bool iv = std::find(s.begin(), s.end(), e.v) != s.end();
      if (iu != iv) cut += e.conductance;
    }
    best = std::min(best, cut / vol);
  }
  return best;
}

}  // namespace

TEST_CASE("laplacian on a single edge and constants") {
  Graph g(2, {{0, 1, 1.0}});
  Potential x(2);
  x << 1, 0;
  Potential y = laplacian_apply(g, x);
  CHECK(y[0] == 1.0);
  CHECK(y[1] == -1.0);
  gen::Rng rng(3);
  Graph h = gen::erdos_renyi(12, 0.3, rng);
  CHECK(laplacian_apply(h, Potential::Constant(12, 2.5)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("laplacian on the unit triangle") {
  Potential x = Potential::Zero(3);
  x[0] = 1;
  Potential y = laplacian_apply(triangle(), x);
  CHECK(y[0] == doctest::Approx(2));
  CHECK(y[1] == doctest::Approx(-1));
  CHECK(y[2] == doctest::Approx(-1));
}

TEST_CASE("laplacian matches the dense matrix on random graphs") {
  gen::Rng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const VertexId n = 2 + static_cast<VertexId>(rng() % 29);
    Graph g = gen::reweight(gen::erdos_renyi(n, 0.25, rng), 0.1, 10.0, rng);
    Potential x = Potential::Random(n);
    Potential y = laplacian_apply(g, x);
    CHECK((y - dense_laplacian(g) * x).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(std::abs(y.sum()) <= 1e-9 * std::max(1.0, y.norm()));
  }
}

TEST_CASE("potential flow and residue") {
  Graph g(2, {{0, 1, 2.0}});
  Potential x(2);
  x << 1, 0;
  Flow f = potential_flow(g, x);
  CHECK(f[0] == -2.0);
  gen::Rng rng(11);
  Graph h = gen::reweight(gen::grid(4, 5), 0.5, 3.0, rng);
  Potential z = Potential::Random(20);
  CHECK((residue(h, potential_flow(h, z)) + laplacian_apply(h, z)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(potential_flow(h, Potential::Constant(20, 3.0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(potential_flow(h, Potential::Zero(3)), UsageError);
}

TEST_CASE("conductance examples") {
  const Graph g = two_triangles();
  const std::vector<VertexId> tri{0, 1, 2};
  CHECK(conductance(g, tri) == doctest::Approx(1.0 / 7.0));
  const Graph s = gen::star(3);
  const std::vector<VertexId> leaf{2};
  CHECK(conductance(s, leaf) == 1.0);
  const std::vector<VertexId> all{0, 1, 2, 3, 4, 5};
  CHECK_THROWS_AS(conductance(g, all), DomainError);
  CHECK_THROWS_AS(conductance(g, std::vector<VertexId>{}), DomainError);
}

TEST_CASE("sweep cut") {
  const Graph g = two_triangles();
  Potential x = Potential::Zero(6);
  x[4] = 1.0;
  SweepResult one = sweep_cut(g, x);
  CHECK(one.set == std::vector<VertexId>{4});
  CHECK(one.conductance == doctest::Approx(1.0));

  x << 3, 2, 2, 0, 0, 0;
  SweepResult tri = sweep_cut(g, x);
  std::sort(tri.set.begin(), tri.set.end());
  CHECK(tri.set == std::vector<VertexId>{0, 1, 2});
  CHECK(tri.conductance == doctest::Approx(1.0 / 7.0));

  const Graph p4 = gen::path(4);
  Potential y(4);
  y << 4, 3, 2, 1;
  CHECK(sweep_cut(p4, y).conductance == doctest::Approx(brute_prefix_min(p4, y)));
  CHECK_THROWS_AS(sweep_cut(p4, Potential::Zero(4)), DomainError);

  gen::Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    Graph h = gen::reweight(gen::erdos_renyi(15, 0.3, rng), 0.5, 2.0, rng);
    Potential z = Potential::Random(15).cwiseMax(0.0);
    if (z.maxCoeff() <= 0) continue;
    CHECK(sweep_cut(h, z).conductance == doctest::Approx(brute_prefix_min(h, z)).epsilon(1e-12));
  }
}

TEST_CASE("graph validation and merged view") {
  CHECK_THROWS_AS(Graph(2, {{0, 0, 1.0}}), ValidationError);
  CHECK_THROWS_AS(Graph(2, {{0, 1, 0.0}}), ValidationError);
  CHECK_THROWS_AS(Graph(2, {{0, 1, -1.0}}), ValidationError);
  Graph g(3, {{0, 1, 1.0}, {1, 0, 2.5}, {1, 2, 1.0}});
  Graph m = g.merged();
  CHECK(m.edge_count() == 2);
  CHECK(m.edge(0).conductance == 3.5);
  CHECK(g.weighted_degree(0) == m.weighted_degree(0));
  CHECK(g.id() != m.id());
  Graph wide(3, {{0, 1, 1e-9}, {1, 2, 1e9}});
  CHECK_THROWS_AS(validate_conductance_range(wide, 3.0), DomainError);
}

TEST_CASE("edge list parsing and round trip") {
  std::istringstream tri("0 1\n1 2\n# comment\n\n0 2 1.0\n");
  Graph g = read_edge_list(tri);
  CHECK(g.vertex_count() == 3);
  CHECK(g.edge_count() == 3);
  std::istringstream bad("a b\n");
  try {
    read_edge_list(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }
  std::istringstream dup("0 1 1\n0 1 2\n");
  Graph d = read_edge_list(dup);
  CHECK(d.edge_count() == 2);
  CHECK(d.merged().edge(0).conductance == 3.0);
  CHECK(d.weighted_degree(0) == 3.0);

  gen::Rng rng(9);
  Graph h = gen::reweight(gen::erdos_renyi(20, 0.2, rng), 0.1, 10, rng);
  Graph iso(h.vertex_count() + 2, std::vector<Edge>(h.edges().begin(), h.edges().end()));
  std::stringstream ss;
  write_edge_list(ss, iso);
  Graph back = read_edge_list(ss);
  REQUIRE(back.vertex_count() == iso.vertex_count());
  REQUIRE(back.edge_count() == iso.edge_count());
  for (EdgeId e = 0; e < iso.edge_count(); ++e) {
    CHECK(back.edge(e).u == iso.edge(e).u);
    CHECK(back.edge(e).v == iso.edge(e).v);
    CHECK(back.edge(e).conductance == iso.edge(e).conductance);
  }
}
