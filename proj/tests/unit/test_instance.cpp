#include "doctest.h"
#include "l2diff/error.hpp"
#include "l2diff/generators.hpp"

using namespace l2diff;

namespace {

GraphPtr share(Graph g) { return std::make_shared<const Graph>(std::move(g)); }

}  // namespace

TEST_CASE("l2 instance construction and feasibility") {
  auto g = share(gen::path(3));
  Vector d(3);
  d << -1, 0.5, 0.7;
  DiffusionInstance inst = make_l2_instance(g, d);
  CHECK(inst.size() == 5);
  CHECK(inst.vwf(0).eval(2.0) == -2.0);
  d << -1, 0.5, 0.4;
  CHECK_THROWS_AS(make_l2_instance(g, d), FeasibilityError);

  // Two components: one has negative total even though the overall sum is positive.
  auto split = share(Graph(4, {{0, 1, 1.0}, {2, 3, 1.0}}));
  Vector e(4);
  e << -1, 0.5, 2, 2;
  CHECK_THROWS_AS(make_l2_instance(split, e), FeasibilityError);
}

TEST_CASE("energy and feasibility clamp") {
  auto g = share(Graph(2, {{0, 1, 2.0}}));
  Vector d(2);
  d << -1, 1;
  DiffusionInstance inst = make_l2_instance(g, d);
  Potential x(2);
  x << 1, 0;
  EnergyReport rep = energy(inst, x);
  CHECK(rep.quadratic == doctest::Approx(1.0));
  CHECK(rep.separable == doctest::Approx(-1.0));
  CHECK(rep.total == doctest::Approx(0.0));
  x << -1e-13, 0;
  CHECK(clamp_feasible(inst, x)[0] == 0.0);
  x << -1e-6, 0;
  CHECK_THROWS_AS(energy(inst, x), FeasibilityError);
}

TEST_CASE("residual instance measures energy differences") {
  gen::Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    auto g = share(gen::reweight(gen::erdos_renyi(12, 0.3, rng), 0.3, 3.0, rng));
    DiffusionInstance inst = gen::random_instance(g, rng);
    Potential x(12), y(12);
    for (VertexId v = 0; v < 12; ++v) {
      x[v] = inst.lower(v) + std::uniform_real_distribution<double>(0.0, 2.0)(rng);
      y[v] = inst.lower(v) - x[v] + std::uniform_real_distribution<double>(0.0, 2.0)(rng);
    }
    DiffusionInstance res = residual(inst, x);
    CHECK(energy_value(res, Potential::Zero(12)) == doctest::Approx(0.0));
    const double want = energy_value(inst, x + y) - energy_value(inst, x);
    CHECK(energy_value(res, y) == doctest::Approx(want).epsilon(1e-9));
    for (VertexId v = 0; v < 12; ++v) CHECK(res.lower(v) <= 0.0);
  }
}

TEST_CASE("shifted instance adds a linear term and zeroes f(0)") {
  gen::Rng rng(4);
  auto g = share(gen::ring(6));
  DiffusionInstance inst = gen::random_instance(g, rng);
  Vector w = Vector::Random(6);
  DiffusionInstance s = shifted_instance(inst, g, w);
  for (VertexId v = 0; v < 6; ++v) {
    CHECK(s.vwf(v).eval(0.0) == doctest::Approx(0.0));
    CHECK(s.vwf(v).eval(0.5) == doctest::Approx(inst.vwf(v).eval(0.5) - inst.vwf(v).eval(0.0) + 0.5 * w[v]));
  }
}

TEST_CASE("boundedness and sub instances") {
  auto g = share(gen::path(2));
  DiffusionInstance bad(g, {Vwf::linear(-2.0), Vwf::linear(1.0)}, {0.0, 0.0});
  CHECK_THROWS_AS(check_bounded(bad), FeasibilityError);
  DiffusionInstance ok(g, {Vwf::linear(-1.0), Vwf::linear(1.0)}, {0.0, 0.0});
  CHECK_NOTHROW(check_bounded(ok));
  CHECK_THROWS_AS(DiffusionInstance(g, {Vwf::linear(1.0), Vwf::linear(1.0)}, {0.0, 0.5}), ValidationError);
  CHECK_THROWS_AS(DiffusionInstance(g, {Vwf::linear(1.0), Vwf::linear(1.0)}, {0.0, -1.0}), ValidationError);

  auto grid = share(gen::grid(3, 3));
  gen::Rng rng(8);
  DiffusionInstance inst = gen::random_instance(grid, rng);
  DiffusionInstance sub = sub_instance(inst, {4, 1, 0});
  CHECK(sub.vertex_count() == 3);
  CHECK(sub.graph().edge_count() == 2);
  CHECK(sub.lower(0) == inst.lower(4));
}
