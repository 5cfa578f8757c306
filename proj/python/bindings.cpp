#include <memory>
#include <tuple>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "l2diff/error.hpp"
#include "l2diff/generators.hpp"
#include "l2diff/io.hpp"
#include "l2diff/oracle.hpp"
#include "l2diff/solver.hpp"

namespace py = pybind11;
using namespace l2diff;

namespace {

using GraphHolder = std::shared_ptr<Graph>;

GraphHolder hold(Graph g) { return std::make_shared<Graph>(std::move(g)); }

GraphHolder graph_from_edges(VertexId n, const std::vector<std::tuple<VertexId, VertexId, double>>& edges) {
  std::vector<Edge> es;
  es.reserve(edges.size());
  for (const auto& [u, v, c] : edges) es.push_back({u, v, c});
  return hold(Graph(n, std::move(es)));
}

py::dict solve(const GraphHolder& g, const Vector& d, double eps, double kappa, int j, EdgeId base_case_edges,
               std::uint64_t seed) {
  SolverConfig cfg;
  cfg.eps = eps;
  cfg.kappa = kappa;
  cfg.j = j;
  cfg.base_case_edges = base_case_edges;
  cfg.rng_seed = seed;
  DiffusionResult r;
  {
    py::gil_scoped_release release;
    r = l2_diffusion(g, d, cfg);
  }
  py::dict out;
  out["x"] = r.x;
  out["flow"] = r.flow;
  out["energy"] = r.energy;
  out["lower_bound"] = r.stats.lower_bound;
  out["certified"] = r.stats.certified;
  out["refinement_steps"] = r.stats.refinement_steps;
  out["energies"] = r.stats.energies;
  out["levels"] = r.stats.levels.size();
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "l2 flow diffusion solver";

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  py::register_exception<UsageError>(m, "UsageError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<FeasibilityError>(m, "FeasibilityError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<VerificationError>(m, "VerificationError", base.ptr());

  py::class_<Graph, GraphHolder>(m, "Graph")
      .def(py::init(&graph_from_edges), py::arg("n"), py::arg("edges"),
           "Graph on n vertices from (u, v, conductance) triples.")
      .def_property_readonly("n", &Graph::vertex_count)
      .def_property_readonly("m", &Graph::edge_count)
      .def_property_readonly("volume", &Graph::volume)
      .def("edges",
           [](const Graph& g) {
             std::vector<std::tuple<VertexId, VertexId, double>> out;
             for (const Edge& e : g.edges()) out.emplace_back(e.u, e.v, e.conductance);
             return out;
           })
      .def("weighted_degree", &Graph::weighted_degree)
      .def("connected", &Graph::connected)
      .def("laplacian_apply", [](const Graph& g, const Vector& x) { return laplacian_apply(g, x); })
      .def("__repr__", [](const Graph& g) {
        return "<l2diff.Graph n=" + std::to_string(g.vertex_count()) + " m=" + std::to_string(g.edge_count()) + ">";
      });

  m.def("read_edge_list", [](const std::string& path) { return hold(read_edge_list_file(path)); });
  m.def("grid", [](VertexId r, VertexId c) { return hold(gen::grid(r, c)); });
  m.def("ring", [](VertexId n) { return hold(gen::ring(n)); });
  m.def("path", [](VertexId n) { return hold(gen::path(n)); });
  m.def("barbell", [](VertexId k) { return hold(gen::barbell(k)); });
  m.def("erdos_renyi", [](VertexId n, double p, std::uint64_t seed) {
    gen::Rng rng(seed);
    return hold(gen::erdos_renyi(n, p, rng));
  }, py::arg("n"), py::arg("p"), py::arg("seed") = 1);

  m.def("build_demand",
        [](const GraphHolder& g, const std::vector<VertexId>& seeds, double mass, bool uniform) {
          return build_demand(*g, seeds, mass, uniform ? SeedSplit::uniform : SeedSplit::proportional);
        },
        py::arg("graph"), py::arg("seeds"), py::arg("mass"), py::arg("uniform") = false);

  m.def("l2_diffusion", &solve, py::arg("graph"), py::arg("d"), py::arg("eps") = 1e-6, py::arg("kappa") = 0.0,
        py::arg("j") = 0, py::arg("base_case_edges") = 64, py::arg("seed") = 1,
        "min_{x >= 0} ½xᵀLx + dᵀx to relative accuracy eps; returns a dict.");

  m.def("exact_energy", [](const GraphHolder& g, const Vector& d) {
    return qp_solve_exact(make_l2_instance(g, d)).energy;
  }, "Optimal energy from the dense exact solver (n <= 500).");

  m.def("sweep_cut", [](const GraphHolder& g, const Vector& x, bool global) {
    SweepResult s = sweep_cut(*g, x, global);
    return std::make_tuple(s.set, s.conductance);
  }, py::arg("graph"), py::arg("x"), py::arg("global_") = false);

  m.def("conductance", [](const GraphHolder& g, const std::vector<VertexId>& set, bool global) {
    return conductance(*g, set, global);
  }, py::arg("graph"), py::arg("set"), py::arg("global_") = false);
}
