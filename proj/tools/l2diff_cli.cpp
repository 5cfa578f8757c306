// l2diff: solve, cluster, verify and benchmark l2 flow diffusion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "l2diff/error.hpp"
#include "l2diff/generators.hpp"
#include "l2diff/io.hpp"
#include "l2diff/oracle.hpp"
#include "l2diff/solver.hpp"

namespace {

using Json = nlohmann::ordered_json;
using namespace l2diff;

enum Exit { kOk = 0, kUsage = 1, kParse = 2, kNumerical = 3, kVerification = 4 };

struct RunConfig {
  std::string input;
  std::string mode = "solve";
  double eps = 1e-6;
  std::string seeds;
  double mass = 0.0;
  bool uniform = false;
  std::string demand_file;
  double kappa = 0.0;
  int j = 0;
  double j_scale = 1.0;
  double j_sqrt = 0.0;
  long base_case_edges = 64;
  double inner_delta = 1e-10;
  std::uint64_t seed = 1;
  std::string output;
  std::string format;
  bool global = false;
  std::string family = "grid";
  std::vector<long> sizes{1024, 4096};
};

// Floats with 17 significant digits so that output is lossless and stable.
void write_json(std::ostream& out, const Json& j, int indent = 0) {
  const std::string pad(static_cast<std::size_t>(indent) + 2, ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out << "{}";
        break;
      }
      out << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out << ",\n";
        first = false;
        out << pad << Json(it.key()).dump() << ": ";
        write_json(out, it.value(), indent + 2);
      }
      out << '\n' << std::string(static_cast<std::size_t>(indent), ' ') << '}';
      break;
    }
    case Json::value_t::array: {
      out << '[';
      bool first = true, nested = false;
      for (const Json& v : j) {
        nested = nested || v.is_structured();
        if (!first) out << (v.is_structured() ? ",\n" + pad : ", ");
        else if (v.is_structured()) out << '\n' << pad;
        first = false;
        write_json(out, v, indent + 2);
      }
      if (nested) out << '\n' << std::string(static_cast<std::size_t>(indent), ' ');
      out << ']';
      break;
    }
    case Json::value_t::number_float: {
      const double x = j.get<double>();
      if (!std::isfinite(x)) {
        out << "null";
      } else {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        out << buf;
      }
      break;
    }
    default:
      out << j.dump();
  }
}

Json vec_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json stats_json(const SolveStats& s) {
  Json j;
  j["refinement_steps"] = s.refinement_steps;
  j["certified"] = s.certified;
  j["lower_bound"] = s.lower_bound;
  j["energies"] = s.energies;
  Json levels = Json::array();
  for (const LevelStats& l : s.levels) {
    levels.push_back({{"calls", l.calls},
                      {"oracle_calls", l.oracle_calls},
                      {"eliminations", l.eliminations},
                      {"agd_iterations", l.agd_iterations},
                      {"base_solves", l.base_solves}});
  }
  j["levels"] = levels;
  return j;
}

SolverConfig solver_config(const RunConfig& rc) {
  SolverConfig cfg;
  cfg.eps = rc.eps;
  cfg.kappa = rc.kappa;
  cfg.j = rc.j;
  cfg.j_scale = rc.j_scale;
  cfg.j_sqrt = rc.j_sqrt;
  cfg.base_case_edges = static_cast<EdgeId>(rc.base_case_edges);
  cfg.inner_delta = rc.inner_delta;
  cfg.rng_seed = rc.seed;
  return cfg;
}

Vector demand_for(const RunConfig& rc, const Graph& g) {
  if (!rc.seeds.empty() == !rc.demand_file.empty()) {
    throw UsageError("give exactly one of --seeds and --demand-file");
  }
  if (!rc.demand_file.empty()) return read_demand_file(rc.demand_file, g.vertex_count());
  const std::vector<VertexId> seeds = parse_seeds(rc.seeds, g.vertex_count());
  double mass = rc.mass;
  if (mass <= 0.0) {
    // Default: twice the seeds' own sink capacity, so mass has to spread.
    for (VertexId v : seeds) mass += 2.0 * g.weighted_degree(v);
    mass = std::min(mass, g.volume());
  }
  return build_demand(g, seeds, mass, rc.uniform ? SeedSplit::uniform : SeedSplit::proportional);
}

std::ostream& open_output(const RunConfig& rc, std::unique_ptr<std::ofstream>& file) {
  if (rc.output.empty() || rc.output == "-") return std::cout;
  file = std::make_unique<std::ofstream>(rc.output);
  if (!*file) throw UsageError("cannot write '" + rc.output + "'");
  return *file;
}

GraphPtr load_graph(const RunConfig& rc) {
  if (rc.input.empty()) throw UsageError("--input is required in this mode");
  return std::make_shared<const Graph>(read_edge_list_file(rc.input));
}

int run_solve(const RunConfig& rc, bool cluster) {
  const GraphPtr g = load_graph(rc);
  const Vector d = demand_for(rc, *g);
  const DiffusionResult res = l2_diffusion(g, d, solver_config(rc));

  std::unique_ptr<std::ofstream> file;
  std::ostream& out = open_output(rc, file);
  std::optional<SweepResult> cut;
  if (cluster && res.x.maxCoeff() > 0.0) cut = sweep_cut(*g, res.x, rc.global);

  if (rc.format == "csv") {
    out << "vertex,potential,in_cut\n";
    std::vector<char> in_cut(static_cast<std::size_t>(g->vertex_count()), 0);
    if (cut) for (VertexId v : cut->set) in_cut[static_cast<std::size_t>(v)] = 1;
    char buf[32];
    for (VertexId v = 0; v < g->vertex_count(); ++v) {
      std::snprintf(buf, sizeof buf, "%.17g", res.x[v]);
      out << v << ',' << buf << ',' << int(in_cut[static_cast<std::size_t>(v)]) << '\n';
    }
    return kOk;
  }
  Json j;
  j["schema"] = 1;
  j["mode"] = cluster ? "cluster" : "solve";
  j["n"] = g->vertex_count();
  j["m"] = g->edge_count();
  j["eps"] = rc.eps;
  j["energy"] = res.energy;
  j["potentials"] = vec_json(res.x);
  j["flow"] = vec_json(res.flow);
  j["stats"] = stats_json(res.stats);
  if (cluster) {
    j["cut_vertices"] = cut ? Json(cut->set) : Json::array();
    j["conductance"] = cut ? Json(cut->conductance) : Json(nullptr);
  }
  write_json(out, j);
  out << '\n';
  return kOk;
}

int run_verify(const RunConfig& rc) {
  const GraphPtr g = load_graph(rc);
  const Vector d = demand_for(rc, *g);
  const DiffusionInstance inst = make_l2_instance(g, d);
  const DiffusionResult res = l2_diffusion(g, d, solver_config(rc));
  const QpResult qp = qp_solve_exact(inst);

  const double scale = std::max(1.0, std::abs(qp.energy));
  const double target = qp.energy / (1.0 + rc.eps) + 1e-12 * scale;
  const Vector excess = residue(*g, res.flow) - d;
  const double violation = std::max(0.0, excess.maxCoeff());
  const double min_x = g->vertex_count() ? res.x.minCoeff() : 0.0;

  Json checks = Json::array();
  bool pass = true;
  auto check = [&](const char* name, double value, double limit) {
    const bool ok = value <= limit;
    pass = pass && ok;
    checks.push_back({{"name", name}, {"value", value}, {"limit", limit}, {"pass", ok}});
  };
  check("energy_vs_oracle", res.energy, target);
  check("negative_potential", -min_x, 0.0);
  check("oracle_kkt", qp.kkt_residual, 1e-9);
  Json j;
  j["schema"] = 1;
  j["mode"] = "verify";
  j["n"] = g->vertex_count();
  j["m"] = g->edge_count();
  j["eps"] = rc.eps;
  j["energy"] = res.energy;
  j["oracle_energy"] = qp.energy;
  j["max_excess_over_demand"] = violation;
  j["checks"] = checks;
  j["pass"] = pass;

  std::unique_ptr<std::ofstream> file;
  std::ostream& out = open_output(rc, file);
  write_json(out, j);
  out << '\n';
  return pass ? kOk : kVerification;
}

Graph bench_graph(const std::string& family, long n, gen::Rng& rng) {
  if (family == "grid") {
    const auto r = static_cast<VertexId>(std::max(1.0, std::floor(std::sqrt(static_cast<double>(n)))));
    const auto c = static_cast<VertexId>((n + r - 1) / r);
    return gen::grid(r, c);
  }
  if (family == "expander") return gen::expander(static_cast<VertexId>(n), 4, rng);
  if (family == "ring") return gen::ring(static_cast<VertexId>(n));
  throw UsageError("unknown family '" + family + "' (grid, expander, ring)");
}

int run_bench(const RunConfig& rc) {
  std::unique_ptr<std::ofstream> file;
  std::ostream& out = open_output(rc, file);
  const bool json = rc.format == "json";
  Json rows = Json::array();
  if (!json) out << "family,n,m,wall_ms,oracle_calls,levels\n";
  for (std::size_t i = 0; i < rc.sizes.size(); ++i) {
    if (rc.sizes[i] < 2) throw UsageError("bench sizes must be at least 2");
    gen::Rng rng(rc.seed + i);
    const GraphPtr g = std::make_shared<const Graph>(bench_graph(rc.family, rc.sizes[i], rng));
    const Vector d = gen::random_demand(*g, rng);
    const auto t0 = std::chrono::steady_clock::now();
    const DiffusionResult res = l2_diffusion(g, d, solver_config(rc));
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    long long calls = res.stats.refinement_steps;
    for (const LevelStats& l : res.stats.levels) calls += l.oracle_calls + l.base_solves;
    const auto levels = static_cast<long long>(res.stats.levels.size());
    if (json) {
      rows.push_back({{"family", rc.family}, {"n", g->vertex_count()}, {"m", g->edge_count()}, {"wall_ms", ms},
                      {"oracle_calls", calls}, {"levels", levels}, {"energy", res.energy}});
    } else {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3f", ms);
      out << rc.family << ',' << g->vertex_count() << ',' << g->edge_count() << ',' << buf << ',' << calls << ','
          << levels << '\n'
          << std::flush;
    }
  }
  if (json) {
    Json j;
    j["schema"] = 1;
    j["mode"] = "bench";
    j["runs"] = rows;
    write_json(out, j);
    out << '\n';
  }
  return kOk;
}

int run(const RunConfig& rc) {
  if (rc.mode == "solve") return run_solve(rc, false);
  if (rc.mode == "cluster") return run_solve(rc, true);
  if (rc.mode == "verify") return run_verify(rc);
  if (rc.mode == "bench") return run_bench(rc);
  throw UsageError("unknown mode '" + rc.mode + "'");
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig rc;
  CLI::App app{"l2 flow diffusion solver"};
  app.add_option("--input,-i", rc.input, "edge list: 'u v [c]' per line");
  app.add_option("--mode,-m", rc.mode, "solve | cluster | verify | bench")
      ->check(CLI::IsMember({"solve", "cluster", "verify", "bench"}));
  app.add_option("--eps", rc.eps, "relative accuracy");
  app.add_option("--seeds", rc.seeds, "comma separated seed vertices");
  app.add_option("--mass", rc.mass, "total source mass (default: twice the seeds' volume)");
  app.add_flag("--uniform", rc.uniform, "split the mass evenly instead of by degree");
  app.add_option("--demand-file", rc.demand_file, "'u d_u' per line");
  app.add_option("--kappa", rc.kappa, "preconditioner quality target (0: auto)");
  app.add_option("--j", rc.j, "j-tree size (0: auto)");
  app.add_option("--j-scale", rc.j_scale, "constant in the automatic j");
  app.add_option("--j-sqrt", rc.j_sqrt, "j = ceil(s sqrt(n)) when positive");
  app.add_option("--base-case-edges", rc.base_case_edges, "exact solve at or below this many edges");
  app.add_option("--inner-delta", rc.inner_delta, "inner solve tolerance");
  app.add_option("--seed", rc.seed, "random seed");
  app.add_option("--output,-o", rc.output, "output path (default stdout)");
  app.add_option("--format", rc.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_flag("--global", rc.global, "conductance with min(vol S, vol V\\S)");
  app.add_option("--family", rc.family, "bench graph family: grid | expander | ring");
  app.add_option("--sizes", rc.sizes, "bench vertex counts")->delimiter(',');
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (rc.format.empty()) rc.format = rc.mode == "bench" ? "csv" : "json";

  try {
    return run(rc);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const VerificationError& e) {
    std::cerr << "verification failed: " << e.what() << '\n';
    return kVerification;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
}
