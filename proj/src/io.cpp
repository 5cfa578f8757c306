#include "l2diff/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "l2diff/error.hpp"

namespace l2diff {

namespace {

bool parse_vertex(const std::string& t, VertexId n, VertexId& v) {
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  return ec == std::errc() && ptr == t.data() + t.size() && v >= 0 && v < n;
}

}  // namespace

Vector build_demand(const Graph& g, std::span<const VertexId> seeds, double mass, SeedSplit split) {
  if (seeds.empty()) throw UsageError("build_demand: no seeds");
  if (!(mass > 0.0) || !std::isfinite(mass)) throw UsageError("build_demand: mass must be positive");
  std::vector<VertexId> s(seeds.begin(), seeds.end());
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  for (VertexId v : s) {
    if (v < 0 || v >= g.vertex_count()) throw UsageError("build_demand: seed " + std::to_string(v) + " out of range");
  }
  if (mass > g.volume() * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "source mass " << mass << " exceeds total sink capacity vol(V) = " << g.volume();
    throw FeasibilityError(msg.str());
  }
  Vector d(g.vertex_count());
  for (VertexId v = 0; v < g.vertex_count(); ++v) d[v] = g.weighted_degree(v);
  double seed_volume = 0.0;
  for (VertexId v : s) seed_volume += g.weighted_degree(v);
  if (split == SeedSplit::proportional && !(seed_volume > 0.0)) {
    throw DomainError("build_demand: seeds have zero volume");
  }
  for (VertexId v : s) {
    const double share = split == SeedSplit::proportional ? g.weighted_degree(v) / seed_volume
                                                          : 1.0 / static_cast<double>(s.size());
    d[v] -= mass * share;
  }
  return d;
}

Vector read_demand(std::istream& in, VertexId n) {
  Vector d = Vector::Zero(n);
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string tu, td, extra;
    if (!(ss >> tu)) continue;
    if (!(ss >> td)) throw ParseError("expected 'u d_u'", lineno);
    if (ss >> extra) throw ParseError("trailing token '" + extra + "'", lineno);
    VertexId u = 0;
    if (!parse_vertex(tu, n, u)) throw ParseError("invalid vertex id '" + tu + "'", lineno);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(td.data(), td.data() + td.size(), value);
    if (ec != std::errc() || ptr != td.data() + td.size() || !std::isfinite(value)) {
      throw ParseError("invalid demand '" + td + "'", lineno);
    }
    if (seen[static_cast<std::size_t>(u)]) throw ParseError("duplicate vertex " + tu, lineno);
    seen[static_cast<std::size_t>(u)] = 1;
    d[u] = value;
  }
  return d;
}

Vector read_demand_file(const std::string& path, VertexId n) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  return read_demand(in, n);
}

std::vector<VertexId> parse_seeds(const std::string& text, VertexId n) {
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream ss(s);
  std::vector<VertexId> out;
  std::string t;
  while (ss >> t) {
    VertexId v = 0;
    if (!parse_vertex(t, n, v)) throw UsageError("invalid seed '" + t + "'");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("empty seed list");
  return out;
}

}  // namespace l2diff
