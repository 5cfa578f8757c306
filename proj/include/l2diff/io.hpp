#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "l2diff/graph.hpp"

namespace l2diff {

enum class SeedSplit { proportional, uniform };

// d = t - s with sinks t_v = deg(v) and `mass` spread over the seeds, by degree
// (proportional) or evenly. Throws FeasibilityError when mass exceeds vol(V).
Vector build_demand(const Graph& g, std::span<const VertexId> seeds, double mass,
                    SeedSplit split = SeedSplit::proportional);

// "u d_u" per line, '#' comments; unlisted vertices get 0.
Vector read_demand(std::istream& in, VertexId n);
Vector read_demand_file(const std::string& path, VertexId n);

// Comma or whitespace separated vertex ids, checked against n.
std::vector<VertexId> parse_seeds(const std::string& text, VertexId n);

}  // namespace l2diff
