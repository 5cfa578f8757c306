#pragma once

#include <span>
#include <vector>

#include "l2diff/instance.hpp"
#include "l2diff/vwf_tree.hpp"

namespace l2diff {

// u was a leaf hanging off v through conductance c; `lifted` is u's clipped and
// lifted function, which answers x_u = argmin given x_v.
struct EliminationRecord {
  VertexId u;
  VertexId v;
  double conductance;
  double lower;
  VwfSnapshot lifted;
};

class RecoveryMap {
 public:
  RecoveryMap() = default;
  RecoveryMap(VertexId original_count, std::vector<VertexId> survivors, std::vector<EliminationRecord> records);

  VertexId original_vertex_count() const noexcept { return n_; }
  // Original ids of the reduced instance's vertices, ascending.
  const std::vector<VertexId>& survivors() const noexcept { return survivors_; }
  const std::vector<EliminationRecord>& records() const noexcept { return records_; }

  // Replays eliminations newest-first.
  Potential recover(const Potential& reduced) const;

 private:
  VertexId n_ = 0;
  std::vector<VertexId> survivors_;
  std::vector<EliminationRecord> records_;
};

struct Elimination {
  DiffusionInstance reduced;
  RecoveryMap map;
};

// Repeatedly removes vertices with exactly one (merged) neighbor, smallest id
// first. Vertices in `keep` are never removed.
Elimination vertex_elimination(const DiffusionInstance& inst, std::span<const VertexId> keep = {});

inline Potential recover(const RecoveryMap& map, const Potential& reduced) { return map.recover(reduced); }

}  // namespace l2diff
