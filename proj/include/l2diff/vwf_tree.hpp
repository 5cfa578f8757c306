#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "l2diff/vwf.hpp"

namespace l2diff {

namespace detail {

// Pending transform of a subtree. Applied to a node's anchored local form
// (p, D, V, r): (p, D) <- A (p, D) + t, V <- V + q(p, D) with q evaluated on the
// old (p, D), and r <- Moebius(M, r).
struct Tag {
  double a00 = 1, a01 = 0, a10 = 0, a11 = 1;
  double t0 = 0, t1 = 0;
  double qpp = 0, qpd = 0, qdd = 0;  // zᵀQz = qpp p² + 2 qpd p D + qdd D²
  double lp = 0, ld = 0, k = 0;
  double m00 = 1, m01 = 0, m10 = 0, m11 = 1;
};

// Node of the persistent treap. The piece starts at `key` (p for finite keys,
// -inf for the lifted leftmost piece) and f(x) = V + D (x - p) + r/2 (x - p)².
struct Node {
  double p, d, v, r;
  bool neg_inf;
  std::uint32_t priority;
  std::int32_t left, right;
  std::int32_t size;
  std::int32_t tag;  // -1: none pending for the children
};

struct TreeOps;

}  // namespace detail

// Arena shared by all trees of one elimination session. Nodes and tags are
// append-only, so every handle stays valid while the pool lives.
class VwfPool {
 public:
  // Storage of a destroyed pool is reused by the next one on the same thread.
  explicit VwfPool(std::uint64_t seed = 0x9e3779b97f4a7c15ULL);
  ~VwfPool();
  VwfPool(const VwfPool&) = delete;
  VwfPool& operator=(const VwfPool&) = delete;
  std::size_t node_count() const noexcept { return nodes_.size(); }
  void reserve(std::size_t nodes) { nodes_.reserve(nodes); }

 private:
  friend struct detail::TreeOps;
  std::vector<detail::Node> nodes_;
  std::vector<detail::Tag> tags_;
  std::uint64_t rng_;
  std::uint32_t next_priority();
};

// Immutable view of a tree state, optionally carrying the lift constant.
class VwfSnapshot {
 public:
  VwfSnapshot() = default;
  Vwf to_vwf() const;
  std::size_t size() const;
  double eval(double x) const;
  double domain_start() const;
  // argmin_{y} c/2 (x - y)² + f(y) for the pre-lift f; requires a lift constant.
  double optimal_x(double x) const;
  std::optional<double> lift_constant() const noexcept { return lift_c_; }

 private:
  friend class VwfTree;
  VwfSnapshot(std::shared_ptr<VwfPool> pool, std::int32_t root, std::optional<double> c, double floor)
      : pool_(std::move(pool)), root_(root), lift_c_(c), lift_floor_(floor) {}
  std::shared_ptr<VwfPool> pool_;
  std::int32_t root_ = -1;
  std::optional<double> lift_c_;
  double lift_floor_ = -kInf;
};

// Mutable handle over a persistent tree. Mutations never touch existing nodes.
class VwfTree {
 public:
  VwfTree(std::shared_ptr<VwfPool> pool, const Vwf& f);

  // this <- this + other on the intersected domain. other is left intact.
  void add(const VwfTree& other);
  // this <- inf-convolution with c/2 x²; enables optimal_x until the next mutation.
  void lift(double c);
  // Restricts the domain to [max(lower, s_0), inf).
  void clip(double lower);

  VwfSnapshot snapshot() const;
  Vwf to_vwf() const;
  std::size_t size() const;
  double domain_start() const;
  double eval(double x) const;
  double optimal_x(double x) const;

 private:
  std::shared_ptr<VwfPool> pool_;
  std::int32_t root_ = -1;
  std::optional<double> lift_c_;
  double lift_floor_ = -kInf;
};

}  // namespace l2diff
