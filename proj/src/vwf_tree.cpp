#include "l2diff/vwf_tree.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <utility>

#include "l2diff/error.hpp"

namespace l2diff {

namespace {

struct PoolStorage {
  std::vector<detail::Node> nodes;
  std::vector<detail::Tag> tags;
};

thread_local PoolStorage spare;

}  // namespace

VwfPool::VwfPool(std::uint64_t seed) : rng_(seed) {
  nodes_.swap(spare.nodes);
  tags_.swap(spare.tags);
  nodes_.clear();
  tags_.clear();
}

VwfPool::~VwfPool() {
  if (nodes_.capacity() > spare.nodes.capacity()) spare.nodes.swap(nodes_);
  if (tags_.capacity() > spare.tags.capacity()) spare.tags.swap(tags_);
}

std::uint32_t VwfPool::next_priority() {
  rng_ ^= rng_ >> 12;
  rng_ ^= rng_ << 25;
  rng_ ^= rng_ >> 27;
  return static_cast<std::uint32_t>((rng_ * 0x2545F4914F6CDD1DULL) >> 32);
}

namespace detail {

// Local data of a piece after all pending tags above it are applied.
struct Local {
  double p, d, v, r;
  bool neg_inf;
  double key() const { return neg_inf ? -kInf : p; }
  double value(double x) const { return v + d * (x - p) + 0.5 * r * (x - p) * (x - p); }
  double slope(double x) const { return d + r * (x - p); }
};

Tag compose(const Tag& first, const Tag& second) {
  const Tag& a = first;
  const Tag& b = second;
  Tag c;
  c.a00 = b.a00 * a.a00 + b.a01 * a.a10;
  c.a01 = b.a00 * a.a01 + b.a01 * a.a11;
  c.a10 = b.a10 * a.a00 + b.a11 * a.a10;
  c.a11 = b.a10 * a.a01 + b.a11 * a.a11;
  c.t0 = b.a00 * a.t0 + b.a01 * a.t1 + b.t0;
  c.t1 = b.a10 * a.t0 + b.a11 * a.t1 + b.t1;
  // Q = Qa + Aaᵀ Qb Aa
  const double m0p = b.qpp * a.a00 + b.qpd * a.a10;  // (Qb Aa) column 0
  const double m1p = b.qpd * a.a00 + b.qdd * a.a10;
  const double m0d = b.qpp * a.a01 + b.qpd * a.a11;  // column 1
  const double m1d = b.qpd * a.a01 + b.qdd * a.a11;
  c.qpp = a.qpp + a.a00 * m0p + a.a10 * m1p;
  c.qpd = a.qpd + a.a00 * m0d + a.a10 * m1d;
  c.qdd = a.qdd + a.a01 * m0d + a.a11 * m1d;
  // l = la + Aaᵀ (2 Qb ta + lb)
  const double w0 = 2.0 * (b.qpp * a.t0 + b.qpd * a.t1) + b.lp;
  const double w1 = 2.0 * (b.qpd * a.t0 + b.qdd * a.t1) + b.ld;
  c.lp = a.lp + a.a00 * w0 + a.a10 * w1;
  c.ld = a.ld + a.a01 * w0 + a.a11 * w1;
  c.k = a.k + b.qpp * a.t0 * a.t0 + 2.0 * b.qpd * a.t0 * a.t1 + b.qdd * a.t1 * a.t1 + b.lp * a.t0 +
        b.ld * a.t1 + b.k;
  c.m00 = b.m00 * a.m00 + b.m01 * a.m10;
  c.m01 = b.m00 * a.m01 + b.m01 * a.m11;
  c.m10 = b.m10 * a.m00 + b.m11 * a.m10;
  c.m11 = b.m10 * a.m01 + b.m11 * a.m11;
  const double scale = std::max({std::abs(c.m00), std::abs(c.m01), std::abs(c.m10), std::abs(c.m11)});
  if (scale > 0.0 && (scale > 1e100 || scale < 1e-100)) {
    c.m00 /= scale;
    c.m01 /= scale;
    c.m10 /= scale;
    c.m11 /= scale;
  }
  return c;
}

void apply(const Tag& t, double& p, double& d, double& v, double& r) {
  const double np = t.a00 * p + t.a01 * d + t.t0;
  const double nd = t.a10 * p + t.a11 * d + t.t1;
  v += t.qpp * p * p + 2.0 * t.qpd * p * d + t.qdd * d * d + t.lp * p + t.ld * d + t.k;
  r = (t.m00 * r + t.m01) / (t.m10 * r + t.m11);
  if (r < 0.0) r = 0.0;
  p = np;
  d = nd;
}

Tag lift_tag(double c) {
  Tag t;
  t.a01 = 1.0 / c;
  t.qdd = 0.5 / c;
  t.m00 = c;
  t.m01 = 0.0;
  t.m10 = 1.0;
  t.m11 = c;
  return t;
}

// Adds the global quadratic alpha/2 x² + beta x + gamma.
Tag add_tag(double alpha, double beta, double gamma) {
  Tag t;
  t.a10 = alpha;
  t.t1 = beta;
  t.qpp = 0.5 * alpha;
  t.lp = beta;
  t.k = gamma;
  t.m01 = alpha;
  return t;
}

struct TreeOps {
  VwfPool& pool;

  Node& node(std::int32_t i) { return pool.nodes_[static_cast<std::size_t>(i)]; }
  std::int32_t size(std::int32_t i) { return i < 0 ? 0 : node(i).size; }

  std::int32_t push_node(const Node& n) {
    pool.nodes_.push_back(n);
    return static_cast<std::int32_t>(pool.nodes_.size() - 1);
  }
  std::int32_t push_tag(const Tag& t) {
    pool.tags_.push_back(t);
    return static_cast<std::int32_t>(pool.tags_.size() - 1);
  }

  // Copy of node i with tag `tag_id` applied to its data and queued for its children.
  std::int32_t with_tag(std::int32_t i, std::int32_t tag_id) {
    if (i < 0) return i;
    Node n = node(i);
    const Tag t = pool.tags_[static_cast<std::size_t>(tag_id)];
    apply(t, n.p, n.d, n.v, n.r);
    if (n.left >= 0 || n.right >= 0) {
      n.tag = n.tag < 0 ? tag_id : push_tag(compose(pool.tags_[static_cast<std::size_t>(n.tag)], t));
    } else {
      n.tag = -1;
    }
    return push_node(n);
  }

  // Copy of node i whose pending tag has been pushed into (copies of) its children.
  Node take(std::int32_t i) {
    Node n = node(i);
    if (n.tag >= 0) {
      const std::int32_t t = n.tag;
      n.left = with_tag(n.left, t);
      n.right = with_tag(n.right, t);
      n.tag = -1;
    }
    return n;
  }

  std::int32_t publish(Node n) {
    n.size = 1 + size(n.left) + size(n.right);
    return push_node(n);
  }

  static double key(const Node& n) { return n.neg_inf ? -kInf : n.p; }

  // (keys < x, keys >= x)
  std::pair<std::int32_t, std::int32_t> split(std::int32_t t, double x) {
    if (t < 0) return {-1, -1};
    Node n = take(t);
    if (key(n) < x) {
      auto [a, b] = split(n.right, x);
      n.right = a;
      return {publish(n), b};
    }
    auto [a, b] = split(n.left, x);
    n.left = b;
    return {a, publish(n)};
  }

  std::int32_t merge(std::int32_t a, std::int32_t b) {
    if (a < 0) return b;
    if (b < 0) return a;
    if (node(a).priority > node(b).priority) {
      Node n = take(a);
      n.right = merge(n.right, b);
      return publish(n);
    }
    Node n = take(b);
    n.left = merge(a, n.left);
    return publish(n);
  }

  static Local local_of(const Node& n) { return {n.p, n.d, n.v, n.r, n.neg_inf}; }

  // Visits the piece containing x (max key <= x); returns false when x is left of the domain.
  bool find(std::int32_t t, double x, Local& out) {
    bool found = false;
    Tag acc;
    bool identity = true;
    while (t >= 0) {
      const Node& n = node(t);
      Local l = local_of(n);
      if (!identity) apply(acc, l.p, l.d, l.v, l.r);
      std::int32_t next;
      if (l.key() <= x) {
        out = l;
        found = true;
        next = n.right;
      } else {
        next = n.left;
      }
      if (n.tag >= 0) {
        const Tag& nt = pool.tags_[static_cast<std::size_t>(n.tag)];
        acc = identity ? nt : compose(nt, acc);
        identity = false;
      }
      t = next;
    }
    return found;
  }

  Local leftmost(std::int32_t t) {
    Tag acc;
    bool identity = true;
    Local l{};
    while (t >= 0) {
      const Node& n = node(t);
      l = local_of(n);
      if (!identity) apply(acc, l.p, l.d, l.v, l.r);
      if (n.tag >= 0) {
        const Tag& nt = pool.tags_[static_cast<std::size_t>(n.tag)];
        acc = identity ? nt : compose(nt, acc);
        identity = false;
      }
      t = n.left;
    }
    return l;
  }

  Local rightmost(std::int32_t t) {
    Tag acc;
    bool identity = true;
    Local l{};
    while (t >= 0) {
      const Node& n = node(t);
      l = local_of(n);
      if (!identity) apply(acc, l.p, l.d, l.v, l.r);
      if (n.tag >= 0) {
        const Tag& nt = pool.tags_[static_cast<std::size_t>(n.tag)];
        acc = identity ? nt : compose(nt, acc);
        identity = false;
      }
      t = n.right;
    }
    return l;
  }

  void collect(std::int32_t t, std::vector<Local>& out) {
    struct Frame {
      std::int32_t node;
      Tag acc;
      bool identity;
      bool expanded;
    };
    std::vector<Frame> stack;
    if (t >= 0) stack.push_back({t, Tag{}, true, false});
    while (!stack.empty()) {
      Frame f = stack.back();
      stack.pop_back();
      const Node& n = node(f.node);
      if (f.expanded) {
        Local l = local_of(n);
        if (!f.identity) apply(f.acc, l.p, l.d, l.v, l.r);
        out.push_back(l);
        continue;
      }
      Tag child = f.acc;
      bool child_identity = f.identity;
      if (n.tag >= 0) {
        const Tag& nt = pool.tags_[static_cast<std::size_t>(n.tag)];
        child = f.identity ? nt : compose(nt, f.acc);
        child_identity = false;
      }
      const std::int32_t left = n.left;
      const std::int32_t right = n.right;
      if (right >= 0) stack.push_back({right, child, child_identity, false});
      stack.push_back({f.node, f.acc, f.identity, true});
      if (left >= 0) stack.push_back({left, child, child_identity, false});
    }
  }

  std::int32_t make_leaf(const Local& l) {
    Node n{l.p, l.d, l.v, l.r, l.neg_inf, pool.next_priority(), -1, -1, 1, -1};
    return push_node(n);
  }

  std::int32_t build(const Vwf& f) {
    auto pieces = f.pieces();
    std::vector<std::int32_t> ids;
    ids.reserve(pieces.size());
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      const Piece& pc = pieces[i];
      Local l{};
      l.neg_inf = !std::isfinite(pc.s);
      l.p = l.neg_inf ? (i + 1 < pieces.size() ? pieces[i + 1].s : 0.0) : pc.s;
      l.r = pc.r;
      l.d = pc.r * l.p + pc.a;
      l.v = 0.5 * pc.r * l.p * l.p + pc.a * l.p + pc.b;
      ids.push_back(make_leaf(l));
    }
    // Cartesian tree by priority over the in-order sequence.
    std::vector<std::int32_t> stack;
    for (std::int32_t id : ids) {
      std::int32_t last = -1;
      while (!stack.empty() && node(stack.back()).priority < node(id).priority) {
        last = stack.back();
        stack.pop_back();
      }
      node(id).left = last;
      if (!stack.empty()) node(stack.back()).right = id;
      stack.push_back(id);
    }
    const std::int32_t root = stack.empty() ? -1 : stack.front();
    fix_sizes(root);
    return root;
  }

  std::int32_t fix_sizes(std::int32_t t) {
    if (t < 0) return 0;
    const std::int32_t l = fix_sizes(node(t).left);
    const std::int32_t r = fix_sizes(node(t).right);
    node(t).size = 1 + l + r;
    return node(t).size;
  }

  // Makes x a breakpoint if it lies strictly inside the domain.
  std::int32_t ensure_break(std::int32_t t, double x) {
    Local l{};
    if (!std::isfinite(x) || !find(t, x, l) || l.key() == x) return t;
    const double h = x - l.p;
    Local n{x, l.d + l.r * h, l.v + l.d * h + 0.5 * l.r * h * h, l.r, false};
    auto [a, b] = split(t, x);
    return merge(merge(a, make_leaf(n)), b);
  }
};

}  // namespace detail

namespace {

Vwf to_vwf_impl(VwfPool& pool, std::int32_t root) {
  std::vector<detail::Local> locals;
  detail::TreeOps{pool}.collect(root, locals);
  std::vector<Piece> pieces;
  pieces.reserve(locals.size());
  for (const detail::Local& l : locals) {
    pieces.push_back({l.key(), l.r, l.d - l.r * l.p, l.v - l.d * l.p + 0.5 * l.r * l.p * l.p});
  }
  return Vwf(std::move(pieces), false);
}

double eval_impl(VwfPool& pool, std::int32_t root, double x) {
  detail::Local l{};
  if (!detail::TreeOps{pool}.find(root, x, l)) throw DomainError("tree eval: x left of the domain");
  return l.value(x);
}

double optimal_x_impl(VwfPool& pool, std::int32_t root, const std::optional<double>& c, double floor,
                      double x) {
  if (!c) throw UsageError("optimal_x requires a lifted tree with no mutation since the lift");
  detail::Local l{};
  if (!detail::TreeOps{pool}.find(root, x, l)) throw DomainError("optimal_x: x left of the domain");
  return std::max(floor, x - l.slope(x) / *c);
}

}  // namespace

VwfTree::VwfTree(std::shared_ptr<VwfPool> pool, const Vwf& f) : pool_(std::move(pool)) {
  if (!pool_) throw UsageError("VwfTree needs a pool");
  root_ = detail::TreeOps{*pool_}.build(f);
}

std::size_t VwfTree::size() const { return static_cast<std::size_t>(detail::TreeOps{*pool_}.size(root_)); }

double VwfTree::domain_start() const { return detail::TreeOps{*pool_}.leftmost(root_).key(); }

void VwfTree::clip(double lower) {
  detail::TreeOps ops{*pool_};
  lift_c_.reset();
  if (!(lower > domain_start())) return;
  root_ = ops.ensure_break(root_, lower);
  root_ = ops.split(root_, lower).second;
}

void VwfTree::add(const VwfTree& other) {
  if (other.pool_ != pool_) throw UsageError("VwfTree::add: trees live in different pools");
  detail::TreeOps ops{*pool_};
  lift_c_.reset();
  std::int32_t small = other.root_;
  if (ops.size(other.root_) > ops.size(root_)) {
    small = root_;
    root_ = other.root_;
  }
  const double start = std::max(domain_start(), ops.leftmost(small).key());
  if (start > domain_start()) {
    root_ = ops.ensure_break(root_, start);
    root_ = ops.split(root_, start).second;
  }
  std::vector<detail::Local> pieces;
  ops.collect(small, pieces);
  // Peel the big tree left to right, one slice per piece of the small one.
  std::int32_t done = -1;
  std::int32_t rest = root_;
  for (std::size_t i = 0; i < pieces.size() && rest >= 0; ++i) {
    const detail::Local& l = pieces[i];
    const double hi = i + 1 < pieces.size() ? pieces[i + 1].key() : kInf;
    if (!(std::max(l.key(), start) < hi)) continue;
    std::int32_t slice = rest;
    rest = -1;
    if (std::isfinite(hi)) {
      std::tie(slice, rest) = ops.split(slice, hi);
      if (slice >= 0 && (rest < 0 || ops.leftmost(rest).key() != hi)) {
        const detail::Local c = ops.rightmost(slice);
        const double h = hi - c.p;
        rest = ops.merge(ops.make_leaf({hi, c.d + c.r * h, c.v + c.d * h + 0.5 * c.r * h * h, c.r, false}), rest);
      }
    }
    const double alpha = l.r;
    const double beta = l.d - l.r * l.p;
    const double gamma = l.v - l.d * l.p + 0.5 * l.r * l.p * l.p;
    done = ops.merge(done, ops.with_tag(slice, ops.push_tag(detail::add_tag(alpha, beta, gamma))));
  }
  root_ = ops.merge(done, rest);
}

void VwfTree::lift(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("lift: conductance must be positive and finite");
  detail::TreeOps ops{*pool_};
  const detail::Local first = ops.leftmost(root_);
  const std::int32_t tag = ops.push_tag(detail::lift_tag(c));
  root_ = ops.with_tag(root_, tag);
  lift_floor_ = first.key();
  if (!first.neg_inf) {
    detail::Local l{first.p + first.d / c, first.d, first.v + first.d * first.d / (2.0 * c), c, true};
    root_ = ops.merge(ops.make_leaf(l), root_);
  }
  lift_c_ = c;
}

VwfSnapshot VwfTree::snapshot() const { return VwfSnapshot(pool_, root_, lift_c_, lift_floor_); }
Vwf VwfTree::to_vwf() const { return to_vwf_impl(*pool_, root_); }
double VwfTree::eval(double x) const { return eval_impl(*pool_, root_, x); }
double VwfTree::optimal_x(double x) const { return optimal_x_impl(*pool_, root_, lift_c_, lift_floor_, x); }

Vwf VwfSnapshot::to_vwf() const {
  if (!pool_) throw UsageError("empty snapshot");
  return to_vwf_impl(*pool_, root_);
}
std::size_t VwfSnapshot::size() const {
  return pool_ ? static_cast<std::size_t>(detail::TreeOps{*pool_}.size(root_)) : 0;
}
double VwfSnapshot::eval(double x) const {
  if (!pool_) throw UsageError("empty snapshot");
  return eval_impl(*pool_, root_, x);
}
double VwfSnapshot::domain_start() const {
  if (!pool_) throw UsageError("empty snapshot");
  return detail::TreeOps{*pool_}.leftmost(root_).key();
}
double VwfSnapshot::optimal_x(double x) const {
  if (!pool_) throw UsageError("empty snapshot");
  return optimal_x_impl(*pool_, root_, lift_c_, lift_floor_, x);
}

}  // namespace l2diff
