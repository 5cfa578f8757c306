#include "l2diff/vwf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "l2diff/error.hpp"

namespace l2diff {

namespace {

constexpr double kNarrowGap = 1e-12;

double piece_value(const Piece& p, double x) { return 0.5 * p.r * x * x + p.a * x + p.b; }
double piece_slope(const Piece& p, double x) { return p.r * x + p.a; }

bool same_coefficients(const Piece& p, const Piece& q) {
  return p.r == q.r && p.a == q.a && p.b == q.b;
}

// Drops pieces whose breakpoint gap is below kNarrowGap (relative) and merges
// neighbours with identical coefficients.
std::vector<Piece> normalize(std::vector<Piece> pieces) {
  if (pieces.size() < 2) return pieces;
  std::vector<Piece> out;
  out.reserve(pieces.size());
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    Piece p = pieces[i];
    if (!out.empty()) {
      Piece& prev = out.back();
      const double gap = p.s - prev.s;
      const double scale = std::max({1.0, std::abs(prev.s), std::abs(p.s)});
      if (std::isfinite(prev.s) && gap <= kNarrowGap * scale) {
        p.s = prev.s;
        prev = p;
        continue;
      }
      if (same_coefficients(prev, p)) continue;
    }
    out.push_back(p);
  }
  return out;
}

double magnitude(std::initializer_list<double> xs) {
  double m = 1.0;
  for (double x : xs) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

Vwf::Vwf(std::vector<Piece> pieces, bool validate) : pieces_(normalize(std::move(pieces))) {
  if (pieces_.empty()) throw ValidationError("VWF needs at least one piece");
  if (validate) {
    VwfCheck chk = check_vwf(pieces_);
    if (!chk.ok) throw ValidationError("invalid VWF: " + chk.message);
  }
}

Vwf Vwf::linear(double slope, double start) {
  return Vwf({{start, 0.0, slope, 0.0}}, false);
}

std::size_t Vwf::locate(double x) const {
  if (x < pieces_.front().s || std::isnan(x)) {
    std::ostringstream msg;
    msg << "x = " << x << " lies left of the domain start " << pieces_.front().s;
    throw DomainError(msg.str());
  }
  auto it = std::upper_bound(pieces_.begin(), pieces_.end(), x,
                             [](double v, const Piece& p) { return v < p.s; });
  return static_cast<std::size_t>(it - pieces_.begin()) - 1;
}

double Vwf::eval(double x) const { return piece_value(pieces_[locate(x)], x); }
double Vwf::derivative(double x) const { return piece_slope(pieces_[locate(x)], x); }
double Vwf::curvature(double x) const { return pieces_[locate(x)].r; }

VwfCheck check_vwf(std::span<const Piece> p, bool require_nonpositive_at_zero, double tol) {
  auto fail = [](std::string m) { return VwfCheck{false, std::move(m)}; };
  if (p.empty()) return fail("no pieces");
  if (!(p[0].s <= 0.0)) return fail("domain start s_0 > 0");
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Piece& q = p[i];
    if (std::isnan(q.s) || (i > 0 && !std::isfinite(q.s)) || q.s == kInf) {
      return fail("breakpoint " + std::to_string(i) + " is not finite");
    }
    if (!std::isfinite(q.r) || !std::isfinite(q.a) || !std::isfinite(q.b)) {
      return fail("piece " + std::to_string(i) + " has non-finite coefficients");
    }
    if (q.r < 0.0) return fail("piece " + std::to_string(i) + " has negative curvature");
    if (i == 0) continue;
    const Piece& l = p[i - 1];
    if (!(q.s > l.s)) return fail("breakpoints not strictly increasing at " + std::to_string(i));
    if (q.r > l.r * (1.0 + tol) + tol * tol) {
      return fail("curvature increases at piece " + std::to_string(i));
    }
    const double x = q.s;
    const double dl = piece_slope(l, x);
    const double dr = piece_slope(q, x);
    if (std::abs(dl - dr) > tol * magnitude({l.r * x, l.a, q.r * x, q.a})) {
      return fail("derivative discontinuity at breakpoint " + std::to_string(i));
    }
    const double vl = piece_value(l, x);
    const double vr = piece_value(q, x);
    if (std::abs(vl - vr) > tol * magnitude({0.5 * l.r * x * x, l.a * x, l.b, 0.5 * q.r * x * x, q.a * x, q.b})) {
      return fail("value discontinuity at breakpoint " + std::to_string(i));
    }
  }
  if (p.back().r != 0.0) return fail("last piece is not linear");
  if (require_nonpositive_at_zero) {
    auto it = std::upper_bound(p.begin(), p.end(), 0.0, [](double v, const Piece& q) { return v < q.s; });
    const Piece& q = *(it - 1);
    if (q.b > tol * magnitude({q.b})) return fail("f(0) > 0");
  }
  return {};
}

double vwf_eval(const Vwf& f, double x) { return f.eval(x); }

Vwf vwf_add(const Vwf& f, const Vwf& g) {
  const double start = std::max(f.domain_start(), g.domain_start());
  auto fp = f.pieces();
  auto gp = g.pieces();
  std::size_t i = f.locate(start);
  std::size_t j = g.locate(start);
  std::vector<Piece> out;
  out.reserve(fp.size() + gp.size());
  double s = start;
  while (true) {
    out.push_back({s, fp[i].r + gp[j].r, fp[i].a + gp[j].a, fp[i].b + gp[j].b});
    const double nf = i + 1 < fp.size() ? fp[i + 1].s : kInf;
    const double ng = j + 1 < gp.size() ? gp[j + 1].s : kInf;
    if (nf == kInf && ng == kInf) break;
    if (nf <= ng) ++i;
    if (ng <= nf) ++j;
    s = std::min(nf, ng);
  }
  return Vwf(std::move(out), false);
}

Piece lift_piece(const Piece& p, double c) {
  const double cr = c + p.r;
  return {cr / c * p.s + p.a / c, c * p.r / cr, c * p.a / cr, p.b - p.a * p.a / (2.0 * cr)};
}

Vwf vwf_lift(const Vwf& f, double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("lift: conductance must be positive and finite");
  std::vector<Piece> out;
  out.reserve(f.size() + 1);
  const double s0 = f.domain_start();
  if (std::isfinite(s0)) {
    out.push_back({-kInf, c, -c * s0, 0.5 * c * s0 * s0 + f.eval(s0)});
  }
  for (const Piece& p : f.pieces()) {
    Piece q = lift_piece(p, c);
    if (!std::isfinite(p.s)) q.s = -kInf;
    out.push_back(q);
  }
  return Vwf(std::move(out), false);
}

double vwf_optimal_x(const Vwf& f, double c, double x) {
  if (!(c > 0.0)) throw DomainError("optimal_x: conductance must be positive");
  auto p = f.pieces();
  auto lifted_break = [&](std::size_t i) {
    return std::isfinite(p[i].s) ? p[i].s + piece_slope(p[i], p[i].s) / c : -kInf;
  };
  if (x < lifted_break(0)) return p[0].s;
  std::size_t lo = 0, hi = p.size();
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (lifted_break(mid) <= x) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double y = (c * x - p[lo].a) / (c + p[lo].r);
  y = std::max(y, p[lo].s);
  if (lo + 1 < p.size()) y = std::min(y, p[lo + 1].s);
  return y;
}

Vwf vwf_reorigin(const Vwf& f, double x0, double w) {
  const double fx0 = f.eval(x0);
  std::vector<Piece> out;
  out.reserve(f.size());
  for (const Piece& p : f.pieces()) {
    out.push_back({p.s - x0, p.r, p.r * x0 + p.a + w, piece_value(p, x0) - fx0});
  }
  return Vwf(std::move(out), false);
}

Vwf vwf_add_affine(const Vwf& f, double w, double k) {
  std::vector<Piece> out(f.pieces().begin(), f.pieces().end());
  for (Piece& p : out) {
    p.a += w;
    p.b += k;
  }
  return Vwf(std::move(out), false);
}

Vwf vwf_restrict(const Vwf& f, double lower) {
  if (lower <= f.domain_start()) return f;
  const std::size_t i = f.locate(lower);
  std::vector<Piece> out(f.pieces().begin() + static_cast<std::ptrdiff_t>(i), f.pieces().end());
  out.front().s = lower;
  return Vwf(std::move(out), false);
}

Vwf bregman_vwf(double lower, double upper) {
  if (upper >= 0.0) {
    return Vwf({{lower, 1.0, 0.0, 0.0}, {upper, 0.0, upper, -0.5 * upper * upper}}, false);
  }
  return Vwf({{lower, 1.0, -upper, 0.5 * upper * upper}, {upper, 0.0, 0.0, 0.0}}, false);
}

double bregman_eval(double lower, double upper, double x) {
  if (x < lower) throw DomainError("bregman_eval: x below the lower end");
  if (upper >= 0.0) return x < upper ? 0.5 * x * x : upper * x - 0.5 * upper * upper;
  return x < upper ? 0.5 * (x - upper) * (x - upper) : 0.0;
}

BregmanDecomposition decompose_bregman(const Vwf& f) {
  // Only curvatures and the value and slope at 0 are used, so continuity is not
  // checked: long elimination chains leave jumps far above any fixed tolerance.
  auto p = f.pieces();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p[i].r) || p[i].r < 0.0) throw ValidationError("decompose_bregman: bad curvature");
    if (i > 0 && p[i].r > p[i - 1].r * (1.0 + 1e-6) + 1e-12) {
      throw ValidationError("decompose_bregman: curvature increases at piece " + std::to_string(i));
    }
  }
  if (p.back().r != 0.0) throw ValidationError("decompose_bregman: last piece is not linear");
  BregmanDecomposition out;
  out.value_at_zero = f.eval(0.0);
  out.slope_at_zero = f.derivative(0.0);
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    const double d = p[i].r - p[i + 1].r;
    if (d > 0.0) out.pieces.push_back({d, p[0].s, p[i + 1].s});
  }
  return out;
}

double round_pow(double x, double base) {
  if (!(base > 1.0)) throw DomainError("round_pow: base must exceed 1");
  if (x == 0.0) return 0.0;
  if (x < 0.0) return -round_pow(-x, base);
  const double lb = std::log(base);
  int k = static_cast<int>(std::ceil(std::log(x) / lb));
  while (std::pow(base, k) < x) ++k;
  while (std::pow(base, k - 1) >= x) --k;
  return std::pow(base, k);
}

Vwf vwf_from_curvature(std::span<const double> breaks, std::span<const double> curvature,
                       double value_at_zero, double slope_at_zero) {
  const std::size_t k = breaks.size();
  if (k == 0 || curvature.size() != k) throw UsageError("vwf_from_curvature: size mismatch");
  std::vector<Piece> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = {breaks[i], curvature[i], 0.0, 0.0};
  // Piece containing 0 is anchored directly; the rest follow by continuity.
  std::size_t z = 0;
  while (z + 1 < k && breaks[z + 1] <= 0.0) ++z;
  out[z].a = slope_at_zero;
  out[z].b = value_at_zero;
  for (std::size_t i = z + 1; i < k; ++i) {
    const double t = out[i].s;
    const double d = piece_slope(out[i - 1], t);
    const double v = piece_value(out[i - 1], t);
    out[i].a = d - out[i].r * t;
    out[i].b = v - d * t + 0.5 * out[i].r * t * t;
  }
  for (std::size_t i = z; i-- > 0;) {
    const double t = out[i + 1].s;
    const double d = piece_slope(out[i + 1], t);
    const double v = piece_value(out[i + 1], t);
    out[i].a = d - out[i].r * t;
    out[i].b = v - d * t + 0.5 * out[i].r * t * t;
  }
  return Vwf(std::move(out), false);
}

Vwf compress_vwf(const Vwf& f, double base) {
  BregmanDecomposition dec = decompose_bregman(f);
  const double s0 = f.domain_start();
  std::vector<std::pair<double, double>> terms;
  terms.reserve(dec.pieces.size());
  for (const BregmanPiece& bp : dec.pieces) {
    const double u = round_pow(bp.upper, base);
    const double w = bp.upper == 0.0 ? bp.weight : bp.weight * bp.upper / u;
    if (u > s0) terms.emplace_back(u, w);
  }
  std::sort(terms.begin(), terms.end());
  std::vector<double> breaks{s0};
  std::vector<double> upper;
  std::vector<double> weight;
  for (const auto& [u, w] : terms) {
    if (!upper.empty() && upper.back() == u) {
      weight.back() += w;
    } else {
      upper.push_back(u);
      weight.push_back(w);
    }
  }
  // Curvature on [s0, upper_0) is the total weight, dropping by weight_i at upper_i.
  double total = 0.0;
  for (double w : weight) total += w;
  std::vector<double> curv{total};
  for (std::size_t i = 0; i < upper.size(); ++i) {
    breaks.push_back(upper[i]);
    total -= weight[i];
    curv.push_back(i + 1 == upper.size() ? 0.0 : std::max(total, 0.0));
  }
  return vwf_from_curvature(breaks, curv, dec.value_at_zero, dec.slope_at_zero);
}

ScalarMin vwf_min_scan(const Vwf& f) {
  auto p = f.pieces();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool finite_left = std::isfinite(p[i].s);
    if (finite_left && piece_slope(p[i], p[i].s) >= 0.0) return {p[i].s, piece_value(p[i], p[i].s)};
    if (i + 1 < p.size()) {
      const double right = p[i + 1].s;
      if (piece_slope(p[i], right) > 0.0) {
        double x = -p[i].a / p[i].r;
        if (finite_left) x = std::max(x, p[i].s);
        x = std::min(x, right);
        return {x, piece_value(p[i], x)};
      }
    }
  }
  throw NumericalError("VWF is unbounded below (negative tail slope)");
}

ScalarMin vwf_min_scan(const Vwf& f, double lower) { return vwf_min_scan(vwf_restrict(f, lower)); }

void write_vwf(std::ostream& out, const Vwf& f) {
  out << f.size() << '\n';
  char buf[128];
  for (const Piece& p : f.pieces()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g\n", p.s, p.r, p.a, p.b);
    out << buf;
  }
}

Vwf read_vwf(std::istream& in) {
  std::string tok;
  auto next = [&]() -> double {
    if (!(in >> tok)) throw ParseError("unexpected end of VWF block", 0);
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') throw ParseError("invalid number '" + tok + "'", 0);
    return v;
  };
  const double kd = next();
  if (kd < 1 || kd != std::floor(kd)) throw ParseError("invalid piece count", 0);
  std::vector<Piece> pieces(static_cast<std::size_t>(kd));
  for (Piece& p : pieces) {
    p.s = next();
    p.r = next();
    p.a = next();
    p.b = next();
  }
  return Vwf(std::move(pieces));
}

std::string to_string(const Vwf& f) {
  std::ostringstream ss;
  write_vwf(ss, f);
  return ss.str();
}

}  // namespace l2diff
