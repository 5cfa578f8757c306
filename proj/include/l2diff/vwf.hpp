#pragma once

#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace l2diff {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// One piece of a VWF in global form: f(x) = r/2 x^2 + a x + b for x in [s, next s).
struct Piece {
  double s;
  double r;
  double a;
  double b;
};

// Convex piecewise-quadratic function on [s_0, inf) with a concave continuous
// derivative and a linear tail. s_0 may be -inf (lifted functions).
class Vwf {
 public:
  Vwf() : pieces_{{0.0, 0.0, 0.0, 0.0}} {}
  explicit Vwf(std::vector<Piece> pieces, bool validate = true);

  static Vwf linear(double slope, double start = 0.0);
  static Vwf zero(double start = 0.0) { return linear(0.0, start); }

  std::size_t size() const noexcept { return pieces_.size(); }
  std::span<const Piece> pieces() const noexcept { return pieces_; }
  const Piece& piece(std::size_t i) const { return pieces_[i]; }
  double domain_start() const noexcept { return pieces_.front().s; }
  double tail_slope() const noexcept { return pieces_.back().a; }

  // Index of the piece containing x (x >= domain_start()).
  std::size_t locate(double x) const;
  double eval(double x) const;
  // Right derivative; the derivative is continuous so this is f'(x).
  double derivative(double x) const;
  double curvature(double x) const;

 private:
  std::vector<Piece> pieces_;
};

struct VwfCheck {
  bool ok = true;
  std::string message;
};

// Checks every structural invariant. Continuity is tested with relative
// tolerance `tol`; f(0) <= 0 only when `require_nonpositive_at_zero`.
VwfCheck check_vwf(std::span<const Piece> pieces, bool require_nonpositive_at_zero = false,
                   double tol = 1e-9);

double vwf_eval(const Vwf& f, double x);
Vwf vwf_add(const Vwf& f, const Vwf& g);
Vwf vwf_lift(const Vwf& f, double c);
double vwf_optimal_x(const Vwf& f, double c, double x);

// The operator P_c on a single global-form piece.
Piece lift_piece(const Piece& p, double c);

// g(y) = w*y + f(x0 + y) - f(x0), on [s_0 - x0, inf).
Vwf vwf_reorigin(const Vwf& f, double x0, double w);
// f + w*x + k.
Vwf vwf_add_affine(const Vwf& f, double w, double k);
// f restricted to [max(lower, s_0), inf).
Vwf vwf_restrict(const Vwf& f, double lower);

struct BregmanPiece {
  double weight;
  double lower;
  double upper;
};

// B_{l,u} as a two-piece VWF on [l, inf).
Vwf bregman_vwf(double lower, double upper);
double bregman_eval(double lower, double upper, double x);

struct BregmanDecomposition {
  double value_at_zero = 0.0;
  double slope_at_zero = 0.0;
  std::vector<BregmanPiece> pieces;
};

BregmanDecomposition decompose_bregman(const Vwf& f);

double round_pow(double x, double base = 1.1);
Vwf compress_vwf(const Vwf& f, double base = 1.1);

// Builds a VWF on [start, inf) from its curvature profile: `curvature[i]` holds on
// [breaks[i], breaks[i+1]) with breaks[0] = start, anchored by f(0) and f'(0).
Vwf vwf_from_curvature(std::span<const double> breaks, std::span<const double> curvature,
                       double value_at_zero, double slope_at_zero);

struct ScalarMin {
  double x;
  double value;
};

// Exact minimizer over the domain. Throws NumericalError when unbounded below.
ScalarMin vwf_min_scan(const Vwf& f);
// Minimizer over [max(lower, s_0), inf).
ScalarMin vwf_min_scan(const Vwf& f, double lower);

// Debug text block: "k" then "s r a b" per piece.
void write_vwf(std::ostream& out, const Vwf& f);
Vwf read_vwf(std::istream& in);
std::string to_string(const Vwf& f);

}  // namespace l2diff
