#include "l2diff/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include "l2diff/error.hpp"

namespace l2diff {

namespace {

struct Grad {
  Vector g;
  double scale;
};

Grad gradient(const DiffusionInstance& inst, const Potential& x) {
  const Potential lx = laplacian_apply(inst.graph(), x);
  Grad out{lx, 1.0};
  for (VertexId u = 0; u < inst.vertex_count(); ++u) {
    const double fd = inst.vwf(u).derivative(x[u]);
    out.g[u] += fd;
    out.scale = std::max({out.scale, std::abs(lx[u]), std::abs(fd)});
  }
  return out;
}

double residual_of(const DiffusionInstance& inst, const Potential& x, const Vector& g) {
  double res = 0.0;
  for (VertexId u = 0; u < inst.vertex_count(); ++u) {
    res = std::max(res, x[u] <= inst.lower(u) ? std::max(0.0, -g[u]) : std::abs(g[u]));
  }
  return res;
}

// Exact minimization of t -> F(x + t d) over [0, tmax].
double line_search(const DiffusionInstance& inst, const Potential& x, const Vector& d, double tmax) {
  const Graph& g = inst.graph();
  const Potential lx = laplacian_apply(g, x);
  const Potential ld = laplacian_apply(g, d);
  double A = d.dot(lx);
  double B = d.dot(ld);
  const VertexId n = inst.vertex_count();
  std::vector<std::size_t> piece(static_cast<std::size_t>(n), 0);
  using Event = std::pair<double, VertexId>;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;

  auto push_next = [&](VertexId u) {
    const auto p = inst.vwf(u).pieces();
    const std::size_t i = piece[u];
    if (d[u] > 0.0 && i + 1 < p.size()) {
      events.push({(p[i + 1].s - x[u]) / d[u], u});
    } else if (d[u] < 0.0 && i > 0) {
      events.push({(p[i].s - x[u]) / d[u], u});
    }
  };
  auto contribution = [&](VertexId u, double& ca, double& cb) {
    const Piece& p = inst.vwf(u).piece(piece[u]);
    ca = d[u] * (p.r * x[u] + p.a);
    cb = d[u] * d[u] * p.r;
  };

  for (VertexId u = 0; u < n; ++u) {
    if (d[u] == 0.0) continue;
    const Vwf& f = inst.vwf(u);
    std::size_t i = f.locate(x[u]);
    if (d[u] < 0.0 && i > 0 && x[u] == f.piece(i).s) --i;
    piece[u] = i;
    double ca, cb;
    contribution(u, ca, cb);
    A += ca;
    B += cb;
    push_next(u);
  }

  double t = 0.0;
  while (true) {
    const double slope = A + B * t;
    if (slope >= 0.0) return t;
    const double next = events.empty() ? kInf : std::min(events.top().first, tmax);
    const double limit = std::min(next, tmax);
    if (B > 0.0) {
      const double root = -A / B;
      if (root <= limit) return std::max(root, t);
    }
    if (limit == kInf) throw NumericalError("objective unbounded below along a feasible ray");
    if (limit >= tmax) return tmax;
    t = std::max(t, next);
    while (!events.empty() && events.top().first <= t) {
      const VertexId u = events.top().second;
      events.pop();
      double ca, cb;
      contribution(u, ca, cb);
      A -= ca;
      B -= cb;
      piece[u] = d[u] > 0.0 ? piece[u] + 1 : piece[u] - 1;
      contribution(u, ca, cb);
      A += ca;
      B += cb;
      push_next(u);
    }
  }
}

}  // namespace

Eigen::MatrixXd dense_laplacian(const Graph& g) {
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(g.vertex_count(), g.vertex_count());
  for (const Edge& e : g.edges()) {
    L(e.u, e.u) += e.conductance;
    L(e.v, e.v) += e.conductance;
    L(e.u, e.v) -= e.conductance;
    L(e.v, e.u) -= e.conductance;
  }
  return L;
}

double kkt_residual(const DiffusionInstance& inst, const Potential& x) {
  const Potential y = clamp_feasible(inst, x);
  Grad gr = gradient(inst, y);
  return residual_of(inst, y, gr.g) / gr.scale;
}

QpResult qp_solve_exact(const DiffusionInstance& inst, const QpOptions& opt) {
  const VertexId n = inst.vertex_count();
  if (n > opt.max_vertices) {
    throw UsageError("qp_solve_exact: " + std::to_string(n) + " vertices exceed the cap " +
                     std::to_string(opt.max_vertices));
  }
  check_bounded(inst);
  const Eigen::MatrixXd L = dense_laplacian(inst.graph());
  Potential x = Potential::Zero(n);
  for (VertexId u = 0; u < n; ++u) x[u] = std::max(0.0, inst.lower(u));
  const int cap = opt.max_iterations > 0 ? opt.max_iterations : 50 + 20 * n;

  QpResult out;
  int stalls = 0;
  for (out.iterations = 0; out.iterations < cap; ++out.iterations) {
    Grad gr = gradient(inst, x);
    const double res = residual_of(inst, x, gr.g);
    if (res <= opt.kkt_tol * gr.scale) break;

    std::vector<char> active(static_cast<std::size_t>(n), 0);
    for (VertexId u = 0; u < n; ++u) active[u] = x[u] <= inst.lower(u) && gr.g[u] >= 0.0;

    Vector d = Vector::Zero(n);
    for (int guard = 0; guard <= n; ++guard) {
      std::vector<VertexId> free;
      for (VertexId u = 0; u < n; ++u) {
        if (!active[u]) free.push_back(u);
      }
      const auto k = static_cast<Eigen::Index>(free.size());
      d.setZero();
      if (k == 0) break;
      Eigen::MatrixXd M(k, k);
      Vector rhs(k);
      for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) M(i, j) = L(free[i], free[j]);
        const VertexId u = free[i];
        const Vwf& f = inst.vwf(u);
        std::size_t pi = f.locate(x[u]);
        if (gr.g[u] > 0.0 && pi > 0 && x[u] == f.piece(pi).s) --pi;
        M(i, i) += f.piece(pi).r;
        rhs[i] = -gr.g[u];
      }
      Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
      Vector sol = ldlt.solve(rhs);
      if (!sol.allFinite() || (M * sol - rhs).norm() > 1e-9 * std::max(1.0, rhs.norm())) {
        sol = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(M).solve(rhs);
      }
      if (!sol.allFinite() || sol.dot(rhs) <= 0.0) sol = rhs;
      for (Eigen::Index i = 0; i < k; ++i) d[free[i]] = sol[i];
      bool blocked = false;
      for (Eigen::Index i = 0; i < k; ++i) {
        const VertexId u = free[i];
        if (x[u] <= inst.lower(u) && d[u] < 0.0) {
          active[u] = 1;
          blocked = true;
        }
      }
      if (!blocked) break;
    }
    if (d.isZero()) {
      // Every free direction is blocked: fall back to projected steepest descent.
      for (VertexId u = 0; u < n; ++u) d[u] = (x[u] <= inst.lower(u) && gr.g[u] > 0.0) ? 0.0 : -gr.g[u];
    }

    double tmax = kInf;
    for (VertexId u = 0; u < n; ++u) {
      if (d[u] < 0.0) tmax = std::min(tmax, (inst.lower(u) - x[u]) / d[u]);
    }
    tmax = std::max(tmax, 0.0);
    const double t = line_search(inst, x, d, tmax);
    if (t == 0.0) {
      if (++stalls > 3) break;
    } else {
      stalls = 0;
    }
    for (VertexId u = 0; u < n; ++u) {
      x[u] += t * d[u];
      if (x[u] < inst.lower(u) || (t == tmax && d[u] < 0.0 &&
                                   std::abs(x[u] - inst.lower(u)) <= 1e-14 * std::max(1.0, std::abs(x[u])))) {
        x[u] = inst.lower(u);
      }
    }
  }
  out.x = x;
  out.energy = energy_value(inst, x);
  out.kkt_residual = kkt_residual(inst, x);
  if (!(out.kkt_residual <= 1e-9)) {
    std::ostringstream msg;
    msg << "qp_solve_exact did not converge: KKT residual " << out.kkt_residual << " after " << out.iterations
        << " iterations";
    throw NumericalError(msg.str());
  }
  return out;
}

PencilBounds pencil_bounds(const Graph& h, const Graph& g, VertexId max_vertices) {
  const VertexId n = g.vertex_count();
  if (h.vertex_count() != n) throw UsageError("pencil_bounds: vertex sets differ");
  if (n > max_vertices) throw UsageError("pencil_bounds: graph exceeds the dense cap");
  if (n <= 1) return {1.0, 1.0};
  // Householder reflection P mapping 1 to a multiple of e_0; P L P restricted to
  // rows/cols 1.. is L on the complement of 1.
  Vector w = Vector::Ones(n);
  w[0] -= std::sqrt(static_cast<double>(n));
  const double gamma = 2.0 / w.squaredNorm();
  auto reduce = [&](const Graph& gr) {
    Eigen::MatrixXd L = dense_laplacian(gr);
    const Vector lw = L * w;
    const double wlw = w.dot(lw);
    L -= gamma * (w * lw.transpose() + lw * w.transpose());
    L += gamma * gamma * wlw * (w * w.transpose());
    return Eigen::MatrixXd(L.bottomRightCorner(n - 1, n - 1));
  };
  const Eigen::MatrixXd A = reduce(h);
  const Eigen::MatrixXd B = reduce(g);
  Eigen::LLT<Eigen::MatrixXd> llt(B);
  if (llt.info() != Eigen::Success) throw NumericalError("pencil_bounds: L_G is singular on the complement of 1");
  Eigen::MatrixXd C = llt.matrixL().solve(A);
  C = llt.matrixL().solve(C.transpose()).transpose();
  C = 0.5 * (C + C.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("pencil_bounds: eigen solver failed");
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

Eigen::MatrixXd laplacian_pinv(const Graph& g) {
  const VertexId n = g.vertex_count();
  Eigen::MatrixXd L = dense_laplacian(g);
  L.array() += 1.0 / n;
  Eigen::LLT<Eigen::MatrixXd> llt(L);
  if (llt.info() != Eigen::Success) throw NumericalError("laplacian_pinv: graph is not connected");
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  inv.array() -= 1.0 / n;
  return inv;
}

}  // namespace l2diff
