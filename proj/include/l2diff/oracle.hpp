#pragma once

#include <Eigen/Dense>

#include "l2diff/instance.hpp"

namespace l2diff {

struct QpOptions {
  VertexId max_vertices = 500;
  double kkt_tol = 1e-12;
  int max_iterations = 0;  // 0: 50 + 20 n
};

struct QpResult {
  Potential x;
  double energy = 0.0;
  int iterations = 0;
  double kkt_residual = 0.0;
};

// min_{x >= b} ½xᵀLx + Σ f_u(x_u) by projected Newton with exact piecewise
// line search. Throws NumericalError when unbounded or not converged.
QpResult qp_solve_exact(const DiffusionInstance& inst, const QpOptions& opt = {});

// Max KKT violation of x, scaled by max(1, gradient magnitude).
double kkt_residual(const DiffusionInstance& inst, const Potential& x);

Eigen::MatrixXd dense_laplacian(const Graph& g);

struct PencilBounds {
  double lambda_min;
  double lambda_max;
};

// Extreme generalized eigenvalues of (L_H, L_G) on the complement of 1.
PencilBounds pencil_bounds(const Graph& h, const Graph& g, VertexId max_vertices = 2000);

// Moore-Penrose pseudo-inverse of the Laplacian of a connected graph.
Eigen::MatrixXd laplacian_pinv(const Graph& g);

}  // namespace l2diff
