#pragma once

#include <Eigen/Dense>

#include "xrm/dataset.hpp"

// Reference solvers for tests and acceptance runs. Nothing here shares code
// with the production solver; objectives are re-derived from scratch.
namespace xrm::oracle {

struct OracleConfig {
  int max_iters = 50000;   ///< subgradient steps
  double step0 = 1.0;      ///< step size at iteration t is step0 / sqrt(t)
  double grid_lo = -10.0;
  double grid_hi = 10.0;
  double grid_step = 1e-4;
  int coordinate_sweeps = 20000;  ///< cap for the row reference
};

struct ReferenceSolution {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
  double objective = 0.0;
};

/// 1/2 sum_j (sum_c |W(j,c)|)^2 + lambda sum_{c,i} (1 - y_i (x_i . w_c + b_c))_+^p, by plain loops.
double reference_objective(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const DataSet& data, double lambda,
                           double p);

/// Projected subgradient descent with steps step0 / sqrt(t); returns the best
/// iterate seen. Iterates are kept inside a ball and box that provably contain
/// the minimizer.
ReferenceSolution reference_primal_solver(const DataSet& data, double lambda, int components, double p,
                                          const OracleConfig& config = {});

/// Exact minimizer of 1/2 ||w||^2 + lambda sum_i (1 - y_i (x_i . w + b))_+^2
/// (the single-component, squared-hinge case) by finite Newton iterations.
ReferenceSolution reference_l2svm(const DataSet& data, double lambda);

/// Grid argmin of (lambda/mu) (y e)_+^p + (e - s)^2 / 2 over [grid_lo, grid_hi].
double scalar_e_minimizer(double y, double s, double lambda_over_mu, double p, const OracleConfig& config = {});

/// 1/2 (sum_c |w(c)|)^2 + mu/2 ||P_row - w||^2 + <Q_row, P_row - w>.
double w_row_objective(const Eigen::VectorXd& w, const Eigen::VectorXd& P_row, const Eigen::VectorXd& Q_row,
                       double mu);

/// Minimizes w_row_objective by cyclic golden-section coordinate descent.
Eigen::VectorXd w_row_reference(const Eigen::VectorXd& P_row, const Eigen::VectorXd& Q_row, double mu,
                                const OracleConfig& config = {});

}  // namespace xrm::oracle
