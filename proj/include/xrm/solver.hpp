#pragma once

#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "xrm/dataset.hpp"
#include "xrm/diversity.hpp"
#include "xrm/model.hpp"

namespace xrm {

/// Hyperparameters of the augmented Lagrangian trainer.
struct SolverConfig {
  double lambda = 2.0;       ///< loss weight
  int components = 10;       ///< ensemble size C
  double loss_power = 2.0;   ///< hinge exponent p >= 1
  double rho = 1.1;          ///< penalty growth factor, > 1
  double epsilon = 1e-10;    ///< reweighting guard in the W solver
  double mu_init = 1.0;
  double mu_cap = 1e10;
  double outer_tol = 0.05;   ///< absolute change of the primal objective
  double residual_tol = 1e-4;
  int outer_max_iters = 300;
  /// Passes over the W, b, E, P blocks per multiplier update. 1 reproduces a
  /// single Gauss-Seidel pass; larger values solve the inner problem more
  /// exactly, which is what makes the outer loop reach the global optimum.
  int max_sweeps = 50;
  double sweep_tol = 1e-5;   ///< relative max-norm change of (P, b) ending the sweeps
  double inner_tol = 1e-8;   ///< max-norm row change ending the reweighting loop
  int inner_max_iters = 10000;  // reweighting is sublinear when a coordinate is driven to 0
  double general_p_tol = 1e-10;

  /// Throws ConfigError naming the first bad field.
  void validate() const;
};

nlohmann::json config_to_json(const SolverConfig& config);

/// Iterates of the split problem: P mirrors W, E mirrors Y - X^T P - 1 b^T,
/// and Q, Z are the multipliers of those two constraints.
struct SolverState {
  Eigen::MatrixXd W;  // M x C
  Eigen::VectorXd b;  // C
  Eigen::MatrixXd E;  // N x C
  Eigen::MatrixXd P;  // M x C
  Eigen::MatrixXd Q;  // M x C
  Eigen::MatrixXd Z;  // N x C
  double mu = 1.0;
  int iteration = 0;

  /// W = 1, b = 0, P = 0, Q = 1, Z = 0, mu = mu_init, and E = Y (the value
  /// that satisfies the E constraint at P = 0, b = 0).
  static SolverState initial(const DataSet& data, const SolverConfig& config);
};

struct Residuals {
  double split = 0.0;  ///< ||P - W||_F
  double fit = 0.0;    ///< ||E - Y + X^T P + 1 b^T||_F

  double max() const noexcept { return split > fit ? split : fit; }
};

struct TrainReport {
  std::vector<double> objective_trace;
  std::vector<Residuals> residual_trace;
  int iterations = 0;
  int sweeps = 0;
  bool converged = false;
  double final_objective = 0.0;
  double multiplier_peak = 0.0;  ///< largest |Q| or |Z| entry over the run
  double wall_time = 0.0;        ///< seconds
  DiversityReport diversity;
  SolverConfig config;
};

struct TrainResult {
  EnsembleModel model;
  TrainReport report;
  SolverState state;
};

// Reweighted row solver for the W block.

/// G(c) = ||row||_1 / (|row(c)| + epsilon). A zero row gives G = 0.
Eigen::VectorXd reweight_G(const Eigen::Ref<const Eigen::VectorXd>& row, double epsilon);

/// (mu * P_row(c) + Q_row(c)) / (G(c) + mu), elementwise.
Eigen::VectorXd update_row(const Eigen::Ref<const Eigen::VectorXd>& G, const Eigen::Ref<const Eigen::VectorXd>& P_row,
                           const Eigen::Ref<const Eigen::VectorXd>& Q_row, double mu);

/// Alternates reweight_G and update_row from `start` until the max-norm
/// change drops below inner_tol or inner_max_iters is reached.
Eigen::VectorXd solve_w_row(const Eigen::Ref<const Eigen::VectorXd>& start, const Eigen::Ref<const Eigen::VectorXd>& P_row,
                            const Eigen::Ref<const Eigen::VectorXd>& Q_row, double mu, const SolverConfig& config);

/// Row-wise solve_w_row over the whole matrix, warm-started from state.W.
Eigen::MatrixXd solve_w_subproblem(const SolverState& state, const SolverConfig& config);

// Closed-form block updates.

/// Column means of Y - E - X^T P - Z / mu.
Eigen::VectorXd update_b(const SolverState& state, const DataSet& data);

/// Minimizer over e of (lambda/mu) * (y e)_+^p + (e - s)^2 / 2.
double update_e_scalar(double y, double s, double lambda_over_mu, double p, double general_p_tol = 1e-10);

/// Elementwise update_e_scalar with S of shape N x C and y of length N.
Eigen::MatrixXd update_E(const Eigen::MatrixXd& S, const Eigen::VectorXd& y, double lambda, double mu, double p,
                         double general_p_tol = 1e-10);

/// Cholesky factor of I + X X^T. Throws DivergenceError if X is not finite.
Eigen::LLT<Eigen::MatrixXd> factor_gram(const DataSet& data);

/// Solves (I + X X^T) P = W - Q/mu + X (Y - 1 b^T - Z/mu - E).
Eigen::MatrixXd update_P(const SolverState& state, const DataSet& data, const Eigen::MatrixXd& W_new,
                         const Eigen::MatrixXd& E_new, const Eigen::VectorXd& b_new,
                         const Eigen::LLT<Eigen::MatrixXd>& K_factor);

struct MultiplierUpdate {
  Eigen::MatrixXd Z;
  Eigen::MatrixXd Q;
  double mu = 0.0;
};

/// Z += mu (E - Y + X^T P + 1 b^T), Q += mu (P - W), mu = min(rho mu, mu_cap).
MultiplierUpdate update_multipliers(const SolverState& state, const DataSet& data, const Eigen::MatrixXd& W_new,
                                    const Eigen::MatrixXd& E_new, const Eigen::MatrixXd& P_new,
                                    const Eigen::VectorXd& b_new, double rho, double mu_cap);

/// Regularizer plus lambda times the summed component hinge loss.
double primal_objective(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const DataSet& data, double lambda,
                        double p);

Residuals constraint_residuals(const SolverState& state, const DataSet& data);

/// Runs the augmented Lagrangian loop to convergence and returns the
/// averaged ensemble together with the full iteration report.
TrainResult train(const DataSet& data, const SolverConfig& config);

nlohmann::json report_to_json(const TrainReport& report, bool include_timing = true);

}  // namespace xrm
