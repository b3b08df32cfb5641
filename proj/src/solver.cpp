#include "xrm/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace xrm {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(what);
}

// In-place forms of reweight_G / update_row used by the hot loop.
void reweight_into(const double* row, Index n, double epsilon, double* G) {
  double l1 = 0.0;
  for (Index c = 0; c < n; ++c) l1 += std::abs(row[c]);
  for (Index c = 0; c < n; ++c) G[c] = l1 / (std::abs(row[c]) + epsilon);
}

double max_abs(const Eigen::Ref<const Eigen::MatrixXd>& A) { return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff(); }

// Column means of Y - E - XtP - Z/mu.
Eigen::VectorXd bias_from(const Eigen::MatrixXd& XtP, const Eigen::MatrixXd& E, const Eigen::MatrixXd& Z,
                          const Eigen::VectorXd& y, double mu) {
  const Eigen::MatrixXd residual = (-(E + XtP + Z / mu)).colwise() + y;
  return residual.colwise().mean().transpose();
}

}  // namespace

void SolverConfig::validate() const {
  require(lambda > 0.0 && std::isfinite(lambda), "lambda must be finite and > 0");
  require(components >= 1, "components must be >= 1");
  require(loss_power >= 1.0 && std::isfinite(loss_power), "loss power p must be >= 1");
  require(rho > 1.0, "rho must be > 1");
  require(epsilon > 0.0, "epsilon must be > 0");
  require(mu_init > 0.0 && mu_cap >= mu_init, "need 0 < mu_init <= mu_cap");
  require(outer_tol > 0.0 && residual_tol > 0.0, "tolerances must be > 0");
  require(outer_max_iters >= 1 && max_sweeps >= 1 && inner_max_iters >= 1, "iteration caps must be >= 1");
  require(sweep_tol >= 0.0 && inner_tol > 0.0 && general_p_tol > 0.0, "inner tolerances must be > 0");
}

nlohmann::json config_to_json(const SolverConfig& c) {
  return {
      {"lambda", c.lambda},         {"components", c.components},
      {"p", c.loss_power},          {"rho", c.rho},
      {"epsilon", c.epsilon},       {"mu_init", c.mu_init},
      {"mu_cap", c.mu_cap},         {"outer_tol", c.outer_tol},
      {"residual_tol", c.residual_tol}, {"outer_max_iters", c.outer_max_iters},
      {"max_sweeps", c.max_sweeps}, {"sweep_tol", c.sweep_tol},
      {"inner_tol", c.inner_tol},   {"inner_max_iters", c.inner_max_iters},
      {"general_p_tol", c.general_p_tol},
  };
}

SolverState SolverState::initial(const DataSet& data, const SolverConfig& config) {
  const Index M = data.feature_count();
  const Index N = data.instance_count();
  const Index C = config.components;
  SolverState s;
  s.W = Eigen::MatrixXd::Ones(M, C);
  s.b = Eigen::VectorXd::Zero(C);
  s.E = data.y().replicate(1, C);
  s.P = Eigen::MatrixXd::Zero(M, C);
  s.Q = Eigen::MatrixXd::Ones(M, C);
  s.Z = Eigen::MatrixXd::Zero(N, C);
  s.mu = config.mu_init;
  s.iteration = 0;
  return s;
}

Eigen::VectorXd reweight_G(const Eigen::Ref<const Eigen::VectorXd>& row, double epsilon) {
  Eigen::VectorXd G(row.size());
  const Eigen::VectorXd contiguous = row;
  reweight_into(contiguous.data(), row.size(), epsilon, G.data());
  return G;
}

Eigen::VectorXd update_row(const Eigen::Ref<const Eigen::VectorXd>& G, const Eigen::Ref<const Eigen::VectorXd>& P_row,
                           const Eigen::Ref<const Eigen::VectorXd>& Q_row, double mu) {
  return ((mu * P_row + Q_row).array() / (G.array() + mu)).matrix();
}

Eigen::VectorXd solve_w_row(const Eigen::Ref<const Eigen::VectorXd>& start, const Eigen::Ref<const Eigen::VectorXd>& P_row,
                            const Eigen::Ref<const Eigen::VectorXd>& Q_row, double mu, const SolverConfig& config) {
  const Index C = start.size();
  Eigen::VectorXd row = start;
  Eigen::VectorXd G(C);
  const Eigen::VectorXd target = mu * P_row + Q_row;
  for (int k = 0; k < config.inner_max_iters; ++k) {
    reweight_into(row.data(), C, config.epsilon, G.data());
    double change = 0.0;
    for (Index c = 0; c < C; ++c) {
      const double next = target(c) / (G(c) + mu);
      change = std::max(change, std::abs(next - row(c)));
      row(c) = next;
    }
    if (change < config.inner_tol) break;
  }
  return row;
}

Eigen::MatrixXd solve_w_subproblem(const SolverState& state, const SolverConfig& config) {
  Eigen::MatrixXd W(state.W.rows(), state.W.cols());
  for (Index j = 0; j < W.rows(); ++j) {
    W.row(j) = solve_w_row(state.W.row(j).transpose(), state.P.row(j).transpose(), state.Q.row(j).transpose(),
                           state.mu, config)
                   .transpose();
  }
  return W;
}

Eigen::VectorXd update_b(const SolverState& state, const DataSet& data) {
  const Eigen::MatrixXd XtP = data.X().transpose() * state.P;
  return bias_from(XtP, state.E, state.Z, data.y(), state.mu);
}

double update_e_scalar(double y, double s, double lambda_over_mu, double p, double general_p_tol) {
  if (p < 1.0) throw ConfigError("loss power p must be >= 1");
  const double a = lambda_over_mu;
  // In u = y e the problem is a (u)_+^p + (u - t)^2 / 2 with t = y s.
  const double t = y * s;
  if (t <= 0.0 || a == 0.0) return s;
  double u;
  if (p == 1.0) {
    u = std::max(t - a, 0.0);
  } else if (p == 2.0) {
    u = t / (1.0 + 2.0 * a);
  } else {
    // a p u^(p-1) + u - t is increasing on u >= 0, negative at 0 and
    // non-negative at t, so the root lies in [0, t].
    double lo = 0.0;
    double hi = t;
    while (hi - lo > general_p_tol) {
      const double mid = 0.5 * (lo + hi);
      if (a * p * std::pow(mid, p - 1.0) + mid - t > 0.0) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    u = 0.5 * (lo + hi);
    // The u < 0 branch is bounded below by its value at u -> 0.
    const double active = a * std::pow(u, p) + 0.5 * (u - t) * (u - t);
    if (0.5 * t * t < active) u = 0.0;
  }
  return y * u;
}

Eigen::MatrixXd update_E(const Eigen::MatrixXd& S, const Eigen::VectorXd& y, double lambda, double mu, double p,
                         double general_p_tol) {
  if (p < 1.0) throw ConfigError("loss power p must be >= 1");
  if (y.size() != S.rows()) throw DataError("label count does not match rows of S");
  const double a = lambda / mu;
  Eigen::MatrixXd E(S.rows(), S.cols());
  for (Index c = 0; c < S.cols(); ++c) {
    for (Index i = 0; i < S.rows(); ++i) E(i, c) = update_e_scalar(y(i), S(i, c), a, p, general_p_tol);
  }
  return E;
}

Eigen::LLT<Eigen::MatrixXd> factor_gram(const DataSet& data) {
  const Index M = data.feature_count();
  Eigen::MatrixXd K = Eigen::MatrixXd::Identity(M, M);
  K.selfadjointView<Eigen::Lower>().rankUpdate(data.X());
  Eigen::LLT<Eigen::MatrixXd> factor(K);
  if (factor.info() != Eigen::Success || !K.allFinite()) {
    throw DivergenceError(0, "Cholesky factorization of I + X X^T failed");
  }
  return factor;
}

Eigen::MatrixXd update_P(const SolverState& state, const DataSet& data, const Eigen::MatrixXd& W_new,
                         const Eigen::MatrixXd& E_new, const Eigen::VectorXd& b_new,
                         const Eigen::LLT<Eigen::MatrixXd>& K_factor) {
  if (K_factor.info() != Eigen::Success || K_factor.rows() != data.feature_count()) {
    throw DivergenceError(state.iteration, "no valid factorization of I + X X^T");
  }
  // R - E with R = Y - 1 b^T - Z / mu
  Eigen::MatrixXd slack = (-(E_new + state.Z / state.mu)).colwise() + data.y();
  slack.rowwise() -= b_new.transpose();
  const Eigen::MatrixXd rhs = W_new - state.Q / state.mu + data.X() * slack;
  return K_factor.solve(rhs);
}

MultiplierUpdate update_multipliers(const SolverState& state, const DataSet& data, const Eigen::MatrixXd& W_new,
                                    const Eigen::MatrixXd& E_new, const Eigen::MatrixXd& P_new,
                                    const Eigen::VectorXd& b_new, double rho, double mu_cap) {
  Eigen::MatrixXd fit = E_new + data.X().transpose() * P_new;
  fit.colwise() -= data.y();
  fit.rowwise() += b_new.transpose();
  MultiplierUpdate next;
  next.Z = state.Z + state.mu * fit;
  next.Q = state.Q + state.mu * (P_new - W_new);
  next.mu = std::min(rho * state.mu, mu_cap);
  return next;
}

double primal_objective(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const DataSet& data, double lambda,
                        double p) {
  return exclusivity_regularizer(W) + lambda * total_component_loss(W, b, data, p);
}

Residuals constraint_residuals(const SolverState& state, const DataSet& data) {
  Eigen::MatrixXd fit = state.E + data.X().transpose() * state.P;
  fit.colwise() -= data.y();
  fit.rowwise() += state.b.transpose();
  return Residuals{(state.P - state.W).norm(), fit.norm()};
}

TrainResult train(const DataSet& data, const SolverConfig& config) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const auto K = factor_gram(data);
  const Eigen::MatrixXd& X = data.X();
  const Eigen::VectorXd& y = data.y();

  SolverState state = SolverState::initial(data, config);
  TrainReport report;
  report.config = config;
  double previous = primal_objective(state.W, state.b, data, config.lambda, config.loss_power);

  for (int t = 0; t < config.outer_max_iters; ++t) {
    for (int sweep = 0; sweep < config.max_sweeps; ++sweep) {
      state.W = solve_w_subproblem(state, config);
      const Eigen::MatrixXd XtP = X.transpose() * state.P;
      const Eigen::VectorXd b = bias_from(XtP, state.E, state.Z, y, state.mu);
      Eigen::MatrixXd S = (-(XtP + state.Z / state.mu)).colwise() + y;
      S.rowwise() -= b.transpose();
      state.E = update_E(S, y, config.lambda, state.mu, config.loss_power, config.general_p_tol);
      Eigen::MatrixXd P = update_P(state, data, state.W, state.E, b, K);

      const double change = std::max(max_abs(P - state.P), max_abs(b - state.b));
      state.P = std::move(P);
      state.b = b;
      ++report.sweeps;
      if (change <= config.sweep_tol * (1.0 + max_abs(state.P))) break;
    }

    auto next = update_multipliers(state, data, state.W, state.E, state.P, state.b, config.rho, config.mu_cap);
    state.Z = std::move(next.Z);
    state.Q = std::move(next.Q);
    state.mu = next.mu;
    ++state.iteration;

    if (!state.W.allFinite() || !state.b.allFinite() || !state.E.allFinite() || !state.P.allFinite() ||
        !state.Q.allFinite() || !state.Z.allFinite()) {
      throw DivergenceError(state.iteration, "solver state became non-finite");
    }

    const double objective = primal_objective(state.W, state.b, data, config.lambda, config.loss_power);
    const Residuals residuals = constraint_residuals(state, data);
    report.objective_trace.push_back(objective);
    report.residual_trace.push_back(residuals);
    report.multiplier_peak = std::max({report.multiplier_peak, max_abs(state.Q), max_abs(state.Z)});

    if (std::abs(objective - previous) < config.outer_tol && residuals.max() < config.residual_tol) {
      report.converged = true;
      break;
    }
    previous = objective;
  }

  report.iterations = state.iteration;
  report.final_objective = report.objective_trace.empty() ? previous : report.objective_trace.back();
  report.diversity = diversity_report(state.W);
  EnsembleModel model(state.W, state.b, config.lambda, config.loss_power);
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return TrainResult{std::move(model), std::move(report), std::move(state)};
}

nlohmann::json report_to_json(const TrainReport& report, bool include_timing) {
  nlohmann::json residuals = nlohmann::json::array();
  for (const auto& r : report.residual_trace) residuals.push_back({r.split, r.fit});

  const auto& d = report.diversity;
  nlohmann::json relaxed = nlohmann::json::array();
  nlohmann::json exact = nlohmann::json::array();
  for (Index a = 0; a < d.pairwise_relaxed_exclusivity.rows(); ++a) {
    nlohmann::json r = nlohmann::json::array();
    nlohmann::json e = nlohmann::json::array();
    for (Index b = 0; b < d.pairwise_relaxed_exclusivity.cols(); ++b) {
      r.push_back(d.pairwise_relaxed_exclusivity(a, b));
      e.push_back(d.pairwise_exclusivity(a, b));
    }
    relaxed.push_back(std::move(r));
    exact.push_back(std::move(e));
  }

  nlohmann::json j = {
      {"config", config_to_json(report.config)},
      {"iterations", report.iterations},
      {"sweeps", report.sweeps},
      {"converged", report.converged},
      {"final_objective", report.final_objective},
      {"multiplier_peak", report.multiplier_peak},
      {"objective_trace", report.objective_trace},
      {"residual_trace", std::move(residuals)},
      {"diversity",
       {{"regularizer_value", d.regularizer_value},
        {"pairwise_relaxed_exclusivity", std::move(relaxed)},
        {"pairwise_exclusivity", std::move(exact)}}},
  };
  if (include_timing) j["wall_time"] = report.wall_time;
  return j;
}

}  // namespace xrm
