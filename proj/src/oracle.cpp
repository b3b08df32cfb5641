#include "xrm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace xrm::oracle {

namespace {

double hinge_term(double slack, double p) { return slack > 0.0 ? std::pow(slack, p) : 0.0; }

// Golden-section search for the minimizer of a convex f on [lo, hi].
template <typename F>
double golden_section(F&& f, double lo, double hi, double width) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > width) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double reference_objective(const Eigen::MatrixXd& W, const Eigen::VectorXd& b, const DataSet& data, double lambda,
                           double p) {
  const auto& X = data.X();
  const auto& y = data.y();
  double regularizer = 0.0;
  for (Index j = 0; j < W.rows(); ++j) {
    double row_l1 = 0.0;
    for (Index c = 0; c < W.cols(); ++c) row_l1 += std::abs(W(j, c));
    regularizer += row_l1 * row_l1;
  }
  double loss = 0.0;
  for (Index c = 0; c < W.cols(); ++c) {
    for (Index i = 0; i < X.cols(); ++i) {
      double score = b(c);
      for (Index j = 0; j < X.rows(); ++j) score += X(j, i) * W(j, c);
      loss += hinge_term(1.0 - y(i) * score, p);
    }
  }
  return 0.5 * regularizer + lambda * loss;
}

ReferenceSolution reference_primal_solver(const DataSet& data, double lambda, int components, double p,
                                          const OracleConfig& config) {
  const auto& X = data.X();
  const auto& y = data.y();
  const Index M = X.rows();
  const Index N = X.cols();
  const Index C = components;

  // Psi(W*) <= objective(0, 0) = lambda C N, and 1/2 ||W||_F^2 <= Psi(W).
  const double weight_radius = std::sqrt(2.0 * lambda * static_cast<double>(C * N));
  const double bias_bound = 1.0 + X.colwise().norm().maxCoeff() * weight_radius;

  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(M, C);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(C);
  ReferenceSolution best{W, b, reference_objective(W, b, data, lambda, p)};

  Eigen::MatrixXd gW(M, C);
  Eigen::VectorXd gb(C);
  for (int t = 1; t <= config.max_iters; ++t) {
    for (Index j = 0; j < M; ++j) {
      const double row_l1 = W.row(j).cwiseAbs().sum();
      for (Index c = 0; c < C; ++c) {
        gW(j, c) = W(j, c) > 0.0 ? row_l1 : W(j, c) < 0.0 ? -row_l1 : 0.0;
      }
    }
    gb.setZero();
    for (Index c = 0; c < C; ++c) {
      for (Index i = 0; i < N; ++i) {
        const double slack = 1.0 - y(i) * (X.col(i).dot(W.col(c)) + b(c));
        if (slack <= 0.0) continue;  // zero element of the subdifferential at the kink
        const double weight = -lambda * y(i) * (p == 1.0 ? 1.0 : p * std::pow(slack, p - 1.0));
        gW.col(c) += weight * X.col(i);
        gb(c) += weight;
      }
    }
    if (gW.squaredNorm() + gb.squaredNorm() == 0.0) break;

    const double step = config.step0 / std::sqrt(static_cast<double>(t));
    W -= step * gW;
    b -= step * gb;
    const double norm = W.norm();
    if (norm > weight_radius) W *= weight_radius / norm;
    b = b.cwiseMax(-bias_bound).cwiseMin(bias_bound);

    const double objective = reference_objective(W, b, data, lambda, p);
    if (objective < best.objective) best = ReferenceSolution{W, b, objective};
  }
  return best;
}

ReferenceSolution reference_l2svm(const DataSet& data, double lambda) {
  const auto& X = data.X();
  const auto& y = data.y();
  const Index M = X.rows();
  const Index N = X.cols();
  // z = [w; b]; rows of A are y_i [x_i; 1].
  Eigen::MatrixXd A(N, M + 1);
  A.leftCols(M) = X.transpose();
  A.col(M).setOnes();
  A = y.asDiagonal() * A;

  auto objective = [&](const Eigen::VectorXd& z) {
    const Eigen::ArrayXd slack = (1.0 - (A * z).array()).max(0.0);
    return 0.5 * z.head(M).squaredNorm() + lambda * slack.square().sum();
  };

  Eigen::VectorXd z = Eigen::VectorXd::Zero(M + 1);
  double f = objective(z);
  for (int iter = 0; iter < 200; ++iter) {
    const Eigen::ArrayXd slack = 1.0 - (A * z).array();
    const Eigen::ArrayXd active = (slack > 0.0).cast<double>();
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(M + 1);
    grad.head(M) = z.head(M);
    grad -= 2.0 * lambda * A.transpose() * (active * slack).matrix();
    if (grad.lpNorm<Eigen::Infinity>() < 1e-13 * (1.0 + f)) break;

    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(M + 1, M + 1);
    H.topLeftCorner(M, M).setIdentity();
    H += 2.0 * lambda * A.transpose() * active.matrix().asDiagonal() * A;
    H(M, M) += 1e-12;  // the bias is unregularized; keep H invertible when no instance is active
    const Eigen::VectorXd direction = -H.ldlt().solve(grad);

    double step = 1.0;
    double next_f = objective(z + direction);
    while (next_f > f + 1e-4 * step * grad.dot(direction) && step > 1e-20) {
      step *= 0.5;
      next_f = objective(z + step * direction);
    }
    if (next_f >= f) break;
    z += step * direction;
    f = next_f;
  }

  ReferenceSolution solution;
  solution.W = z.head(M);
  solution.b = z.tail(1);
  solution.objective = reference_objective(solution.W, solution.b, data, lambda, 2.0);
  return solution;
}

double scalar_e_minimizer(double y, double s, double lambda_over_mu, double p, const OracleConfig& config) {
  const auto steps = static_cast<long long>(std::floor((config.grid_hi - config.grid_lo) / config.grid_step + 1e-9));
  double best_e = config.grid_lo;
  double best_value = std::numeric_limits<double>::infinity();
  for (long long k = 0; k <= steps; ++k) {
    const double e = config.grid_lo + static_cast<double>(k) * config.grid_step;
    const double active = y * e > 0.0 ? std::pow(y * e, p) : 0.0;
    const double value = lambda_over_mu * active + 0.5 * (e - s) * (e - s);
    if (value < best_value) {
      best_value = value;
      best_e = e;
    }
  }
  return best_e;
}

double w_row_objective(const Eigen::VectorXd& w, const Eigen::VectorXd& P_row, const Eigen::VectorXd& Q_row,
                       double mu) {
  double l1 = 0.0;
  for (Index c = 0; c < w.size(); ++c) l1 += std::abs(w(c));
  const Eigen::VectorXd gap = P_row - w;
  return 0.5 * l1 * l1 + 0.5 * mu * gap.squaredNorm() + Q_row.dot(gap);
}

Eigen::VectorXd w_row_reference(const Eigen::VectorXd& P_row, const Eigen::VectorXd& Q_row, double mu,
                                const OracleConfig& config) {
  const Index C = P_row.size();
  // Each coordinate minimizer lies between 0 and P + Q/mu.
  const double bound = (P_row + Q_row / mu).cwiseAbs().maxCoeff() + 1.0;
  const double width = 1e-14 * bound;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(C);
  double value = w_row_objective(w, P_row, Q_row, mu);
  for (int sweep = 0; sweep < config.coordinate_sweeps; ++sweep) {
    for (Index c = 0; c < C; ++c) {
      Eigen::VectorXd trial = w;
      auto along = [&](double x) {
        trial(c) = x;
        return w_row_objective(trial, P_row, Q_row, mu);
      };
      const double x = golden_section(along, -bound, bound, width);
      if (along(x) <= along(w(c))) w(c) = x;
    }
    const double next = w_row_objective(w, P_row, Q_row, mu);
    const bool stalled = value - next <= 1e-16 * (1.0 + std::abs(value));
    value = next;
    if (stalled) break;
  }
  return w;
}

}  // namespace xrm::oracle
