#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "xrm/oracle.hpp"
#include "xrm/solver.hpp"

using namespace xrm;

namespace {

// Random state with the shapes train() would use on `data`.
SolverState random_state(CounterRng& rng, const DataSet& data, Index C) {
  const Index M = data.feature_count();
  const Index N = data.instance_count();
  SolverState s;
  s.W = testing::random_matrix(rng, M, C);
  s.b = testing::random_vector(rng, C);
  s.E = testing::random_matrix(rng, N, C);
  s.P = testing::random_matrix(rng, M, C);
  s.Q = testing::random_matrix(rng, M, C);
  s.Z = testing::random_matrix(rng, N, C);
  s.mu = 0.5 + 2.0 * rng.uniform();
  return s;
}

// <A, B> + mu/2 ||B||^2
double phi(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double mu) {
  return (A.array() * B.array()).sum() + 0.5 * mu * B.squaredNorm();
}

// E - Y + X^T P + 1 b^T, written out with loops.
Eigen::MatrixXd fit_residual(const DataSet& d, const Eigen::MatrixXd& E, const Eigen::MatrixXd& P,
                             const Eigen::VectorXd& b) {
  Eigen::MatrixXd R(E.rows(), E.cols());
  for (Index i = 0; i < E.rows(); ++i) {
    for (Index c = 0; c < E.cols(); ++c) {
      double xp = 0.0;
      for (Index j = 0; j < P.rows(); ++j) xp += d.X()(j, i) * P(j, c);
      R(i, c) = E(i, c) - d.y()(i) + xp + b(c);
    }
  }
  return R;
}

}  // namespace

TEST_CASE("reweighting weights") {
  const Eigen::VectorXd a = reweight_G(Eigen::Vector2d(1, -1), 1e-12);
  CHECK(a(0) == doctest::Approx(2.0));
  CHECK(a(1) == doctest::Approx(2.0));
  const Eigen::VectorXd b = reweight_G(Eigen::Vector2d(3, 0), 1e-10);
  CHECK(b(0) == doctest::Approx(1.0));
  CHECK(b(1) == doctest::Approx(3e10));
  CHECK(reweight_G(Eigen::Vector2d(0, 0), 1e-10) == Eigen::Vector2d(0, 0));
}

TEST_CASE("row update") {
  CHECK(update_row(Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 1), Eigen::Vector2d(0, 0), 1.0) ==
        Eigen::Vector2d(0.5, 0.5));
  CHECK(update_row(Eigen::Vector2d(1, 2), Eigen::Vector2d(0, 0), Eigen::Vector2d(3, 0), 2.0) ==
        Eigen::Vector2d(1, 0));
  const Eigen::Vector2d P(0.7, -1.2), Q(0.4, 2.0);
  CHECK(update_row(Eigen::Vector2d::Zero(), P, Q, 4.0).isApprox(P + Q / 4.0));
}

TEST_CASE("W subproblem examples") {
  const SolverConfig config;
  SolverState s;
  s.W = Eigen::MatrixXd::Ones(1, 2);
  s.P = Eigen::MatrixXd::Ones(1, 2);
  s.Q = Eigen::MatrixXd::Zero(1, 2);
  s.mu = 1.0;
  const Eigen::VectorXd w = solve_w_subproblem(s, config).row(0).transpose();
  const Eigen::VectorXd ref = oracle::w_row_reference(Eigen::Vector2d(1, 1), Eigen::Vector2d(0, 0), 1.0);
  CHECK((w - ref).cwiseAbs().maxCoeff() < 1e-6);

  s.P = Eigen::MatrixXd::Zero(1, 2);
  CHECK(solve_w_subproblem(s, config).cwiseAbs().maxCoeff() < 1e-8);

  CounterRng rng(40);
  s.W = Eigen::MatrixXd::Ones(3, 4);
  s.P = testing::random_matrix(rng, 3, 4);
  s.Q = testing::random_matrix(rng, 3, 4);
  s.mu = 1e8;
  CHECK((solve_w_subproblem(s, config) - (s.P + s.Q / s.mu)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("W rows reach the coordinate-descent optimum") {
  CounterRng rng(41);
  const SolverConfig config;
  for (int k = 0; k < 100; ++k) {
    const Index C = 1 + static_cast<Index>(rng.below(5));
    const Eigen::VectorXd P = 2.0 * testing::random_vector(rng, C);
    const Eigen::VectorXd Q = 2.0 * testing::random_vector(rng, C);
    const double mu = k % 4 == 0 ? 1.0 : std::exp(4.0 * rng.uniform() - 1.0);
    const Eigen::VectorXd w = solve_w_row(Eigen::VectorXd::Ones(C), P, Q, mu, config);
    const Eigen::VectorXd ref = oracle::w_row_reference(P, Q, mu);
    CHECK(oracle::w_row_objective(w, P, Q, mu) <= oracle::w_row_objective(ref, P, Q, mu) + 1e-6);
  }
}

TEST_CASE("bias update is the column mean") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(1, 2);
  const DataSet d(X, Eigen::Vector2d(1, 1));
  SolverState s;
  s.P = Eigen::MatrixXd::Zero(1, 1);
  s.E = Eigen::Vector2d(0, -2);  // Y - E = [1, 3]
  s.Z = Eigen::MatrixXd::Zero(2, 1);
  s.mu = 1.0;
  CHECK(update_b(s, d)(0) == doctest::Approx(2.0));
  s.E = Eigen::Vector2d(1, 1);
  CHECK(update_b(s, d)(0) == doctest::Approx(0.0));
}

TEST_CASE("bias update zeroes the gradient of the fit penalty") {
  CounterRng rng(42);
  for (int k = 0; k < 20; ++k) {
    const DataSet d = make_synthetic(12, 3, rng.next());
    const SolverState s = random_state(rng, d, 3);
    const Eigen::VectorXd b = update_b(s, d);
    const double h = 1e-6;
    for (Index c = 0; c < 3; ++c) {
      Eigen::VectorXd up = b, down = b;
      up(c) += h;
      down(c) -= h;
      const double grad = (phi(s.Z, fit_residual(d, s.E, s.P, up), s.mu) -
                           phi(s.Z, fit_residual(d, s.E, s.P, down), s.mu)) /
                          (2.0 * h);
      CHECK(std::abs(grad) < 1e-5);
    }
  }
}

TEST_CASE("scalar E update examples") {
  CHECK(update_e_scalar(1, 2, 0.5, 1) == doctest::Approx(1.5));
  CHECK(update_e_scalar(1, 0.3, 0.5, 1) == doctest::Approx(0.0));
  CHECK(update_e_scalar(-1, 0.3, 0.5, 1) == doctest::Approx(0.3));
  CHECK(update_e_scalar(-1, -2, 0.5, 1) == doctest::Approx(-1.5));
  CHECK(update_e_scalar(1, 2, 0.5, 2) == doctest::Approx(1.0));
  CHECK(update_e_scalar(1, 2, 1.0, 1.5) == doctest::Approx(0.72).epsilon(0.01));
  CHECK(std::abs(update_e_scalar(1, 2, 1.0, 1.5) - oracle::scalar_e_minimizer(1, 2, 1.0, 1.5)) <= 1e-4);
  CHECK_THROWS_AS(update_e_scalar(1, 2, 0.5, 0.5), ConfigError);
}

TEST_CASE("E update leaves S alone when the loss weight vanishes") {
  CounterRng rng(43);
  const Eigen::MatrixXd S = testing::random_matrix(rng, 6, 3);
  const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(6, -1, 1).array().sign();
  for (double p : {1.0, 1.5, 2.0, 3.0}) CHECK(update_E(S, y, 0.0, 1.0, p).isApprox(S));
  CHECK_THROWS_AS(update_E(S, y, 1.0, 1.0, 0.9), ConfigError);
  CHECK_THROWS_AS(update_E(S, Eigen::Vector2d(1, -1), 1.0, 1.0, 2.0), DataError);
}

TEST_CASE("E update matches the grid minimizer") {
  CounterRng rng(44);
  const double powers[] = {1.0, 1.5, 2.0};
  for (int k = 0; k < 1000; ++k) {
    const double y = rng.below(2) ? 1.0 : -1.0;
    const double s = 8.0 * rng.uniform() - 4.0;
    const double a = std::exp(5.0 * rng.uniform() - 3.0);
    const double p = powers[k % 3];
    const double e = update_e_scalar(y, s, a, p);
    CHECK(std::abs(e - oracle::scalar_e_minimizer(y, s, a, p)) <= 1e-4);
  }
}

TEST_CASE("P update with X = 0 reduces to W - Q/mu") {
  const DataSet d(Eigen::MatrixXd::Zero(3, 4), Eigen::Vector4d(1, -1, 1, -1));
  CounterRng rng(45);
  const SolverState s = random_state(rng, d, 2);
  const Eigen::MatrixXd P = update_P(s, d, s.W, s.E, s.b, factor_gram(d));
  CHECK((P - (s.W - s.Q / s.mu)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("P update solves the normal equations") {
  CounterRng rng(46);
  for (int k = 0; k < 20; ++k) {
    const DataSet d = make_synthetic(10, 4, rng.next());
    const SolverState s = random_state(rng, d, 3);
    const Eigen::MatrixXd P = update_P(s, d, s.W, s.E, s.b, factor_gram(d));

    // Independent route: assemble I + X X^T and the right-hand side by loops, solve with LU.
    const Index M = d.feature_count(), N = d.instance_count();
    Eigen::MatrixXd K = Eigen::MatrixXd::Identity(M, M);
    for (Index a = 0; a < M; ++a)
      for (Index c = 0; c < M; ++c)
        for (Index i = 0; i < N; ++i) K(a, c) += d.X()(a, i) * d.X()(c, i);
    Eigen::MatrixXd rhs = s.W - s.Q / s.mu;
    for (Index j = 0; j < M; ++j)
      for (Index c = 0; c < 3; ++c)
        for (Index i = 0; i < N; ++i)
          rhs(j, c) += d.X()(j, i) * (d.y()(i) - s.b(c) - s.Z(i, c) / s.mu - s.E(i, c));
    const Eigen::MatrixXd expected = K.fullPivLu().solve(rhs);
    CHECK((P - expected).cwiseAbs().maxCoeff() < 1e-8);

    // First-order optimality of phi(Q, P - W) + phi(Z, E - Y + X^T P + 1 b^T) by central differences.
    auto objective = [&](const Eigen::MatrixXd& Pt) {
      return phi(s.Q, Pt - s.W, s.mu) + phi(s.Z, fit_residual(d, s.E, Pt, s.b), s.mu);
    };
    double worst = 0.0;
    const double h = 1e-5;
    for (Index i = 0; i < P.size(); ++i) {
      Eigen::MatrixXd up = P, down = P;
      up.data()[i] += h;
      down.data()[i] -= h;
      worst = std::max(worst, std::abs(objective(up) - objective(down)) / (2.0 * h));
    }
    CHECK(worst < 1e-6 * (1.0 + std::abs(objective(P))));
  }
}

TEST_CASE("gram factorization rejects overflow") {
  const DataSet d(Eigen::MatrixXd::Constant(2, 3, 1e200), Eigen::Vector3d(1, -1, 1));
  CHECK_THROWS_AS(factor_gram(d), DivergenceError);
  SolverConfig config;
  CHECK_THROWS_AS(train(d, config), DivergenceError);
}

TEST_CASE("multiplier updates") {
  const DataSet d(Eigen::MatrixXd::Zero(2, 3), Eigen::Vector3d(1, -1, 1));
  SolverState s;
  s.W = Eigen::MatrixXd::Ones(2, 2);
  s.P = s.W;
  s.b = Eigen::VectorXd::Zero(2);
  s.E = d.y().replicate(1, 2);  // feasible: E = Y - X^T P - 1 b^T
  s.Q = Eigen::MatrixXd::Constant(2, 2, 0.25);
  s.Z = Eigen::MatrixXd::Constant(3, 2, -0.5);
  s.mu = 1.0;
  MultiplierUpdate next = update_multipliers(s, d, s.W, s.E, s.P, s.b, 1.1, 1e10);
  CHECK(next.Z == s.Z);
  CHECK(next.Q == s.Q);
  CHECK(next.mu == doctest::Approx(1.1));

  s.mu = 2.0;
  const Eigen::MatrixXd E_off = s.E.array() + 1.0;
  const Eigen::MatrixXd P_off = s.W.array() + 1.0;
  next = update_multipliers(s, d, s.W, E_off, P_off, s.b, 1.1, 1e10);
  CHECK(next.Z.isApprox((s.Z.array() + 2.0).matrix()));
  CHECK(next.Q.isApprox((s.Q.array() + 2.0).matrix()));

  s.mu = 9.5e9;
  CHECK(update_multipliers(s, d, s.W, s.E, s.P, s.b, 1.1, 1e10).mu == 1e10);
}

TEST_CASE("primal objective examples") {
  const DataSet one(Eigen::MatrixXd::Zero(2, 1), Eigen::VectorXd::Ones(1));
  CHECK(primal_objective(Eigen::Vector2d(1, 0), Eigen::VectorXd::Zero(1), one, 1.0, 1.0) == doctest::Approx(1.5));
  const DataSet d = make_synthetic(7, 3, 3);
  CHECK(primal_objective(Eigen::MatrixXd::Zero(3, 1), Eigen::VectorXd::Zero(1), d, 1.0, 2.0) == doctest::Approx(7.0));

  CounterRng rng(47);
  for (int k = 0; k < 50; ++k) {
    const Eigen::MatrixXd W = testing::random_matrix(rng, 3, 2);
    const Eigen::VectorXd b = testing::random_vector(rng, 2);
    const double p = k % 2 ? 1.0 : 2.0;
    const double expected = exclusivity_regularizer(W) + 1.7 * total_component_loss(W, b, d, p);
    CHECK(primal_objective(W, b, d, 1.7, p) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(primal_objective(W, b, d, 1.7, p) ==
          doctest::Approx(oracle::reference_objective(W, b, d, 1.7, p)).epsilon(1e-12));
  }
}

TEST_CASE("constraint residuals") {
  CounterRng rng(48);
  const DataSet d = make_synthetic(6, 3, 12);
  SolverState s = random_state(rng, d, 2);
  s.W = s.P;
  s.E = -fit_residual(d, Eigen::MatrixXd::Zero(6, 2), s.P, s.b);
  Residuals r = constraint_residuals(s, d);
  CHECK(r.split == 0.0);
  CHECK(r.fit < 1e-12);
  s.P = s.W.array() + 1.0;
  r = constraint_residuals(s, d);
  CHECK(r.split == doctest::Approx(std::sqrt(6.0)));
}

TEST_CASE("initial state") {
  const DataSet d = make_synthetic(5, 3, 2);
  SolverConfig config;
  config.components = 4;
  const SolverState s = SolverState::initial(d, config);
  CHECK(s.W == Eigen::MatrixXd::Ones(3, 4));
  CHECK(s.b == Eigen::VectorXd::Zero(4));
  CHECK(s.P == Eigen::MatrixXd::Zero(3, 4));
  CHECK(s.Q == Eigen::MatrixXd::Ones(3, 4));
  CHECK(s.Z == Eigen::MatrixXd::Zero(5, 4));
  CHECK(s.mu == 1.0);
  CHECK(s.E.col(2) == d.y());
}

TEST_CASE("config validation") {
  const auto bad = [](auto mutate) {
    SolverConfig c;
    mutate(c);
    return c;
  };
  CHECK_NOTHROW(SolverConfig{}.validate());
  CHECK_THROWS_AS(bad([](SolverConfig& c) { c.lambda = 0.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](SolverConfig& c) { c.components = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](SolverConfig& c) { c.loss_power = 0.5; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](SolverConfig& c) { c.rho = 1.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](SolverConfig& c) { c.epsilon = 0.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](SolverConfig& c) { c.mu_cap = 0.5; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](SolverConfig& c) { c.outer_tol = 0.0; }).validate(), ConfigError);
  CHECK_THROWS_AS(bad([](SolverConfig& c) { c.inner_max_iters = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(train(make_synthetic(5, 2, 1), bad([](SolverConfig& c) { c.rho = 0.9; })), ConfigError);
}

TEST_CASE("two separable points") {
  Eigen::MatrixXd X(1, 2);
  X << 1, -1;
  const DataSet d(X, Eigen::Vector2d(1, -1));
  SolverConfig config;
  config.components = 2;
  const TrainResult r = train(d, config);
  CHECK(test_error(r.model, d) == 0.0);
  const auto ref = oracle::reference_primal_solver(d, 2.0, 2, 2.0);
  CHECK(r.report.final_objective <= 1.01 * ref.objective);
}

TEST_CASE("single component matches the squared-hinge SVM") {
  CounterRng rng(49);
  for (int k = 0; k < 5; ++k) {
    const DataSet d = make_synthetic(30, 4, rng.next(), 1.0);
    SolverConfig config;
    config.components = 1;
    const TrainResult r = train(d, config);
    const auto ref = oracle::reference_l2svm(d, config.lambda);
    CHECK(r.report.final_objective == doctest::Approx(ref.objective).epsilon(1e-3));
  }
}

TEST_CASE("training run properties") {
  const DataSet d = make_synthetic(80, 5, 13, 1.0);
  for (double p : {1.0, 1.5, 2.0}) {
    SolverConfig config;
    config.components = 3;
    config.loss_power = p;
    const TrainResult r = train(d, config);
    CAPTURE(p);
    CHECK(r.report.converged);
    CHECK(static_cast<int>(r.report.objective_trace.size()) == r.report.iterations);
    CHECK(static_cast<int>(r.report.residual_trace.size()) == r.report.iterations);
    const Residuals res = constraint_residuals(r.state, d);
    CHECK(res.split < 1e-3);
    CHECK(res.fit < 1e-3);
    CHECK(r.report.multiplier_peak < 1e8);
    CHECK(r.report.diversity.regularizer_value >= 0.5 * r.model.W().squaredNorm());
    CHECK(r.report.final_objective == r.report.objective_trace.back());
    CHECK(r.model.W() == r.state.W);

    const auto ref = oracle::reference_primal_solver(d, config.lambda, 3, p == 1.5 ? 2.0 : p);
    if (p != 1.5) CHECK(r.report.final_objective <= 1.01 * ref.objective);
  }
}

TEST_CASE("training is deterministic") {
  const DataSet d = make_synthetic(60, 4, 14);
  const SolverConfig config;
  const TrainResult a = train(d, config);
  const TrainResult b = train(d, config);
  CHECK(a.model.W() == b.model.W());
  CHECK(a.report.objective_trace == b.report.objective_trace);
  CHECK(report_to_json(a.report, false) == report_to_json(b.report, false));
}

TEST_CASE("p = 2 on 500 synthetic instances converges quickly") {
  const DataSet d = make_synthetic(500, 10, 15);
  const TrainResult r = train(d, SolverConfig{});
  CHECK(r.report.converged);
  CHECK(r.report.iterations <= 100);
}

TEST_CASE("report JSON") {
  const DataSet d = make_synthetic(20, 2, 16);
  SolverConfig config;
  config.components = 2;
  const TrainResult r = train(d, config);
  const nlohmann::json timed = report_to_json(r.report, true);
  const nlohmann::json plain = report_to_json(r.report, false);
  CHECK(timed.contains("wall_time"));
  CHECK_FALSE(plain.contains("wall_time"));
  CHECK(plain.at("config").at("lambda") == 2.0);
  CHECK(plain.at("config").at("components") == 2);
  CHECK(plain.at("objective_trace").size() == static_cast<std::size_t>(r.report.iterations));
  CHECK(plain.at("diversity").at("pairwise_relaxed_exclusivity").size() == 2);
}
