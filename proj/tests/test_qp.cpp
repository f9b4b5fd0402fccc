#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <vector>

#include "catp/qp.hpp"
#include "catp/rng.hpp"
#include "qp_oracle.hpp"

using namespace catp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

QpProblem scalar_problem(double lb, double ub) {
  QpProblem p;
  p.H = Eigen::MatrixXd::Constant(1, 1, 1.0);
  p.g = Eigen::VectorXd::Constant(1, -1.0);
  p.A = Eigen::MatrixXd(0, 1);
  p.b = Eigen::VectorXd(0);
  p.lb = Eigen::VectorXd::Constant(1, lb);
  p.ub = Eigen::VectorXd::Constant(1, ub);
  return p;
}

}  // namespace

TEST_CASE("clipped scalar minimum") {
  const QpSolution sol = solve(scalar_problem(-10.0, 0.5));
  CHECK(sol.status == QpStatus::Optimal);
  CHECK(sol.x(0) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(kkt_residuals(scalar_problem(-10.0, 0.5), sol).max() <= 1e-6);
}

TEST_CASE("unconstrained scalar minimum") {
  const QpSolution sol = solve(scalar_problem(-kInf, kInf));
  CHECK(sol.status == QpStatus::Optimal);
  CHECK(sol.x(0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(kkt_residuals(scalar_problem(-kInf, kInf), sol).max() <= 1e-6);
}

TEST_CASE("two-variable problem with an active coupling row") {
  QpProblem p;
  p.H = Eigen::MatrixXd::Identity(2, 2);
  p.g = Eigen::VectorXd::Constant(2, -1.0);
  p.A = Eigen::MatrixXd::Ones(1, 2);
  p.b = Eigen::VectorXd::Constant(1, 1.0);
  p.lb = Eigen::VectorXd::Constant(2, -kInf);
  p.ub = Eigen::VectorXd::Constant(2, kInf);

  const QpSolution sol = solve(p);
  CHECK(sol.status == QpStatus::Optimal);
  CHECK(sol.x(0) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(sol.x(1) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(sol.ineq_multipliers(0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(kkt_residuals(p, sol).max() <= 1e-6);
}

TEST_CASE("empty box is reported as primal infeasible") {
  const QpSolution sol = solve(scalar_problem(1.0, 0.0));
  CHECK(sol.status == QpStatus::PrimalInfeasible);
}

TEST_CASE("contradictory rows are reported as primal infeasible") {
  QpProblem p;
  p.H = Eigen::MatrixXd::Identity(1, 1);
  p.g = Eigen::VectorXd::Zero(1);
  p.A = Eigen::MatrixXd(2, 1);
  p.A << 1.0, -1.0;  // x <= -1 and x >= 1
  p.b = Eigen::VectorXd(2);
  p.b << -1.0, -1.0;
  p.lb = Eigen::VectorXd::Constant(1, -kInf);
  p.ub = Eigen::VectorXd::Constant(1, kInf);
  const QpSolution sol = solve(p);
  CHECK(sol.status == QpStatus::PrimalInfeasible);
}

TEST_CASE("dimension mismatch and asymmetric H are rejected") {
  QpProblem p = scalar_problem(-1.0, 1.0);
  p.g = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(solve(p), std::invalid_argument);

  QpProblem q;
  q.H = Eigen::MatrixXd(2, 2);
  q.H << 1.0, 0.5, -0.5, 1.0;
  q.g = Eigen::VectorXd::Zero(2);
  q.A = Eigen::MatrixXd(0, 2);
  q.b = Eigen::VectorXd(0);
  q.lb = Eigen::VectorXd::Constant(2, -1.0);
  q.ub = Eigen::VectorXd::Constant(2, 1.0);
  CHECK_THROWS_AS(solve(q), std::invalid_argument);
}

TEST_CASE("zero problem is trivially optimal with zero residuals") {
  QpProblem p;
  p.H = Eigen::MatrixXd::Zero(2, 2);
  p.g = Eigen::VectorXd::Zero(2);
  p.A = Eigen::MatrixXd(0, 2);
  p.b = Eigen::VectorXd(0);
  p.lb = Eigen::VectorXd::Constant(2, -kInf);
  p.ub = Eigen::VectorXd::Constant(2, kInf);
  const QpSolution sol = solve(p);
  CHECK(sol.status == QpStatus::Optimal);
  CHECK(sol.x.cwiseAbs().maxCoeff() <= 1e-9);
  const KktResiduals res = kkt_residuals(p, sol);
  CHECK(res.max() <= 1e-8);
}

TEST_CASE("perturbing the solution shows up in the stationarity residual") {
  QpProblem p;
  p.H = Eigen::MatrixXd::Identity(2, 2);
  p.g = Eigen::VectorXd::Constant(2, -1.0);
  p.A = Eigen::MatrixXd::Ones(1, 2);
  p.b = Eigen::VectorXd::Constant(1, 1.0);
  p.lb = Eigen::VectorXd::Constant(2, -kInf);
  p.ub = Eigen::VectorXd::Constant(2, kInf);
  QpSolution sol = solve(p);
  sol.x(0) += 0.1;
  CHECK(kkt_residuals(p, sol).stationarity > 1e-3);
}

TEST_CASE("objective matches the projected-gradient oracle on random instances") {
  Rng rng(2024);
  int optimal_count = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const QpProblem p = qp_oracle::random_strictly_convex(rng);
    const QpSolution sol = solve(p);
    REQUIRE(sol.status == QpStatus::Optimal);
    ++optimal_count;

    const KktResiduals res = kkt_residuals(p, sol);
    CHECK(res.stationarity <= 1e-6);
    CHECK(res.primal <= 1e-6);
    CHECK(res.dual <= 1e-6);
    CHECK(res.complementarity <= 1e-6);

    const qp_oracle::PgResult oracle = qp_oracle::projected_gradient(p);
    CHECK(oracle.monotone);
    CHECK(std::abs(sol.objective - oracle.objective) <= 1e-6);
  }
  CHECK(optimal_count == 100);
}

TEST_CASE("identical inputs produce identical outputs") {
  Rng rng(99);
  const QpProblem p = qp_oracle::random_strictly_convex(rng);
  const QpSolution a = solve(p);
  const QpSolution b = solve(p);
  CHECK(a.x == b.x);
  CHECK(a.iterations == b.iterations);
  CHECK(a.objective == b.objective);
}

TEST_CASE("warm starts stay within tolerance of cold starts") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const QpProblem p = qp_oracle::random_strictly_convex(rng);
    const QpSolution cold = solve(p);

    QpSettings warm_settings;
    Eigen::VectorXd warm = cold.x;
    for (Eigen::Index i = 0; i < warm.size(); ++i) warm(i) += rng.uniform(-0.05, 0.05);
    warm_settings.warm_start = warm;
    const QpSolution hot = solve(p, warm_settings);
    REQUIRE(hot.status == QpStatus::Optimal);
    CHECK(std::abs(hot.objective - cold.objective) <= 1e-6);
  }
}

TEST_CASE("iteration cap reports max-iterations when polish is off") {
  Rng rng(3);
  const QpProblem p = qp_oracle::random_strictly_convex(rng);
  QpSettings settings;
  settings.max_iterations = 2;
  settings.check_interval = 1;
  settings.polish = false;
  const QpSolution sol = solve(p, settings);
  CHECK(sol.status == QpStatus::MaxIterations);
}
