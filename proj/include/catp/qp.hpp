#pragma once

#include <Eigen/Dense>
#include <optional>

#include "catp/types.hpp"

namespace catp {

// min 1/2 x'Hx + g'x  s.t.  A x <= b,  lb <= x <= ub.
// Infinite bounds are allowed in lb/ub.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd A;  // may have zero rows
  Eigen::VectorXd b;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;

  int num_vars() const { return static_cast<int>(g.size()); }
  int num_constraints() const { return static_cast<int>(b.size()); }
  void validate() const;
};

enum class QpStatus { Optimal, PrimalInfeasible, MaxIterations };

const char* to_string(QpStatus status);

struct QpSolution {
  Eigen::VectorXd x;
  QpStatus status = QpStatus::MaxIterations;
  double objective = 0.0;
  int iterations = 0;
  double solve_time = 0.0;  // seconds
  bool polished = false;
  Eigen::VectorXd ineq_multipliers;   // mu >= 0 for A x <= b
  Eigen::VectorXd bound_multipliers;  // signed: > 0 at upper bound, < 0 at lower
};

struct QpSettings {
  double eps_abs = 1e-6;
  double eps_rel = 1e-6;
  double eps_infeasible = 1e-10;
  int max_iterations = 10000;
  int check_interval = 25;
  double rho = 0.01;
  double sigma = 1e-6;
  double alpha = 1.6;    // over-relaxation
  double ridge = 1e-9;   // added to diag(H) on intake
  bool adaptive_rho = true;
  bool polish = true;
  std::optional<Eigen::VectorXd> warm_start;
  // Stacked multipliers from a previous solve of a same-shaped problem:
  // the mc inequality rows followed by the nv bound rows.
  std::optional<Eigen::VectorXd> warm_start_dual;
};

QpSolution solve(const QpProblem& problem, const QpSettings& settings = {});

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;

  double max() const {
    return std::max(std::max(stationarity, primal), std::max(dual, complementarity));
  }
};

// Residuals of the first-order optimality system at (x, multipliers).
KktResiduals kkt_residuals(const QpProblem& problem, const QpSolution& solution);

}  // namespace catp
