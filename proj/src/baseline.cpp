#include <algorithm>
#include <cmath>

#include "catp/sim.hpp"

namespace catp {

namespace {

// Exact constraint values c(u) >= 0 at candidate positions p + u:
// index 0 is the Fiedler margin, then one entry per robot pair.
struct ExactConstraints {
  Eigen::VectorXd values;
};

class BaselineProblem {
 public:
  BaselineProblem(const PositionState& state, const ScenarioConfig& config,
                  const StepContext& context)
      : state_(state), config_(config), bodies_(config.bodies()) {
    const int N = config.robot_count;
    const int n = config.dim;
    const int nv = N * n;
    pairs_ = N * (N - 1) / 2;

    if (config.mode == ScenarioMode::Inspection) {
      const CommGraphSnapshot snapshot = build_snapshot(state, config.link);
      const HorizonModel model = build_horizon_model(state.stacked(), snapshot.gradient, 1);
      const QpObjective obj = inspection_objective(
          context.assignment, state.stacked(), *config.pois, model, config.zeta, config.eta);
      hess_ = obj.H;
      lin_ = obj.g;
    } else {
      if (context.cis_reference.size() != nv) {
        throw std::invalid_argument("nonlinear_baseline_step: missing CIS reference");
      }
      hess_ = Eigen::MatrixXd::Identity(nv, nv);
      lin_ = -context.cis_reference;
    }
    const BoxBounds box = input_box(config.effective_horizon(), N, n);
    lower_ = box.lower;
    upper_ = box.upper;
  }

  int num_vars() const { return static_cast<int>(lin_.size()); }
  int num_constraints() const { return 1 + pairs_; }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }

  double objective(const Eigen::VectorXd& u) const {
    return 0.5 * u.dot(hess_ * u) + lin_.dot(u);
  }

  Eigen::VectorXd objective_gradient(const Eigen::VectorXd& u) const {
    return hess_ * u + lin_;
  }

  PositionState candidate(const Eigen::VectorXd& u) const {
    PositionState next = state_;
    const int n = config_.dim;
    for (int i = 0; i < config_.robot_count; ++i) {
      next.positions.row(i) += u.segment(i * n, n).transpose();
    }
    return next;
  }

  ExactConstraints constraints(const Eigen::VectorXd& u) const {
    const PositionState next = candidate(u);
    ExactConstraints c;
    c.values.resize(num_constraints());
    c.values(0) =
        fiedler_pair(build_laplacian(build_adjacency(next, config_.link))).value -
        config_.lambda2_min;
    int idx = 1;
    for (int i = 0; i < config_.robot_count; ++i) {
      for (int j = i + 1; j < config_.robot_count; ++j) {
        const double d = (next.positions.row(i) - next.positions.row(j)).norm();
        c.values(idx++) = d - bodies_.radii(i) - bodies_.radii(j) - bodies_.clearance;
      }
    }
    return c;
  }

  // Gradient of constraint q at u. The Fiedler row is the eigen-gradient at
  // the candidate positions.
  Eigen::VectorXd constraint_gradient(int q, const Eigen::VectorXd& u) const {
    const PositionState next = candidate(u);
    const int n = config_.dim;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(num_vars());
    if (q == 0) {
      CommGraphSnapshot snap;
      snap.adjacency = build_adjacency(next, config_.link);
      snap.laplacian = build_laplacian(snap.adjacency);
      const FiedlerPair pair = fiedler_pair(snap.laplacian);
      snap.fiedler_value = pair.value;
      snap.fiedler_vector = pair.vector;
      return fiedler_gradient(next, config_.link, snap);
    }
    int idx = 1;
    for (int i = 0; i < config_.robot_count; ++i) {
      for (int j = i + 1; j < config_.robot_count; ++j) {
        if (idx++ != q) continue;
        const Eigen::VectorXd diff =
            (next.positions.row(i) - next.positions.row(j)).transpose();
        const double d = std::max(diff.norm(), 1e-12);
        grad.segment(i * n, n) = diff / d;
        grad.segment(j * n, n) = -diff / d;
        return grad;
      }
    }
    throw std::logic_error("constraint_gradient: index out of range");
  }

 private:
  PositionState state_;
  const ScenarioConfig& config_;
  BodyParams bodies_;
  Eigen::MatrixXd hess_;
  Eigen::VectorXd lin_;
  Eigen::VectorXd lower_, upper_;
  int pairs_ = 0;
};

double augmented_value(const BaselineProblem& prob, const Eigen::VectorXd& u,
                       const Eigen::VectorXd& mu, double rho) {
  const ExactConstraints c = prob.constraints(u);
  double val = prob.objective(u);
  for (Eigen::Index q = 0; q < c.values.size(); ++q) {
    const double t = std::max(0.0, mu(q) - rho * c.values(q));
    val += (t * t - mu(q) * mu(q)) / (2.0 * rho);
  }
  return val;
}

Eigen::VectorXd augmented_gradient(const BaselineProblem& prob, const Eigen::VectorXd& u,
                                   const Eigen::VectorXd& mu, double rho) {
  const ExactConstraints c = prob.constraints(u);
  Eigen::VectorXd grad = prob.objective_gradient(u);
  for (Eigen::Index q = 0; q < c.values.size(); ++q) {
    const double t = std::max(0.0, mu(q) - rho * c.values(q));
    if (t > 0.0) grad -= t * prob.constraint_gradient(static_cast<int>(q), u);
  }
  return grad;
}

}  // namespace

Eigen::VectorXd nonlinear_baseline_step(const PositionState& state,
                                        const ScenarioConfig& config,
                                        const StepContext& context, bool* converged) {
  if (config.horizon.K != 1 || config.robot_count > 6) {
    throw std::invalid_argument("nonlinear_baseline_step: requires K = 1 and N <= 6");
  }
  const BaselineProblem prob(state, config, context);
  const int nv = prob.num_vars();

  Eigen::VectorXd u = Eigen::VectorXd::Zero(nv);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(prob.num_constraints());
  double rho = 10.0;
  double step_size = 1.0;
  double prev_violation = std::numeric_limits<double>::infinity();

  auto clip = [&](const Eigen::VectorXd& v) {
    return v.cwiseMax(prob.lower()).cwiseMin(prob.upper());
  };

  for (int outer = 0; outer < 30; ++outer) {
    // Projected gradient descent with backtracking on the augmented objective.
    double val = augmented_value(prob, u, mu, rho);
    for (int inner = 0; inner < 400; ++inner) {
      const Eigen::VectorXd grad = augmented_gradient(prob, u, mu, rho);
      bool accepted = false;
      for (int bt = 0; bt < 40; ++bt) {
        const Eigen::VectorXd trial = clip(u - step_size * grad);
        const Eigen::VectorXd delta = trial - u;
        if (delta.lpNorm<Eigen::Infinity>() < 1e-14) break;
        const double trial_val = augmented_value(prob, trial, mu, rho);
        if (trial_val <= val + grad.dot(delta) + delta.squaredNorm() / (2.0 * step_size)) {
          u = trial;
          val = trial_val;
          accepted = true;
          break;
        }
        step_size *= 0.5;
      }
      if (!accepted) break;
      step_size = std::min(step_size * 1.3, 1e3);
      const double move = (clip(u - grad) - u).lpNorm<Eigen::Infinity>();
      if (move < 1e-9 * std::max(1.0, u.lpNorm<Eigen::Infinity>())) break;
    }

    const ExactConstraints c = prob.constraints(u);
    const double violation = std::max(0.0, -c.values.minCoeff());
    for (Eigen::Index q = 0; q < c.values.size(); ++q) {
      mu(q) = std::max(0.0, mu(q) - rho * c.values(q));
    }
    if (violation <= 1e-6 && outer > 0) break;
    if (violation > 0.25 * prev_violation) rho = std::min(rho * 10.0, 1e9);
    prev_violation = violation;
  }

  if (converged) {
    const ExactConstraints c = prob.constraints(u);
    *converged = c.values.minCoeff() >= -1e-4;
  }
  return u;
}

}  // namespace catp
