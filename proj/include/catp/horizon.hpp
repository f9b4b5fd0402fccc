#pragma once

#include <Eigen/Dense>
#include <optional>

#include "catp/collision_geometry.hpp"

namespace catp {

struct HorizonParams {
  int K = 5;           // horizon length
  double u_max = 2.0;  // per-robot, per-step infinity-norm bound
  std::optional<Eigen::VectorXd> per_robot_u_max;  // overrides u_max where set

  void validate(int robot_count) const {
    if (K < 1) throw std::invalid_argument("HorizonParams: K must be >= 1");
    if (u_max < 0.0) throw std::invalid_argument("HorizonParams: u_max must be >= 0");
    if (per_robot_u_max) {
      if (per_robot_u_max->size() != robot_count) {
        throw std::invalid_argument("HorizonParams: per_robot_u_max size mismatch");
      }
      if ((per_robot_u_max->array() < 0.0).any()) {
        throw std::invalid_argument("HorizonParams: negative per-robot bound");
      }
    }
  }
};

// Lifted K-step model. Predicted positions are base + lifting * U, so step k
// sees the cumulative sum of the first k input blocks; connectivity row k maps
// U to the predicted Fiedler change after k steps.
struct HorizonModel {
  Eigen::MatrixXd lifting;       // B = L_K (x) I_{Nn},  KNn x KNn
  Eigen::MatrixXd connectivity;  // M = L_K (x) m',       K x KNn
  Eigen::VectorXd base;          // 1_K (x) p,            KNn
};

// A x <= b.
struct InequalitySystem {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd bound;
};

struct BoxBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

// L_K (x) I_block: block lower-triangular matrix of identity blocks.
Eigen::MatrixXd lifting_matrix(int horizon, int block_size);

// B and base for the stacked position vector p (connectivity left empty).
HorizonModel lift_positions(const Eigen::VectorXd& stacked_positions, int horizon);

// L_K (x) m'.
Eigen::MatrixXd connectivity_matrix(const Eigen::VectorXd& gradient, int horizon);

// Full model for one step: lifting, base, and connectivity from the gradient.
HorizonModel build_horizon_model(const Eigen::VectorXd& stacked_positions,
                                 const Eigen::VectorXd& gradient, int horizon);

// K rows encoding M U >= (lambda2_min - lambda2) 1_K, returned in <= form.
InequalitySystem fiedler_horizon_constraint(double lambda2, const Eigen::VectorXd& gradient,
                                            double lambda2_min, int horizon);

// (I_K (x) C) B U <= 1_K (x) (d - C p): every predicted position stays inside
// the cell generated at the current step.
InequalitySystem collision_horizon_constraint(const HalfspaceSystem& cells,
                                              const Eigen::VectorXd& stacked_positions,
                                              int horizon);

// Per-component box on U. Robots with a zero bound are exactly stationary.
BoxBounds input_box(const HorizonParams& params, int robot_count, int dim);

}  // namespace catp
