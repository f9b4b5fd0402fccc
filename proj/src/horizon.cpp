#include "catp/horizon.hpp"

namespace catp {

Eigen::MatrixXd lifting_matrix(int horizon, int block_size) {
  if (horizon < 1) throw std::invalid_argument("lifting_matrix: horizon must be >= 1");
  const int dim = horizon * block_size;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(dim, dim);
  for (int k = 0; k < horizon; ++k) {
    for (int h = 0; h <= k; ++h) {
      b.block(k * block_size, h * block_size, block_size, block_size)
          .setIdentity();
    }
  }
  return b;
}

HorizonModel lift_positions(const Eigen::VectorXd& stacked_positions, int horizon) {
  if (horizon < 1) throw std::invalid_argument("lift_positions: horizon must be >= 1");
  const int nv = static_cast<int>(stacked_positions.size());
  HorizonModel model;
  model.lifting = lifting_matrix(horizon, nv);
  model.base.resize(horizon * nv);
  for (int k = 0; k < horizon; ++k) model.base.segment(k * nv, nv) = stacked_positions;
  return model;
}

Eigen::MatrixXd connectivity_matrix(const Eigen::VectorXd& gradient, int horizon) {
  if (horizon < 1) throw std::invalid_argument("connectivity_matrix: horizon must be >= 1");
  const int nv = static_cast<int>(gradient.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(horizon, horizon * nv);
  for (int k = 0; k < horizon; ++k) {
    for (int h = 0; h <= k; ++h) m.block(k, h * nv, 1, nv) = gradient.transpose();
  }
  return m;
}

HorizonModel build_horizon_model(const Eigen::VectorXd& stacked_positions,
                                 const Eigen::VectorXd& gradient, int horizon) {
  if (stacked_positions.size() != gradient.size()) {
    throw std::invalid_argument("build_horizon_model: position/gradient size mismatch");
  }
  HorizonModel model = lift_positions(stacked_positions, horizon);
  model.connectivity = connectivity_matrix(gradient, horizon);
  return model;
}

InequalitySystem fiedler_horizon_constraint(double lambda2, const Eigen::VectorXd& gradient,
                                            double lambda2_min, int horizon) {
  InequalitySystem sys;
  sys.matrix = -connectivity_matrix(gradient, horizon);
  sys.bound = Eigen::VectorXd::Constant(horizon, lambda2 - lambda2_min);
  return sys;
}

InequalitySystem collision_horizon_constraint(const HalfspaceSystem& cells,
                                              const Eigen::VectorXd& stacked_positions,
                                              int horizon) {
  const int nv = static_cast<int>(stacked_positions.size());
  if (nv % cells.robot_count() != 0) {
    throw std::invalid_argument("collision_horizon_constraint: size mismatch");
  }
  const int dim = nv / cells.robot_count();
  const Eigen::MatrixXd c = cells.block_constraint_matrix(dim);
  const Eigen::VectorXd rhs = cells.stacked_offsets() - c * stacked_positions;
  const int rows = static_cast<int>(c.rows());

  // (I_K (x) C) (L_K (x) I) = L_K (x) C.
  InequalitySystem sys;
  sys.matrix = Eigen::MatrixXd::Zero(horizon * rows, horizon * nv);
  sys.bound.resize(horizon * rows);
  for (int k = 0; k < horizon; ++k) {
    for (int h = 0; h <= k; ++h) sys.matrix.block(k * rows, h * nv, rows, nv) = c;
    sys.bound.segment(k * rows, rows) = rhs;
  }
  return sys;
}

BoxBounds input_box(const HorizonParams& params, int robot_count, int dim) {
  params.validate(robot_count);
  const int nv = robot_count * dim;
  BoxBounds box;
  box.lower.resize(params.K * nv);
  box.upper.resize(params.K * nv);
  for (int k = 0; k < params.K; ++k) {
    for (int i = 0; i < robot_count; ++i) {
      const double bound =
          params.per_robot_u_max ? (*params.per_robot_u_max)(i) : params.u_max;
      for (int r = 0; r < dim; ++r) {
        const int idx = k * nv + i * dim + r;
        box.lower(idx) = -bound;
        box.upper(idx) = bound;
      }
    }
  }
  return box;
}

}  // namespace catp
