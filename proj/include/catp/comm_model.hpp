#pragma once

#include <Eigen/Dense>

#include "catp/types.hpp"

namespace catp {

// Everything the planner needs to know about the communication graph at one
// time step: weighted adjacency, Laplacian, Fiedler pair, and the gradient of
// the Fiedler value with respect to the stacked robot positions.
struct CommGraphSnapshot {
  Eigen::MatrixXd adjacency;      // N x N, hollow symmetric, entries in [0,1]
  Eigen::MatrixXd laplacian;      // N x N, zero row sums
  double fiedler_value = 0.0;     // lambda_2 >= 0
  Eigen::VectorXd fiedler_vector; // unit, orthogonal to the all-ones vector
  Eigen::VectorXd gradient;       // m, length N*n
  bool degenerate = false;        // lambda_3 - lambda_2 below the eigengap tolerance
};

struct FiedlerPair {
  double value = 0.0;
  Eigen::VectorXd vector;
  bool degenerate = false;
};

// Logistic packet-reception probability as a function of distance.
double link_quality(double distance, const LinkParams& params);

// a_ij = link_quality(||p_i - p_j||) for i != j, zero diagonal.
Eigen::MatrixXd build_adjacency(const PositionState& state, const LinkParams& params);

// L = D - A with D = diag(A 1). Throws on asymmetric input.
Eigen::MatrixXd build_laplacian(const Eigen::MatrixXd& adjacency);

// Second-smallest eigenpair of a symmetric zero-row-sum matrix. The vector is
// unit norm with a deterministic sign (first component of magnitude > 1e-9 is
// positive). The degenerate flag is set when lambda_3 - lambda_2 < 1e-9, in
// which case the returned vector is one element of the eigenspace and the
// gradient built from it is a subgradient surrogate.
FiedlerPair fiedler_pair(const Eigen::MatrixXd& laplacian);

// dL/dp_{robot,axis}: derivative of the Laplacian with respect to one position
// coordinate. Throws DegenerateGeometryError if the robot is within 1e-12 of a
// neighbor.
Eigen::MatrixXd laplacian_position_gradient(const PositionState& state,
                                            const LinkParams& params, int robot,
                                            int axis);

// m_{(i,r)} = v2' (dL/dp_{i,r}) v2 for all robots and axes.
Eigen::VectorXd fiedler_gradient(const PositionState& state, const LinkParams& params,
                                 const CommGraphSnapshot& snapshot);

// First-order prediction lambda_2 + m'u.
double predict_fiedler(double fiedler_value, const Eigen::VectorXd& gradient,
                       const Eigen::VectorXd& input);

// Convenience: adjacency -> Laplacian -> Fiedler pair -> gradient in one call.
CommGraphSnapshot build_snapshot(const PositionState& state, const LinkParams& params);

}  // namespace catp
