#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace catp {

// Raised when a geometric construction has no well-defined answer
// (coincident robots, vanishing separating directions).
struct DegenerateGeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when an assignment problem admits no finite-cost perfect matching.
struct NoFeasibleAssignmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Logistic link-quality model: w(d) = e^{-alpha (d - d50)} / (1 + e^{-alpha (d - d50)}).
struct LinkParams {
  double alpha = 0.1;  // attenuation rate [1/m]
  double d50 = 50.0;   // distance at which link quality is 50% [m]

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw std::invalid_argument("LinkParams: alpha must be finite and > 0");
    }
    if (!(d50 > 0.0) || !std::isfinite(d50)) {
      throw std::invalid_argument("LinkParams: d50 must be finite and > 0");
    }
  }
};

// Robot positions and body radii. Stacked vectors are robot-major:
// (p_1x, p_1y, ..., p_Nx, p_Ny).
struct PositionState {
  Eigen::MatrixXd positions;  // N x n
  Eigen::VectorXd radii;      // N

  int robot_count() const { return static_cast<int>(positions.rows()); }
  int dim() const { return static_cast<int>(positions.cols()); }

  Eigen::VectorXd stacked() const {
    const int N = robot_count();
    const int n = dim();
    Eigen::VectorXd p(N * n);
    for (int i = 0; i < N; ++i) p.segment(i * n, n) = positions.row(i).transpose();
    return p;
  }

  static PositionState from_stacked(const Eigen::VectorXd& p, int dim,
                                    const Eigen::VectorXd& radii) {
    if (dim <= 0 || p.size() % dim != 0) {
      throw std::invalid_argument("PositionState: stacked size not divisible by dim");
    }
    const int N = static_cast<int>(p.size()) / dim;
    PositionState s;
    s.positions.resize(N, dim);
    for (int i = 0; i < N; ++i) s.positions.row(i) = p.segment(i * dim, dim).transpose();
    s.radii = radii;
    return s;
  }

  void validate() const {
    const int N = robot_count();
    const int n = dim();
    if (N < 2) throw std::invalid_argument("PositionState: need at least 2 robots");
    if (n != 2 && n != 3) throw std::invalid_argument("PositionState: dim must be 2 or 3");
    if (radii.size() != N) throw std::invalid_argument("PositionState: radii size mismatch");
    if (!positions.allFinite()) throw std::invalid_argument("PositionState: non-finite position");
    if ((radii.array() < 0.0).any()) throw std::invalid_argument("PositionState: negative radius");
  }
};

// Body radii plus the minimum clearance eps required between robot surfaces.
struct BodyParams {
  Eigen::VectorXd radii;  // N
  double clearance = 0.0;

  void validate(int robot_count) const {
    if (radii.size() != robot_count) {
      throw std::invalid_argument("BodyParams: radii size mismatch");
    }
    if ((radii.array() < 0.0).any()) throw std::invalid_argument("BodyParams: negative radius");
    if (clearance < 0.0 || !std::isfinite(clearance)) {
      throw std::invalid_argument("BodyParams: clearance must be finite and >= 0");
    }
  }
};

}  // namespace catp
