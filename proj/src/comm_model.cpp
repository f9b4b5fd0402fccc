#include "catp/comm_model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace catp {

namespace {

constexpr double kSymmetryTol = 1e-10;
constexpr double kRowSumTol = 1e-8;
constexpr double kEigengapTol = 1e-9;
constexpr double kCoincidenceTol = 1e-12;

}  // namespace

double link_quality(double distance, const LinkParams& params) {
  params.validate();
  if (!(distance >= 0.0) || !std::isfinite(distance)) {
    throw std::invalid_argument("link_quality: distance must be finite and >= 0");
  }
  // e^{-x} / (1 + e^{-x}) == 1 / (1 + e^{x}), stable for both signs of x.
  const double x = params.alpha * (distance - params.d50);
  return 1.0 / (1.0 + std::exp(x));
}

Eigen::MatrixXd build_adjacency(const PositionState& state, const LinkParams& params) {
  state.validate();
  const int N = state.robot_count();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      const double d = (state.positions.row(i) - state.positions.row(j)).norm();
      const double w = link_quality(d, params);
      a(i, j) = w;
      a(j, i) = w;
    }
  }
  return a;
}

Eigen::MatrixXd build_laplacian(const Eigen::MatrixXd& adjacency) {
  if (adjacency.rows() != adjacency.cols()) {
    throw std::invalid_argument("build_laplacian: adjacency must be square");
  }
  if ((adjacency - adjacency.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol) {
    throw std::invalid_argument("build_laplacian: adjacency must be symmetric");
  }
  Eigen::MatrixXd l = -adjacency;
  l.diagonal() = adjacency.rowwise().sum() - adjacency.diagonal();
  return l;
}

FiedlerPair fiedler_pair(const Eigen::MatrixXd& laplacian) {
  const auto N = laplacian.rows();
  if (N != laplacian.cols() || N < 2) {
    throw std::invalid_argument("fiedler_pair: need a square matrix of size >= 2");
  }
  if ((laplacian - laplacian.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol) {
    throw std::invalid_argument("fiedler_pair: matrix must be symmetric");
  }
  if (laplacian.rowwise().sum().cwiseAbs().maxCoeff() > kRowSumTol) {
    throw std::invalid_argument("fiedler_pair: row sums must be zero");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(laplacian);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("fiedler_pair: eigendecomposition failed");
  }

  FiedlerPair out;
  out.value = std::max(0.0, es.eigenvalues()(1));
  out.vector = es.eigenvectors().col(1);
  out.vector.normalize();
  out.degenerate = N > 2 && (es.eigenvalues()(2) - es.eigenvalues()(1)) < kEigengapTol;

  // Deterministic sign: first component with magnitude above 1e-9 is positive.
  for (Eigen::Index i = 0; i < N; ++i) {
    if (std::abs(out.vector(i)) > 1e-9) {
      if (out.vector(i) < 0.0) out.vector = -out.vector;
      break;
    }
  }
  return out;
}

Eigen::MatrixXd laplacian_position_gradient(const PositionState& state,
                                            const LinkParams& params, int robot,
                                            int axis) {
  state.validate();
  params.validate();
  const int N = state.robot_count();
  const int n = state.dim();
  if (robot < 0 || robot >= N) throw std::invalid_argument("laplacian_position_gradient: robot out of range");
  if (axis < 0 || axis >= n) throw std::invalid_argument("laplacian_position_gradient: axis out of range");

  // da_ij/dp_{i,r} = -alpha (1 - a_ij) a_ij (p_{i,r} - p_{j,r}) / ||p_i - p_j||,
  // nonzero only in row/column `robot`.
  Eigen::MatrixXd da = Eigen::MatrixXd::Zero(N, N);
  for (int j = 0; j < N; ++j) {
    if (j == robot) continue;
    const Eigen::RowVectorXd diff = state.positions.row(robot) - state.positions.row(j);
    const double d = diff.norm();
    if (d < kCoincidenceTol) {
      throw DegenerateGeometryError("laplacian_position_gradient: near-coincident robots");
    }
    const double a = link_quality(d, params);
    const double v = -params.alpha * (1.0 - a) * a * diff(axis) / d;
    da(robot, j) = v;
    da(j, robot) = v;
  }
  Eigen::MatrixXd dl = -da;
  dl.diagonal() += da.rowwise().sum();
  return dl;
}

Eigen::VectorXd fiedler_gradient(const PositionState& state, const LinkParams& params,
                                 const CommGraphSnapshot& snapshot) {
  const int N = state.robot_count();
  const int n = state.dim();
  if (snapshot.fiedler_vector.size() != N) {
    throw std::invalid_argument("fiedler_gradient: snapshot size mismatch");
  }
  const Eigen::VectorXd& v2 = snapshot.fiedler_vector;
  Eigen::VectorXd m(N * n);
  for (int i = 0; i < N; ++i) {
    for (int r = 0; r < n; ++r) {
      const Eigen::MatrixXd dl = laplacian_position_gradient(state, params, i, r);
      m(i * n + r) = v2.dot(dl * v2);
    }
  }
  return m;
}

double predict_fiedler(double fiedler_value, const Eigen::VectorXd& gradient,
                       const Eigen::VectorXd& input) {
  if (gradient.size() != input.size()) {
    throw std::invalid_argument("predict_fiedler: gradient/input size mismatch");
  }
  return fiedler_value + gradient.dot(input);
}

CommGraphSnapshot build_snapshot(const PositionState& state, const LinkParams& params) {
  CommGraphSnapshot snap;
  snap.adjacency = build_adjacency(state, params);
  snap.laplacian = build_laplacian(snap.adjacency);
  const FiedlerPair pair = fiedler_pair(snap.laplacian);
  snap.fiedler_value = pair.value;
  snap.fiedler_vector = pair.vector;
  snap.degenerate = pair.degenerate;
  snap.gradient = fiedler_gradient(state, params, snap);
  return snap;
}

}  // namespace catp
