#include "catp/objectives.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace catp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace

std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  if (rows == 0) return {};
  if (rows > cols) throw std::invalid_argument("hungarian: more rows than columns");
  for (int i = 0; i < rows; ++i) {
    bool finite = false;
    for (int j = 0; j < cols; ++j) {
      if (std::isnan(cost(i, j)) || cost(i, j) < 0.0) {
        throw std::invalid_argument("hungarian: costs must be >= 0 and not NaN");
      }
      finite = finite || std::isfinite(cost(i, j));
    }
    if (!finite) throw NoFeasibleAssignmentError("hungarian: row with no finite entry");
  }

  // Shortest augmenting path formulation with potentials (1-based scratch).
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
  std::vector<int> p(cols + 1, 0), way(cols + 1, 0);
  for (int i = 1; i <= rows; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(cols + 1, kInf);
    std::vector<char> used(cols + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (!std::isfinite(delta)) {
        throw NoFeasibleAssignmentError("hungarian: no finite-cost perfect matching");
      }
      for (int j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> row_to_col(rows, -1);
  for (int j = 1; j <= cols; ++j) {
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

AssignmentMatrix assign_pois(const Eigen::MatrixXd& initial_positions,
                             const Eigen::MatrixXd& pois) {
  const int N = static_cast<int>(initial_positions.rows());
  const int L = static_cast<int>(pois.rows());
  if (L >= N) throw std::invalid_argument("assign_pois: need fewer POIs than robots");
  if (pois.cols() != initial_positions.cols()) {
    throw std::invalid_argument("assign_pois: dimension mismatch");
  }

  Eigen::MatrixXd delta(L, N);
  for (int i = 0; i < L; ++i) {
    delta(i, 0) = kInf;  // the base station takes no POI
    for (int j = 1; j < N; ++j) {
      delta(i, j) = (pois.row(i) - initial_positions.row(j)).norm();
    }
  }

  AssignmentMatrix out;
  out.poi_to_robot = hungarian(delta);
  out.S = Eigen::MatrixXd::Zero(L, N);
  out.robot_to_poi.assign(N, -1);
  for (int i = 0; i < L; ++i) {
    out.S(i, out.poi_to_robot[i]) = 1.0;
    out.robot_to_poi[out.poi_to_robot[i]] = i;
  }
  return out;
}

Eigen::RowVectorXd relay_gradient_term(const Eigen::MatrixXd& connectivity,
                                       const AssignmentMatrix& assignment, int horizon,
                                       int robot_count, int dim) {
  const int nv = robot_count * dim;
  if (connectivity.rows() != horizon || connectivity.cols() != horizon * nv) {
    throw std::invalid_argument("relay_gradient_term: connectivity shape mismatch");
  }
  Eigen::RowVectorXd r = -connectivity.row(horizon - 1);
  for (int i = 0; i < robot_count; ++i) {
    if (assignment.robot_to_poi[i] < 0) continue;
    for (int k = 0; k < horizon; ++k) r.segment(k * nv + i * dim, dim).setZero();
  }
  return r;
}

QpObjective inspection_objective(const AssignmentMatrix& assignment,
                                 const Eigen::VectorXd& stacked_positions,
                                 const Eigen::MatrixXd& pois, const HorizonModel& model,
                                 double zeta, double eta) {
  const int L = static_cast<int>(assignment.S.rows());
  const int N = static_cast<int>(assignment.S.cols());
  if (stacked_positions.size() % N != 0) {
    throw std::invalid_argument("inspection_objective: position size mismatch");
  }
  const int n = static_cast<int>(stacked_positions.size()) / N;
  const int K = static_cast<int>(model.connectivity.rows());
  const int nv = K * N * n;
  if (model.lifting.rows() != nv) {
    throw std::invalid_argument("inspection_objective: model/horizon mismatch");
  }

  // Selection of assigned-robot coordinates, lifted over the horizon:
  // S_tilde = (I_K (x) (S (x) I_n)) B = L_K (x) (S (x) I_n).
  const Eigen::MatrixXd sel = kron(assignment.S, Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd s_tilde = Eigen::MatrixXd::Zero(K * L * n, nv);
  for (int k = 0; k < K; ++k) {
    for (int h = 0; h <= k; ++h) {
      s_tilde.block(k * L * n, h * N * n, L * n, N * n) = sel;
    }
  }

  Eigen::VectorXd gamma(L * n);
  for (int i = 0; i < L; ++i) gamma.segment(i * n, n) = pois.row(i).transpose();
  const Eigen::VectorXd err = gamma - sel * stacked_positions;
  Eigen::VectorXd e_s(K * L * n);
  for (int k = 0; k < K; ++k) e_s.segment(k * L * n, L * n) = err;

  const Eigen::RowVectorXd r =
      relay_gradient_term(model.connectivity, assignment, K, N, n);

  QpObjective obj;
  obj.H = s_tilde.transpose() * s_tilde;
  obj.H.diagonal().array() += zeta;
  obj.g = -s_tilde.transpose() * e_s + eta * r.transpose();
  return obj;
}

CisObjective cis_objective(const Eigen::VectorXd& u_ref, int horizon, const CisParams& cis,
                           double lambda2, const Eigen::MatrixXd& connectivity) {
  cis.validate();
  const int nv = static_cast<int>(u_ref.size());
  const int nu = horizon * nv;
  if (connectivity.rows() != horizon || connectivity.cols() != nu) {
    throw std::invalid_argument("cis_objective: connectivity shape mismatch");
  }
  if (cis.slack_weight.rows() != horizon || cis.slack_weight.cols() != horizon) {
    throw std::invalid_argument("cis_objective: slack weight must be K x K");
  }

  CisObjective out;
  out.slack_dim = horizon;
  const int total = nu + horizon;

  out.cost.H = Eigen::MatrixXd::Zero(total, total);
  out.cost.H.topLeftCorner(nu, nu).setIdentity();
  // s'H_s s contributes 2 H_s to the quadratic form 1/2 x'Hx.
  out.cost.H.bottomRightCorner(horizon, horizon) =
      cis.slack_weight + cis.slack_weight.transpose();
  out.cost.g = Eigen::VectorXd::Zero(total);
  for (int k = 0; k < horizon; ++k) out.cost.g.segment(k * nv, nv) = -u_ref;

  // Soft rows: M U >= (soft - lambda2) 1 - s  <=>  -M U - s <= lambda2 - soft.
  out.soft_rows = Eigen::MatrixXd::Zero(horizon, total);
  out.soft_rows.leftCols(nu) = -connectivity;
  out.soft_rows.rightCols(horizon) = -Eigen::MatrixXd::Identity(horizon, horizon);
  out.soft_bound = Eigen::VectorXd::Constant(horizon, lambda2 - cis.soft_bound);

  // Hard rows: -M U <= lambda2 - hard, no slack coupling.
  out.hard_rows = Eigen::MatrixXd::Zero(horizon, total);
  out.hard_rows.leftCols(nu) = -connectivity;
  out.hard_bound = Eigen::VectorXd::Constant(horizon, lambda2 - cis.hard_bound);
  return out;
}

Eigen::VectorXd stochastic_reference(const Eigen::VectorXd& prev_applied_u,
                                     const Eigen::MatrixXd& noise_cov, int dim, Rng& rng) {
  if (dim <= 0 || prev_applied_u.size() % dim != 0) {
    throw std::invalid_argument("stochastic_reference: size not divisible by dim");
  }
  if (noise_cov.rows() != dim || noise_cov.cols() != dim) {
    throw std::invalid_argument("stochastic_reference: covariance must be dim x dim");
  }
  if ((noise_cov - noise_cov.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw std::invalid_argument("stochastic_reference: covariance must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(noise_cov);
  if (es.eigenvalues().minCoeff() < -1e-10) {
    throw std::invalid_argument("stochastic_reference: covariance must be PSD");
  }
  const Eigen::MatrixXd factor =
      es.eigenvectors() *
      es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
      es.eigenvectors().transpose();

  const int N = static_cast<int>(prev_applied_u.size()) / dim;
  Eigen::VectorXd ref = Eigen::VectorXd::Zero(prev_applied_u.size());
  for (int i = 1; i < N; ++i) {
    Eigen::VectorXd z(dim);
    for (int r = 0; r < dim; ++r) z(r) = rng.normal();
    ref.segment(i * dim, dim) = prev_applied_u.segment(i * dim, dim) + factor * z;
  }
  return ref;
}

}  // namespace catp
