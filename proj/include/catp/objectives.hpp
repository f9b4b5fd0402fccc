#pragma once

#include <Eigen/Dense>
#include <vector>

#include "catp/horizon.hpp"
#include "catp/rng.hpp"
#include "catp/types.hpp"

namespace catp {

// POI-to-robot matching. Row i of S has a single 1 in the column of the robot
// assigned to POI i; the base-station column (robot 0) is always zero.
struct AssignmentMatrix {
  Eigen::MatrixXd S;               // L x N, binary
  std::vector<int> poi_to_robot;   // L
  std::vector<int> robot_to_poi;   // N, -1 when unassigned
};

struct InspectionParams {
  Eigen::MatrixXd pois;  // L x n
  double zeta = 0.1;     // input damping
  double eta = 1e3;      // relay gain

  void validate(int robot_count) const {
    if (pois.rows() >= robot_count) {
      throw std::invalid_argument("InspectionParams: need fewer POIs than robots");
    }
    if (!(zeta >= 0.0) || !(eta >= 0.0) || !std::isfinite(zeta) || !std::isfinite(eta)) {
      throw std::invalid_argument("InspectionParams: weights must be finite and >= 0");
    }
  }
};

struct CisParams {
  double soft_bound = 1.0;    // soft Fiedler bound, slack-penalized
  double hard_bound = 0.25;   // hard Fiedler bound
  Eigen::MatrixXd slack_weight;   // K x K PSD
  Eigen::MatrixXd ref_noise_cov;  // n x n, per-robot reference noise

  void validate() const {
    if (!(hard_bound > 0.0) || soft_bound < hard_bound) {
      throw std::invalid_argument("CisParams: need soft_bound >= hard_bound > 0");
    }
  }
};

// Quadratic cost 1/2 x'Hx + g'x.
struct QpObjective {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
};

// Minimum-cost row-to-column matching (rows <= columns). Infinite entries mark
// forbidden pairs; throws NoFeasibleAssignmentError when no finite-cost
// perfect matching exists. Cost ties resolve to the lowest column index.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

// Matches each POI to the nearest-by-total-cost robot; robot 0 is the base
// station and is never assigned.
AssignmentMatrix assign_pois(const Eigen::MatrixXd& initial_positions,
                             const Eigen::MatrixXd& pois);

// Relay steering row: the final connectivity row of the horizon, restricted to
// robots without a POI (assigned coordinates zeroed) and negated.
Eigen::RowVectorXd relay_gradient_term(const Eigen::MatrixXd& connectivity,
                                       const AssignmentMatrix& assignment, int horizon,
                                       int robot_count, int dim);

// Tracking cost over U: pulls assigned robots toward their POIs, damps all
// inputs by zeta, and steers relay robots up the Fiedler gradient with gain
// eta.
QpObjective inspection_objective(const AssignmentMatrix& assignment,
                                 const Eigen::VectorXd& stacked_positions,
                                 const Eigen::MatrixXd& pois, const HorizonModel& model,
                                 double zeta, double eta);

// Deviation cost over [U, s]: stays close to the lifted reference, penalizes
// slack on the soft connectivity rows. Hard rows carry no slack.
struct CisObjective {
  QpObjective cost;               // over KNn + K variables
  Eigen::MatrixXd soft_rows;      // K x (KNn + K), <= form
  Eigen::VectorXd soft_bound;     // K
  Eigen::MatrixXd hard_rows;      // K x (KNn + K), <= form
  Eigen::VectorXd hard_bound;     // K
  int slack_dim = 0;
};

CisObjective cis_objective(const Eigen::VectorXd& u_ref, int horizon, const CisParams& cis,
                           double lambda2, const Eigen::MatrixXd& connectivity);

// Random-walk reference: u_ref_i = prev_u_i + noise for every robot except the
// stationary base station (robot 0). Throws on non-PSD covariance.
Eigen::VectorXd stochastic_reference(const Eigen::VectorXd& prev_applied_u,
                                     const Eigen::MatrixXd& noise_cov, int dim, Rng& rng);

}  // namespace catp
