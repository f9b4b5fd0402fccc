#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "catp/collision_geometry.hpp"
#include "catp/comm_model.hpp"
#include "catp/horizon.hpp"
#include "catp/objectives.hpp"
#include "catp/qp.hpp"
#include "catp/rng.hpp"

namespace catp {

enum class ScenarioMode { Inspection, Cis };

enum class StepStatus {
  Optimal,
  PrimalInfeasible,
  MaxIterations,
  Bypassed,        // CIS disabled: the raw reference was applied
  BaselineFailed,  // nonlinear oracle did not converge; zero input applied
};

const char* to_string(StepStatus status);

struct ScenarioConfig {
  ScenarioMode mode = ScenarioMode::Inspection;
  int robot_count = 10;  // N
  int poi_count = 4;     // L
  int dim = 2;           // n
  double dt = 0.4;       // step period [s]; metadata only, inputs are position deltas
  LinkParams link;
  double lambda2_min = 0.1;
  double lambda2_soft = 1.0;
  double body_radius = 0.1;
  double clearance = 10.0;  // eps
  HorizonParams horizon;
  double zeta = 0.1;
  double eta = 1e3;
  double hs_scale = 0.5;
  double sigma_v_scale = 0.1;
  int iterations = 400;
  std::uint64_t seed = 1;
  double poi_radius = 0.0;  // sampling disc radius; 0 -> 2 * d50
  bool cis_enabled = true;
  bool use_baseline = false;
  bool pin_base_station = true;
  NeighborMode neighbor_mode = NeighborMode::AllPairs;
  std::optional<Eigen::MatrixXd> initial_positions;  // N x n
  std::optional<Eigen::MatrixXd> pois;               // L x n

  BodyParams bodies() const;
  // Horizon params with the base station pinned when requested.
  HorizonParams effective_horizon() const;
  CisParams cis_params() const;
  void validate() const;
};

struct StepRecord {
  int k = 0;
  Eigen::VectorXd positions;  // stacked, before the input is applied
  Eigen::VectorXd input;      // applied input
  double lambda2_exact = 0.0;
  double lambda2_pred = 0.0;  // first-order prediction for the applied input
  StepStatus status = StepStatus::Optimal;
  double solve_ms = 0.0;  // assembly + solve
  double min_margin = 0.0;
  double slack_max = 0.0;
  bool cells_relaxed = false;
  bool degenerate_eigenspace = false;
  bool zero_fallback = false;  // planner rejected the solve and applied zero input
};

struct SimTrace {
  std::vector<StepRecord> steps;
  Eigen::MatrixXd initial_positions;
  Eigen::MatrixXd pois;         // zero rows outside inspection mode
  AssignmentMatrix assignment;  // empty outside inspection mode
  Eigen::VectorXd terminal_positions;
  std::string abort_reason;  // non-empty if the run stopped early
};

struct TimingStats {
  double min = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double max = 0.0;
  double variance = 0.0;
};

// Order statistics over per-iteration times. Throws on an empty sample.
TimingStats runtime_stats(const std::vector<double>& samples_ms);

struct RunReport {
  TimingStats timing;
  double min_lambda2 = 0.0;
  double min_margin = 0.0;
  Eigen::VectorXd terminal_poi_errors;  // per POI; empty outside inspection
  int infeasible_steps = 0;
  int bound_violation_steps = 0;      // exact lambda2 below the hard bound
  int separation_violation_steps = 0; // margin below -1e-6
};

// State carried across receding-horizon steps.
struct StepContext {
  AssignmentMatrix assignment;
  Eigen::VectorXd prev_input;     // reference recursion (CIS)
  Eigen::VectorXd cis_reference;  // reference of the step in flight (baseline path)
  std::optional<Eigen::VectorXd> warm_start;
  std::optional<Eigen::VectorXd> warm_dual;
  Rng rng;

  explicit StepContext(std::uint64_t seed) : rng(seed) {}
};

// One planner iteration: snapshot, cells, horizon model, objective, QP solve,
// then apply the first input block. Solver infeasibility applies zero input
// and flags the step.
std::pair<PositionState, StepRecord> step(const PositionState& state,
                                          const ScenarioConfig& config,
                                          StepContext& context, int k);

struct ScenarioResult {
  SimTrace trace;
  RunReport report;
};

// Seeded closed-loop run; deterministic given config and seed.
ScenarioResult run_scenario(const ScenarioConfig& config);

struct VerificationReport {
  double min_lambda2 = 0.0;
  double max_bound_shortfall = 0.0;  // max over steps of (lambda2_min - lambda2)+
  int lambda2_violations = 0;        // steps beyond lambda2_tolerance
  double min_separation_margin = 0.0;
  int separation_violations = 0;  // steps beyond separation_tolerance
  double lambda2_tolerance = 0.02;
  double separation_tolerance = 1e-6;
};

// Post-hoc exact check: recomputes the Fiedler value and pairwise margins at
// every recorded step via full eigendecomposition.
VerificationReport verify_trace(const SimTrace& trace, const ScenarioConfig& config);

// Desk-scale oracle (N <= 6, K = 1): solves the one-step problem with the
// exact Fiedler and pairwise-distance constraints by an augmented-Lagrangian
// method over the same objective. Sets *converged to false when the returned
// input misses the exact constraints by more than 1e-4.
Eigen::VectorXd nonlinear_baseline_step(const PositionState& state,
                                        const ScenarioConfig& config,
                                        const StepContext& context, bool* converged);

struct CompareReport {
  RunReport approx_report;
  RunReport baseline_report;
  double median_ms_approx = 0.0;
  double median_ms_baseline = 0.0;
  double median_ratio = 0.0;
  double terminal_assigned_diff = 0.0;  // max over assigned robots
  double scenario_diameter = 0.0;       // max pairwise distance, starts and POIs
  double min_lambda2_approx = 0.0;
  double min_lambda2_baseline = 0.0;
  int baseline_failed_steps = 0;
};

// Runs the approximate planner and the nonlinear baseline on the same seeded
// scenario and reports terminal agreement plus timing.
CompareReport compare_scenario(const ScenarioConfig& config);

}  // namespace catp
