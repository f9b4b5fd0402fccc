#include "catp/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace catp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double fiedler_value_of(const PositionState& state, const LinkParams& link) {
  return fiedler_pair(build_laplacian(build_adjacency(state, link))).value;
}

Eigen::MatrixXd generate_initial_positions(const ScenarioConfig& config, Rng& rng) {
  const int N = config.robot_count;
  const int n = config.dim;
  double radius = config.link.d50;
  const Eigen::VectorXd radii = Eigen::VectorXd::Constant(N, config.body_radius);

  for (int attempt = 0; attempt < 100; ++attempt) {
    Eigen::MatrixXd positions = Eigen::MatrixXd::Zero(N, n);
    for (int i = 1; i < N; ++i) {
      if (n == 2) {
        const double r = radius * std::sqrt(rng.uniform());
        const double theta = 2.0 * M_PI * rng.uniform();
        positions(i, 0) = r * std::cos(theta);
        positions(i, 1) = r * std::sin(theta);
      } else {
        for (int c = 0; c < n; ++c) positions(i, c) = rng.uniform(-radius, radius);
      }
    }
    const PositionState state{positions, radii};
    if (min_separation_margin(state, config.bodies()) <= 0.0) {
      continue;  // collision-infeasible draw; retry at the same radius
    }
    if (fiedler_value_of(state, config.link) >= config.lambda2_min) {
      return positions;
    }
    radius *= 0.9;  // connected-enough samples need a tighter disc
  }
  throw std::runtime_error(
      "run_scenario: failed to generate a feasible initial configuration");
}

Eigen::MatrixXd sample_pois(const ScenarioConfig& config, Rng& rng) {
  const double radius =
      config.poi_radius > 0.0 ? config.poi_radius : 2.0 * config.link.d50;
  Eigen::MatrixXd pois(config.poi_count, config.dim);
  for (int i = 0; i < config.poi_count; ++i) {
    if (config.dim == 2) {
      const double r = radius * std::sqrt(rng.uniform());
      const double theta = 2.0 * M_PI * rng.uniform();
      pois(i, 0) = r * std::cos(theta);
      pois(i, 1) = r * std::sin(theta);
    } else {
      for (int c = 0; c < config.dim; ++c) pois(i, c) = rng.uniform(-radius, radius);
    }
  }
  return pois;
}

// Receding-horizon warm start: drop the applied block, repeat the last one.
Eigen::VectorXd shifted_warm_start(const Eigen::VectorXd& solution, int horizon,
                                   int block, int slack_dim) {
  Eigen::VectorXd warm(solution.size());
  for (int k = 0; k < horizon; ++k) {
    const int src = std::min(k + 1, horizon - 1);
    warm.segment(k * block, block) = solution.segment(src * block, block);
  }
  const int base = horizon * block;
  for (int k = 0; k < slack_dim; ++k) {
    warm(base + k) = solution(base + std::min(k + 1, slack_dim - 1));
  }
  return warm;
}

struct PlannerOutcome {
  Eigen::VectorXd applied;
  StepStatus status = StepStatus::Optimal;
  double slack_max = 0.0;
  bool zero_fallback = false;
};

PlannerOutcome solve_approximate(const QpProblem& qp, int first_block, int slack_dim,
                                 StepContext& context) {
  QpSettings settings;
  if (context.warm_start && context.warm_start->size() == qp.num_vars()) {
    settings.warm_start = context.warm_start;
  }
  const int dual_size = qp.num_constraints() + qp.num_vars();
  if (context.warm_dual && context.warm_dual->size() == dual_size) {
    settings.warm_start_dual = context.warm_dual;
  }
  const QpSolution sol = solve(qp, settings);

  // An iteration-capped solve whose iterate is still tolerance-feasible is a
  // usable (merely suboptimal) input; reject only genuine violations.
  bool usable = sol.status == QpStatus::Optimal;
  if (sol.status == QpStatus::MaxIterations) {
    const Eigen::VectorXd clamped = sol.x.cwiseMax(qp.lb).cwiseMin(qp.ub);
    const double violation =
        qp.num_constraints() > 0 ? (qp.A * clamped - qp.b).maxCoeff() : 0.0;
    usable = violation <= 1e-6;
  }

  PlannerOutcome out;
  if (usable) {
    // Clamp solver-tolerance noise so applied inputs respect the box exactly.
    out.applied = sol.x.head(first_block)
                      .cwiseMax(qp.lb.head(first_block))
                      .cwiseMin(qp.ub.head(first_block));
    if (slack_dim > 0) out.slack_max = sol.x.tail(slack_dim).maxCoeff();
    out.status = sol.status == QpStatus::Optimal ? StepStatus::Optimal
                                                 : StepStatus::MaxIterations;
    const int horizon = (qp.num_vars() - slack_dim) / first_block;
    context.warm_start = shifted_warm_start(sol.x, horizon, first_block, slack_dim);
    Eigen::VectorXd dual(dual_size);
    dual.head(qp.num_constraints()) = sol.ineq_multipliers;
    dual.tail(qp.num_vars()) = sol.bound_multipliers;
    context.warm_dual = dual;
  } else {
    out.applied = Eigen::VectorXd::Zero(first_block);
    out.status = sol.status == QpStatus::PrimalInfeasible ? StepStatus::PrimalInfeasible
                                                          : StepStatus::MaxIterations;
    out.zero_fallback = true;
    context.warm_start.reset();
    context.warm_dual.reset();
  }
  return out;
}

}  // namespace

const char* to_string(StepStatus status) {
  switch (status) {
    case StepStatus::Optimal: return "optimal";
    case StepStatus::PrimalInfeasible: return "primal_infeasible";
    case StepStatus::MaxIterations: return "max_iterations";
    case StepStatus::Bypassed: return "bypassed";
    case StepStatus::BaselineFailed: return "baseline_failed";
  }
  return "unknown";
}

BodyParams ScenarioConfig::bodies() const {
  BodyParams b;
  b.radii = Eigen::VectorXd::Constant(robot_count, body_radius);
  b.clearance = clearance;
  return b;
}

HorizonParams ScenarioConfig::effective_horizon() const {
  HorizonParams h = horizon;
  if (pin_base_station) {
    Eigen::VectorXd bounds = h.per_robot_u_max
                                 ? *h.per_robot_u_max
                                 : Eigen::VectorXd::Constant(robot_count, h.u_max);
    bounds(0) = 0.0;
    h.per_robot_u_max = bounds;
  }
  return h;
}

CisParams ScenarioConfig::cis_params() const {
  CisParams c;
  c.soft_bound = lambda2_soft;
  c.hard_bound = lambda2_min;
  c.slack_weight = hs_scale * Eigen::MatrixXd::Identity(horizon.K, horizon.K);
  c.ref_noise_cov = sigma_v_scale * Eigen::MatrixXd::Identity(dim, dim);
  return c;
}

void ScenarioConfig::validate() const {
  link.validate();
  if (robot_count < 2) throw std::invalid_argument("ScenarioConfig: need >= 2 robots");
  if (dim != 2 && dim != 3) throw std::invalid_argument("ScenarioConfig: dim must be 2 or 3");
  if (!(lambda2_min > 0.0)) throw std::invalid_argument("ScenarioConfig: lambda2_min must be > 0");
  if (mode == ScenarioMode::Cis && lambda2_soft < lambda2_min) {
    throw std::invalid_argument("ScenarioConfig: lambda2_soft must be >= lambda2_min");
  }
  if (mode == ScenarioMode::Inspection && poi_count >= robot_count) {
    throw std::invalid_argument("ScenarioConfig: need fewer POIs than robots");
  }
  if (body_radius < 0.0 || clearance < 0.0) {
    throw std::invalid_argument("ScenarioConfig: negative body geometry");
  }
  if (iterations < 1) throw std::invalid_argument("ScenarioConfig: iterations must be >= 1");
  horizon.validate(robot_count);
  if (use_baseline && (horizon.K != 1 || robot_count > 6)) {
    throw std::invalid_argument("ScenarioConfig: baseline requires K = 1 and N <= 6");
  }
  if (initial_positions &&
      (initial_positions->rows() != robot_count || initial_positions->cols() != dim)) {
    throw std::invalid_argument("ScenarioConfig: initial_positions shape mismatch");
  }
  if (pois && (pois->rows() != poi_count || pois->cols() != dim)) {
    throw std::invalid_argument("ScenarioConfig: pois shape mismatch");
  }
}

TimingStats runtime_stats(const std::vector<double>& samples_ms) {
  if (samples_ms.empty()) throw std::invalid_argument("runtime_stats: empty sample");
  std::vector<double> sorted = samples_ms;
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();

  TimingStats s;
  s.min = sorted.front();
  s.max = sorted.back();
  s.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);
  double acc = 0.0;
  for (double v : sorted) acc += (v - s.mean) * (v - s.mean);
  s.variance = acc / static_cast<double>(n);
  return s;
}

std::pair<PositionState, StepRecord> step(const PositionState& state,
                                          const ScenarioConfig& config,
                                          StepContext& context, int k) {
  const auto t0 = std::chrono::steady_clock::now();
  const int N = config.robot_count;
  const int n = config.dim;
  const int nv = N * n;
  const int K = config.horizon.K;
  const BodyParams bodies = config.bodies();

  StepRecord rec;
  rec.k = k;
  rec.positions = state.stacked();
  rec.min_margin = min_separation_margin(state, bodies);

  const CommGraphSnapshot snapshot = build_snapshot(state, config.link);
  rec.lambda2_exact = snapshot.fiedler_value;
  rec.degenerate_eigenspace = snapshot.degenerate;

  PlannerOutcome outcome;
  if (config.mode == ScenarioMode::Cis) {
    const Eigen::VectorXd u_ref = stochastic_reference(
        context.prev_input, config.cis_params().ref_noise_cov, n, context.rng);
    if (!config.cis_enabled) {
      outcome.applied = u_ref;
      outcome.status = StepStatus::Bypassed;
    } else if (config.use_baseline) {
      context.cis_reference = u_ref;
      bool converged = false;
      outcome.applied = nonlinear_baseline_step(state, config, context, &converged);
      outcome.status = converged ? StepStatus::Optimal : StepStatus::BaselineFailed;
      if (!converged) outcome.applied.setZero();
    } else {
      const HalfspaceSystem cells =
          buffered_voronoi(state, bodies, neighbor_pairs(state, config.neighbor_mode));
      rec.cells_relaxed = cells.relaxed;
      const HorizonModel model = build_horizon_model(rec.positions, snapshot.gradient, K);
      const CisObjective obj = cis_objective(u_ref, K, config.cis_params(),
                                             snapshot.fiedler_value, model.connectivity);
      const InequalitySystem coll = collision_horizon_constraint(cells, rec.positions, K);
      const int total = K * nv + obj.slack_dim;

      QpProblem qp;
      qp.H = obj.cost.H;
      qp.g = obj.cost.g;
      qp.A = Eigen::MatrixXd::Zero(2 * K + coll.matrix.rows(), total);
      qp.A.topRows(K) = obj.hard_rows;
      qp.A.middleRows(K, K) = obj.soft_rows;
      qp.A.bottomLeftCorner(coll.matrix.rows(), K * nv) = coll.matrix;
      qp.b.resize(qp.A.rows());
      qp.b.head(K) = obj.hard_bound;
      qp.b.segment(K, K) = obj.soft_bound;
      qp.b.tail(coll.bound.size()) = coll.bound;

      const BoxBounds box = input_box(config.effective_horizon(), N, n);
      qp.lb.resize(total);
      qp.ub.resize(total);
      qp.lb.head(K * nv) = box.lower;
      qp.ub.head(K * nv) = box.upper;
      qp.lb.tail(obj.slack_dim).setZero();
      qp.ub.tail(obj.slack_dim).setConstant(kInf);

      outcome = solve_approximate(qp, nv, obj.slack_dim, context);
    }
    context.prev_input = outcome.applied;
  } else {
    if (!config.pois) {
      throw std::invalid_argument("step: inspection mode requires POIs in the config");
    }
    if (config.use_baseline) {
      bool converged = false;
      outcome.applied = nonlinear_baseline_step(state, config, context, &converged);
      outcome.status = converged ? StepStatus::Optimal : StepStatus::BaselineFailed;
      if (!converged) outcome.applied.setZero();
    } else {
      const HalfspaceSystem cells =
          buffered_voronoi(state, bodies, neighbor_pairs(state, config.neighbor_mode));
      rec.cells_relaxed = cells.relaxed;
      const HorizonModel model = build_horizon_model(rec.positions, snapshot.gradient, K);
      const QpObjective obj = inspection_objective(
          context.assignment, rec.positions, *config.pois, model, config.zeta, config.eta);
      const InequalitySystem fied = fiedler_horizon_constraint(
          snapshot.fiedler_value, snapshot.gradient, config.lambda2_min, K);
      const InequalitySystem coll = collision_horizon_constraint(cells, rec.positions, K);

      QpProblem qp;
      qp.H = obj.H;
      qp.g = obj.g;
      qp.A.resize(fied.matrix.rows() + coll.matrix.rows(), K * nv);
      qp.A.topRows(fied.matrix.rows()) = fied.matrix;
      qp.A.bottomRows(coll.matrix.rows()) = coll.matrix;
      qp.b.resize(qp.A.rows());
      qp.b.head(fied.bound.size()) = fied.bound;
      qp.b.tail(coll.bound.size()) = coll.bound;
      const BoxBounds box = input_box(config.effective_horizon(), N, n);
      qp.lb = box.lower;
      qp.ub = box.upper;

      outcome = solve_approximate(qp, nv, 0, context);
    }
  }

  rec.input = outcome.applied;
  rec.status = outcome.status;
  rec.slack_max = outcome.slack_max;
  rec.zero_fallback = outcome.zero_fallback;
  rec.lambda2_pred =
      predict_fiedler(snapshot.fiedler_value, snapshot.gradient, outcome.applied);
  rec.solve_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
          .count();

  PositionState next = state;
  for (int i = 0; i < N; ++i) {
    next.positions.row(i) += outcome.applied.segment(i * n, n).transpose();
  }
  return {std::move(next), std::move(rec)};
}

ScenarioResult run_scenario(const ScenarioConfig& config) {
  config.validate();
  ScenarioResult result;
  StepContext context(config.seed);

  const Eigen::MatrixXd initial = config.initial_positions
                                      ? *config.initial_positions
                                      : generate_initial_positions(config, context.rng);
  ScenarioConfig cfg = config;
  cfg.initial_positions = initial;
  if (config.mode == ScenarioMode::Inspection) {
    cfg.pois = config.pois ? *config.pois : sample_pois(config, context.rng);
    context.assignment = assign_pois(initial, *cfg.pois);
    result.trace.pois = *cfg.pois;
    result.trace.assignment = context.assignment;
  }
  result.trace.initial_positions = initial;
  context.prev_input = Eigen::VectorXd::Zero(config.robot_count * config.dim);

  PositionState state{initial, cfg.bodies().radii};
  state.validate();

  for (int k = 0; k < cfg.iterations; ++k) {
    try {
      auto [next, rec] = step(state, cfg, context, k);
      result.trace.steps.push_back(std::move(rec));
      state = std::move(next);
    } catch (const std::exception& e) {
      result.trace.abort_reason = e.what();
      break;
    }
  }
  result.trace.terminal_positions = state.stacked();

  RunReport& report = result.report;
  std::vector<double> times;
  report.min_lambda2 = kInf;
  report.min_margin = kInf;
  for (const StepRecord& rec : result.trace.steps) {
    times.push_back(rec.solve_ms);
    report.min_lambda2 = std::min(report.min_lambda2, rec.lambda2_exact);
    report.min_margin = std::min(report.min_margin, rec.min_margin);
    if (rec.zero_fallback || rec.status == StepStatus::BaselineFailed) {
      ++report.infeasible_steps;
    }
    if (rec.lambda2_exact < cfg.lambda2_min - 1e-9) ++report.bound_violation_steps;
    if (rec.min_margin < -1e-6) ++report.separation_violation_steps;
  }
  if (!times.empty()) report.timing = runtime_stats(times);

  if (cfg.mode == ScenarioMode::Inspection && !result.trace.steps.empty()) {
    report.terminal_poi_errors.resize(cfg.poi_count);
    for (int i = 0; i < cfg.poi_count; ++i) {
      const int robot = context.assignment.poi_to_robot[i];
      const Eigen::VectorXd terminal =
          result.trace.terminal_positions.segment(robot * cfg.dim, cfg.dim);
      report.terminal_poi_errors(i) = (terminal - cfg.pois->row(i).transpose()).norm();
    }
  }
  return result;
}

VerificationReport verify_trace(const SimTrace& trace, const ScenarioConfig& config) {
  VerificationReport rep;
  rep.min_lambda2 = kInf;
  rep.min_separation_margin = kInf;
  const BodyParams bodies = config.bodies();

  auto check_positions = [&](const Eigen::VectorXd& stacked) {
    const PositionState state =
        PositionState::from_stacked(stacked, config.dim, bodies.radii);
    const double lambda2 = fiedler_value_of(state, config.link);
    rep.min_lambda2 = std::min(rep.min_lambda2, lambda2);
    const double shortfall = config.lambda2_min - lambda2;
    rep.max_bound_shortfall = std::max(rep.max_bound_shortfall, std::max(0.0, shortfall));
    if (shortfall > rep.lambda2_tolerance) ++rep.lambda2_violations;
    const double margin = min_separation_margin(state, bodies);
    rep.min_separation_margin = std::min(rep.min_separation_margin, margin);
    if (margin < -rep.separation_tolerance) ++rep.separation_violations;
  };

  for (const StepRecord& rec : trace.steps) check_positions(rec.positions);
  if (trace.terminal_positions.size() > 0) check_positions(trace.terminal_positions);
  return rep;
}

CompareReport compare_scenario(const ScenarioConfig& config) {
  ScenarioConfig approx_cfg = config;
  approx_cfg.use_baseline = false;
  ScenarioConfig baseline_cfg = config;
  baseline_cfg.use_baseline = true;
  baseline_cfg.validate();

  const ScenarioResult approx = run_scenario(approx_cfg);
  const ScenarioResult baseline = run_scenario(baseline_cfg);

  CompareReport rep;
  rep.approx_report = approx.report;
  rep.baseline_report = baseline.report;
  rep.median_ms_approx = approx.report.timing.median;
  rep.median_ms_baseline = baseline.report.timing.median;
  rep.median_ratio =
      rep.median_ms_approx > 0.0 ? rep.median_ms_baseline / rep.median_ms_approx : kInf;
  rep.min_lambda2_approx = approx.report.min_lambda2;
  rep.min_lambda2_baseline = baseline.report.min_lambda2;
  for (const StepRecord& rec : baseline.trace.steps) {
    if (rec.status == StepStatus::BaselineFailed) ++rep.baseline_failed_steps;
  }

  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < approx.trace.initial_positions.rows(); ++i) {
    pts.push_back(approx.trace.initial_positions.row(i).transpose());
  }
  for (int i = 0; i < approx.trace.pois.rows(); ++i) {
    pts.push_back(approx.trace.pois.row(i).transpose());
  }
  for (size_t a = 0; a < pts.size(); ++a) {
    for (size_t b = a + 1; b < pts.size(); ++b) {
      rep.scenario_diameter = std::max(rep.scenario_diameter, (pts[a] - pts[b]).norm());
    }
  }

  if (config.mode == ScenarioMode::Inspection) {
    for (int i = 0; i < approx.trace.pois.rows(); ++i) {
      const int robot = approx.trace.assignment.poi_to_robot[i];
      const Eigen::VectorXd pa =
          approx.trace.terminal_positions.segment(robot * config.dim, config.dim);
      const Eigen::VectorXd pb =
          baseline.trace.terminal_positions.segment(robot * config.dim, config.dim);
      rep.terminal_assigned_diff = std::max(rep.terminal_assigned_diff, (pa - pb).norm());
    }
  }
  return rep;
}

}  // namespace catp
