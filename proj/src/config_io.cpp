#include "catp/config_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace catp {

namespace {

using nlohmann::json;

Eigen::MatrixXd parse_matrix(const json& rows, int cols, const std::string& key) {
  Eigen::MatrixXd out(rows.size(), cols);
  int r = 0;
  for (const auto& row : rows) {
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      throw std::invalid_argument("config: bad row in " + key);
    }
    int c = 0;
    for (const auto& v : row) out(r, c++) = v.get<double>();
    ++r;
  }
  return out;
}

const char* axis_name(int axis) {
  static const char* names[] = {"x", "y", "z"};
  return names[axis];
}

json timing_to_json(const TimingStats& t) {
  return json{{"min", t.min},
              {"median", t.median},
              {"mean", t.mean},
              {"max", t.max},
              {"var", t.variance}};
}

json run_report_to_json(const RunReport& r) {
  json j;
  j["solve_ms"] = timing_to_json(r.timing);
  j["min_lambda2"] = r.min_lambda2;
  j["min_margin"] = r.min_margin;
  j["infeasible_steps"] = r.infeasible_steps;
  j["bound_violation_steps"] = r.bound_violation_steps;
  j["separation_violation_steps"] = r.separation_violation_steps;
  j["terminal_poi_errors"] = json::array();
  for (Eigen::Index i = 0; i < r.terminal_poi_errors.size(); ++i) {
    j["terminal_poi_errors"].push_back(r.terminal_poi_errors(i));
  }
  return j;
}

}  // namespace

ScenarioConfig parse_config(const std::string& json_text) {
  const json j = json::parse(json_text);
  ScenarioConfig cfg;

  if (j.contains("mode")) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "inspection") {
      cfg.mode = ScenarioMode::Inspection;
    } else if (mode == "cis") {
      cfg.mode = ScenarioMode::Cis;
      cfg.lambda2_min = 0.25;
      cfg.iterations = 1000;
    } else {
      throw std::invalid_argument("config: mode must be 'inspection' or 'cis'");
    }
  }

  cfg.robot_count = j.value("N", cfg.robot_count);
  cfg.poi_count = j.value("L", cfg.poi_count);
  cfg.dim = j.value("n", cfg.dim);
  cfg.dt = j.value("dt", cfg.dt);
  cfg.link.d50 = j.value("d50", cfg.link.d50);
  cfg.link.alpha = j.value("alpha", cfg.link.alpha);
  cfg.lambda2_min = j.value("lambda2_min", cfg.lambda2_min);
  cfg.lambda2_soft = j.value("lambda2_soft", cfg.lambda2_soft);
  cfg.body_radius = j.value("r", cfg.body_radius);
  cfg.clearance = j.value("eps", cfg.clearance);
  cfg.zeta = j.value("zeta", cfg.zeta);
  cfg.eta = j.value("eta", cfg.eta);
  cfg.hs_scale = j.value("Hs_scale", cfg.hs_scale);
  cfg.sigma_v_scale = j.value("sigma_v_scale", cfg.sigma_v_scale);
  cfg.horizon.K = j.value("K", cfg.horizon.K);
  cfg.horizon.u_max = j.value("u_max", cfg.horizon.u_max);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.iterations = j.value("iterations", cfg.iterations);
  cfg.use_baseline = j.value("baseline", cfg.use_baseline);
  cfg.cis_enabled = j.value("cis_enabled", cfg.cis_enabled);
  cfg.poi_radius = j.value("poi_radius", cfg.poi_radius);
  cfg.pin_base_station = j.value("pin_base_station", cfg.pin_base_station);

  if (j.contains("neighbor_mode")) {
    const std::string mode = j.at("neighbor_mode").get<std::string>();
    if (mode == "all_pairs") {
      cfg.neighbor_mode = NeighborMode::AllPairs;
    } else if (mode == "delaunay") {
      cfg.neighbor_mode = NeighborMode::Delaunay;
    } else {
      throw std::invalid_argument("config: neighbor_mode must be 'all_pairs' or 'delaunay'");
    }
  }
  if (j.contains("u_max_per_robot")) {
    const auto& arr = j.at("u_max_per_robot");
    Eigen::VectorXd bounds(arr.size());
    int i = 0;
    for (const auto& v : arr) bounds(i++) = v.get<double>();
    cfg.horizon.per_robot_u_max = bounds;
  }
  if (j.contains("initial_positions")) {
    cfg.initial_positions = parse_matrix(j.at("initial_positions"), cfg.dim, "initial_positions");
  }
  if (j.contains("pois")) {
    cfg.pois = parse_matrix(j.at("pois"), cfg.dim, "pois");
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void write_trace_csv(const SimTrace& trace, int dim, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path);
  out.precision(12);

  const int N = trace.initial_positions.rows() > 0
                    ? static_cast<int>(trace.initial_positions.rows())
                    : (trace.steps.empty()
                           ? 0
                           : static_cast<int>(trace.steps.front().positions.size()) / dim);

  out << "k";
  for (int i = 0; i < N; ++i) {
    for (int a = 0; a < dim; ++a) out << ",p_" << (i + 1) << "_" << axis_name(a);
  }
  for (int i = 0; i < N; ++i) {
    for (int a = 0; a < dim; ++a) out << ",u_" << (i + 1) << "_" << axis_name(a);
  }
  out << ",lambda2_exact,lambda2_pred,solver_status,solve_ms,min_margin,slack_max\n";

  for (const StepRecord& rec : trace.steps) {
    out << rec.k;
    for (Eigen::Index i = 0; i < rec.positions.size(); ++i) out << "," << rec.positions(i);
    for (Eigen::Index i = 0; i < rec.input.size(); ++i) out << "," << rec.input(i);
    out << "," << rec.lambda2_exact << "," << rec.lambda2_pred << ","
        << to_string(rec.status) << "," << rec.solve_ms << "," << rec.min_margin << ","
        << rec.slack_max << "\n";
  }
}

std::string report_to_json(const RunReport& report) {
  return run_report_to_json(report).dump(2);
}

std::string compare_report_to_json(const CompareReport& report) {
  json j;
  j["approximate"] = run_report_to_json(report.approx_report);
  j["baseline"] = run_report_to_json(report.baseline_report);
  j["median_ms_approx"] = report.median_ms_approx;
  j["median_ms_baseline"] = report.median_ms_baseline;
  j["median_ratio"] = report.median_ratio;
  j["terminal_assigned_diff"] = report.terminal_assigned_diff;
  j["scenario_diameter"] = report.scenario_diameter;
  j["min_lambda2_approx"] = report.min_lambda2_approx;
  j["min_lambda2_baseline"] = report.min_lambda2_baseline;
  j["baseline_failed_steps"] = report.baseline_failed_steps;
  return j.dump(2);
}

void write_text_file(const std::string& text, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_text_file: cannot open " + path);
  out << text << "\n";
}

}  // namespace catp
