#pragma once

#include <string>

#include "catp/sim.hpp"

namespace catp {

// Reads a scenario description from a JSON file. Recognized keys mirror the
// simulation parameter names: mode, N, L, n, dt, d50, alpha, lambda2_min,
// lambda2_soft, r, eps, zeta, eta, Hs_scale, sigma_v_scale, K, u_max, seed,
// iterations, baseline, plus cis_enabled, poi_radius, neighbor_mode,
// pin_base_station, u_max_per_robot, initial_positions, pois.
ScenarioConfig load_config(const std::string& path);

// Applies the same keys from an already-parsed JSON string.
ScenarioConfig parse_config(const std::string& json_text);

// One CSV row per step: k, p_{i}_{axis}, u_{i}_{axis}, lambda2_exact,
// lambda2_pred, solver_status, solve_ms, min_margin, slack_max.
void write_trace_csv(const SimTrace& trace, int dim, const std::string& path);

std::string report_to_json(const RunReport& report);
std::string compare_report_to_json(const CompareReport& report);
void write_text_file(const std::string& text, const std::string& path);

}  // namespace catp
