/**
 * @file io.hpp
 * @brief Scenario and plan files, trace CSV, SVG figures and n-sweeps.
 *
 * Scenario schema (version 1):
 * @code
 * {
 *   "schema": 1,
 *   "box": {"lo": [x, y], "hi": [x, y]},            // optional
 *   "hyperplanes": [{"h": [h1, h2], "k": k}, ...],
 *   "obstacles": [{"name": "O1", "tuple": "+-+"} | {"name": "B", "vertices": [[x, y], ...]}],
 *   "agents": [{"name": "uav", "waypoints": [[x, y], ...], "times": [t, ...],
 *               "safety": [[x, y], ...]}],              // safety optional
 *   "spline": {"n": 12, "d": 6},
 *   "planner": {"big_m": T, "max_bb_nodes": 20000, "n_step": 2, "n_max": 40,
 *               "max_rounds": 30, "convergence_tol": 1e-7, "margin": 1e-6,
 *               "cost_weight": [[1, 0], [0, 1]], "workers": 0},
 *   "dt": 0.01, "gravity": 9.81
 * }
 * @endcode
 * Without a box, the waypoint and vertex bounding box scaled by 1.5 about its
 * centre is used, with every half-width at least 1.
 */
#pragma once

#include "flatplan/avoidplan.hpp"
#include "flatplan/verify.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace flatplan::io {

inline constexpr int kSchemaVersion = 1;

struct Scenario {
  plan::PlanningProblem problem;
  /// Sampling step for traces and verification; 1e-3 of the horizon by default.
  double dt = 0.0;
  double gravity = flat::kGravity;
  std::vector<std::string> warnings;
};

/// Throws ParseError (JSON path plus reason) on schema violations and on
/// obstacle tuples that name an empty or unusable cell.
Scenario parse_scenario(const std::string& path);
Scenario parse_scenario(const nlohmann::json& doc);
nlohmann::json scenario_json(const Scenario& s);

/// Declared hyperplanes and obstacle declarations recovered from an
/// arrangement.
std::vector<geo::Hyperplane> declared_hyperplanes(const geo::Arrangement& arr);
std::vector<geo::ObstacleSpec> declared_obstacles(const geo::Arrangement& arr);

struct PlanMeta {
  std::string method = "mip";
  std::string mode = "simultaneous";
  std::vector<plan::EscalationAttempt> attempts;
};

nlohmann::json plan_json(const plan::PlanningProblem& used, const plan::PlanResult& r,
                         const PlanMeta& meta);

struct LoadedPlan {
  plan::PlanningProblem problem;  ///< scenario problem with the plan's n and d
  plan::PlanResult result;        ///< curves, status and objective
  PlanMeta meta;
};

/// Reads a plan file written by plan_json against its scenario.
LoadedPlan read_plan(const nlohmann::json& doc, const Scenario& scenario);
LoadedPlan read_plan(const std::string& path, const Scenario& scenario);

/// Rows t, x, y, psi, va, phi at t0 + s dt for s = 0..floor((tN - t0)/dt).
/// Singular-velocity rows leave psi, va and phi empty. Returns the row count.
int write_trace_csv(std::ostream& os, const SplineCurve& curve, double dt,
                    double g = flat::kGravity);

nlohmann::json report_json(const verify::VerificationReport& r);

/// Obstacles, support hyperplanes, control polygons, region hulls and curves.
/// Elements carry the classes obstacle, hyperplane, control-polygon, hull
/// and curve.
std::string render_svg(const plan::PlanningProblem& p, const std::vector<plan::AgentPlan>& plans,
                       int curve_samples = 400);

struct SweepRow {
  int n;
  std::string method;  ///< MI or EX
  std::optional<double> length;
  double wall_time;
  plan::PlanStatus status;
};

enum class SweepMethods { both, mip, exact };

/// Plans at every n (no escalation). Exact runs start from the mixed-integer
/// plan of the same n; their wall time excludes that warm start.
std::vector<SweepRow> sweep(const plan::PlanningProblem& base, const std::vector<int>& ns,
                            SweepMethods methods = SweepMethods::both,
                            plan::MultiMode mode = plan::MultiMode::simultaneous);
/// Columns n, method, length, wall_time, status; failed runs have length `*`.
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace flatplan::io
