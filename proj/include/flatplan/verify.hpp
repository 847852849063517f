/**
 * @file verify.hpp
 * @brief Dense-sampling certification of planned curves.
 *
 * The verifier only looks at the curves, the waypoints they should pass
 * through and the obstacle polytopes; planner certificates are never used.
 */
#pragma once

#include "flatplan/avoidplan.hpp"
#include "flatplan/flatmap.hpp"
#include "flatplan/geoarr.hpp"
#include "flatplan/splinecore.hpp"

#include <optional>
#include <string>
#include <vector>

namespace flatplan::verify {

struct TrackedAgent {
  std::string name;
  SplineCurve curve;
  std::vector<Eigen::VectorXd> waypoints;
  std::vector<double> times;
  geo::SafetyRegion safety;
};

/// Minima and maxima over all samples. Quantities with nothing to measure
/// (no obstacles, a single agent, a non-planar or low-order curve) are empty.
struct VerificationReport {
  /// Signed distance from the curves to the obstacles; negative inside.
  std::optional<double> min_obstacle_clearance;
  /// Same, to the obstacles grown by each agent's safety region.
  std::optional<double> min_inflated_clearance;
  std::optional<double> min_interagent_distance;
  /// Signed distance of z_b - z_a to S_a (+) (-S_b): positive when the
  /// safety regions are disjoint.
  std::optional<double> min_safety_separation;
  double max_waypoint_error = 0.0;
  std::optional<double> max_dynamics_residual;
  int samples = 0;
  std::vector<double> singular_times;

  /// No collision, no overlap of safety regions, waypoints within `tol`.
  bool clean(double waypoint_tol = 1e-6) const;
};

struct VerifyOptions {
  double residual_step = 1e-4;
  double gravity = flat::kGravity;
};

/// t0 + s dt for s = 0..floor((tN - t0)/dt), plus tN when it is not hit.
std::vector<double> sample_times(double t0, double tN, double dt);

/// Default sampling step: a thousandth of the horizon.
double default_dt(double t0, double tN);

/// Throws InputError when dt exceeds a thousandth of the horizon or the
/// agents disagree on it.
VerificationReport check(const std::vector<TrackedAgent>& agents, const geo::Arrangement& arr,
                         double dt, const VerifyOptions& opts = {});
/// Serial reference of check.
VerificationReport check_serial(const std::vector<TrackedAgent>& agents,
                                const geo::Arrangement& arr, double dt,
                                const VerifyOptions& opts = {});

std::vector<TrackedAgent> tracked(const plan::PlanningProblem& p, const plan::PlanResult& r);

}  // namespace flatplan::verify
