/**
 * @file avoidplan.hpp
 * @brief Waypoint-constrained minimum-energy B-spline planning with
 * obstacle and inter-agent avoidance.
 *
 * Every agent's flat output is a clamped B-spline on a shared uniform knot
 * vector. The objective is the integral of z'ᵀ W z', which is quadratic in
 * the control points, and the waypoints are linear equalities. Avoidance is
 * enforced on the sliding d-point control hulls, which contain the curve:
 *
 *  - plan_mip picks, for every (agent, region, obstacle), one supporting
 *    hyperplane of the obstacle that the region's control points must clear
 *    (and, for agent pairs, one direction ±h_m). The choices are explored by
 *    best-first branch-and-bound on the violated disjunctions only; each
 *    node is a QP.
 *  - plan_exact alternates between max-margin separating hyperplanes for
 *    fixed control points and a control-point QP for fixed hyperplanes.
 */
#pragma once

#include "flatplan/geoarr.hpp"
#include "flatplan/qpcore.hpp"
#include "flatplan/splinecore.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flatplan::plan {

struct AgentSpec {
  std::string name;
  std::vector<Eigen::VectorXd> waypoints;
  std::vector<double> times;
  geo::SafetyRegion safety;
};

struct PlannerConfig {
  std::optional<double> big_m;  ///< T; derived from the box when unset
  int max_bb_nodes = 20000;
  int n_step = 2;
  int n_max = 40;
  int max_rounds = 30;
  double convergence_tol = 1e-7;  ///< relative objective change that ends alternation
  double margin = 1e-6;           ///< required clearance of every certificate
  Eigen::MatrixXd cost_weight;    ///< W in z'ᵀWz'; empty means identity
  int workers = 0;                ///< 0: all OpenMP threads, 1: serial
};

struct SplineSpec {
  int n = 12;
  int d = 4;
};

struct PlanningProblem {
  std::vector<AgentSpec> agents;
  geo::Arrangement arrangement;
  SplineSpec spline;
  PlannerConfig config;

  double t0() const;
  double tN() const;
  /// Shared clamped knot vector, uniform on [t0, tN].
  KnotVector knots() const;
  /// Throws InputError on inconsistent agents, timestamps or config.
  void validate() const;
};

/// T = 2 (max|k_m| + max|h_m| R), R the largest corner norm of the box.
double default_big_m(const geo::Arrangement& arr);
double big_m(const PlanningProblem& p);

/// Objective and waypoint equalities over x = [vec(P_0); vec(P_1); ...]
/// (column-major control polygons, dim × (n+1) each).
struct Assembled {
  qp::QuadraticProgram qp;
  KnotVector knots;
  int dim = 0;
  int points = 0;  ///< n + 1
  int agents = 0;

  int vars_per_agent() const { return dim * points; }
  int index(int agent, int point, int coord) const {
    return agent * vars_per_agent() + point * dim + coord;
  }
  ControlPolygon polygon(const Eigen::VectorXd& x, int agent) const;
};

Assembled assemble(const PlanningProblem& p);

/// Inflated obstacle rows for one agent: region ⊕ (-S_k), one row per
/// supporting hyperplane.
geo::HPolytope agent_obstacle(const PlanningProblem& p, int agent, int obstacle);

/// (agent, region i, obstacle l) uses row r of the obstacle. alpha[m] is 0
/// for every row the region's points clear, 1 otherwise.
struct ObstacleCertificate {
  int agent, region, obstacle, row;
  std::vector<int> alpha;
};

/// Regions i of agents a < b are split by u = orientation * h_m / |h_m|:
/// agent a on the low side. beta runs over the 2M oriented hyperplanes.
struct PairCertificate {
  int agent_a, agent_b, region, hyperplane, orientation;
  std::vector<int> beta;
};

/// Iterative mode: region i of `agent` clears the region-i hull of the
/// earlier agent `other` through that hull's facet `row`.
struct HullCertificate {
  int agent, other, region, row;
};

struct BinaryAssignment {
  std::vector<ObstacleCertificate> obstacles;
  std::vector<PairCertificate> pairs;
  std::vector<HullCertificate> hulls;
};

struct PlaneCertificate {
  int agent, region, obstacle;
  Eigen::VectorXd normal;  ///< unit; region side has the smaller values
  double gap;              ///< min over obstacle - max over region (after safety)
};

struct PairPlaneCertificate {
  int agent_a, agent_b, region;
  Eigen::VectorXd normal;
  double gap;
};

struct SeparatingPlanes {
  std::vector<PlaneCertificate> obstacles;
  std::vector<PairPlaneCertificate> pairs;
};

struct AgentPlan {
  std::string name;
  SplineCurve curve;
  double length = 0.0;     ///< arc length (m)
  double objective = 0.0;  ///< integral of z'ᵀWz'
};

enum class PlanStatus { success, degraded, node_limit, infeasible };
std::string_view to_string(PlanStatus s);

struct PlanResult {
  PlanStatus status = PlanStatus::infeasible;
  std::vector<AgentPlan> plans;
  BinaryAssignment assignment;
  SeparatingPlanes planes;
  double objective = 0.0;
  int nodes = 0;
  int rounds = 0;
  std::vector<double> round_objectives;
  /// Disjunctions every one of whose choices was infeasible.
  std::vector<std::string> infeasible_report;

  bool ok() const { return status == PlanStatus::success; }
};

enum class MultiMode { simultaneous, iterative };

/// Unconstrained minimum of the objective through the waypoints.
PlanResult plan_free(const PlanningProblem& p);
PlanResult plan_mip(const PlanningProblem& p);
PlanResult plan_exact(const PlanningProblem& p, const std::vector<AgentPlan>* warm = nullptr);
PlanResult plan_multi(const PlanningProblem& p, MultiMode mode);

/// Next problem in the escalation sequence (n + n_step). Throws
/// InfeasibleError once n_max would be exceeded.
PlanningProblem escalate(const PlanningProblem& p);

struct EscalationAttempt {
  int n;
  PlanStatus status;
};

struct EscalationResult {
  PlanResult result;
  PlanningProblem problem;  ///< the problem that produced `result`
  std::vector<EscalationAttempt> attempts;
};

enum class Method { mip, exact };

/// Plans, escalating n after infeasible attempts. Exact planning starts
/// from the MIP plan of the same n, or from straight-line polygons when
/// there is none.
EscalationResult plan_with_escalation(const PlanningProblem& p, Method method,
                                      MultiMode mode = MultiMode::simultaneous);

/// Direct re-check of every certificate in `r` against the returned control
/// points; returns the smallest clearance minus the margin (>= -tol when
/// sound).
struct AuditReport {
  double worst_slack = 0.0;
  int checked = 0;
  std::vector<std::string> failures;
  bool ok(double tol = 1e-7) const { return failures.empty() && worst_slack >= -tol; }
};
AuditReport audit_certificates(const PlanningProblem& p, const PlanResult& r, double tol = 1e-7);

/// Checks that with T every discarded row is slack on `samples` random box
/// points; returns the smallest slack found.
double audit_big_m(const PlanningProblem& p, int samples, unsigned seed = 1);

/// Straight polyline through the waypoints, resampled onto the control
/// polygon (Greville abscissae).
ControlPolygon straight_polygon(const PlanningProblem& p, int agent);

}  // namespace flatplan::plan
