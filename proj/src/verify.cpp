#include "flatplan/verify.hpp"

#include "flatplan/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace flatplan::verify {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Totals {
  double obstacle = kInf, inflated = kInf, pair = kInf, separation = kInf, residual = -kInf;
  std::vector<double> singular;

  void merge(const Totals& o) {
    obstacle = std::min(obstacle, o.obstacle);
    inflated = std::min(inflated, o.inflated);
    pair = std::min(pair, o.pair);
    separation = std::min(separation, o.separation);
    residual = std::max(residual, o.residual);
    singular.insert(singular.end(), o.singular.begin(), o.singular.end());
  }
};

std::optional<double> finite_or_empty(double v) {
  if (std::isfinite(v)) return v;
  return std::nullopt;
}

/// Everything the per-sample work needs, built once.
struct Setup {
  std::vector<double> times;
  std::vector<std::vector<geo::HPolytope>> raw, grown;  // per agent, per obstacle
  std::vector<geo::HPolytope> forbidden;  // per pair (a < b): S_a (+) (-S_b)
  bool dynamics = true;
};

geo::HPolytope difference_body(const geo::SafetyRegion& sa, const geo::SafetyRegion& sb, int dim) {
  std::vector<Eigen::VectorXd> va = sa.vertices(), vb = sb.vertices();
  if (va.empty()) va.emplace_back(Eigen::VectorXd::Zero(dim));
  if (vb.empty()) vb.emplace_back(Eigen::VectorXd::Zero(dim));
  std::vector<Eigen::VectorXd> pts;
  for (const auto& a : va)
    for (const auto& b : vb) pts.emplace_back(a - b);
  return geo::hull_polytope_2d(pts);
}

Setup prepare(const std::vector<TrackedAgent>& agents, const geo::Arrangement& arr, double dt) {
  if (agents.empty()) throw InputError("nothing to verify");
  const double t0 = agents.front().curve.t0(), tN = agents.front().curve.t1();
  for (const auto& a : agents) {
    if (a.curve.t0() != t0 || a.curve.t1() != tN)
      throw InputError("agent '" + a.name + "' has a different time horizon");
    if (a.curve.dim() != arr.dim())
      throw InputError("agent '" + a.name + "' does not match the arrangement dimension");
    if (a.waypoints.size() != a.times.size())
      throw InputError("agent '" + a.name + "' has mismatched waypoints and timestamps");
  }
  if (!(dt > 0.0) || dt > (tN - t0) / 1000.0 * (1.0 + 1e-12))
    throw InputError("dt must be positive and at most (tN - t0)/1000 = " +
                     std::to_string((tN - t0) / 1000.0));

  Setup s;
  s.times = sample_times(t0, tN, dt);
  for (const auto& a : agents) {
    std::vector<geo::HPolytope> raw, grown;
    for (const auto& ob : arr.obstacles()) {
      raw.push_back(ob.region);
      grown.push_back(a.safety.empty() ? ob.region : geo::inflate_obstacle(ob.region, a.safety));
    }
    s.raw.push_back(std::move(raw));
    s.grown.push_back(std::move(grown));
    s.dynamics = s.dynamics && a.curve.dim() == 2 && a.curve.knots().order() >= 4;
  }
  if (arr.dim() == 2)
    for (std::size_t a = 0; a < agents.size(); ++a)
      for (std::size_t b = a + 1; b < agents.size(); ++b)
        s.forbidden.push_back(difference_body(agents[a].safety, agents[b].safety, 2));
  return s;
}

Totals at_sample(const std::vector<TrackedAgent>& agents, const Setup& s, double t,
                 const VerifyOptions& opts) {
  Totals out;
  std::vector<Eigen::VectorXd> z;
  for (std::size_t a = 0; a < agents.size(); ++a) {
    z.push_back(agents[a].curve(t));
    for (std::size_t l = 0; l < s.raw[a].size(); ++l) {
      out.obstacle = std::min(out.obstacle, geo::signed_distance(z.back(), s.raw[a][l]));
      out.inflated = std::min(out.inflated, geo::signed_distance(z.back(), s.grown[a][l]));
    }
    if (s.dynamics) {
      try {
        out.residual = std::max(
            out.residual, flat::dynamics_residual(agents[a].curve, t, opts.residual_step, opts.gravity));
      } catch (const SingularVelocityError&) {
        out.singular.push_back(t);
      }
    }
  }
  std::size_t pair = 0;
  for (std::size_t a = 0; a < agents.size(); ++a)
    for (std::size_t b = a + 1; b < agents.size(); ++b, ++pair) {
      const Eigen::VectorXd d = z[b] - z[a];
      out.pair = std::min(out.pair, d.norm());
      double sep;
      if (!s.forbidden.empty()) {
        sep = geo::signed_distance(d, s.forbidden[pair]);
      } else {
        const Eigen::VectorXd u = d.norm() > 0.0 ? Eigen::VectorXd(d.normalized())
                                                 : Eigen::VectorXd::Unit(d.size(), 0);
        sep = d.norm() - agents[a].safety.support(u) - agents[b].safety.support(-u);
      }
      out.separation = std::min(out.separation, sep);
    }
  return out;
}

VerificationReport finish(const std::vector<TrackedAgent>& agents, const Setup& s, Totals t) {
  VerificationReport r;
  r.min_obstacle_clearance = finite_or_empty(t.obstacle);
  r.min_inflated_clearance = finite_or_empty(t.inflated);
  r.min_interagent_distance = finite_or_empty(t.pair);
  r.min_safety_separation = finite_or_empty(t.separation);
  r.max_dynamics_residual = finite_or_empty(t.residual);
  r.samples = static_cast<int>(s.times.size());
  std::sort(t.singular.begin(), t.singular.end());
  t.singular.erase(std::unique(t.singular.begin(), t.singular.end()), t.singular.end());
  r.singular_times = std::move(t.singular);
  for (const auto& a : agents)
    for (std::size_t k = 0; k < a.times.size(); ++k)
      r.max_waypoint_error = std::max(r.max_waypoint_error, (a.curve(a.times[k]) - a.waypoints[k]).norm());
  return r;
}

}  // namespace

bool VerificationReport::clean(double waypoint_tol) const {
  if (min_obstacle_clearance && !(*min_obstacle_clearance > 0.0)) return false;
  if (min_inflated_clearance && !(*min_inflated_clearance >= 0.0)) return false;
  if (min_interagent_distance && !(*min_interagent_distance > 0.0)) return false;
  if (min_safety_separation && !(*min_safety_separation >= 0.0)) return false;
  return max_waypoint_error <= waypoint_tol;
}

std::vector<double> sample_times(double t0, double tN, double dt) {
  if (!(tN > t0) || !(dt > 0.0)) throw InputError("sampling needs tN > t0 and dt > 0");
  const long count = static_cast<long>(std::floor((tN - t0) / dt + 1e-9));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count) + 2);
  for (long s = 0; s <= count; ++s) out.push_back(std::min(tN, t0 + static_cast<double>(s) * dt));
  if (tN - out.back() > 1e-12 * std::max(1.0, std::abs(tN))) out.push_back(tN);
  return out;
}

double default_dt(double t0, double tN) { return 1e-3 * (tN - t0); }

VerificationReport check(const std::vector<TrackedAgent>& agents, const geo::Arrangement& arr,
                         double dt, const VerifyOptions& opts) {
  const Setup s = prepare(agents, arr, dt);
  const long n = static_cast<long>(s.times.size());
  Totals total;
#pragma omp parallel
  {
    Totals local;
#pragma omp for schedule(static) nowait
    for (long i = 0; i < n; ++i) local.merge(at_sample(agents, s, s.times[static_cast<std::size_t>(i)], opts));
#pragma omp critical
    total.merge(local);
  }
  return finish(agents, s, std::move(total));
}

VerificationReport check_serial(const std::vector<TrackedAgent>& agents,
                                const geo::Arrangement& arr, double dt, const VerifyOptions& opts) {
  const Setup s = prepare(agents, arr, dt);
  Totals total;
  for (double t : s.times) total.merge(at_sample(agents, s, t, opts));
  return finish(agents, s, std::move(total));
}

std::vector<TrackedAgent> tracked(const plan::PlanningProblem& p, const plan::PlanResult& r) {
  if (r.plans.size() != p.agents.size()) throw InputError("plan does not cover every agent");
  std::vector<TrackedAgent> out;
  for (std::size_t a = 0; a < p.agents.size(); ++a)
    out.push_back({p.agents[a].name, r.plans[a].curve, p.agents[a].waypoints, p.agents[a].times,
                   p.agents[a].safety});
  return out;
}

}  // namespace flatplan::verify
