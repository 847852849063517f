// End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit
// when any criterion fails.
#include "flatplan/cli.hpp"
#include "flatplan/errors.hpp"
#include "flatplan/flatmap.hpp"
#include "flatplan/io.hpp"

#include "bb_oracle.hpp"
#include "hull_oracle.hpp"
#include "oracles.hpp"

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

namespace {

using namespace flatplan;
namespace fs = std::filesystem;

const std::string kScene = std::string(FLATPLAN_DATA_DIR) + "/three_obstacles.json";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

plan::PlanningProblem scene(int n, int d, geo::SafetyRegion safety = {}) {
  io::Scenario s = io::parse_scenario(kScene);
  s.problem.spline = {n, d};
  for (auto& a : s.problem.agents) a.safety = safety;
  return s.problem;
}

double total_length(const plan::PlanResult& r) {
  double L = 0.0;
  for (const auto& a : r.plans) L += a.length;
  return L;
}

Outcome scene_end_to_end() {
  const fs::path dir = fs::temp_directory_path() / ("flatplan_acceptance_" + std::to_string(::getpid()));
  std::ostringstream out, err;
  const auto t0 = std::chrono::steady_clock::now();
  const int rc = cli::run({"plan", kScene, "--method", "mip", "--dt", "0.01", "--out", dir.string()}, out, err);
  const double wall = seconds_since(t0);
  if (rc != cli::kOk) {
    fs::remove_all(dir);
    return {false, fmt("exit %d: %s", rc, err.str().c_str())};
  }
  std::ifstream f(dir / "report.json");
  const nlohmann::json rep = nlohmann::json::parse(f);
  fs::remove_all(dir);
  const double clearance = rep["min_obstacle_clearance"].get<double>();
  const double wp = rep["max_waypoint_error"].get<double>();
  const int samples = rep["samples"].get<int>();
  return {clearance > 0.0 && wp <= 1e-6 && samples == 1001 && wall <= 60.0,
          fmt("clearance %.4f m, waypoint error %.2e m, %d samples, %.2f s", clearance, wp, samples, wall)};
}

Outcome length_band() {
  const plan::PlanResult r = plan::plan_mip(scene(20, 4));
  if (r.status != plan::PlanStatus::success) return {false, "planner status " + std::string(to_string(r.status))};
  const double L = total_length(r);
  return {L >= 15.5 && L <= 18.0, fmt("d=4 n=20 length %.4f m", L)};
}

Outcome sweep_trend() {
  const auto rows = io::sweep(scene(12, 4), {15, 20, 25, 30}, io::SweepMethods::mip);
  double lo = 1e300, hi = -1e300;
  std::string list;
  for (const auto& r : rows) {
    if (!r.length) return {false, fmt("n=%d infeasible", r.n)};
    lo = std::min(lo, *r.length);
    hi = std::max(hi, *r.length);
    list += fmt(" %.3f", *r.length);
  }
  const double spread = (hi - lo) / lo;
  return {spread <= 0.05, fmt("lengths%s, spread %.2f%%", list.c_str(), 100.0 * spread)};
}

Outcome exact_certificates() {
  const plan::PlanningProblem p = scene(12, 6);
  const plan::PlanResult mip = plan::plan_mip(p);
  if (mip.status != plan::PlanStatus::success) return {false, "no warm start"};
  const plan::PlanResult r = plan::plan_exact(p, &mip.plans);
  if (r.status != plan::PlanStatus::success) return {false, "exact status " + std::string(to_string(r.status))};
  if (r.planes.obstacles.empty()) return {false, "no certificates"};

  const KnotVector k = p.knots();
  const int d = k.order();
  const ControlPolygon& P = r.plans[0].curve.polygon();
  std::vector<std::vector<Eigen::VectorXd>> verts;
  for (const auto& ob : p.arrangement.obstacles())
    verts.push_back(geo::obstacle_vertices(ob, p.arrangement.box()));
  auto obstacle_min = [&](const plan::PlaneCertificate& c) {
    double lo = 1e300;
    for (const auto& v : verts[static_cast<std::size_t>(c.obstacle)]) lo = std::min(lo, c.normal.dot(v));
    return lo;
  };

  double worst_points = 1e300;
  for (const auto& c : r.planes.obstacles) {
    double hi = -1e300;
    for (int j = c.region - d + 1; j <= c.region; ++j) hi = std::max(hi, c.normal.dot(P.col(j)));
    worst_points = std::min(worst_points, obstacle_min(c) - hi);
  }
  double worst_curve = 1e300;
  for (int i = 0; i < 10000; ++i) {
    const double t = p.t0() + (p.tN() - p.t0()) * i / 9999.0;
    const Eigen::VectorXd z = r.plans[0].curve(t);
    const int span = k.span_index(t);
    for (const auto& c : r.planes.obstacles)
      if (c.region == span) worst_curve = std::min(worst_curve, obstacle_min(c) - c.normal.dot(z));
  }
  const double mu = 1e-6;
  return {worst_points >= mu && worst_curve >= mu,
          fmt("%zu planes, worst control-point gap %.3e, worst curve-sample gap %.3e",
              r.planes.obstacles.size(), worst_points, worst_curve)};
}

Outcome spline_properties() {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int d = 4, n = 9;
  const KnotVector k = KnotVector::clamped_uniform(0.0, 1.0, n, d);
  Eigen::MatrixXd P(2, n + 1);
  for (auto& v : P.reshaped()) v = 2.0 * u(rng) - 1.0;
  const SplineCurve c(k, P);

  double unity = 0.0, hull = 0.0;
  for (int s = 0; s < 10000; ++s) {
    const double t = s / 9999.0;
    unity = std::max(unity, std::abs(basis_eval(k, d, t).sum() - 1.0));
    const int i = k.span_index(t);
    hull = std::max(hull, test::hull_distance(P.middleCols(i - d + 1, d), c(t)));
  }

  const double pmax = P.cwiseAbs().maxCoeff();
  const DerivativeMatrix m1 = derivative_matrix(k, 1), m2 = derivative_matrix(k, 2);
  double fd1 = 0.0, fd2 = 0.0;
  for (int s = 0; s < 200; ++s) {
    const double t = 0.001 + 0.998 * s / 199.0;
    const double h1 = 1e-6, h2 = 1e-4;
    const Eigen::VectorXd g1 = (c(t + h1) - c(t - h1)) / (2 * h1);
    const Eigen::VectorXd g2 = (c(t + h2) - 2 * c(t) + c(t - h2)) / (h2 * h2);
    fd1 = std::max(fd1, (P * m1.matrix * basis_eval(m1.lowered, d - 1, t) - g1).cwiseAbs().maxCoeff());
    fd2 = std::max(fd2, (P * m2.matrix * basis_eval(m2.lowered, d - 2, t) - g2).cwiseAbs().maxCoeff());
  }

  const KnotVector lowered = KnotVector::clamped_uniform(0.0, 10.0, 12, 4).lowered(1);
  const Eigen::MatrixXd G = gram_matrix(lowered, 3);
  double gram = 0.0;
  for (int i = 0; i < G.rows(); ++i) {
    for (int j = i; j < G.cols(); ++j) {
      double ref = 0.0;
      for (int s = 0; s + 1 < lowered.size(); ++s) {
        if (!(lowered[s] < lowered[s + 1])) continue;
        ref += test::adaptive_integral(
            [&](double t) {
              const Eigen::VectorXd b = basis_eval(lowered, 3, t);
              return b(i) * b(j);
            },
            lowered[s], lowered[s + 1]);
      }
      gram = std::max(gram, std::abs(G(i, j) - ref));
    }
  }

  using test::Rational;
  const std::vector<double> kd = {0, 0, 0, 0, 0.25, 0.5, 0.75, 1, 1, 1, 1};
  std::vector<Rational> kr;
  for (double v : kd) kr.emplace_back(static_cast<long long>(v * 4), 4);
  const KnotVector kx(kd, 4);
  double rational = 0.0;
  for (int num = 0; num <= 40; ++num) {
    const Rational t(num, 40);
    for (int order = 1; order <= 4; ++order) {
      const auto exact = test::cox_de_boor_exact(kr, order, t);
      const Eigen::VectorXd b = basis_eval(kx, order, boost::rational_cast<double>(t));
      for (std::size_t i = 0; i < exact.size(); ++i)
        rational = std::max(rational, std::abs(b(static_cast<Eigen::Index>(i)) - boost::rational_cast<double>(exact[i])));
    }
  }

  const bool ok = unity <= 1e-12 && hull <= 1e-9 && fd1 <= 1e-5 * pmax && fd2 <= 1e-3 * pmax && gram <= 1e-9 &&
                  rational <= 1e-12;
  return {ok, fmt("unity %.1e, hull %.1e, d1 %.1e, d2 %.1e, gram %.1e, rational %.1e", unity, hull, fd1, fd2,
                  gram, rational)};
}

Outcome flat_consistency() {
  std::vector<SplineCurve> curves;
  auto take = [&](const plan::PlanResult& r) {
    for (const auto& a : r.plans) curves.push_back(a.curve);
  };
  const plan::PlanningProblem p6 = scene(12, 6);
  const plan::PlanResult mip6 = plan::plan_mip(p6);
  take(mip6);
  take(plan::plan_exact(p6, &mip6.plans));
  take(plan::plan_mip(scene(20, 4)));
  take(plan::plan_mip(scene(12, 6, geo::SafetyRegion::square(0.2))));

  double worst = 0.0;
  int checked = 0;
  for (const SplineCurve& c : curves) {
    for (double t : verify::sample_times(c.t0(), c.t1(), verify::default_dt(c.t0(), c.t1()))) {
      worst = std::max(worst, flat::dynamics_residual(c, t, 1e-4));
      ++checked;
    }
  }

  double circle = 0.0;
  const double R = 50.0, w = 0.3;
  for (double t : {0.0, 0.7, 2.0, 5.5, 9.1}) {
    const Eigen::Vector2d dz(-R * w * std::sin(w * t), R * w * std::cos(w * t));
    const Eigen::Vector2d ddz(-R * w * w * std::cos(w * t), -R * w * w * std::sin(w * t));
    const flat::InputSample s = flat::phi_input({Eigen::Vector2d::Zero(), dz, ddz}, flat::kGravity);
    circle = std::max({circle, std::abs(s.va - R * w), std::abs(std::tan(s.phi) - R * w * w / flat::kGravity)});
  }
  return {curves.size() == 4 && worst <= 1e-3 && circle <= 1e-9,
          fmt("%zu plans, %d samples, residual %.2e; circular motion error %.1e", curves.size(), checked, worst,
              circle)};
}

std::vector<Eigen::Vector2d> clipped_cell(const std::vector<geo::Hyperplane>& hs, const geo::Box& box,
                                          const std::string& tuple) {
  std::vector<Eigen::Vector2d> poly{{box.lo(0), box.lo(1)}, {box.hi(0), box.lo(1)}, {box.hi(0), box.hi(1)},
                                    {box.lo(0), box.hi(1)}};
  for (std::size_t m = 0; m < hs.size() && !poly.empty(); ++m) {
    const double f = tuple[m] == '+' ? 1.0 : -1.0;
    poly = test::clip_halfplane(poly, f * Eigen::Vector2d(hs[m].normal), f * hs[m].offset);
  }
  return poly;
}

Outcome arrangement_cells() {
  const io::Scenario s = io::parse_scenario(kScene);
  const geo::Arrangement& arr = s.problem.arrangement;
  const auto& hs = arr.hyperplanes();
  std::set<std::string> oracle;
  for (unsigned mask = 0; mask < (1u << hs.size()); ++mask) {
    std::string t(hs.size(), '+');
    for (std::size_t m = 0; m < hs.size(); ++m)
      if (mask & (1u << m)) t[m] = '-';
    if (test::polygon_inradius(clipped_cell(hs, arr.box(), t)) > 1e-7) oracle.insert(t);
  }
  std::set<std::string> cells;
  for (const auto& c : geo::enumerate_cells(hs, arr.box())) cells.insert(c.str());

  bool printed = true;
  for (const char* t : {"+++--+++-", "+-+-+++++", "+-+++--++"}) printed = printed && cells.count(t) == 1;

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> ux(arr.box().lo(0), arr.box().hi(0)), uy(arr.box().lo(1), arr.box().hi(1));
  int classified = 0, outside = 0;
  while (classified < 10000) {
    const Eigen::Vector2d x(ux(rng), uy(rng));
    try {
      if (!cells.count(geo::cell_of(hs, x).str())) ++outside;
      ++classified;
    } catch (const AmbiguousCellError&) {
    }
  }
  return {cells == oracle && printed && outside == 0,
          fmt("%zu cells (oracle %zu), listed obstacle tuples %s, %d of %d random points outside", cells.size(),
              oracle.size(), printed ? "feasible" : "MISSING", outside, classified)};
}

Outcome branch_and_bound() {
  const std::vector<plan::PlanningProblem> cases{
      test::square_toy(6, 3, {{-3.0, -0.4}, {3.0, 0.5}}, {0.0, 10.0}),
      test::square_toy(7, 3, {{-3.0, 0.2}, {0.0, -1.8}, {3.0, 0.1}}, {0.0, 4.0, 10.0}),
      test::square_toy(8, 4, {{-3.0, -0.4}, {3.0, 0.5}}, {0.0, 10.0}),
      test::square_toy(8, 3, {{-3.0, 2.5}, {3.0, -2.0}}, {0.0, 10.0})};
  double worst = 0.0;
  for (const auto& p : cases) {
    const plan::PlanResult r = plan::plan_mip(p);
    if (r.status != plan::PlanStatus::success) return {false, fmt("n=%d infeasible", p.spline.n)};
    worst = std::max(worst, std::abs(r.objective - test::exhaustive_optimum(p)));
  }
  return {worst <= 1e-6, fmt("%zu toys (M=4, n<=8), worst gap to enumeration %.2e", cases.size(), worst)};
}

plan::PlanningProblem crossing() {
  io::Scenario s = io::parse_scenario(nlohmann::json{
      {"schema", 1},
      {"box", {{"lo", {-5, -5}}, {"hi", {5, 5}}}},
      {"agents",
       {{{"name", "east"}, {"waypoints", {{-3, 0}, {3, 0}}}, {"times", {0, 10}}},
        {{"name", "north"}, {"waypoints", {{0, -3}, {0, 3}}}, {"times", {0, 10}}}}},
      {"spline", {{"n", 10}, {"d", 4}}}});
  return s.problem;
}

Outcome two_agents() {
  const plan::PlanningProblem p = crossing();
  const double dt = verify::default_dt(p.t0(), p.tN());
  const plan::PlanResult sim = plan::plan_multi(p, plan::MultiMode::simultaneous);
  if (sim.status != plan::PlanStatus::success) return {false, "simultaneous failed"};
  const auto rs = verify::check(verify::tracked(p, sim), p.arrangement, dt);

  const plan::PlanResult it = plan::plan_multi(p, plan::MultiMode::iterative);
  if (it.status != plan::PlanStatus::success) return {false, "iterative failed"};
  const auto ri = verify::check(verify::tracked(p, it), p.arrangement, dt);
  plan::PlanningProblem first = p;
  first.agents.resize(1);
  const plan::PlanResult alone = plan::plan_mip(first);
  const bool unchanged = alone.ok() && it.plans[0].curve.polygon() == alone.plans[0].curve.polygon();
  return {*rs.min_interagent_distance > 0.0 && *ri.min_interagent_distance > 0.0 && unchanged,
          fmt("simultaneous distance %.4f m, iterative distance %.4f m, first agent %s",
              *rs.min_interagent_distance, *ri.min_interagent_distance, unchanged ? "unchanged" : "CHANGED")};
}

Outcome safety_regions() {
  const plan::PlanningProblem p = scene(12, 6, geo::SafetyRegion::square(0.2));
  const plan::PlanResult r = plan::plan_mip(p);
  if (r.status != plan::PlanStatus::success) return {false, "planner status " + std::string(to_string(r.status))};
  const auto rep = verify::check(verify::tracked(p, r), p.arrangement, verify::default_dt(p.t0(), p.tN()));
  const double c = *rep.min_obstacle_clearance;
  return {c >= 0.2 - 1e-6 && rep.clean(), fmt("raw clearance %.4f m", c)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"scene plan end to end", scene_end_to_end},
      {"path length band", length_band},
      {"length trend over n", sweep_trend},
      {"exact plan certificates", exact_certificates},
      {"spline properties", spline_properties},
      {"flat model consistency", flat_consistency},
      {"arrangement cells", arrangement_cells},
      {"branch and bound optimality", branch_and_bound},
      {"two-agent crossing", two_agents},
      {"safety regions", safety_regions},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << ' ' << (i + 1) << ' ' << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
