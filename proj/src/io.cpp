#include "flatplan/io.hpp"

#include "flatplan/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace flatplan::io {

using nlohmann::json;

namespace {

/// A node of the document together with its JSON pointer, for error messages.
class Field {
 public:
  Field(const json& node, std::string path) : node_(&node), path_(std::move(path)) {}

  const json& node() const { return *node_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& why) const { throw ParseError(path_.empty() ? "/" : path_, why); }

  bool has(const std::string& key) const { return node_->is_object() && node_->contains(key); }

  Field at(const std::string& key) const {
    if (!node_->is_object()) fail("expected an object");
    if (!node_->contains(key)) Field(*node_, path_ + "/" + key).fail("required field is missing");
    return Field((*node_)[key], path_ + "/" + key);
  }

  std::optional<Field> find(const std::string& key) const {
    if (!has(key) || (*node_)[key].is_null()) return std::nullopt;
    return Field((*node_)[key], path_ + "/" + key);
  }

  std::size_t size() const {
    if (!node_->is_array()) fail("expected an array");
    return node_->size();
  }

  Field operator[](std::size_t i) const { return Field((*node_)[i], path_ + "/" + std::to_string(i)); }

  double number() const {
    if (!node_->is_number()) fail("expected a number");
    const double v = node_->get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }

  int integer() const {
    if (!node_->is_number_integer()) fail("expected an integer");
    return node_->get<int>();
  }

  std::string string() const {
    if (!node_->is_string()) fail("expected a string");
    return node_->get<std::string>();
  }

  Eigen::VectorXd vector(long dim = -1) const {
    const std::size_t n = size();
    if (dim >= 0 && static_cast<long>(n) != dim)
      fail("expected " + std::to_string(dim) + " coordinates, got " + std::to_string(n));
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = (*this)[i].number();
    return v;
  }

  std::vector<Eigen::VectorXd> points(long dim) const {
    std::vector<Eigen::VectorXd> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back((*this)[i].vector(dim));
    return out;
  }

 private:
  const json* node_;
  std::string path_;
};

json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json to_json(const std::vector<Eigen::VectorXd>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back(to_json(p));
  return a;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("/", path + ": not valid JSON (" + e.what() + ")");
  }
}

/// Runs fn, appending the file name to parse errors.
template <class Fn>
auto naming_file(const std::string& path, Fn fn) {
  try {
    return fn();
  } catch (const ParseError& e) {
    const std::string what = e.what();
    const std::string reason = what.substr(std::min(what.size(), e.path().size() + 2));
    throw ParseError(e.path(), reason + " [" + path + "]");
  }
}

plan::PlanStatus status_from(const Field& f) {
  const std::string s = f.string();
  for (auto st : {plan::PlanStatus::success, plan::PlanStatus::degraded, plan::PlanStatus::node_limit,
                  plan::PlanStatus::infeasible})
    if (plan::to_string(st) == s) return st;
  f.fail("unknown status '" + s + "'");
}

geo::Box default_box(const std::vector<plan::AgentSpec>& agents,
                     const std::vector<geo::ObstacleSpec>& obstacles, int dim) {
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(dim, std::numeric_limits<double>::infinity());
  Eigen::VectorXd hi = -lo;
  auto take = [&](const Eigen::VectorXd& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  };
  for (const auto& a : agents)
    for (const auto& w : a.waypoints) take(w);
  for (const auto& o : obstacles)
    for (const auto& v : o.vertices) take(v);
  const Eigen::VectorXd mid = 0.5 * (lo + hi);
  Eigen::VectorXd half = 0.5 * (hi - lo) * 1.5;
  for (int c = 0; c < dim; ++c) half(c) = std::max(half(c), 1.0);
  return {mid - half, mid + half};
}

}  // namespace

// ------------------------------------------------------------ scenarios --

std::vector<geo::Hyperplane> declared_hyperplanes(const geo::Arrangement& arr) {
  const auto& hs = arr.hyperplanes();
  return {hs.begin(), hs.begin() + arr.declared_hyperplanes()};
}

std::vector<geo::ObstacleSpec> declared_obstacles(const geo::Arrangement& arr) {
  std::vector<geo::ObstacleSpec> out;
  for (const auto& ob : arr.obstacles()) {
    if (ob.from_vertices)
      out.push_back({ob.name, std::nullopt, ob.declared_vertices});
    else
      out.push_back({ob.name, ob.tuple.str().substr(0, static_cast<std::size_t>(arr.declared_hyperplanes())), {}});
  }
  return out;
}

Scenario parse_scenario(const std::string& path) {
  return naming_file(path, [&] { return parse_scenario(load_file(path)); });
}

Scenario parse_scenario(const json& doc) {
  const Field root(doc, "");
  if (!doc.is_object()) root.fail("scenario must be a JSON object");
  const Field schema = root.at("schema");
  if (schema.integer() != kSchemaVersion)
    schema.fail("unsupported schema version " + std::to_string(schema.integer()));

  std::vector<plan::AgentSpec> agent_specs;
  plan::SplineSpec spline;
  plan::PlannerConfig cfg;
  std::vector<std::string> warnings;
  std::vector<geo::Hyperplane> hyperplanes;
  long dim = -1;
  if (auto hs = root.find("hyperplanes")) {
    for (std::size_t i = 0; i < hs->size(); ++i) {
      const Field h = (*hs)[i];
      const Eigen::VectorXd normal = h.at("h").vector(dim);
      dim = normal.size();
      try {
        hyperplanes.emplace_back(normal, h.at("k").number());
      } catch (const InputError& e) {
        h.fail(e.what());
      }
    }
  }

  const Field agents = root.at("agents");
  if (agents.size() == 0) agents.fail("at least one agent is required");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const Field a = agents[i];
    plan::AgentSpec spec;
    spec.name = a.has("name") ? a.at("name").string() : "agent" + std::to_string(i);
    const Field wps = a.at("waypoints");
    if (wps.size() == 0) wps.fail("no waypoints");
    if (dim < 0) dim = wps[0].vector().size();
    spec.waypoints = wps.points(dim);
    const Field times = a.at("times");
    for (std::size_t k = 0; k < times.size(); ++k) spec.times.push_back(times[k].number());
    if (spec.times.size() != spec.waypoints.size())
      times.fail("expected one timestamp per waypoint (" + std::to_string(spec.waypoints.size()) + ")");
    if (auto safety = a.find("safety")) {
      try {
        spec.safety = geo::SafetyRegion(safety->points(dim));
      } catch (const InputError& e) {
        safety->fail(e.what());
      }
    }
    agent_specs.push_back(std::move(spec));
  }
  if (dim < 1) root.fail("cannot infer the dimension");

  std::vector<geo::ObstacleSpec> obstacles;
  if (auto obs = root.find("obstacles")) {
    for (std::size_t i = 0; i < obs->size(); ++i) {
      const Field o = (*obs)[i];
      geo::ObstacleSpec spec;
      spec.name = o.has("name") ? o.at("name").string() : "obstacle" + std::to_string(i);
      if (o.has("tuple") == o.has("vertices")) o.fail("obstacle '" + spec.name + "' needs exactly one of tuple or vertices");
      if (o.has("tuple")) {
        const Field t = o.at("tuple");
        spec.tuple = t.string();
        if (spec.tuple->size() != hyperplanes.size())
          t.fail("obstacle '" + spec.name + "' tuple has length " + std::to_string(spec.tuple->size()) +
                 ", expected " + std::to_string(hyperplanes.size()));
        try {
          geo::SignTuple::parse(*spec.tuple);
        } catch (const InputError& e) {
          t.fail("obstacle '" + spec.name + "': " + e.what());
        }
      } else {
        spec.vertices = o.at("vertices").points(dim);
      }
      obstacles.push_back(std::move(spec));
    }
  }

  geo::Box box;
  if (auto b = root.find("box")) {
    box = {b->at("lo").vector(dim), b->at("hi").vector(dim)};
    if (!box.valid()) b->fail("box needs lo < hi in every coordinate");
  } else {
    box = default_box(agent_specs, obstacles, static_cast<int>(dim));
  }

  if (auto sp = root.find("spline")) {
    spline.n = sp->find("n") ? sp->at("n").integer() : 12;
    if (sp->find("d")) {
      spline.d = sp->at("d").integer();
    } else {
      spline.d = 4;
      warnings.push_back("spline.d missing; using d=4");
    }
  } else {
    spline = {12, 4};
    warnings.push_back("spline missing; using n=12, d=4");
  }

  if (auto pc = root.find("planner")) {
    if (auto f = pc->find("big_m")) cfg.big_m = f->number();
    if (auto f = pc->find("max_bb_nodes")) cfg.max_bb_nodes = f->integer();
    if (auto f = pc->find("n_step")) cfg.n_step = f->integer();
    if (auto f = pc->find("n_max")) cfg.n_max = f->integer();
    if (auto f = pc->find("max_rounds")) cfg.max_rounds = f->integer();
    if (auto f = pc->find("convergence_tol")) cfg.convergence_tol = f->number();
    if (auto f = pc->find("margin")) cfg.margin = f->number();
    if (auto f = pc->find("workers")) cfg.workers = f->integer();
    if (auto f = pc->find("cost_weight")) {
      const auto rows = f->points(dim);
      if (static_cast<long>(rows.size()) != dim) f->fail("expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
      cfg.cost_weight.resize(dim, dim);
      for (long r = 0; r < dim; ++r) cfg.cost_weight.row(r) = rows[static_cast<std::size_t>(r)].transpose();
    }
  }

  auto arrangement = [&] {
    try {
      return geo::build_arrangement(hyperplanes, obstacles, box);
    } catch (const InputError& e) {
      Field(doc, "/obstacles").fail(e.what());
    }
  };
  Scenario s{{std::move(agent_specs), arrangement(), spline, cfg}, 0.0, flat::kGravity, std::move(warnings)};
  try {
    s.problem.validate();
  } catch (const InputError& e) {
    root.fail(e.what());
  }

  const double span = s.problem.tN() - s.problem.t0();
  s.dt = verify::default_dt(s.problem.t0(), s.problem.tN());
  if (auto f = root.find("dt")) {
    s.dt = f->number();
    if (!(s.dt > 0.0) || s.dt > span) f->fail("dt must lie in (0, tN - t0]");
  }
  if (auto f = root.find("gravity")) {
    s.gravity = f->number();
    if (!(s.gravity > 0.0)) f->fail("gravity must be positive");
  }
  return s;
}

json scenario_json(const Scenario& s) {
  const plan::PlanningProblem& p = s.problem;
  json doc;
  doc["schema"] = kSchemaVersion;
  doc["box"] = {{"lo", to_json(p.arrangement.box().lo)}, {"hi", to_json(p.arrangement.box().hi)}};
  doc["hyperplanes"] = json::array();
  for (const auto& h : declared_hyperplanes(p.arrangement))
    doc["hyperplanes"].push_back({{"h", to_json(h.normal)}, {"k", h.offset}});
  doc["obstacles"] = json::array();
  for (const auto& o : declared_obstacles(p.arrangement)) {
    json j{{"name", o.name}};
    if (o.tuple)
      j["tuple"] = *o.tuple;
    else
      j["vertices"] = to_json(o.vertices);
    doc["obstacles"].push_back(j);
  }
  doc["agents"] = json::array();
  for (const auto& a : p.agents) {
    json j{{"name", a.name}, {"waypoints", to_json(a.waypoints)}, {"times", a.times}};
    if (!a.safety.empty()) j["safety"] = to_json(a.safety.vertices());
    doc["agents"].push_back(j);
  }
  doc["spline"] = {{"n", p.spline.n}, {"d", p.spline.d}};
  const plan::PlannerConfig& c = p.config;
  json planner{{"max_bb_nodes", c.max_bb_nodes}, {"n_step", c.n_step},         {"n_max", c.n_max},
               {"max_rounds", c.max_rounds},     {"convergence_tol", c.convergence_tol},
               {"margin", c.margin},             {"workers", c.workers}};
  if (c.big_m) planner["big_m"] = *c.big_m;
  if (c.cost_weight.size() != 0) {
    json w = json::array();
    for (Eigen::Index r = 0; r < c.cost_weight.rows(); ++r)
      w.push_back(to_json(Eigen::VectorXd(c.cost_weight.row(r).transpose())));
    planner["cost_weight"] = w;
  }
  doc["planner"] = planner;
  doc["dt"] = s.dt;
  doc["gravity"] = s.gravity;
  return doc;
}

// ---------------------------------------------------------------- plans --

json plan_json(const plan::PlanningProblem& used, const plan::PlanResult& r, const PlanMeta& meta) {
  json doc;
  doc["schema"] = kSchemaVersion;
  doc["status"] = std::string(plan::to_string(r.status));
  doc["method"] = meta.method;
  doc["mode"] = meta.mode;
  doc["n"] = used.spline.n;
  doc["d"] = used.spline.d;
  const KnotVector k = used.knots();
  doc["knots"] = std::vector<double>(k.knots().begin(), k.knots().end());
  doc["objective"] = r.objective;
  doc["nodes"] = r.nodes;
  doc["rounds"] = r.rounds;
  doc["round_objectives"] = r.round_objectives;
  doc["agents"] = json::array();
  for (const auto& a : r.plans) {
    const ControlPolygon& P = a.curve.polygon();
    json pts = json::array();
    for (Eigen::Index j = 0; j < P.cols(); ++j) pts.push_back(to_json(Eigen::VectorXd(P.col(j))));
    doc["agents"].push_back({{"name", a.name}, {"length", a.length}, {"objective", a.objective},
                             {"control_points", pts}});
  }
  json cert;
  cert["obstacles"] = json::array();
  for (const auto& c : r.assignment.obstacles)
    cert["obstacles"].push_back({{"agent", c.agent}, {"region", c.region}, {"obstacle", c.obstacle},
                                 {"row", c.row}, {"alpha", c.alpha}});
  cert["pairs"] = json::array();
  for (const auto& c : r.assignment.pairs)
    cert["pairs"].push_back({{"agent_a", c.agent_a}, {"agent_b", c.agent_b}, {"region", c.region},
                             {"hyperplane", c.hyperplane}, {"orientation", c.orientation}, {"beta", c.beta}});
  cert["hulls"] = json::array();
  for (const auto& c : r.assignment.hulls)
    cert["hulls"].push_back({{"agent", c.agent}, {"other", c.other}, {"region", c.region}, {"row", c.row}});
  cert["planes"] = json::array();
  for (const auto& c : r.planes.obstacles)
    cert["planes"].push_back({{"agent", c.agent}, {"region", c.region}, {"obstacle", c.obstacle},
                              {"normal", to_json(c.normal)}, {"gap", c.gap}});
  cert["pair_planes"] = json::array();
  for (const auto& c : r.planes.pairs)
    cert["pair_planes"].push_back({{"agent_a", c.agent_a}, {"agent_b", c.agent_b}, {"region", c.region},
                                   {"normal", to_json(c.normal)}, {"gap", c.gap}});
  doc["certificates"] = cert;
  doc["escalation"] = json::array();
  for (const auto& a : meta.attempts)
    doc["escalation"].push_back({{"n", a.n}, {"status", std::string(plan::to_string(a.status))}});
  doc["infeasible_report"] = r.infeasible_report;
  return doc;
}

LoadedPlan read_plan(const json& doc, const Scenario& scenario) {
  const Field root(doc, "");
  if (root.at("schema").integer() != kSchemaVersion) root.at("schema").fail("unsupported schema version");
  LoadedPlan out{scenario.problem, {}, {}};
  out.problem.spline = {root.at("n").integer(), root.at("d").integer()};
  out.meta.method = root.at("method").string();
  out.meta.mode = root.at("mode").string();
  out.result.status = status_from(root.at("status"));
  out.result.objective = root.at("objective").number();
  out.result.nodes = root.at("nodes").integer();
  out.result.rounds = root.at("rounds").integer();

  const KnotVector knots = [&] {
    try {
      out.problem.validate();
      return out.problem.knots();
    } catch (const InputError& e) {
      root.fail(e.what());
    }
  }();
  const Field kf = root.at("knots");
  const Eigen::VectorXd kv = kf.vector(knots.size());
  for (int i = 0; i < knots.size(); ++i)
    if (std::abs(kv(i) - knots[i]) > 1e-9 * std::max(1.0, std::abs(knots[i])))
      kf[static_cast<std::size_t>(i)].fail("knot differs from the scenario's uniform knot vector");

  const Field agents = root.at("agents");
  const int dim = scenario.problem.arrangement.dim();
  if (agents.size() != 0 && agents.size() != scenario.problem.agents.size())
    agents.fail("plan has " + std::to_string(agents.size()) + " agents, scenario has " +
                std::to_string(scenario.problem.agents.size()));
  for (std::size_t a = 0; a < agents.size(); ++a) {
    const Field f = agents[a];
    const auto pts = f.at("control_points").points(dim);
    if (static_cast<int>(pts.size()) != knots.num_basis())
      f.at("control_points").fail("expected " + std::to_string(knots.num_basis()) + " control points");
    ControlPolygon P(dim, knots.num_basis());
    for (std::size_t j = 0; j < pts.size(); ++j) P.col(static_cast<Eigen::Index>(j)) = pts[j];
    SplineCurve curve(knots, P);
    out.result.plans.push_back({f.at("name").string(), curve, curve.length(), f.at("objective").number()});
  }

  if (auto c = root.find("certificates")) {
    auto ints = [](const Field& f) {
      std::vector<int> v;
      for (std::size_t i = 0; i < f.size(); ++i) v.push_back(f[i].integer());
      return v;
    };
    if (auto l = c->find("obstacles"))
      for (std::size_t i = 0; i < l->size(); ++i) {
        const Field e = (*l)[i];
        out.result.assignment.obstacles.push_back({e.at("agent").integer(), e.at("region").integer(),
                                                   e.at("obstacle").integer(), e.at("row").integer(),
                                                   ints(e.at("alpha"))});
      }
    if (auto l = c->find("pairs"))
      for (std::size_t i = 0; i < l->size(); ++i) {
        const Field e = (*l)[i];
        out.result.assignment.pairs.push_back({e.at("agent_a").integer(), e.at("agent_b").integer(),
                                               e.at("region").integer(), e.at("hyperplane").integer(),
                                               e.at("orientation").integer(), ints(e.at("beta"))});
      }
    if (auto l = c->find("hulls"))
      for (std::size_t i = 0; i < l->size(); ++i) {
        const Field e = (*l)[i];
        out.result.assignment.hulls.push_back({e.at("agent").integer(), e.at("other").integer(),
                                               e.at("region").integer(), e.at("row").integer()});
      }
    if (auto l = c->find("planes"))
      for (std::size_t i = 0; i < l->size(); ++i) {
        const Field e = (*l)[i];
        out.result.planes.obstacles.push_back({e.at("agent").integer(), e.at("region").integer(),
                                               e.at("obstacle").integer(), e.at("normal").vector(dim),
                                               e.at("gap").number()});
      }
    if (auto l = c->find("pair_planes"))
      for (std::size_t i = 0; i < l->size(); ++i) {
        const Field e = (*l)[i];
        out.result.planes.pairs.push_back({e.at("agent_a").integer(), e.at("agent_b").integer(),
                                           e.at("region").integer(), e.at("normal").vector(dim),
                                           e.at("gap").number()});
      }
  }
  if (auto l = root.find("escalation"))
    for (std::size_t i = 0; i < l->size(); ++i)
      out.meta.attempts.push_back({(*l)[i].at("n").integer(), status_from((*l)[i].at("status"))});
  if (auto l = root.find("infeasible_report"))
    for (std::size_t i = 0; i < l->size(); ++i) out.result.infeasible_report.push_back((*l)[i].string());
  return out;
}

LoadedPlan read_plan(const std::string& path, const Scenario& scenario) {
  return naming_file(path, [&] { return read_plan(load_file(path), scenario); });
}

// ------------------------------------------------------------- artifacts --

int write_trace_csv(std::ostream& os, const SplineCurve& curve, double dt, double g) {
  if (curve.dim() != 2) throw InputError("trace needs a planar curve");
  if (!(dt > 0.0)) throw InputError("trace needs dt > 0");
  const SplineCurve v = curve.derivative(1), a = curve.derivative(2);
  const double t0 = curve.t0(), tN = curve.t1();
  const long count = static_cast<long>(std::floor((tN - t0) / dt + 1e-9));
  os << "t,x,y,psi,va,phi\n" << std::setprecision(12);
  for (long s = 0; s <= count; ++s) {
    const double t = std::min(tN, t0 + static_cast<double>(s) * dt);
    const flat::FlatSample f{curve(t), v(t), a(t)};
    os << t << ',' << f.z(0) << ',' << f.z(1) << ',';
    try {
      const flat::StateSample x = flat::theta(f);
      const flat::InputSample u = flat::phi_input(f, g);
      os << x.psi << ',' << u.va << ',' << u.phi << '\n';
    } catch (const SingularVelocityError&) {
      os << ",,\n";
    }
  }
  return static_cast<int>(count + 1);
}

json report_json(const verify::VerificationReport& r) {
  return {{"min_obstacle_clearance", optional_number(r.min_obstacle_clearance)},
          {"min_inflated_clearance", optional_number(r.min_inflated_clearance)},
          {"min_interagent_distance", optional_number(r.min_interagent_distance)},
          {"min_safety_separation", optional_number(r.min_safety_separation)},
          {"max_waypoint_error", r.max_waypoint_error},
          {"max_dynamics_residual", optional_number(r.max_dynamics_residual)},
          {"samples", r.samples},
          {"singular_times", r.singular_times},
          {"clean", r.clean()}};
}

std::string render_svg(const plan::PlanningProblem& p, const std::vector<plan::AgentPlan>& plans,
                       int curve_samples) {
  const geo::Box& box = p.arrangement.box();
  if (box.lo.size() != 2) throw InputError("plots are planar only");
  const double width = 1000.0, pad = 20.0;
  const double scale = width / (box.hi(0) - box.lo(0));
  const double height = (box.hi(1) - box.lo(1)) * scale;
  auto X = [&](double x) { return pad + (x - box.lo(0)) * scale; };
  auto Y = [&](double y) { return pad + (box.hi(1) - y) * scale; };
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  auto points = [&](const std::vector<Eigen::VectorXd>& pts) {
    std::ostringstream ps;
    ps << std::fixed << std::setprecision(3);
    for (std::size_t i = 0; i < pts.size(); ++i) ps << (i ? " " : "") << X(pts[i](0)) << ',' << Y(pts[i](1));
    return ps.str();
  };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width + 2 * pad << "\" height=\""
     << height + 2 * pad << "\">\n";
  os << "<style>.obstacle{fill:#c33;fill-opacity:.35;stroke:#900}.hyperplane{stroke:#888;stroke-dasharray:4 3}"
        ".control-polygon{fill:none;stroke:#36c}.hull{fill:#36c;fill-opacity:.08;stroke:none}"
        ".curve{fill:none;stroke:#000;stroke-width:2}.waypoint{fill:#090}</style>\n";
  os << "<rect class=\"box\" x=\"" << X(box.lo(0)) << "\" y=\"" << Y(box.hi(1)) << "\" width=\""
     << width << "\" height=\"" << height << "\" fill=\"none\" stroke=\"#ccc\"/>\n";

  for (const auto& ob : p.arrangement.obstacles())
    os << "<polygon class=\"obstacle\" data-name=\"" << ob.name << "\" points=\""
       << points(geo::obstacle_vertices(ob, box)) << "\"/>\n";

  // each hyperplane clipped to the box
  for (const auto& h : p.arrangement.hyperplanes()) {
    const Eigen::Vector2d n = h.normal;
    const Eigen::Vector2d p0 = n * h.offset / n.squaredNorm();
    const Eigen::Vector2d d(-n(1), n(0));
    double lo = -std::numeric_limits<double>::infinity(), hi = -lo;
    bool hit = true;
    for (int c = 0; c < 2 && hit; ++c) {
      if (std::abs(d(c)) < 1e-14) {
        hit = p0(c) >= box.lo(c) && p0(c) <= box.hi(c);
        continue;
      }
      double a = (box.lo(c) - p0(c)) / d(c), b = (box.hi(c) - p0(c)) / d(c);
      if (a > b) std::swap(a, b);
      lo = std::max(lo, a);
      hi = std::min(hi, b);
    }
    if (!hit || lo >= hi) continue;
    const Eigen::Vector2d a = p0 + lo * d, b = p0 + hi * d;
    os << "<line class=\"hyperplane\" x1=\"" << X(a(0)) << "\" y1=\"" << Y(a(1)) << "\" x2=\"" << X(b(0))
       << "\" y2=\"" << Y(b(1)) << "\"/>\n";
  }

  for (std::size_t a = 0; a < plans.size(); ++a) {
    const SplineCurve& c = plans[a].curve;
    const ControlPolygon& P = c.polygon();
    const int order = c.knots().order();
    for (int i = order - 1; i < P.cols(); ++i) {
      std::vector<Eigen::Vector2d> pts;
      for (int j = i - order + 1; j <= i; ++j) pts.emplace_back(P.col(j));
      std::vector<Eigen::VectorXd> hull;
      for (const auto& q : geo::convex_hull_2d(pts)) hull.emplace_back(q);
      if (hull.size() >= 3) os << "<polygon class=\"hull\" points=\"" << points(hull) << "\"/>\n";
    }
    std::vector<Eigen::VectorXd> poly;
    for (Eigen::Index j = 0; j < P.cols(); ++j) poly.emplace_back(P.col(j));
    os << "<polyline class=\"control-polygon\" points=\"" << points(poly) << "\"/>\n";
    std::vector<Eigen::VectorXd> samples;
    for (int s = 0; s <= curve_samples; ++s)
      samples.push_back(c(c.t0() + (c.t1() - c.t0()) * s / curve_samples));
    os << "<polyline class=\"curve\" data-agent=\"" << plans[a].name << "\" points=\"" << points(samples)
       << "\"/>\n";
  }
  for (const auto& ag : p.agents)
    for (const auto& w : ag.waypoints)
      os << "<circle class=\"waypoint\" cx=\"" << X(w(0)) << "\" cy=\"" << Y(w(1)) << "\" r=\"4\"/>\n";
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------- sweep --

std::vector<SweepRow> sweep(const plan::PlanningProblem& base, const std::vector<int>& ns,
                            SweepMethods methods, plan::MultiMode mode) {
  using clock = std::chrono::steady_clock;
  auto total_length = [](const plan::PlanResult& r) -> std::optional<double> {
    if (r.status == plan::PlanStatus::infeasible || r.plans.empty()) return std::nullopt;
    double l = 0.0;
    for (const auto& a : r.plans) l += a.length;
    return l;
  };
  std::vector<SweepRow> rows;
  for (int n : ns) {
    plan::PlanningProblem p = base;
    p.spline.n = n;
    auto start = clock::now();
    const plan::PlanResult mip = p.agents.size() > 1 ? plan::plan_multi(p, mode) : plan::plan_mip(p);
    const double t_mip = std::chrono::duration<double>(clock::now() - start).count();
    if (methods != SweepMethods::exact) rows.push_back({n, "MI", total_length(mip), t_mip, mip.status});
    if (methods != SweepMethods::mip) {
      const bool seeded = total_length(mip).has_value();
      start = clock::now();
      const plan::PlanResult ex = plan::plan_exact(p, seeded ? &mip.plans : nullptr);
      const double t_ex = std::chrono::duration<double>(clock::now() - start).count();
      rows.push_back({n, "EX", total_length(ex), t_ex, ex.status});
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "n,method,length,wall_time,status\n";
  for (const auto& r : rows) {
    os << r.n << ',' << r.method << ',';
    if (r.length)
      os << std::fixed << std::setprecision(6) << *r.length;
    else
      os << '*';
    os << ',' << std::fixed << std::setprecision(6) << r.wall_time << ',' << plan::to_string(r.status) << '\n';
  }
}

}  // namespace flatplan::io
