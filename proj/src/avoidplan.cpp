#include "flatplan/avoidplan.hpp"

#include "flatplan/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <set>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace flatplan::plan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Rows enforced inside the QPs carry this much beyond the certificate
// margin so that solver round-off never eats into it.
constexpr double kBackoff = 1e-7;
// A disjunction counts as satisfied when one choice is violated by no more.
constexpr double kSatisfiedTol = 1e-9;

/// Linear rows G x <= g over the decision vector.
struct Rows {
  Eigen::MatrixXd G;
  Eigen::VectorXd g;

  double violation(const Eigen::VectorXd& x) const {
    return G.rows() ? (G * x - g).maxCoeff() : -kInf;
  }
};

struct Disjunction {
  enum class Kind { obstacle, pair, hull } kind;
  int a, b, region;  // obstacle: (agent, obstacle); pair: (agent a, agent b); hull: (agent, other)
  std::vector<Rows> choices;
  std::string label;

  double violation(const Eigen::VectorXd& x) const {
    double best = kInf;
    for (const Rows& r : choices) best = std::min(best, r.violation(x));
    return best;
  }
};

int num_regions(const KnotVector& k) { return k.n() - k.order() + 2; }
int first_point(const KnotVector& k, int region) { return region - k.order() + 1; }

Eigen::MatrixXd cost_weight(const PlanningProblem& p, int dim) {
  if (p.config.cost_weight.size() == 0) return Eigen::MatrixXd::Identity(dim, dim);
  return p.config.cost_weight;
}

/// Unit-normal rows of a polytope (zero rows dropped).
geo::HPolytope normalized(const geo::HPolytope& in) {
  std::vector<int> keep;
  for (int r = 0; r < in.rows(); ++r)
    if (in.A.row(r).norm() > 0.0) keep.push_back(r);
  geo::HPolytope out{Eigen::MatrixXd(static_cast<Eigen::Index>(keep.size()), in.dim()),
                     Eigen::VectorXd(static_cast<Eigen::Index>(keep.size()))};
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const double s = in.A.row(keep[i]).norm();
    out.A.row(static_cast<Eigen::Index>(i)) = in.A.row(keep[i]) / s;
    out.b(static_cast<Eigen::Index>(i)) = in.b(keep[i]) / s;
  }
  return out;
}

/// Directions usable to split two agents: ±h_m, or the coordinate axes when
/// the arrangement is empty.
std::vector<Eigen::VectorXd> pair_directions(const PlanningProblem& p) {
  std::vector<Eigen::VectorXd> out;
  const auto& hs = p.arrangement.hyperplanes();
  if (hs.empty()) {
    for (int c = 0; c < p.arrangement.dim(); ++c) {
      out.push_back(Eigen::VectorXd::Unit(p.arrangement.dim(), c));
      out.push_back(-Eigen::VectorXd::Unit(p.arrangement.dim(), c));
    }
    return out;
  }
  for (const auto& h : hs) {
    out.push_back(h.normal.normalized());
    out.push_back(-h.normal.normalized());
  }
  return out;
}

/// Region-i points of `agent` must satisfy a'p >= b for a row (a, b) of
/// `rows` (already inflated); one choice per row.
Disjunction clearance_disjunction(const Assembled& as, Disjunction::Kind kind, int agent, int other,
                                  int region, const geo::HPolytope& rows, double margin,
                                  int local_agent) {
  Disjunction d{kind, agent, other, region, {}, {}};
  const int order = as.knots.order();
  const int j0 = first_point(as.knots, region);
  const int nvar = as.qp.num_variables();
  for (int r = 0; r < rows.rows(); ++r) {
    Rows c{Eigen::MatrixXd::Zero(order, nvar), Eigen::VectorXd(order)};
    for (int j = 0; j < order; ++j) {
      for (int k = 0; k < as.dim; ++k) c.G(j, as.index(local_agent, j0 + j, k)) = -rows.A(r, k);
      c.g(j) = -(rows.b(r) + margin);
    }
    d.choices.push_back(std::move(c));
  }
  return d;
}

Disjunction pair_disjunction(const PlanningProblem& p, const Assembled& as, int a, int b,
                             int region, double margin) {
  Disjunction d{Disjunction::Kind::pair, a, b, region, {}, {}};
  const int order = as.knots.order();
  const int j0 = first_point(as.knots, region);
  const int nvar = as.qp.num_variables();
  const auto& sa = p.agents[static_cast<std::size_t>(a)].safety;
  const auto& sb = p.agents[static_cast<std::size_t>(b)].safety;
  for (const Eigen::VectorXd& u : pair_directions(p)) {
    const double delta = sa.support(u) + sb.support(-u) + margin;
    Rows c{Eigen::MatrixXd::Zero(order * order, nvar), Eigen::VectorXd(order * order)};
    for (int j1 = 0; j1 < order; ++j1) {
      for (int j2 = 0; j2 < order; ++j2) {
        const int r = j1 * order + j2;
        for (int k = 0; k < as.dim; ++k) {
          c.G(r, as.index(a, j0 + j1, k)) += u(k);
          c.G(r, as.index(b, j0 + j2, k)) -= u(k);
        }
        c.g(r) = -delta;
      }
    }
    d.choices.push_back(std::move(c));
  }
  d.label = "pair(" + std::to_string(a) + "," + std::to_string(b) + ") region " +
            std::to_string(region);
  return d;
}

/// Obstacle l of agent k, inflated by the agent's safety region.
geo::HPolytope inflated_rows(const PlanningProblem& p, int agent, int obstacle) {
  return normalized(agent_obstacle(p, agent, obstacle));
}

/// Region hull of a fixed polygon, inflated by both safety regions.
geo::HPolytope hull_rows(const ControlPolygon& other, const KnotVector& knots, int region,
                         const geo::SafetyRegion& s_other, const geo::SafetyRegion& s_self) {
  std::vector<Eigen::VectorXd> pts;
  const int j0 = first_point(knots, region);
  for (int j = 0; j < knots.order(); ++j) pts.emplace_back(other.col(j0 + j));
  geo::HPolytope h = normalized(geo::hull_polytope_2d(pts));
  for (int r = 0; r < h.rows(); ++r) {
    const Eigen::VectorXd a = h.A.row(r).transpose();
    h.b(r) += s_other.support(a) + s_self.support(-a);
  }
  return h;
}

Rows with_backoff(const Rows& r) { return Rows{r.G, r.g.array() - kBackoff}; }

struct BnbOutcome {
  PlanStatus status = PlanStatus::infeasible;
  Eigen::VectorXd x;
  double objective = kInf;
  std::vector<int> fixed;  // choice per disjunction, -1 when never branched
  int nodes = 0;
  std::vector<std::string> infeasible;
};

struct Node {
  double bound;
  std::vector<int> choice;                    // per disjunction, -1 = free
  std::vector<std::pair<int, int>> path;      // branching order
  Eigen::VectorXd x, y_eq, y_ineq;
  long seq;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    // priority_queue pops the largest: invert for best-first
    if (a.bound != b.bound) return a.bound > b.bound;
    if (a.choice != b.choice) return a.choice > b.choice;
    return a.seq > b.seq;
  }
};

qp::QuadraticProgram node_program(const qp::QuadraticProgram& base,
                                  const std::vector<Disjunction>& disj,
                                  const std::vector<std::pair<int, int>>& path) {
  Eigen::Index extra = 0;
  for (const auto& [d, c] : path) extra += disj[static_cast<std::size_t>(d)].choices[static_cast<std::size_t>(c)].G.rows();
  qp::QuadraticProgram out = base;
  const Eigen::Index m0 = base.G.rows();
  out.G.conservativeResize(m0 + extra, base.num_variables());
  out.g.conservativeResize(m0 + extra);
  Eigen::Index r = m0;
  for (const auto& [d, c] : path) {
    const Rows rows = with_backoff(disj[static_cast<std::size_t>(d)].choices[static_cast<std::size_t>(c)]);
    out.G.middleRows(r, rows.G.rows()) = rows.G;
    out.g.segment(r, rows.g.size()) = rows.g;
    r += rows.G.rows();
  }
  return out;
}

int thread_count(int workers) {
#ifdef _OPENMP
  return workers > 0 ? workers : omp_get_max_threads();
#else
  (void)workers;
  return 1;
#endif
}

BnbOutcome branch_and_bound(const qp::QuadraticProgram& base, const std::vector<Disjunction>& disj,
                            const PlannerConfig& cfg) {
  BnbOutcome out;
  const int nd = static_cast<int>(disj.size());
  const qp::QpSolution root = qp::solve(base);
  out.nodes = 1;
  if (root.status != qp::QpStatus::optimal) {
    out.infeasible.push_back("waypoint constraints");
    return out;
  }

  auto most_violated = [&](const Node& n) {
    int best = -1;
    double worst = kSatisfiedTol;
    for (int d = 0; d < nd; ++d) {
      if (n.choice[static_cast<std::size_t>(d)] >= 0) continue;
      const double v = disj[static_cast<std::size_t>(d)].violation(n.x);
      if (v > worst) {
        worst = v;
        best = d;
      }
    }
    return best;
  };

  long seq = 0;
  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  Node incumbent{kInf, {}, {}, {}, {}, {}, -1};
  std::set<std::string> dead;

  Node first{root.objective, std::vector<int>(static_cast<std::size_t>(nd), -1), {}, root.x,
             root.y_eq, root.y_ineq, seq++};
  if (most_violated(first) < 0)
    incumbent = first;
  else
    open.push(std::move(first));

  const int threads = thread_count(cfg.workers);
  bool capped = false;
  while (!open.empty()) {
    Node node = open.top();
    open.pop();
    const double tol = 1e-9 * std::max(1.0, std::abs(incumbent.bound));
    if (node.bound >= incumbent.bound - tol) break;
    if (out.nodes >= cfg.max_bb_nodes) {
      capped = true;
      break;
    }
    const int d = most_violated(node);
    const Disjunction& D = disj[static_cast<std::size_t>(d)];
    const int nc = static_cast<int>(D.choices.size());
    std::vector<qp::QpSolution> sols(static_cast<std::size_t>(nc));
    std::vector<std::vector<std::pair<int, int>>> paths(static_cast<std::size_t>(nc), node.path);
    for (int c = 0; c < nc; ++c) paths[static_cast<std::size_t>(c)].emplace_back(d, c);

#pragma omp parallel for schedule(dynamic) num_threads(threads) if (threads > 1)
    for (int c = 0; c < nc; ++c) {
      const qp::QuadraticProgram prog = node_program(base, disj, paths[static_cast<std::size_t>(c)]);
      qp::WarmStart warm{node.x, node.y_eq,
                         Eigen::VectorXd::Zero(prog.num_inequalities())};
      warm.y_ineq.head(node.y_ineq.size()) = node.y_ineq;
      sols[static_cast<std::size_t>(c)] = qp::solve(prog, {}, &warm);
    }
    out.nodes += nc;

    int alive = 0;
    for (int c = 0; c < nc; ++c) {
      qp::QpSolution& s = sols[static_cast<std::size_t>(c)];
      if (s.status != qp::QpStatus::optimal) continue;
      ++alive;
      Node child{s.objective, node.choice, std::move(paths[static_cast<std::size_t>(c)]),
                 std::move(s.x), std::move(s.y_eq), std::move(s.y_ineq), seq++};
      child.choice[static_cast<std::size_t>(d)] = c;
      const double ctol = 1e-9 * std::max(1.0, std::abs(incumbent.bound));
      if (child.bound >= incumbent.bound - ctol) continue;
      if (most_violated(child) < 0)
        incumbent = std::move(child);
      else
        open.push(std::move(child));
    }
    if (alive == 0) dead.insert(D.label);
  }

  out.infeasible.assign(dead.begin(), dead.end());
  if (incumbent.seq < 0) {
    out.status = capped ? PlanStatus::node_limit : PlanStatus::infeasible;
    return out;
  }
  out.status = capped ? PlanStatus::node_limit : PlanStatus::success;
  out.x = std::move(incumbent.x);
  out.objective = incumbent.bound;
  out.fixed = std::move(incumbent.choice);
  return out;
}

/// Choice certifying disjunction d at x: the branched one, else the most
/// comfortably satisfied.
int certifying_choice(const Disjunction& d, int fixed, const Eigen::VectorXd& x) {
  if (fixed >= 0) return fixed;
  int best = 0;
  double v = kInf;
  for (std::size_t c = 0; c < d.choices.size(); ++c) {
    const double cv = d.choices[c].violation(x);
    if (cv < v) {
      v = cv;
      best = static_cast<int>(c);
    }
  }
  return best;
}

std::vector<int> choice_flags(const Disjunction& d, const Eigen::VectorXd& x, int chosen) {
  std::vector<int> flags(d.choices.size(), 1);
  for (std::size_t c = 0; c < d.choices.size(); ++c)
    if (d.choices[c].violation(x) <= kSatisfiedTol) flags[c] = 0;
  flags[static_cast<std::size_t>(chosen)] = 0;
  return flags;
}

AgentPlan make_plan(const PlanningProblem& p, const Assembled& as, const Eigen::VectorXd& x,
                    int local, int agent) {
  const ControlPolygon P = as.polygon(x, local);
  SplineCurve curve(as.knots, P);
  const int nv = as.vars_per_agent();
  const Eigen::VectorXd xa = x.segment(local * nv, nv);
  const Eigen::MatrixXd Qa = as.qp.Q.block(local * nv, local * nv, nv, nv);
  AgentPlan plan{p.agents[static_cast<std::size_t>(agent)].name, curve, curve.length(),
                 0.5 * xa.dot(Qa * xa)};
  return plan;
}

/// Obstacle disjunctions of one local agent; `agent` is its global index.
void add_obstacle_disjunctions(const PlanningProblem& p, const Assembled& as, int local, int agent,
                               std::vector<Disjunction>& out) {
  const int regions = num_regions(as.knots);
  for (int i = 0; i < regions; ++i) {
    const int region = i + as.knots.order() - 1;
    for (int l = 0; l < static_cast<int>(p.arrangement.obstacles().size()); ++l) {
      Disjunction d = clearance_disjunction(as, Disjunction::Kind::obstacle, agent, l, region,
                                            inflated_rows(p, agent, l), p.config.margin, local);
      d.label = "agent " + std::to_string(agent) + " region " + std::to_string(region) +
                " obstacle " + p.arrangement.obstacles()[static_cast<std::size_t>(l)].name;
      out.push_back(std::move(d));
    }
  }
}

void record_certificates(const PlanningProblem& p, const std::vector<Disjunction>& disj,
                         const BnbOutcome& o, BinaryAssignment& cert) {
  for (std::size_t d = 0; d < disj.size(); ++d) {
    const Disjunction& D = disj[d];
    const int c = certifying_choice(D, o.fixed.empty() ? -1 : o.fixed[d], o.x);
    switch (D.kind) {
      case Disjunction::Kind::obstacle:
        cert.obstacles.push_back({D.a, D.region, D.b, c, choice_flags(D, o.x, c)});
        break;
      case Disjunction::Kind::pair: {
        const bool axes = p.arrangement.hyperplanes().empty();
        cert.pairs.push_back({D.a, D.b, D.region, axes ? -1 - c / 2 : c / 2, c % 2 == 0 ? 1 : -1,
                              choice_flags(D, o.x, c)});
        break;
      }
      case Disjunction::Kind::hull:
        cert.hulls.push_back({D.a, D.b, D.region, c});
        break;
    }
  }
}

/// Solves the MIP over the given agents (global indices) with the given
/// fixed polygons of earlier agents as per-region obstacles.
PlanResult solve_group(const PlanningProblem& p, const std::vector<int>& agents,
                       const std::vector<std::pair<int, ControlPolygon>>& fixed_hulls,
                       bool couple_pairs) {
  PlanningProblem sub = p;
  sub.agents.clear();
  for (int a : agents) sub.agents.push_back(p.agents[static_cast<std::size_t>(a)]);
  const Assembled as = assemble(sub);

  std::vector<Disjunction> disj;
  for (std::size_t l = 0; l < agents.size(); ++l)
    add_obstacle_disjunctions(p, as, static_cast<int>(l), agents[l], disj);
  const int regions = num_regions(as.knots);
  if (couple_pairs) {
    for (std::size_t a = 0; a < agents.size(); ++a)
      for (std::size_t b = a + 1; b < agents.size(); ++b)
        for (int i = 0; i < regions; ++i) {
          Disjunction d = pair_disjunction(sub, as, static_cast<int>(a), static_cast<int>(b),
                                           i + as.knots.order() - 1, p.config.margin);
          d.a = agents[a];
          d.b = agents[b];
          d.label = "pair(" + std::to_string(d.a) + "," + std::to_string(d.b) + ") region " +
                    std::to_string(d.region);
          disj.push_back(std::move(d));
        }
  }
  for (std::size_t l = 0; l < agents.size(); ++l) {
    const int agent = agents[l];
    for (const auto& [other, poly] : fixed_hulls) {
      for (int i = 0; i < regions; ++i) {
        const int region = i + as.knots.order() - 1;
        const geo::HPolytope rows =
            hull_rows(poly, as.knots, region, p.agents[static_cast<std::size_t>(other)].safety,
                      p.agents[static_cast<std::size_t>(agent)].safety);
        Disjunction d = clearance_disjunction(as, Disjunction::Kind::hull, agent, other, region,
                                              rows, p.config.margin, static_cast<int>(l));
        d.label = "agent " + std::to_string(agent) + " region " + std::to_string(region) +
                  " hull of agent " + std::to_string(other);
        disj.push_back(std::move(d));
      }
    }
  }

  const BnbOutcome o = branch_and_bound(as.qp, disj, p.config);
  PlanResult r;
  r.status = o.status;
  r.nodes = o.nodes;
  r.infeasible_report = o.infeasible;
  if (o.x.size() == 0) return r;
  r.objective = o.objective;
  for (std::size_t l = 0; l < agents.size(); ++l)
    r.plans.push_back(make_plan(p, as, o.x, static_cast<int>(l), agents[l]));
  record_certificates(p, disj, o, r.assignment);
  return r;
}

// ---------------------------------------------------------------- exact --

struct Svm {
  Eigen::VectorXd normal;  // unit
  double gap;              // min_b n'b - max_a n'a
};

/// Max-margin hyperplane with the `low` points on the small side: the
/// direction joining the nearest points of the two hulls. When the hulls
/// overlap, the best of their facet normals is used instead.
Svm separate(const std::vector<Eigen::VectorXd>& low, const std::vector<Eigen::VectorXd>& high) {
  const int dim = static_cast<int>(low.front().size());
  const int k1 = static_cast<int>(low.size()), k2 = static_cast<int>(high.size());
  auto gap_of = [&](const Eigen::VectorXd& c) {
    double hi = -kInf, lo = kInf;
    for (const auto& a : low) hi = std::max(hi, c.dot(a));
    for (const auto& b : high) lo = std::min(lo, c.dot(b));
    return lo - hi;
  };

  // min |sum mu_b b - sum lambda_a a|^2 over two simplices
  Eigen::MatrixXd V(dim, k1 + k2);
  for (int i = 0; i < k1; ++i) V.col(i) = -low[static_cast<std::size_t>(i)];
  for (int i = 0; i < k2; ++i) V.col(k1 + i) = high[static_cast<std::size_t>(i)];
  qp::QuadraticProgram prog = qp::QuadraticProgram::with_variables(k1 + k2);
  prog.Q = V.transpose() * V;
  prog.Q = (0.5 * (prog.Q + prog.Q.transpose())).eval();
  Eigen::RowVectorXd e1 = Eigen::RowVectorXd::Zero(k1 + k2), e2 = e1;
  e1.head(k1).setOnes();
  e2.tail(k2).setOnes();
  prog.add_equality(e1, 1.0);
  prog.add_equality(e2, 1.0);
  for (int i = 0; i < k1 + k2; ++i) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(k1 + k2);
    row(i) = -1.0;
    prog.add_inequality(row, 0.0);
  }
  const qp::QpSolution s = qp::solve(prog);

  Svm best{Eigen::VectorXd::Unit(dim, 0), -kInf};
  auto consider = [&](Eigen::VectorXd c) {
    if (!(c.norm() > 1e-12)) return;
    c.normalize();
    const double g = gap_of(c);
    if (g > best.gap) best = {c, g};
  };
  if (s.status == qp::QpStatus::optimal) consider(V * s.x);
  if (dim == 2) {
    for (const auto* set : {&low, &high}) {
      const geo::HPolytope h = geo::hull_polytope_2d(*set);
      for (int r = 0; r < h.rows(); ++r) {
        consider(h.A.row(r).transpose());
        consider(-h.A.row(r).transpose());
      }
    }
  } else {
    for (int c = 0; c < dim; ++c) {
      consider(Eigen::VectorXd::Unit(dim, c));
      consider(-Eigen::VectorXd::Unit(dim, c));
    }
  }
  return best;
}

std::vector<Eigen::VectorXd> region_points(const ControlPolygon& P, const KnotVector& k, int region,
                                           const geo::SafetyRegion& s) {
  std::vector<Eigen::VectorXd> out;
  const int j0 = first_point(k, region);
  for (int j = 0; j < k.order(); ++j) {
    if (s.empty()) {
      out.emplace_back(P.col(j0 + j));
    } else {
      for (const auto& v : s.vertices()) out.emplace_back(P.col(j0 + j) + v);
    }
  }
  return out;
}

double max_dot(const Eigen::VectorXd& c, const ControlPolygon& P, int j0, int count) {
  double v = -kInf;
  for (int j = 0; j < count; ++j) v = std::max(v, c.dot(P.col(j0 + j)));
  return v;
}

double min_dot(const Eigen::VectorXd& c, const ControlPolygon& P, int j0, int count) {
  double v = kInf;
  for (int j = 0; j < count; ++j) v = std::min(v, c.dot(P.col(j0 + j)));
  return v;
}

double min_dot(const Eigen::VectorXd& c, const std::vector<Eigen::VectorXd>& pts) {
  double v = kInf;
  for (const auto& q : pts) v = std::min(v, c.dot(q));
  return v;
}

}  // namespace

// -------------------------------------------------------------- problem --

double PlanningProblem::t0() const { return agents.at(0).times.front(); }
double PlanningProblem::tN() const { return agents.at(0).times.back(); }

KnotVector PlanningProblem::knots() const {
  return KnotVector::clamped_uniform(t0(), tN(), spline.n, spline.d);
}

void PlanningProblem::validate() const {
  if (agents.empty()) throw InputError("planning problem needs at least one agent");
  const int dim = arrangement.dim();
  if (spline.d < 3) throw InputError("spline order d must be >= 3, got " + std::to_string(spline.d));
  if (spline.n < spline.d - 1)
    throw InputError("spline needs n >= d-1 (n=" + std::to_string(spline.n) +
                     ", d=" + std::to_string(spline.d) + ")");
  for (const AgentSpec& a : agents) {
    const std::string who = "agent '" + a.name + "'";
    if (a.waypoints.size() < 2) throw InputError(who + " needs at least two waypoints");
    if (a.waypoints.size() != a.times.size())
      throw InputError(who + " has " + std::to_string(a.waypoints.size()) + " waypoints and " +
                       std::to_string(a.times.size()) + " timestamps");
    for (std::size_t s = 0; s < a.times.size(); ++s) {
      if (!std::isfinite(a.times[s])) throw InputError(who + " has a non-finite timestamp");
      if (s > 0 && !(a.times[s] > a.times[s - 1]))
        throw InputError(who + " timestamps must be strictly increasing");
      if (a.waypoints[s].size() != dim || !a.waypoints[s].allFinite())
        throw InputError(who + " waypoint " + std::to_string(s) + " must be a finite " +
                         std::to_string(dim) + "-vector");
    }
    if (a.times.front() != agents.front().times.front() ||
        a.times.back() != agents.front().times.back())
      throw InputError(who + " must share the first and last timestamps with the other agents");
    if (static_cast<int>(a.waypoints.size()) > spline.n + 1)
      throw InputError(who + " has more waypoints than control points (n+1=" +
                       std::to_string(spline.n + 1) + ")");
    if (!a.safety.empty() && a.safety.vertices().front().size() != dim)
      throw InputError(who + " safety region has the wrong dimension");
  }
  if (config.big_m && !(*config.big_m > 0.0)) throw InputError("big_m must be positive");
  if (config.n_step < 1) throw InputError("n_step must be >= 1");
  if (config.max_bb_nodes < 1) throw InputError("max_bb_nodes must be >= 1");
  if (config.max_rounds < 1) throw InputError("max_rounds must be >= 1");
  if (!(config.margin >= 0.0)) throw InputError("margin must be >= 0");
  if (config.cost_weight.size() != 0) {
    const Eigen::MatrixXd& W = config.cost_weight;
    if (W.rows() != dim || W.cols() != dim) throw InputError("cost_weight must be dim x dim");
    if (!W.isApprox(W.transpose(), 1e-12) ||
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(W).eigenvalues().minCoeff() < -1e-12)
      throw InputError("cost_weight must be symmetric positive semidefinite");
  }
}

double default_big_m(const geo::Arrangement& arr) {
  double kmax = 0.0, hmax = 0.0;
  for (const auto& h : arr.hyperplanes()) {
    kmax = std::max(kmax, std::abs(h.offset));
    hmax = std::max(hmax, h.normal.norm());
  }
  return 2.0 * (kmax + hmax * arr.box().radius_from_origin());
}

double big_m(const PlanningProblem& p) {
  if (p.config.big_m) return *p.config.big_m;
  double T = default_big_m(p.arrangement);
  // inflated offsets may exceed max|k|
  const double R = p.arrangement.box().radius_from_origin();
  for (std::size_t k = 0; k < p.agents.size(); ++k)
    for (std::size_t l = 0; l < p.arrangement.obstacles().size(); ++l) {
      const geo::HPolytope o = agent_obstacle(p, static_cast<int>(k), static_cast<int>(l));
      for (int r = 0; r < o.rows(); ++r)
        T = std::max(T, 2.0 * (std::abs(o.b(r)) + o.A.row(r).norm() * R));
    }
  return T;
}

ControlPolygon Assembled::polygon(const Eigen::VectorXd& x, int agent) const {
  return Eigen::Map<const Eigen::MatrixXd>(x.data() + agent * vars_per_agent(), dim, points);
}

Assembled assemble(const PlanningProblem& p) {
  p.validate();
  Assembled as{qp::QuadraticProgram::with_variables(0), p.knots(), p.arrangement.dim(),
               p.spline.n + 1, static_cast<int>(p.agents.size())};
  const int d = p.spline.d;
  const DerivativeMatrix m1 = derivative_matrix(as.knots, 1);
  const Eigen::MatrixXd G = gram_matrix(m1.lowered, d - 1);
  Eigen::MatrixXd K = m1.matrix * G * m1.matrix.transpose();
  K = 0.5 * (K + K.transpose());
  const Eigen::MatrixXd W = cost_weight(p, as.dim);

  const int nv = as.vars_per_agent();
  as.qp = qp::QuadraticProgram::with_variables(nv * as.agents);
  for (int a = 0; a < as.agents; ++a)
    for (int i = 0; i < as.points; ++i)
      for (int j = 0; j < as.points; ++j)
        as.qp.Q.block(a * nv + i * as.dim, a * nv + j * as.dim, as.dim, as.dim) = 2.0 * K(i, j) * W;

  for (int a = 0; a < as.agents; ++a) {
    const AgentSpec& ag = p.agents[static_cast<std::size_t>(a)];
    for (std::size_t s = 0; s < ag.times.size(); ++s) {
      const Eigen::VectorXd B = basis_eval(as.knots, d, ag.times[s]);
      for (int c = 0; c < as.dim; ++c) {
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(as.qp.num_variables());
        for (int j = 0; j < as.points; ++j) row(as.index(a, j, c)) = B(j);
        as.qp.add_equality(row, ag.waypoints[s](c));
      }
    }
  }
  return as;
}

geo::HPolytope agent_obstacle(const PlanningProblem& p, int agent, int obstacle) {
  return geo::inflate_obstacle(
      p.arrangement.obstacles().at(static_cast<std::size_t>(obstacle)).region,
      p.agents.at(static_cast<std::size_t>(agent)).safety);
}

std::string_view to_string(PlanStatus s) {
  switch (s) {
    case PlanStatus::success: return "success";
    case PlanStatus::degraded: return "degraded";
    case PlanStatus::node_limit: return "node_limit";
    case PlanStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

// ------------------------------------------------------------- planners --

PlanResult plan_free(const PlanningProblem& p) {
  const Assembled as = assemble(p);
  const BnbOutcome o = branch_and_bound(as.qp, {}, p.config);
  PlanResult r;
  r.status = o.status;
  r.nodes = o.nodes;
  r.infeasible_report = o.infeasible;
  if (o.x.size() == 0) return r;
  r.objective = o.objective;
  for (int a = 0; a < as.agents; ++a) r.plans.push_back(make_plan(p, as, o.x, a, a));
  return r;
}

PlanResult plan_mip(const PlanningProblem& p) {
  p.validate();
  if (p.agents.size() > 1) return plan_multi(p, MultiMode::simultaneous);
  return solve_group(p, {0}, {}, false);
}

PlanResult plan_multi(const PlanningProblem& p, MultiMode mode) {
  p.validate();
  if (p.agents.size() < 2) throw InputError("plan_multi needs at least two agents");
  std::vector<int> all(p.agents.size());
  for (std::size_t a = 0; a < all.size(); ++a) all[a] = static_cast<int>(a);
  if (mode == MultiMode::simultaneous) return solve_group(p, all, {}, true);

  PlanResult total;
  total.status = PlanStatus::success;
  std::vector<std::pair<int, ControlPolygon>> fixed;
  for (int a : all) {
    PlanResult r = solve_group(p, {a}, fixed, false);
    total.nodes += r.nodes;
    for (auto& s : r.infeasible_report) total.infeasible_report.push_back(std::move(s));
    if (r.plans.empty()) {
      total.status = r.status;
      total.plans.clear();
      return total;
    }
    if (r.status != PlanStatus::success) total.status = r.status;
    total.objective += r.objective;
    fixed.emplace_back(a, r.plans.front().curve.polygon());
    total.plans.push_back(std::move(r.plans.front()));
    auto& A = total.assignment;
    A.obstacles.insert(A.obstacles.end(), r.assignment.obstacles.begin(), r.assignment.obstacles.end());
    A.hulls.insert(A.hulls.end(), r.assignment.hulls.begin(), r.assignment.hulls.end());
  }
  return total;
}

ControlPolygon straight_polygon(const PlanningProblem& p, int agent) {
  const KnotVector k = p.knots();
  const AgentSpec& a = p.agents.at(static_cast<std::size_t>(agent));
  ControlPolygon P(p.arrangement.dim(), k.num_basis());
  for (int j = 0; j < k.num_basis(); ++j) {
    double g = 0.0;
    for (int r = 1; r < k.order(); ++r) g += k[j + r];
    g /= (k.order() - 1);
    std::size_t s = 1;
    while (s + 1 < a.times.size() && a.times[s] < g) ++s;
    const double w = std::clamp((g - a.times[s - 1]) / (a.times[s] - a.times[s - 1]), 0.0, 1.0);
    P.col(j) = (1.0 - w) * a.waypoints[s - 1] + w * a.waypoints[s];
  }
  return P;
}

PlanResult plan_exact(const PlanningProblem& p, const std::vector<AgentPlan>* warm) {
  const Assembled as = assemble(p);
  const int na = as.agents;
  const int nv = as.vars_per_agent();
  const int order = as.knots.order();
  const int regions = num_regions(as.knots);
  const int nobs = static_cast<int>(p.arrangement.obstacles().size());
  const double mu = p.config.margin;

  std::vector<std::vector<Eigen::VectorXd>> obstacle_pts;
  for (const auto& ob : p.arrangement.obstacles())
    obstacle_pts.push_back(geo::obstacle_vertices(ob, p.arrangement.box()));

  Eigen::VectorXd x(as.qp.num_variables());
  for (int a = 0; a < na; ++a) {
    ControlPolygon P;
    if (warm && static_cast<int>(warm->size()) == na &&
        (*warm)[static_cast<std::size_t>(a)].curve.polygon().cols() == as.points)
      P = (*warm)[static_cast<std::size_t>(a)].curve.polygon();
    else
      P = straight_polygon(p, a);
    x.segment(a * nv, nv) = Eigen::Map<const Eigen::VectorXd>(P.data(), nv);
  }

  struct Group {
    bool pair;
    int a, b, region;
  };
  std::vector<Group> groups;
  for (int a = 0; a < na; ++a)
    for (int i = 0; i < regions; ++i)
      for (int l = 0; l < nobs; ++l) groups.push_back({false, a, l, i + order - 1});
  for (int a = 0; a < na; ++a)
    for (int b = a + 1; b < na; ++b)
      for (int i = 0; i < regions; ++i) groups.push_back({true, a, b, i + order - 1});

  PlanResult r;
  r.status = PlanStatus::infeasible;

  if (groups.empty()) {
    const qp::QpSolution s = qp::solve(as.qp);
    r.rounds = 1;
    if (s.status != qp::QpStatus::optimal) {
      r.infeasible_report.push_back("waypoint constraints");
      return r;
    }
    r.status = PlanStatus::success;
    r.objective = s.objective;
    r.round_objectives.push_back(s.objective);
    for (int a = 0; a < na; ++a) r.plans.push_back(make_plan(p, as, s.x, a, a));
    return r;
  }

  auto planes_for = [&](const Eigen::VectorXd& xv) {
    std::vector<Svm> out(groups.size());
    const long count = static_cast<long>(groups.size());
    const int threads = thread_count(p.config.workers);
#pragma omp parallel for schedule(dynamic) num_threads(threads) if (threads > 1)
    for (long g = 0; g < count; ++g) {
      const Group& G = groups[static_cast<std::size_t>(g)];
      const ControlPolygon Pa = as.polygon(xv, G.a);
      const auto low =
          region_points(Pa, as.knots, G.region, p.agents[static_cast<std::size_t>(G.a)].safety);
      if (!G.pair) {
        out[static_cast<std::size_t>(g)] = separate(low, obstacle_pts[static_cast<std::size_t>(G.b)]);
      } else {
        const ControlPolygon Pb = as.polygon(xv, G.b);
        std::vector<Eigen::VectorXd> high;
        const auto& sb = p.agents[static_cast<std::size_t>(G.b)].safety;
        const int j0 = first_point(as.knots, G.region);
        for (int j = 0; j < order; ++j) {
          if (sb.empty())
            high.emplace_back(Pb.col(j0 + j));
          else
            for (const auto& v : sb.vertices()) high.emplace_back(Pb.col(j0 + j) + v);
        }
        out[static_cast<std::size_t>(g)] = separate(low, high);
      }
    }
    return out;
  };

  // certificate gap of every group for fixed planes, after safety margins
  auto gaps_for = [&](const Eigen::VectorXd& xv, const std::vector<Svm>& planes) {
    std::vector<double> gaps(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const Group& G = groups[g];
      const Eigen::VectorXd& c = planes[g].normal;
      const int j0 = first_point(as.knots, G.region);
      const double hi = max_dot(c, as.polygon(xv, G.a), j0, order) +
                        p.agents[static_cast<std::size_t>(G.a)].safety.support(c);
      const double lo =
          G.pair ? min_dot(c, as.polygon(xv, G.b), j0, order) -
                       p.agents[static_cast<std::size_t>(G.b)].safety.support(-c)
                 : min_dot(c, obstacle_pts[static_cast<std::size_t>(G.b)]);
      gaps[g] = lo - hi;
    }
    return gaps;
  };

  const int ng = static_cast<int>(groups.size());
  Eigen::VectorXd best_x;
  std::vector<Svm> best_planes;
  double best_obj = kInf, prev_obj = kInf;
  bool converged = false;
  double rho = 1e2;

  for (int round = 1; round <= p.config.max_rounds; ++round) {
    r.rounds = round;
    const std::vector<Svm> planes = planes_for(x);

    qp::QuadraticProgram prog = qp::QuadraticProgram::with_variables(as.qp.num_variables() + ng);
    const int nx = as.qp.num_variables();
    prog.Q.topLeftCorner(nx, nx) = as.qp.Q;
    prog.A = Eigen::MatrixXd::Zero(as.qp.num_equalities(), nx + ng);
    prog.A.leftCols(nx) = as.qp.A;
    prog.b = as.qp.b;
    for (int g = 0; g < ng; ++g) {
      const Group& G = groups[static_cast<std::size_t>(g)];
      const Eigen::VectorXd& c = planes[static_cast<std::size_t>(g)].normal;
      const int j0 = first_point(as.knots, G.region);
      const double sa = p.agents[static_cast<std::size_t>(G.a)].safety.support(c);
      if (!G.pair) {
        const double rhs = min_dot(c, obstacle_pts[static_cast<std::size_t>(G.b)]) - sa - mu - kBackoff;
        for (int j = 0; j < order; ++j) {
          Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(nx + ng);
          for (int k = 0; k < as.dim; ++k) row(as.index(G.a, j0 + j, k)) = c(k);
          row(nx + g) = -1.0;
          prog.add_inequality(row, rhs);
        }
      } else {
        const double sb = p.agents[static_cast<std::size_t>(G.b)].safety.support(-c);
        for (int j1 = 0; j1 < order; ++j1)
          for (int j2 = 0; j2 < order; ++j2) {
            Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(nx + ng);
            for (int k = 0; k < as.dim; ++k) {
              row(as.index(G.a, j0 + j1, k)) += c(k);
              row(as.index(G.b, j0 + j2, k)) -= c(k);
            }
            row(nx + g) = -1.0;
            prog.add_inequality(row, -(sa + sb + mu + kBackoff));
          }
      }
      Eigen::RowVectorXd pos = Eigen::RowVectorXd::Zero(nx + ng);
      pos(nx + g) = -1.0;
      prog.add_inequality(pos, 0.0);
    }

    qp::QpSolution s;
    double slack = kInf;
    for (; rho <= 1e6; rho *= 10.0) {
      prog.q.tail(ng).setConstant(rho);
      Eigen::VectorXd x0(nx + ng);
      x0 << x, Eigen::VectorXd::Zero(ng);
      qp::WarmStart ws{x0, {}, {}};
      s = qp::solve(prog, {}, &ws);
      if (s.status != qp::QpStatus::optimal) break;
      slack = s.x.tail(ng).maxCoeff();
      if (slack <= 1e-9) break;
    }
    if (s.status != qp::QpStatus::optimal) {
      r.infeasible_report.push_back("round " + std::to_string(round) + ": control-point program " +
                                    std::string(qp::to_string(s.status)));
      break;
    }
    x = s.x.head(nx);
    const double obj = as.qp.objective(x);
    const std::vector<double> gaps = gaps_for(x, planes);
    const bool certified =
        std::all_of(gaps.begin(), gaps.end(), [&](double g) { return g >= mu; });
    if (!certified) continue;

    r.round_objectives.push_back(obj);
    if (obj <= best_obj) {
      best_obj = obj;
      best_x = x;
      best_planes = planes;
    }
    if (std::isfinite(prev_obj) &&
        std::abs(prev_obj - obj) <= p.config.convergence_tol * std::max(1.0, std::abs(prev_obj))) {
      converged = true;
      break;
    }
    prev_obj = obj;
  }

  if (best_x.size() == 0) {
    r.infeasible_report.push_back("no round produced separated hulls");
    return r;
  }
  r.status = converged ? PlanStatus::success : PlanStatus::degraded;
  r.objective = best_obj;
  for (int a = 0; a < na; ++a) r.plans.push_back(make_plan(p, as, best_x, a, a));
  const std::vector<double> gaps = gaps_for(best_x, best_planes);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const Group& G = groups[g];
    if (G.pair)
      r.planes.pairs.push_back({G.a, G.b, G.region, best_planes[g].normal, gaps[g]});
    else
      r.planes.obstacles.push_back({G.a, G.region, G.b, best_planes[g].normal, gaps[g]});
  }
  return r;
}

PlanningProblem escalate(const PlanningProblem& p) {
  const int next = p.spline.n + p.config.n_step;
  if (next > p.config.n_max)
    throw InfeasibleError("escalation limit reached: n=" + std::to_string(next) + " exceeds n_max=" +
                          std::to_string(p.config.n_max));
  PlanningProblem q = p;
  q.spline.n = next;
  return q;
}

EscalationResult plan_with_escalation(const PlanningProblem& p, Method method, MultiMode mode) {
  PlanningProblem cur = p;
  std::vector<EscalationAttempt> attempts;
  while (true) {
    PlanResult r;
    r = cur.agents.size() > 1 ? plan_multi(cur, mode) : plan_mip(cur);
    if (method == Method::exact) {
      const bool seeded = r.status != PlanStatus::infeasible && !r.plans.empty();
      r = plan_exact(cur, seeded ? &r.plans : nullptr);
    }
    attempts.push_back({cur.spline.n, r.status});
    if (r.status != PlanStatus::infeasible) return {std::move(r), cur, std::move(attempts)};
    try {
      cur = escalate(cur);
    } catch (const InfeasibleError& e) {
      r.infeasible_report.emplace_back(e.what());
      return {std::move(r), cur, std::move(attempts)};
    }
  }
}

// --------------------------------------------------------------- audits --

AuditReport audit_certificates(const PlanningProblem& p, const PlanResult& r, double tol) {
  AuditReport rep;
  rep.worst_slack = kInf;
  const KnotVector k = p.knots();
  const int order = k.order();
  const double mu = p.config.margin;
  auto note = [&](double slack, const std::string& what) {
    ++rep.checked;
    rep.worst_slack = std::min(rep.worst_slack, slack);
    if (slack < -tol) rep.failures.push_back(what + ": slack " + std::to_string(slack));
  };
  auto polygon = [&](int agent) -> const ControlPolygon& {
    if (agent < 0 || agent >= static_cast<int>(r.plans.size()))
      throw InputError("audit: no plan for agent " + std::to_string(agent));
    return r.plans[static_cast<std::size_t>(agent)].curve.polygon();
  };

  // a'p >= b + margin with (a, b) normalized, over the region points
  auto row_slack = [&](const ControlPolygon& P, int region, const Eigen::VectorXd& a, double b) {
    const double s = a.norm();
    return min_dot(a / s, P, first_point(k, region), order) - b / s - mu;
  };

  for (const ObstacleCertificate& c : r.assignment.obstacles) {
    const auto& ob = p.arrangement.obstacles().at(static_cast<std::size_t>(c.obstacle));
    const auto& S = p.agents.at(static_cast<std::size_t>(c.agent)).safety;
    const ControlPolygon& P = polygon(c.agent);
    int zeros = 0;
    for (std::size_t m = 0; m < c.alpha.size(); ++m) {
      if (c.alpha[m] != 0) continue;
      ++zeros;
      const Eigen::VectorXd a = ob.region.A.row(static_cast<Eigen::Index>(m)).transpose();
      const double b = ob.region.b(static_cast<Eigen::Index>(m)) + S.support(-a);
      note(row_slack(P, c.region, a, b),
           "agent " + std::to_string(c.agent) + " region " + std::to_string(c.region) + " obstacle " +
               ob.name + " row " + std::to_string(m));
    }
    if (zeros == 0 || c.alpha.at(static_cast<std::size_t>(c.row)) != 0)
      rep.failures.push_back("obstacle certificate without an active hyperplane");
  }
  for (const PairCertificate& c : r.assignment.pairs) {
    Eigen::VectorXd u = c.hyperplane >= 0
                            ? Eigen::VectorXd(p.arrangement.hyperplanes().at(static_cast<std::size_t>(c.hyperplane)).normal.normalized())
                            : Eigen::VectorXd::Unit(p.arrangement.dim(), -1 - c.hyperplane);
    u *= c.orientation;
    const int j0 = first_point(k, c.region);
    const double lo = min_dot(u, polygon(c.agent_b), j0, order) -
                      p.agents.at(static_cast<std::size_t>(c.agent_b)).safety.support(-u);
    const double hi = max_dot(u, polygon(c.agent_a), j0, order) +
                      p.agents.at(static_cast<std::size_t>(c.agent_a)).safety.support(u);
    note(lo - hi - mu, "pair region " + std::to_string(c.region));
  }
  for (const HullCertificate& c : r.assignment.hulls) {
    const ControlPolygon& Q = polygon(c.other);
    std::vector<Eigen::VectorXd> pts;
    for (int j = 0; j < order; ++j) pts.emplace_back(Q.col(first_point(k, c.region) + j));
    const geo::HPolytope h = geo::hull_polytope_2d(pts);
    const Eigen::VectorXd a = h.A.row(c.row).transpose();
    const double b = h.b(c.row) + p.agents.at(static_cast<std::size_t>(c.other)).safety.support(a) +
                     p.agents.at(static_cast<std::size_t>(c.agent)).safety.support(-a);
    note(row_slack(polygon(c.agent), c.region, a, b), "hull region " + std::to_string(c.region));
  }
  for (const PlaneCertificate& c : r.planes.obstacles) {
    if (std::abs(c.normal.norm() - 1.0) > 1e-12) rep.failures.push_back("plane normal not unit");
    const auto& ob = p.arrangement.obstacles().at(static_cast<std::size_t>(c.obstacle));
    const auto verts = geo::obstacle_vertices(ob, p.arrangement.box());
    const double hi = max_dot(c.normal, polygon(c.agent), first_point(k, c.region), order) +
                      p.agents.at(static_cast<std::size_t>(c.agent)).safety.support(c.normal);
    note(min_dot(c.normal, verts) - hi - mu, "plane region " + std::to_string(c.region));
  }
  for (const PairPlaneCertificate& c : r.planes.pairs) {
    const int j0 = first_point(k, c.region);
    const double hi = max_dot(c.normal, polygon(c.agent_a), j0, order) +
                      p.agents.at(static_cast<std::size_t>(c.agent_a)).safety.support(c.normal);
    const double lo = min_dot(c.normal, polygon(c.agent_b), j0, order) -
                      p.agents.at(static_cast<std::size_t>(c.agent_b)).safety.support(-c.normal);
    note(lo - hi - mu, "pair plane region " + std::to_string(c.region));
  }
  if (rep.checked == 0) rep.worst_slack = 0.0;
  return rep;
}

double audit_big_m(const PlanningProblem& p, int samples, unsigned seed) {
  const double T = big_m(p);
  const geo::Box& box = p.arrangement.box();
  std::mt19937 rng(seed);
  std::vector<std::uniform_real_distribution<double>> u;
  for (int c = 0; c < box.lo.size(); ++c) u.emplace_back(box.lo(c), box.hi(c));
  double worst = kInf;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd x(box.lo.size());
    for (int c = 0; c < x.size(); ++c) {
      if (s < (1 << x.size()))
        x(c) = (s >> c) & 1 ? box.hi(c) : box.lo(c);
      else
        x(c) = u[static_cast<std::size_t>(c)](rng);
    }
    for (std::size_t a = 0; a < p.agents.size(); ++a)
      for (std::size_t l = 0; l < p.arrangement.obstacles().size(); ++l) {
        const geo::HPolytope o = agent_obstacle(p, static_cast<int>(a), static_cast<int>(l));
        // discarded row: -a'x <= -b + T
        for (int r = 0; r < o.rows(); ++r)
          worst = std::min(worst, T - o.b(r) + o.A.row(r).dot(x));
      }
  }
  return worst;
}

}  // namespace flatplan::plan
