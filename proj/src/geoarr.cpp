#include "flatplan/geoarr.hpp"

#include "flatplan/errors.hpp"
#include "flatplan/qpcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace flatplan::geo {

namespace {

constexpr int kMaxHyperplanes = 25;
constexpr double kRadiusCap = 1e6;

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

void append_row(HPolytope& p, const Eigen::VectorXd& a, double b) {
  const Eigen::Index r = p.A.rows();
  Eigen::MatrixXd A(r + 1, a.size());
  if (r > 0) A.topRows(r) = p.A;
  A.row(r) = a.transpose();
  Eigen::VectorXd bb(r + 1);
  bb.head(r) = p.b;
  bb(r) = b;
  p.A = std::move(A);
  p.b = std::move(bb);
}

HPolytope signed_rows(const std::vector<Hyperplane>& hs, const SignTuple& s, std::size_t count) {
  const int dim = static_cast<int>(hs.front().normal.size());
  HPolytope p{Eigen::MatrixXd(static_cast<Eigen::Index>(count), dim),
              Eigen::VectorXd(static_cast<Eigen::Index>(count))};
  for (std::size_t i = 0; i < count; ++i) {
    const double f = s.factor(i);
    p.A.row(static_cast<Eigen::Index>(i)) = f * hs[i].normal.transpose();
    p.b(static_cast<Eigen::Index>(i)) = f * hs[i].offset;
  }
  return p;
}

void check_inputs(const std::vector<Hyperplane>& hs, const Box& box) {
  if (!box.valid()) throw InputError("bounding box must have finite lo < hi in every coordinate");
  if (hs.size() > static_cast<std::size_t>(kMaxHyperplanes))
    throw InputError("arrangement limited to " + std::to_string(kMaxHyperplanes) +
                     " hyperplanes, got " + std::to_string(hs.size()));
  for (std::size_t i = 0; i < hs.size(); ++i)
    if (hs[i].normal.size() != box.lo.size())
      throw InputError("hyperplane " + std::to_string(i) + " has dimension " +
                       std::to_string(hs[i].normal.size()) + ", box has " +
                       std::to_string(box.lo.size()));
}

std::vector<SignTuple> enumerate_impl(const std::vector<Hyperplane>& hs, const Box& box,
                                      const ArrangementOptions& opts, bool parallel) {
  check_inputs(hs, box);
  const HPolytope bounds = box.polytope();
  std::vector<SignTuple> level{SignTuple{}};
  for (std::size_t m = 0; m < hs.size(); ++m) {
    std::vector<SignTuple> candidates;
    candidates.reserve(2 * level.size());
    for (const SignTuple& s : level) {
      candidates.push_back(s.extended(Sign::plus));
      candidates.push_back(s.extended(Sign::minus));
    }
    std::vector<char> keep(candidates.size(), 0);
    const long count = static_cast<long>(candidates.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (long c = 0; c < count; ++c) {
      const SignTuple& s = candidates[static_cast<std::size_t>(c)];
      const HPolytope cell = signed_rows(hs, s, s.size()).intersect(bounds);
      keep[static_cast<std::size_t>(c)] = chebyshev_radius(cell) > opts.interior_tol;
    }
    level.clear();
    for (std::size_t c = 0; c < candidates.size(); ++c)
      if (keep[c]) level.push_back(std::move(candidates[c]));
  }
  if (hs.empty()) return {};
  std::sort(level.begin(), level.end());
  return level;
}

// Index of an existing hyperplane equal to (n, k) up to orientation; the
// returned factor is -1 when the stored one points the other way.
std::pair<int, double> find_hyperplane(const std::vector<Hyperplane>& hs, const Eigen::VectorXd& n,
                                       double k) {
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const double s = hs[i].normal.norm();
    const Eigen::VectorXd ni = hs[i].normal / s;
    const double ki = hs[i].offset / s;
    const double tol = 1e-9 * (1.0 + std::abs(k));
    if ((ni - n).norm() <= 1e-9 && std::abs(ki - k) <= tol) return {static_cast<int>(i), 1.0};
    if ((ni + n).norm() <= 1e-9 && std::abs(ki + k) <= tol) return {static_cast<int>(i), -1.0};
  }
  return {-1, 0.0};
}

}  // namespace

Hyperplane::Hyperplane(Eigen::VectorXd n, double k) : normal(std::move(n)), offset(k) {
  if (normal.size() == 0) throw InputError("hyperplane normal is empty");
  if (!all_finite(normal) || !std::isfinite(offset))
    throw InputError("hyperplane has a non-finite coefficient");
  if (!(normal.norm() > 0.0)) throw InputError("hyperplane normal must be nonzero");
}

SignTuple SignTuple::parse(std::string_view text) {
  std::vector<Sign> signs;
  signs.reserve(text.size());
  for (char c : text) {
    if (c == '+')
      signs.push_back(Sign::plus);
    else if (c == '-')
      signs.push_back(Sign::minus);
    else
      throw InputError("sign tuple may only contain '+' and '-', got '" + std::string(text) + "'");
  }
  return SignTuple(std::move(signs));
}

SignTuple SignTuple::extended(Sign s) const {
  std::vector<Sign> v = signs_;
  v.push_back(s);
  return SignTuple(std::move(v));
}

std::string SignTuple::str() const {
  std::string out;
  out.reserve(signs_.size());
  for (Sign s : signs_) out.push_back(static_cast<char>(s));
  return out;
}

bool HPolytope::contains(const Eigen::VectorXd& x, double tol) const {
  if (A.rows() == 0) return true;
  return ((A * x - b).array() <= tol).all();
}

HPolytope HPolytope::intersect(const HPolytope& other) const {
  if (A.rows() == 0) return other;
  if (other.A.rows() == 0) return *this;
  if (dim() != other.dim()) throw InputError("intersecting polytopes of different dimension");
  HPolytope out{Eigen::MatrixXd(A.rows() + other.A.rows(), A.cols()),
                Eigen::VectorXd(b.size() + other.b.size())};
  out.A << A, other.A;
  out.b << b, other.b;
  return out;
}

HPolytope Box::polytope() const {
  const Eigen::Index n = lo.size();
  HPolytope p{Eigen::MatrixXd::Zero(2 * n, n), Eigen::VectorXd(2 * n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    p.A(2 * i, i) = 1.0;
    p.b(2 * i) = hi(i);
    p.A(2 * i + 1, i) = -1.0;
    p.b(2 * i + 1) = -lo(i);
  }
  return p;
}

double Box::radius_from_origin() const {
  return lo.cwiseAbs().cwiseMax(hi.cwiseAbs()).norm();
}

bool Box::valid() const {
  return lo.size() > 0 && lo.size() == hi.size() && lo.allFinite() && hi.allFinite() &&
         (lo.array() < hi.array()).all();
}

SafetyRegion::SafetyRegion(std::vector<Eigen::VectorXd> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.empty()) return;
  const Eigen::Index dim = vertices_.front().size();
  for (const auto& v : vertices_)
    if (v.size() != dim || !v.allFinite())
      throw InputError("safety region vertices must be finite and share one dimension");
  // origin in conv(V): min |V l|^2 over the simplex is zero
  const int k = static_cast<int>(vertices_.size());
  Eigen::MatrixXd V(dim, k);
  for (int i = 0; i < k; ++i) V.col(i) = vertices_[static_cast<std::size_t>(i)];
  qp::QuadraticProgram p = qp::QuadraticProgram::with_variables(k);
  p.Q = 2.0 * V.transpose() * V;
  p.Q = (0.5 * (p.Q + p.Q.transpose())).eval();
  p.add_equality(Eigen::RowVectorXd::Ones(k), 1.0);
  for (int i = 0; i < k; ++i) {
    Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(k);
    e(i) = -1.0;
    p.add_inequality(e, 0.0);
  }
  const qp::QpSolution s = qp::solve(p);
  const double scale = 1.0 + V.cwiseAbs().maxCoeff();
  if (s.status != qp::QpStatus::optimal || (V * s.x).norm() > 1e-8 * scale)
    throw InputError("safety region must contain the origin");
}

SafetyRegion SafetyRegion::square(double half_width) {
  if (!(half_width >= 0.0)) throw InputError("safety square half-width must be >= 0");
  if (half_width == 0.0) return SafetyRegion({Eigen::Vector2d::Zero()});
  const double h = half_width;
  return SafetyRegion({Eigen::Vector2d(-h, -h), Eigen::Vector2d(h, -h), Eigen::Vector2d(h, h),
                       Eigen::Vector2d(-h, h)});
}

double SafetyRegion::support(const Eigen::VectorXd& dir) const {
  if (vertices_.empty()) return 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : vertices_) best = std::max(best, dir.dot(v));
  return best;
}

Arrangement::Arrangement(std::vector<Hyperplane> hyperplanes, Box box,
                         std::vector<SignTuple> feasible, std::vector<Obstacle> obstacles,
                         std::vector<SignTuple> interdicted, int declared_hyperplanes)
    : hyperplanes_(std::move(hyperplanes)),
      box_(std::move(box)),
      feasible_(std::move(feasible)),
      interdicted_(std::move(interdicted)),
      obstacles_(std::move(obstacles)),
      declared_(declared_hyperplanes) {
  std::sort(feasible_.begin(), feasible_.end());
  std::sort(interdicted_.begin(), interdicted_.end());
  for (const SignTuple& s : interdicted_)
    if (!std::binary_search(feasible_.begin(), feasible_.end(), s))
      throw InputError("interdicted tuple " + s.str() + " is not a feasible cell");
  std::set_difference(feasible_.begin(), feasible_.end(), interdicted_.begin(), interdicted_.end(),
                      std::back_inserter(admissible_));
}

bool Arrangement::is_feasible(const SignTuple& s) const {
  return std::binary_search(feasible_.begin(), feasible_.end(), s);
}

bool Arrangement::is_interdicted(const SignTuple& s) const {
  return std::binary_search(interdicted_.begin(), interdicted_.end(), s);
}

HPolytope Arrangement::cell(const SignTuple& s) const {
  if (s.size() != hyperplanes_.size())
    throw InputError("tuple " + s.str() + " has length " + std::to_string(s.size()) +
                     ", arrangement has " + std::to_string(hyperplanes_.size()) + " hyperplanes");
  return signed_rows(hyperplanes_, s, s.size());
}

SignTuple cell_of(const std::vector<Hyperplane>& hyperplanes, const Eigen::VectorXd& x,
                  double boundary_tol) {
  std::vector<Sign> signs;
  signs.reserve(hyperplanes.size());
  for (std::size_t i = 0; i < hyperplanes.size(); ++i) {
    const Hyperplane& h = hyperplanes[i];
    const double v = h.eval(x);
    if (std::abs(v) / h.normal.norm() < boundary_tol)
      throw AmbiguousCellError("point lies within " + std::to_string(boundary_tol) +
                               " of hyperplane " + std::to_string(i));
    signs.push_back(v <= 0.0 ? Sign::plus : Sign::minus);
  }
  return SignTuple(std::move(signs));
}

SignTuple cell_of(const Arrangement& arr, const Eigen::VectorXd& x, double boundary_tol) {
  return cell_of(arr.hyperplanes(), x, boundary_tol);
}

std::vector<SignTuple> enumerate_cells(const std::vector<Hyperplane>& hyperplanes, const Box& box,
                                       const ArrangementOptions& opts) {
  return enumerate_impl(hyperplanes, box, opts, true);
}

std::vector<SignTuple> enumerate_cells_serial(const std::vector<Hyperplane>& hyperplanes,
                                              const Box& box, const ArrangementOptions& opts) {
  return enumerate_impl(hyperplanes, box, opts, false);
}

Arrangement build_arrangement(std::vector<Hyperplane> hyperplanes,
                              const std::vector<ObstacleSpec>& specs, const Box& box,
                              const ArrangementOptions& opts) {
  check_inputs(hyperplanes, box);
  const int declared = static_cast<int>(hyperplanes.size());
  std::vector<Obstacle> obstacles;
  obstacles.reserve(specs.size());

  for (const ObstacleSpec& spec : specs) {
    Obstacle ob;
    ob.name = spec.name;
    if (spec.tuple.has_value() == !spec.vertices.empty())
      throw InputError("obstacle '" + spec.name + "' needs exactly one of tuple or vertices");
    if (spec.tuple) {
      const SignTuple t = SignTuple::parse(*spec.tuple);
      if (t.size() != static_cast<std::size_t>(declared))
        throw InputError("obstacle '" + spec.name + "' tuple has length " +
                         std::to_string(t.size()) + ", expected " + std::to_string(declared));
      if (declared == 0) throw InputError("obstacle '" + spec.name + "' needs hyperplanes");
      ob.region = signed_rows(hyperplanes, t, t.size());
      ob.hyperplane_index.resize(t.size());
      std::iota(ob.hyperplane_index.begin(), ob.hyperplane_index.end(), 0);
    } else {
      if (box.lo.size() != 2)
        throw InputError("obstacle '" + spec.name + "': vertex obstacles are planar only");
      for (const auto& v : spec.vertices)
        if (v.size() != 2 || !v.allFinite())
          throw InputError("obstacle '" + spec.name + "' has a malformed vertex");
      std::vector<Eigen::Vector2d> pts;
      for (const auto& v : spec.vertices) pts.emplace_back(v(0), v(1));
      if (convex_hull_2d(pts).size() < 3)
        throw InputError("obstacle '" + spec.name + "' vertices do not span an area");
      ob.from_vertices = true;
      ob.declared_vertices = spec.vertices;
      const HPolytope hull = hull_polytope_2d(spec.vertices);
      ob.region = hull;
      for (int r = 0; r < hull.rows(); ++r) {
        const Eigen::VectorXd n = hull.A.row(r).transpose();
        auto [idx, factor] = find_hyperplane(hyperplanes, n, hull.b(r));
        if (idx < 0) {
          hyperplanes.emplace_back(n, hull.b(r));
          idx = static_cast<int>(hyperplanes.size()) - 1;
        }
        (void)factor;
        ob.hyperplane_index.push_back(idx);
      }
    }
    obstacles.push_back(std::move(ob));
  }
  check_inputs(hyperplanes, box);

  std::vector<SignTuple> feasible = opts.parallel ? enumerate_cells(hyperplanes, box, opts)
                                                  : enumerate_cells_serial(hyperplanes, box, opts);

  const HPolytope bounds = box.polytope();
  for (Obstacle& ob : obstacles) {
    Eigen::VectorXd center;
    const double r = chebyshev_radius(ob.region.intersect(bounds), &center);
    if (!(r > opts.interior_tol))
      throw InputError("obstacle '" + ob.name + "' has no interior inside the bounding box");
    std::vector<Sign> signs;
    for (const Hyperplane& h : hyperplanes)
      signs.push_back(h.eval(center) <= 0.0 ? Sign::plus : Sign::minus);
    ob.tuple = SignTuple(std::move(signs));
  }

  // A feasible cell is interdicted when it shares interior with an obstacle.
  std::vector<char> hit(feasible.size(), 0);
  const long count = static_cast<long>(feasible.size());
#pragma omp parallel for schedule(dynamic) if (opts.parallel)
  for (long c = 0; c < count; ++c) {
    const HPolytope cell =
        signed_rows(hyperplanes, feasible[static_cast<std::size_t>(c)], hyperplanes.size())
            .intersect(bounds);
    for (const Obstacle& ob : obstacles) {
      if (chebyshev_radius(cell.intersect(ob.region)) > opts.interior_tol) {
        hit[static_cast<std::size_t>(c)] = 1;
        break;
      }
    }
  }
  std::vector<SignTuple> interdicted;
  for (std::size_t c = 0; c < feasible.size(); ++c)
    if (hit[c]) interdicted.push_back(feasible[c]);

  return Arrangement(std::move(hyperplanes), box, std::move(feasible), std::move(obstacles),
                     std::move(interdicted), declared);
}

double chebyshev_radius(const HPolytope& p, Eigen::VectorXd* center) {
  const int n = p.dim();
  if (p.rows() == 0) throw InputError("chebyshev_radius needs at least one row");
  // maximize r s.t. a_i'x / |a_i| + r <= b_i / |a_i|, |r| <= cap
  qp::QuadraticProgram lp = qp::QuadraticProgram::with_variables(n + 1);
  lp.q(n) = -1.0;
  std::vector<int> used;
  for (int i = 0; i < p.rows(); ++i) {
    const double s = p.A.row(i).norm();
    if (s == 0.0) {
      if (p.b(i) < 0.0) return -std::numeric_limits<double>::infinity();
      continue;
    }
    Eigen::RowVectorXd row(n + 1);
    row.head(n) = p.A.row(i) / s;
    row(n) = 1.0;
    lp.add_inequality(row, p.b(i) / s);
    used.push_back(i);
  }
  Eigen::RowVectorXd cap = Eigen::RowVectorXd::Zero(n + 1);
  cap(n) = 1.0;
  lp.add_inequality(cap, kRadiusCap);
  lp.add_inequality(-cap, kRadiusCap);
  const qp::QpSolution s = qp::solve(lp);
  if (s.x.size() != n + 1 || !s.x.allFinite()) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd x = s.x.head(n);
  // radius actually certified by x, never more than the solver's claim
  double r = std::numeric_limits<double>::infinity();
  for (int i : used) r = std::min(r, (p.b(i) - p.A.row(i).dot(x)) / p.A.row(i).norm());
  if (center) *center = x;
  return r;
}

HPolytope inflate_obstacle(const HPolytope& cell, const SafetyRegion& region) {
  if (region.empty()) return cell;
  HPolytope out = cell;
  for (int m = 0; m < cell.rows(); ++m)
    out.b(m) += region.support(-cell.A.row(m).transpose());
  return out;
}

std::vector<Eigen::VectorXd> polytope_vertices(const HPolytope& p, double tol) {
  const int n = p.dim();
  const int rows = p.rows();
  std::vector<Eigen::VectorXd> out;
  if (n == 0 || rows < n) return out;
  const double scale = 1.0 + p.b.cwiseAbs().maxCoeff();
  std::vector<int> pick(static_cast<std::size_t>(n));
  std::iota(pick.begin(), pick.end(), 0);
  while (true) {
    Eigen::MatrixXd M(n, n);
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) {
      M.row(i) = p.A.row(pick[static_cast<std::size_t>(i)]);
      rhs(i) = p.b(pick[static_cast<std::size_t>(i)]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (lu.rank() == n) {
      const Eigen::VectorXd v = lu.solve(rhs);
      if (p.contains(v, tol * scale)) {
        const bool dup = std::any_of(out.begin(), out.end(), [&](const Eigen::VectorXd& w) {
          return (w - v).norm() <= 1e-9 * scale;
        });
        if (!dup) out.push_back(v);
      }
    }
    int k = n - 1;
    while (k >= 0 && pick[static_cast<std::size_t>(k)] == rows - n + k) --k;
    if (k < 0) break;
    ++pick[static_cast<std::size_t>(k)];
    for (int j = k + 1; j < n; ++j)
      pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  if (n == 2 && out.size() > 2) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(2);
    for (const auto& v : out) c += v;
    c /= static_cast<double>(out.size());
    std::sort(out.begin(), out.end(), [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
      return std::atan2(a(1) - c(1), a(0) - c(0)) < std::atan2(b(1) - c(1), b(0) - c(0));
    });
  }
  return out;
}

double signed_distance(const Eigen::VectorXd& x, const HPolytope& p) {
  if (x.size() != p.dim()) throw InputError("signed_distance: dimension mismatch");
  double depth = std::numeric_limits<double>::infinity();
  bool inside = true;
  for (int i = 0; i < p.rows(); ++i) {
    const double s = p.A.row(i).norm();
    if (s == 0.0) continue;
    const double slack = (p.b(i) - p.A.row(i).dot(x)) / s;
    if (slack < 0.0) inside = false;
    depth = std::min(depth, slack);
  }
  if (inside) return -depth;

  qp::QuadraticProgram proj = qp::QuadraticProgram::with_variables(static_cast<int>(x.size()));
  proj.Q = Eigen::MatrixXd::Identity(x.size(), x.size());
  proj.q = -x;
  proj.G = p.A;
  proj.g = p.b;
  const qp::QpSolution s = qp::solve(proj);
  if (s.status != qp::QpStatus::optimal) throw InputError("signed_distance: polytope is empty");
  return (s.x - x).norm();
}

std::vector<Eigen::Vector2d> convex_hull_2d(std::vector<Eigen::Vector2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Eigen::Vector2d> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

HPolytope hull_polytope_2d(const std::vector<Eigen::VectorXd>& points) {
  if (points.empty()) throw InputError("hull of an empty point set");
  std::vector<Eigen::Vector2d> pts;
  for (const auto& p : points) {
    if (p.size() != 2) throw InputError("hull_polytope_2d expects planar points");
    pts.emplace_back(p(0), p(1));
  }
  const std::vector<Eigen::Vector2d> h = convex_hull_2d(pts);
  HPolytope out{Eigen::MatrixXd(0, 2), Eigen::VectorXd(0)};
  if (h.size() == 1) {
    for (int i = 0; i < 2; ++i) {
      const Eigen::Vector2d e = Eigen::Vector2d::Unit(i);
      append_row(out, e, h[0](i));
      append_row(out, -e, -h[0](i));
    }
  } else if (h.size() == 2) {
    const Eigen::Vector2d u = (h[1] - h[0]).normalized();
    const Eigen::Vector2d n(-u.y(), u.x());
    append_row(out, n, n.dot(h[0]));
    append_row(out, -n, -n.dot(h[0]));
    append_row(out, u, u.dot(h[1]));
    append_row(out, -u, -u.dot(h[0]));
  } else {
    for (std::size_t i = 0; i < h.size(); ++i) {
      const Eigen::Vector2d e = h[(i + 1) % h.size()] - h[i];
      const Eigen::Vector2d n = Eigen::Vector2d(e.y(), -e.x()).normalized();
      append_row(out, n, n.dot(h[i]));
    }
  }
  return out;
}

std::vector<Eigen::VectorXd> obstacle_vertices(const Obstacle& obstacle, const Box& box) {
  if (obstacle.from_vertices) {
    std::vector<Eigen::VectorXd> out;
    std::vector<Eigen::Vector2d> pts;
    for (const auto& v : obstacle.declared_vertices) pts.emplace_back(v(0), v(1));
    for (const auto& v : convex_hull_2d(pts)) out.emplace_back(v);
    return out;
  }
  // a far box tells bounded regions from unbounded ones
  const Eigen::VectorXd mid = 0.5 * (box.lo + box.hi);
  const Eigen::VectorXd half = 0.5 * (box.hi - box.lo);
  const Box far{mid - 100.0 * half, mid + 100.0 * half};
  std::vector<Eigen::VectorXd> v = polytope_vertices(obstacle.region.intersect(far.polytope()));
  const bool touches = std::any_of(v.begin(), v.end(), [&](const Eigen::VectorXd& p) {
    return ((p - far.lo).cwiseAbs().minCoeff() < 1e-6 * half.maxCoeff()) ||
           ((far.hi - p).cwiseAbs().minCoeff() < 1e-6 * half.maxCoeff());
  });
  if (!touches) return v;
  return polytope_vertices(obstacle.region.intersect(box.polytope()));
}

}  // namespace flatplan::geo
