// Independent reference computations used only by the test suites. Nothing
// here calls into the code paths it is used to check.
#pragma once

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/rational.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace flatplan::test {

/// Accelerated projected gradient on a box, stopped on the projected
/// gradient residual.
inline Eigen::VectorXd projected_gradient_box(const Eigen::MatrixXd& Q, const Eigen::VectorXd& q,
                                              const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                              double tol) {
  const double L = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Q).eigenvalues().maxCoeff();
  const double step = 1.0 / std::max(L, 1e-12);
  auto proj = [&](const Eigen::VectorXd& v) { return v.cwiseMax(lo).cwiseMin(hi); };
  Eigen::VectorXd x = proj(Eigen::VectorXd::Zero(q.size())), yk = x;
  double tk = 1.0;
  for (int it = 0; it < 5'000'000; ++it) {
    const Eigen::VectorXd next = proj(yk - step * (Q * yk + q));
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    // gradient-based restart keeps the momentum from oscillating
    if ((yk - next).dot(next - x) > 0.0) {
      yk = next;
      tk = 1.0;
    } else {
      yk = next + ((tk - 1.0) / tn) * (next - x);
      tk = tn;
    }
    x = next;
    const Eigen::VectorXd pg = x - proj(x - (Q * x + q));
    if (pg.lpNorm<Eigen::Infinity>() < tol) break;
  }
  return x;
}

using Rational = boost::rational<long long>;

/// Literal recursion over every index with exact rationals; a 0/0 term is 0
/// and the first-order functions are half-open, closed at the last knot.
inline std::vector<Rational> cox_de_boor_exact(const std::vector<Rational>& knots, int order,
                                               Rational t) {
  const int m = static_cast<int>(knots.size()) - 1;
  std::vector<Rational> b(static_cast<std::size_t>(m), Rational(0));
  int last = m - 1;
  while (knots[last] == knots[last + 1]) --last;
  for (int i = 0; i < m; ++i) {
    const bool inside = knots[i] <= t && t < knots[i + 1];
    const bool end = t == knots[m] && i == last;
    b[i] = (inside || end) ? Rational(1) : Rational(0);
  }
  for (int k = 2; k <= order; ++k) {
    std::vector<Rational> next(static_cast<std::size_t>(m - k + 1), Rational(0));
    for (int i = 0; i <= m - k; ++i) {
      Rational v(0);
      const Rational d1 = knots[i + k - 1] - knots[i];
      const Rational d2 = knots[i + k] - knots[i + 1];
      if (d1 != Rational(0)) v += (t - knots[i]) / d1 * b[i];
      if (d2 != Rational(0)) v += (knots[i + k] - t) / d2 * b[i + 1];
      next[i] = v;
    }
    b = std::move(next);
  }
  return b;
}

/// Adaptive Gauss-Kronrod integral over [a, b].
inline double adaptive_integral(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 30, 1e-14);
}

/// Sutherland-Hodgman clip of a convex polygon by {x : a'x <= c}.
inline std::vector<Eigen::Vector2d> clip_halfplane(const std::vector<Eigen::Vector2d>& poly,
                                                   const Eigen::Vector2d& a, double c) {
  std::vector<Eigen::Vector2d> out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d& p = poly[i];
    const Eigen::Vector2d& q = poly[(i + 1) % n];
    const double fp = a.dot(p) - c, fq = a.dot(q) - c;
    if (fp <= 0) out.push_back(p);
    if ((fp < 0 && fq > 0) || (fp > 0 && fq < 0)) out.push_back(p + (fp / (fp - fq)) * (q - p));
  }
  return out;
}

inline double polygon_area(const std::vector<Eigen::Vector2d>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * std::abs(a);
}

/// Largest inscribed radius of a convex polygon by bisection on the
/// inward-offset polygon (no optimization solver involved).
inline double polygon_inradius(const std::vector<Eigen::Vector2d>& poly) {
  if (poly.size() < 3 || polygon_area(poly) <= 0.0) return 0.0;
  // edges of a CCW copy
  std::vector<Eigen::Vector2d> ccw = poly;
  double signed_area = 0.0;
  for (std::size_t i = 0; i < ccw.size(); ++i) {
    const auto& p = ccw[i];
    const auto& q = ccw[(i + 1) % ccw.size()];
    signed_area += p.x() * q.y() - q.x() * p.y();
  }
  if (signed_area < 0) std::reverse(ccw.begin(), ccw.end());
  double lo = 0.0, hi = 1e6;
  for (int it = 0; it < 200; ++it) {
    const double r = 0.5 * (lo + hi);
    std::vector<Eigen::Vector2d> cur = {{-1e7, -1e7}, {1e7, -1e7}, {1e7, 1e7}, {-1e7, 1e7}};
    for (std::size_t i = 0; i < ccw.size() && !cur.empty(); ++i) {
      const Eigen::Vector2d e = ccw[(i + 1) % ccw.size()] - ccw[i];
      if (e.norm() == 0.0) continue;
      const Eigen::Vector2d outward(e.y() / e.norm(), -e.x() / e.norm());
      cur = clip_halfplane(cur, outward, outward.dot(ccw[i]) - r);
    }
    if (cur.size() >= 3 && polygon_area(cur) > 0.0)
      lo = r;
    else
      hi = r;
  }
  return lo;
}

}  // namespace flatplan::test
