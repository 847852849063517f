#include "flatplan/splinecore.hpp"

#include "flatplan/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace flatplan {

KnotVector::KnotVector(std::vector<double> knots, int order)
    : knots_(std::move(knots)), order_(order) {
  if (order_ < 1) throw InputError("knot vector order must be >= 1");
  const int m = static_cast<int>(knots_.size()) - 1;
  if (m < 2 * order_ - 1)
    throw InputError("knot vector needs at least 2*order knots, got " +
                     std::to_string(knots_.size()));
  for (double k : knots_)
    if (!std::isfinite(k)) throw InputError("knot vector contains a non-finite value");
  for (int i = 0; i < m; ++i)
    if (knots_[i] > knots_[i + 1]) throw InputError("knot vector must be non-decreasing");
  if (!(knots_.front() < knots_.back())) throw InputError("knot vector has zero length");

  // Clamped: exactly `order` copies of each end knot.
  for (int i = 0; i < order_; ++i) {
    if (knots_[i] != knots_.front() || knots_[m - i] != knots_.back())
      throw InputError("knot vector must be clamped (end multiplicity = order)");
  }
  if (knots_[order_] == knots_.front() || knots_[m - order_] == knots_.back())
    throw InputError("end knot multiplicity exceeds the order");

  for (int i = order_; i <= m - order_;) {
    int j = i;
    while (j + 1 <= m - order_ && knots_[j + 1] == knots_[i]) ++j;
    if (order_ > 1 && j - i + 1 >= order_)
      throw InputError("interior knot multiplicity must be below the order");
    i = j + 1;
  }
}

KnotVector KnotVector::clamped_uniform(double t0, double t1, int n, int order) {
  if (order < 1) throw InputError("order must be >= 1");
  if (n < order - 1)
    throw InputError("need n >= order-1 (n=" + std::to_string(n) +
                     ", order=" + std::to_string(order) + ")");
  if (!(t0 < t1)) throw InputError("clamped_uniform needs t0 < t1");
  std::vector<double> k;
  k.reserve(static_cast<std::size_t>(n + order + 1));
  for (int i = 0; i < order; ++i) k.push_back(t0);
  const int interior = n - order + 1;
  for (int j = 1; j <= interior; ++j)
    k.push_back(t0 + (t1 - t0) * static_cast<double>(j) / static_cast<double>(interior + 1));
  for (int i = 0; i < order; ++i) k.push_back(t1);
  return KnotVector(std::move(k), order);
}

KnotVector KnotVector::lowered(int r) const {
  if (r < 0 || r >= order_) throw InputError("cannot lower order " + std::to_string(order_) +
                                             " by " + std::to_string(r));
  return KnotVector(std::vector<double>(knots_.begin() + r, knots_.end() - r), order_ - r);
}

int KnotVector::span_index(double t) const {
  if (!(t >= front() && t <= back()))
    throw DomainError("t=" + std::to_string(t) + " outside knot range [" +
                      std::to_string(front()) + ", " + std::to_string(back()) + "]");
  const int m = size() - 1;
  if (t == back()) {
    int mu = m - 1;
    while (knots_[mu] == knots_[mu + 1]) --mu;
    return mu;
  }
  auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
  return static_cast<int>(it - knots_.begin()) - 1;
}

Eigen::VectorXd basis_eval(const KnotVector& knots, int order, double t) {
  if (order < 1 || order > knots.order())
    throw InputError("basis order must be in [1, " + std::to_string(knots.order()) + "]");
  const int m = knots.size() - 1;
  const int mu = knots.span_index(t);
  const int p = order - 1;

  // Nonzero values B_{mu-p..mu, order} by the triangular recursion.
  std::vector<double> nz(static_cast<std::size_t>(order), 0.0), left(order), right(order);
  nz[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = t - knots[mu + 1 - j];
    right[j] = knots[mu + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom != 0.0 ? nz[r] / denom : 0.0;
      nz[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    nz[j] = saved;
  }

  Eigen::VectorXd out = Eigen::VectorXd::Zero(m - order + 1);
  for (int r = 0; r <= p; ++r) {
    const int i = mu - p + r;
    if (i >= 0 && i < out.size()) out[i] = nz[r];
  }
  return out;
}

namespace {

// First-derivative map for basis functions of the given knots' own order.
Eigen::MatrixXd first_derivative_matrix(const KnotVector& knots) {
  const int q = knots.order();
  const int count = knots.num_basis();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(count, count - 1);
  for (int j = 1; j < count; ++j) {
    const double c = (q - 1) / (knots[j + q - 1] - knots[j]);
    m(j, j - 1) = c;
    m(j - 1, j - 1) = -c;
  }
  return m;
}

DerivativeMatrix compose_derivative(const KnotVector& knots, int r) {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(knots.num_basis(), knots.num_basis());
  KnotVector current = knots;
  for (int s = 0; s < r; ++s) {
    acc = acc * first_derivative_matrix(current);
    current = current.lowered(1);
  }
  return DerivativeMatrix{r, std::move(acc), std::move(current)};
}

}  // namespace

DerivativeMatrix derivative_matrix(const KnotVector& knots, int r) {
  if (r < 1) throw InputError("derivative order must be >= 1");
  if (r > knots.order() - 2)
    throw InputError("derivative order " + std::to_string(r) + " too large for order " +
                     std::to_string(knots.order()) + " (max d-2)");
  return compose_derivative(knots, r);
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int points) {
  if (points < 1) throw InputError("Gauss-Legendre needs at least one node");
  std::vector<double> x(static_cast<std::size_t>(points)), w(static_cast<std::size_t>(points));
  const int half = (points + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (points + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= points; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
      }
      dp = points * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[points - 1 - i] = z;
    w[i] = w[points - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

Eigen::MatrixXd gram_matrix(const KnotVector& knots, int order) {
  if (order < 1 || order > knots.order())
    throw InputError("gram order must be in [1, " + std::to_string(knots.order()) + "]");
  const int count = knots.size() - order;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(count, count);
  const auto [nodes, weights] = gauss_legendre(order);
  for (int s = 0; s + 1 < knots.size(); ++s) {
    const double a = knots[s], b = knots[s + 1];
    if (!(a < b)) continue;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      const Eigen::VectorXd v = basis_eval(knots, order, mid + half * nodes[q]);
      g.noalias() += (weights[q] * half) * v * v.transpose();
    }
  }
  return 0.5 * (g + g.transpose());
}

SplineCurve::SplineCurve(KnotVector knots, ControlPolygon polygon)
    : knots_(std::move(knots)), polygon_(std::move(polygon)) {
  if (polygon_.cols() != knots_.num_basis())
    throw InputError("control polygon has " + std::to_string(polygon_.cols()) +
                     " points, knot vector expects " + std::to_string(knots_.num_basis()));
  if (polygon_.rows() < 1) throw InputError("control points need at least one coordinate");
}

Eigen::VectorXd SplineCurve::operator()(double t) const {
  return polygon_ * basis_eval(knots_, knots_.order(), t);
}

SplineCurve SplineCurve::derivative(int r) const {
  if (r < 1 || r >= knots_.order())
    throw InputError("curve derivative order must be in [1, d-1]");
  DerivativeMatrix dm = compose_derivative(knots_, r);
  return SplineCurve(dm.lowered, polygon_ * dm.matrix);
}

double SplineCurve::length(int subdivisions) const {
  const SplineCurve velocity = derivative(1);
  const auto [nodes, weights] = gauss_legendre(8);
  double total = 0.0;
  for (int s = 0; s + 1 < knots_.size(); ++s) {
    const double a = knots_[s], b = knots_[s + 1];
    if (!(a < b)) continue;
    const double h = (b - a) / subdivisions;
    for (int piece = 0; piece < subdivisions; ++piece) {
      const double lo = a + piece * h;
      for (std::size_t q = 0; q < nodes.size(); ++q)
        total += weights[q] * 0.5 * h * velocity(lo + 0.5 * h * (nodes[q] + 1.0)).norm();
    }
  }
  return total;
}

}  // namespace flatplan
