/**
 * @file splinecore.hpp
 * @brief Clamped B-spline basis, curves, derivative and Gram matrices.
 *
 * Conventions:
 *  - order d means polynomial degree d-1; B_{i,1} are span indicators.
 *  - a knot vector tau_0..tau_m of order d carries n+1 = m-d+1 basis
 *    functions and is clamped (first and last d knots coincide).
 *  - evaluation is right-closed at the last knot, so a clamped curve ends
 *    exactly at its last control point.
 *  - a 0/0 coefficient in the Cox-de Boor recursion counts as 0.
 */
#pragma once

#include <Eigen/Dense>

#include <span>
#include <utility>
#include <vector>

namespace flatplan {

class KnotVector {
 public:
  /// Validates ordering, clamping and interior multiplicity (< order).
  KnotVector(std::vector<double> knots, int order);

  /// Clamped knots on [t0, t1] with n+1 control points and uniform interior.
  static KnotVector clamped_uniform(double t0, double t1, int n, int order);

  int order() const noexcept { return order_; }
  /// Index of the last basis function (n = m - d).
  int n() const noexcept { return static_cast<int>(knots_.size()) - 1 - order_; }
  int num_basis() const noexcept { return n() + 1; }
  std::span<const double> knots() const noexcept { return knots_; }
  double front() const noexcept { return knots_.front(); }
  double back() const noexcept { return knots_.back(); }
  double operator[](int i) const { return knots_[static_cast<std::size_t>(i)]; }
  int size() const noexcept { return static_cast<int>(knots_.size()); }

  /// Knot vector of order d-r obtained by dropping r knots at each end; this
  /// is the space the r-th derivative lives in.
  KnotVector lowered(int r) const;

  /// Index mu with tau_mu <= t < tau_{mu+1}; at t == back() the last
  /// non-degenerate span is returned.
  int span_index(double t) const;

  bool operator==(const KnotVector&) const = default;

 private:
  std::vector<double> knots_;
  int order_;
};

/// Control points p_0..p_n stored as the columns of a dim x (n+1) matrix.
using ControlPolygon = Eigen::MatrixXd;

/// All m-k+1 basis values B_{i,k}(t) of order k <= d over the given knots.
/// Throws DomainError when t is outside [tau_0, tau_m].
Eigen::VectorXd basis_eval(const KnotVector& knots, int order, double t);

struct DerivativeMatrix {
  int order = 0;         ///< derivative order r
  Eigen::MatrixXd matrix;  ///< (n+1) x (n+1-r), B_d^{(r)} = M_r B_{d-r}
  KnotVector lowered;    ///< knots of B_{d-r}
};

/// M_r from the knot-difference recurrence. Requires 1 <= r <= d-2.
DerivativeMatrix derivative_matrix(const KnotVector& knots, int r);

/// G_ij = integral of B_{i,k} B_{j,k} over the knot range (per-span
/// Gauss-Legendre with k nodes, exact for these polynomials).
Eigen::MatrixXd gram_matrix(const KnotVector& knots, int order);

/// Gauss-Legendre nodes and weights on [-1, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int points);

class SplineCurve {
 public:
  SplineCurve(KnotVector knots, ControlPolygon polygon);

  const KnotVector& knots() const noexcept { return knots_; }
  const ControlPolygon& polygon() const noexcept { return polygon_; }
  int dim() const noexcept { return static_cast<int>(polygon_.rows()); }
  double t0() const noexcept { return knots_.front(); }
  double t1() const noexcept { return knots_.back(); }

  /// z(t) = P B_d(t).
  Eigen::VectorXd operator()(double t) const;

  /// The r-th derivative as a curve of order d-r with polygon P M_r.
  SplineCurve derivative(int r) const;

  /// Arc length by composite Gauss-Legendre over the knot spans.
  double length(int subdivisions = 64) const;

 private:
  KnotVector knots_;
  ControlPolygon polygon_;
};

/// Convenience wrapper: z(t) for a curve.
inline Eigen::VectorXd curve_eval(const SplineCurve& curve, double t) { return curve(t); }

}  // namespace flatplan
