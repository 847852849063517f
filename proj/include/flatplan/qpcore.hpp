/**
 * @file qpcore.hpp
 * @brief Dense convex QP solver used by every planner in the library.
 *
 *   minimize    1/2 x'Qx + q'x
 *   subject to  A x  = b
 *               G x <= g
 *
 * The solver is an operator-splitting (ADMM) iteration with over-relaxation,
 * Ruiz equilibration and adaptive step size, on a cached Cholesky factor of
 * the reduced KKT matrix. Once the iterate is roughly converged, the active
 * set it implies is refined and solved exactly, which brings the KKT
 * residuals down to 1e-8 or below. Primal infeasibility is reported with the
 * dual ray that certifies it.
 *
 * Residuals are relative: each raw residual is divided by max(1, magnitude of
 * the terms that produce it), so they behave as absolute residuals on unit
 * scale problems.
 */
#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace flatplan::qp {

struct QuadraticProgram {
  Eigen::MatrixXd Q;
  Eigen::VectorXd q;
  Eigen::MatrixXd A;  ///< equality rows
  Eigen::VectorXd b;
  Eigen::MatrixXd G;  ///< inequality rows, G x <= g
  Eigen::VectorXd g;

  /// Empty problem over n variables (zero objective, no constraints).
  static QuadraticProgram with_variables(int n);

  int num_variables() const noexcept { return static_cast<int>(q.size()); }
  int num_equalities() const noexcept { return static_cast<int>(b.size()); }
  int num_inequalities() const noexcept { return static_cast<int>(g.size()); }

  void add_equality(const Eigen::Ref<const Eigen::RowVectorXd>& row, double rhs);
  void add_inequality(const Eigen::Ref<const Eigen::RowVectorXd>& row, double rhs);

  /// Throws InputError on inconsistent sizes, asymmetric or non-PSD Q.
  void validate() const;

  double objective(const Eigen::VectorXd& x) const { return 0.5 * x.dot(Q * x) + q.dot(x); }
};

struct ResidualTolerances {
  double stationarity = 1e-8;
  double primal = 1e-8;
  double dual = 1e-8;
  double complementarity = 1e-8;
};

struct QpSettings {
  ResidualTolerances tol;
  double infeasibility_tol = 1e-7;
  int max_iterations = 50000;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;  ///< over-relaxation
  int scaling_iterations = 10;
  int check_interval = 10;
  int adapt_interval = 50;
  bool polish = true;
};

enum class QpStatus { optimal, infeasible, max_iterations };
std::string_view to_string(QpStatus s);

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;

  bool within(const ResidualTolerances& tol) const {
    return stationarity <= tol.stationarity && primal <= tol.primal && dual <= tol.dual &&
           complementarity <= tol.complementarity;
  }
};

struct QpSolution {
  QpStatus status = QpStatus::max_iterations;
  Eigen::VectorXd x;
  Eigen::VectorXd y_eq;    ///< multipliers of A x = b
  Eigen::VectorXd y_ineq;  ///< multipliers of G x <= g (>= 0)
  KktResiduals kkt_residuals;
  double objective = 0.0;
  int iterations = 0;
  bool polished = false;
  /// When infeasible: normalized dual ray (eq part, ineq part >= 0) with
  /// A'ye + G'yi ~ 0 and b'ye + g'yi < 0.
  Eigen::VectorXd certificate_eq;
  Eigen::VectorXd certificate_ineq;
};

struct WarmStart {
  Eigen::VectorXd x;
  Eigen::VectorXd y_eq;
  Eigen::VectorXd y_ineq;
};

KktResiduals kkt_residuals(const QuadraticProgram& qp, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& y_eq, const Eigen::VectorXd& y_ineq);

/// Solves the program. Deterministic for fixed inputs.
QpSolution solve(const QuadraticProgram& qp, const QpSettings& settings = {},
                 const WarmStart* warm = nullptr);

}  // namespace flatplan::qp
