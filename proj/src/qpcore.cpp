#include "flatplan/qpcore.hpp"

#include "flatplan/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace flatplan::qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

// Equilibrated copy of the problem in the stacked form l <= C x <= u.
struct ScaledProblem {
  Eigen::MatrixXd P, C;
  Eigen::VectorXd q, l, u;
  Eigen::VectorXd D, E;  // x = D xs, zs = E z
  double c = 1.0;         // cost scale; y = E ys / c
};

double limit_scaling(double v) {
  if (v < 1e-4) return 1.0;
  return std::min(v, 1e4);
}

ScaledProblem equilibrate(const Eigen::MatrixXd& Q, const Eigen::VectorXd& q,
                          const Eigen::MatrixXd& C, const Eigen::VectorXd& l,
                          const Eigen::VectorXd& u, int iterations) {
  const auto n = Q.rows(), m = C.rows();
  ScaledProblem s{Q, C, q, l, u, Eigen::VectorXd::Ones(n), Eigen::VectorXd::Ones(m), 1.0};
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd dv(n), ev(m);
    for (Eigen::Index j = 0; j < n; ++j) {
      double norm = s.P.col(j).lpNorm<Eigen::Infinity>();
      if (m > 0) norm = std::max(norm, s.C.col(j).lpNorm<Eigen::Infinity>());
      dv(j) = 1.0 / std::sqrt(limit_scaling(norm));
    }
    for (Eigen::Index i = 0; i < m; ++i)
      ev(i) = 1.0 / std::sqrt(limit_scaling(s.C.row(i).lpNorm<Eigen::Infinity>()));
    s.P = dv.asDiagonal() * s.P * dv.asDiagonal();
    if (m > 0) s.C = ev.asDiagonal() * s.C * dv.asDiagonal();
    s.q = s.q.cwiseProduct(dv);
    s.D = s.D.cwiseProduct(dv);
    s.E = s.E.cwiseProduct(ev);

    double mean_col = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) mean_col += s.P.col(j).lpNorm<Eigen::Infinity>();
    mean_col /= static_cast<double>(std::max<Eigen::Index>(n, 1));
    const double gamma = 1.0 / limit_scaling(std::max(mean_col, inf_norm(s.q)));
    s.P *= gamma;
    s.q *= gamma;
    s.c *= gamma;
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    s.l(i) = std::isfinite(l(i)) ? l(i) * s.E(i) : l(i);
    s.u(i) = std::isfinite(u(i)) ? u(i) * s.E(i) : u(i);
  }
  return s;
}

// Solves [H + dI, Ca'; Ca, -dI] against the unregularized matrix by iterative
// refinement.
Eigen::VectorXd solve_kkt(const Eigen::MatrixXd& H, const Eigen::MatrixXd& Ca,
                          const Eigen::VectorXd& rhs) {
  const auto n = H.rows(), na = Ca.rows();
  Eigen::MatrixXd K0 = Eigen::MatrixXd::Zero(n + na, n + na);
  K0.topLeftCorner(n, n) = H;
  if (na > 0) {
    K0.bottomLeftCorner(na, n) = Ca;
    K0.topRightCorner(n, na) = Ca.transpose();
  }
  const double scale = std::max(1.0, K0.lpNorm<Eigen::Infinity>());
  const double delta = 1e-9 * scale;
  Eigen::MatrixXd Kd = K0;
  Kd.topLeftCorner(n, n).diagonal().array() += delta;
  if (na > 0) Kd.bottomRightCorner(na, na).diagonal().array() -= delta;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(Kd);
  Eigen::VectorXd sol = lu.solve(rhs);
  const double target = 1e-15 * std::max(1.0, inf_norm(rhs)) * scale;
  for (int it = 0; it < 25; ++it) {
    const Eigen::VectorXd r = rhs - K0 * sol;
    if (inf_norm(r) <= target) break;
    sol += lu.solve(r);
  }
  return sol;
}

struct PolishResult {
  bool ok = false;
  Eigen::VectorXd x, y;  // y stacked [eq; ineq]
};

// Active-set refinement starting from the ADMM guess of the active rows.
PolishResult polish(const QuadraticProgram& qp, const Eigen::MatrixXd& C, const Eigen::VectorXd& u,
                    int meq, std::vector<char> active, const ResidualTolerances& tol,
                    int max_rounds) {
  const auto n = qp.Q.rows(), m = C.rows();
  PolishResult out;
  for (int round = 0; round < max_rounds; ++round) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < m; ++i)
      if (active[i]) rows.push_back(i);
    const auto na = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd Ca(na, n);
    Eigen::VectorXd rhs(n + na);
    rhs.head(n) = -qp.q;
    for (Eigen::Index r = 0; r < na; ++r) {
      Ca.row(r) = C.row(rows[r]);
      rhs(n + r) = u(rows[r]);
    }
    const Eigen::VectorXd sol = solve_kkt(qp.Q, Ca, rhs);
    Eigen::VectorXd x = sol.head(n);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
    for (Eigen::Index r = 0; r < na; ++r) y(rows[r]) = sol(n + r);

    // Most violated inactive row, else most negative active multiplier.
    const Eigen::VectorXd Cx = C * x;
    Eigen::Index worst_add = -1, worst_drop = -1;
    double add_val = 0.0, drop_val = 0.0;
    for (Eigen::Index i = meq; i < m; ++i) {
      const double scale = std::max({1.0, std::abs(u(i)), std::abs(Cx(i))});
      if (!active[i]) {
        const double v = (Cx(i) - u(i)) / scale;
        if (v > 1e-12 && v > add_val) {
          add_val = v;
          worst_add = i;
        }
      } else if (y(i) < drop_val) {
        drop_val = y(i);
        worst_drop = i;
      }
    }
    if (worst_add < 0 && (worst_drop < 0 || -drop_val <= 1e-14 * std::max(1.0, inf_norm(y)))) {
      for (Eigen::Index i = meq; i < m; ++i) y(i) = std::max(y(i), 0.0);
      const KktResiduals res =
          kkt_residuals(qp, x, y.head(meq), y.tail(m - meq));
      out.ok = res.within(tol);
      out.x = std::move(x);
      out.y = std::move(y);
      return out;
    }
    if (worst_add >= 0)
      active[worst_add] = 1;
    else
      active[worst_drop] = 0;
  }
  return out;
}

}  // namespace

std::string_view to_string(QpStatus s) {
  switch (s) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::max_iterations: return "max_iterations";
  }
  return "unknown";
}

QuadraticProgram QuadraticProgram::with_variables(int n) {
  QuadraticProgram p;
  p.Q = Eigen::MatrixXd::Zero(n, n);
  p.q = Eigen::VectorXd::Zero(n);
  p.A.resize(0, n);
  p.b.resize(0);
  p.G.resize(0, n);
  p.g.resize(0);
  return p;
}

void QuadraticProgram::add_equality(const Eigen::Ref<const Eigen::RowVectorXd>& row, double rhs) {
  A.conservativeResize(A.rows() + 1, Eigen::NoChange);
  A.row(A.rows() - 1) = row;
  b.conservativeResize(b.size() + 1);
  b(b.size() - 1) = rhs;
}

void QuadraticProgram::add_inequality(const Eigen::Ref<const Eigen::RowVectorXd>& row, double rhs) {
  G.conservativeResize(G.rows() + 1, Eigen::NoChange);
  G.row(G.rows() - 1) = row;
  g.conservativeResize(g.size() + 1);
  g(g.size() - 1) = rhs;
}

void QuadraticProgram::validate() const {
  const auto n = q.size();
  if (Q.rows() != n || Q.cols() != n) throw InputError("QP: Q must be n x n with n = size(q)");
  if (A.cols() != n || A.rows() != b.size()) throw InputError("QP: equality system has wrong shape");
  if (G.cols() != n || G.rows() != g.size()) throw InputError("QP: inequality system has wrong shape");
  if (!Q.allFinite() || !q.allFinite() || !A.allFinite() || !b.allFinite() || !G.allFinite() ||
      !g.allFinite())
    throw InputError("QP: non-finite data");
  const double qnorm = std::max(1.0, Q.lpNorm<Eigen::Infinity>());
  if ((Q - Q.transpose()).lpNorm<Eigen::Infinity>() > 1e-12 * qnorm)
    throw InputError("QP: Q is not symmetric");
  if (n > 0) {
    const double shift = 1e-10 * std::max(1.0, Q.diagonal().cwiseAbs().maxCoeff());
    Eigen::MatrixXd shifted = Q;
    shifted.diagonal().array() += shift;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success) throw InputError("QP: Q is not positive semidefinite");
  }
}

KktResiduals kkt_residuals(const QuadraticProgram& qp, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& y_eq, const Eigen::VectorXd& y_ineq) {
  KktResiduals r;
  const Eigen::VectorXd Qx = qp.Q * x;
  const Eigen::VectorXd Aty = qp.A.transpose() * y_eq;
  const Eigen::VectorXd Gty = qp.G.transpose() * y_ineq;
  const double s_scale =
      std::max({1.0, inf_norm(Qx), inf_norm(qp.q), inf_norm(Aty), inf_norm(Gty)});
  r.stationarity = inf_norm(Qx + qp.q + Aty + Gty) / s_scale;

  const Eigen::VectorXd Ax = qp.A * x;
  const Eigen::VectorXd Gx = qp.G * x;
  const double p_scale = std::max({1.0, inf_norm(Ax), inf_norm(qp.b), inf_norm(Gx), inf_norm(qp.g)});
  double prim = inf_norm(Ax - qp.b);
  for (Eigen::Index i = 0; i < Gx.size(); ++i) prim = std::max(prim, Gx(i) - qp.g(i));
  r.primal = prim / p_scale;

  const double d_scale = std::max(1.0, inf_norm(y_ineq));
  double neg = 0.0, comp = 0.0;
  for (Eigen::Index i = 0; i < y_ineq.size(); ++i) {
    neg = std::max(neg, -y_ineq(i));
    comp = std::max(comp, std::abs(y_ineq(i) * (qp.g(i) - Gx(i))));
  }
  r.dual = neg / d_scale;
  r.complementarity = comp / (d_scale * p_scale);
  return r;
}

QpSolution solve(const QuadraticProgram& qp, const QpSettings& settings, const WarmStart* warm) {
  qp.validate();
  const int n = qp.num_variables();
  const int meq = qp.num_equalities();
  const int mineq = qp.num_inequalities();
  const int m = meq + mineq;

  Eigen::MatrixXd C(m, n);
  Eigen::VectorXd l(m), u(m);
  if (meq) {
    C.topRows(meq) = qp.A;
    l.head(meq) = qp.b;
    u.head(meq) = qp.b;
  }
  if (mineq) {
    C.bottomRows(mineq) = qp.G;
    l.tail(mineq).setConstant(-kInf);
    u.tail(mineq) = qp.g;
  }

  const ScaledProblem s = equilibrate(qp.Q, qp.q, C, l, u, settings.scaling_iterations);

  Eigen::VectorXd rho(m);
  double rho_base = settings.rho;
  auto set_rho = [&](double base) {
    for (int i = 0; i < m; ++i) rho(i) = i < meq ? 1e3 * base : base;
  };
  set_rho(rho_base);
  Eigen::LLT<Eigen::MatrixXd> factor;
  auto refactor = [&] {
    Eigen::MatrixXd K = s.P;
    K.diagonal().array() += settings.sigma;
    if (m) K.noalias() += s.C.transpose() * rho.asDiagonal() * s.C;
    factor.compute(K);
  };
  refactor();

  Eigen::VectorXd xs = Eigen::VectorXd::Zero(n), zs = Eigen::VectorXd::Zero(m),
                  ys = Eigen::VectorXd::Zero(m);
  if (warm) {
    if (warm->x.size() == n) xs = warm->x.cwiseQuotient(s.D);
    if (warm->y_eq.size() == meq && warm->y_ineq.size() == mineq) {
      Eigen::VectorXd y(m);
      y << warm->y_eq, warm->y_ineq;
      ys = s.c * y.cwiseQuotient(s.E);
    }
    if (m) zs = (s.C * xs).cwiseMax(s.l).cwiseMin(s.u);
  }

  auto unscale = [&](const Eigen::VectorXd& xv, const Eigen::VectorXd& zv, const Eigen::VectorXd& yv,
                     Eigen::VectorXd& x, Eigen::VectorXd& z, Eigen::VectorXd& y) {
    x = xv.cwiseProduct(s.D);
    z = zv.cwiseQuotient(s.E);
    y = yv.cwiseProduct(s.E) / s.c;
  };

  QpSolution sol;
  auto finish = [&](QpStatus status, const Eigen::VectorXd& x, const Eigen::VectorXd& y, int iters,
                    bool polished) {
    sol.status = status;
    sol.x = x;
    sol.y_eq = y.head(meq);
    sol.y_ineq = y.tail(mineq);
    sol.kkt_residuals = kkt_residuals(qp, sol.x, sol.y_eq, sol.y_ineq);
    sol.objective = qp.objective(sol.x);
    sol.iterations = iters;
    sol.polished = polished;
    return sol;
  };

  double eps = 1e-5;
  Eigen::VectorXd x, z, y, ys_prev = ys;
  Eigen::VectorXd xt(n), zt(m), z_relax(m);
  const double alpha = settings.alpha;
  for (int k = 1; k <= settings.max_iterations; ++k) {
    ys_prev = ys;
    Eigen::VectorXd rhs = settings.sigma * xs - s.q;
    if (m) rhs.noalias() += s.C.transpose() * (rho.cwiseProduct(zs) - ys);
    xt = factor.solve(rhs);
    if (m) zt.noalias() = s.C * xt;
    xs = alpha * xt + (1.0 - alpha) * xs;
    if (m) {
      z_relax = alpha * zt + (1.0 - alpha) * zs;
      zs = (z_relax + ys.cwiseQuotient(rho)).cwiseMax(s.l).cwiseMin(s.u);
      ys += rho.cwiseProduct(z_relax - zs);
    }

    if (k % settings.check_interval == 0 || k == settings.max_iterations) {
      unscale(xs, zs, ys, x, z, y);
      const Eigen::VectorXd Cx = C * x;
      const Eigen::VectorXd Qx = qp.Q * x;
      const Eigen::VectorXd Cty = C.transpose() * y;
      const double prim = m ? inf_norm(Cx - z) : 0.0;
      const double dual = inf_norm(Qx + qp.q + Cty);
      const double eps_p = eps + eps * std::max(inf_norm(Cx), inf_norm(z));
      const double eps_d = eps + eps * std::max({inf_norm(Qx), inf_norm(Cty), inf_norm(qp.q)});

      auto try_polish = [&](int rounds) {
        std::vector<char> active(static_cast<std::size_t>(m), 0);
        for (int i = 0; i < m; ++i)
          active[i] = i < meq ? 1 : static_cast<char>(u(i) - z(i) < y(i));
        return polish(qp, C, u, meq, std::move(active), settings.tol, rounds);
      };
      const bool converged = prim <= eps_p && dual <= eps_d;
      // Degenerate problems (LPs in particular) can stall ADMM far from the
      // tolerance while the active set is already right.
      if (!converged && settings.polish && m && k % (20 * settings.check_interval) == 0) {
        PolishResult p = try_polish(n + 10);
        if (p.ok) return finish(QpStatus::optimal, p.x, p.y, k, true);
      }
      if (converged) {
        if (settings.polish && m) {
          PolishResult p = try_polish(3 * m + 10);
          if (p.ok) return finish(QpStatus::optimal, p.x, p.y, k, true);
        }
        Eigen::VectorXd y_clean = y;
        if (kkt_residuals(qp, x, y_clean.head(meq), y_clean.tail(mineq)).within(settings.tol))
          return finish(QpStatus::optimal, x, y_clean, k, false);
        eps = std::max(eps * 1e-2, 1e-14);
      }

      // Primal infeasibility: the dual iterate grows along a certifying ray.
      if (m) {
        const Eigen::VectorXd dy = (ys - ys_prev).cwiseProduct(s.E) / s.c;
        const double dy_norm = inf_norm(dy);
        if (dy_norm > 1e-30) {
          const double tol = settings.infeasibility_tol * dy_norm;
          bool cone_ok = true;
          double support = 0.0;
          for (int i = 0; i < m; ++i) {
            if (dy(i) > 0) {
              support += u(i) * dy(i);
            } else if (dy(i) < 0) {
              if (std::isfinite(l(i)))
                support += l(i) * dy(i);
              else if (dy(i) < -tol)
                cone_ok = false;
            }
          }
          if (cone_ok && inf_norm(C.transpose() * dy) <= tol && support < -tol) {
            unscale(xs, zs, ys, x, z, y);
            finish(QpStatus::infeasible, x, y, k, false);
            const Eigen::VectorXd cert = dy / dy_norm;
            sol.certificate_eq = cert.head(meq);
            sol.certificate_ineq = cert.tail(mineq).cwiseMax(0.0);
            return sol;
          }
        }
      }
    }

    if (m && k % settings.adapt_interval == 0) {
      const Eigen::VectorXd Cxs = s.C * xs;
      const Eigen::VectorXd Pxs = s.P * xs;
      const Eigen::VectorXd Ctys = s.C.transpose() * ys;
      const double prim_s =
          inf_norm(Cxs - zs) / std::max({inf_norm(Cxs), inf_norm(zs), 1e-10});
      const double dual_s = inf_norm(Pxs + s.q + Ctys) /
                            std::max({inf_norm(Pxs), inf_norm(Ctys), inf_norm(s.q), 1e-10});
      double next = rho_base * std::sqrt(prim_s / std::max(dual_s, 1e-30));
      next = std::clamp(next, 1e-6, 1e6);
      if (next > 5.0 * rho_base || next < 0.2 * rho_base) {
        rho_base = next;
        set_rho(rho_base);
        refactor();
      }
    }
  }
  unscale(xs, zs, ys, x, z, y);
  return finish(QpStatus::max_iterations, x, y, settings.max_iterations, false);
}

}  // namespace flatplan::qp
