// Brute-force optimum of single-obstacle toy problems.
#pragma once

#include "flatplan/avoidplan.hpp"

#include <algorithm>
#include <functional>
#include <vector>

namespace flatplan::test {

/// Unit square obstacle in [-4, 4]^2 and one agent.
inline plan::PlanningProblem square_toy(int n, int d, const std::vector<Eigen::Vector2d>& w,
                                        std::vector<double> t) {
  std::vector<geo::Hyperplane> hs{{Eigen::Vector2d(1, 0), 1.0},
                                  {Eigen::Vector2d(-1, 0), 1.0},
                                  {Eigen::Vector2d(0, 1), 1.0},
                                  {Eigen::Vector2d(0, -1), 1.0}};
  const geo::Box box{Eigen::Vector2d(-4, -4), Eigen::Vector2d(4, 4)};
  auto arr = geo::build_arrangement(hs, {{"square", "++++", {}}}, box);
  plan::AgentSpec a{"a", {}, std::move(t), {}};
  for (const auto& p : w) a.waypoints.emplace_back(p);
  return {{std::move(a)}, std::move(arr), {n, d}, {}};
}

/// Exhaustive enumeration of every hyperplane assignment, built directly from
/// the obstacle rows rather than from the planner's disjunctions.
inline double exhaustive_optimum(const plan::PlanningProblem& p) {
  const plan::Assembled as = plan::assemble(p);
  const KnotVector k = p.knots();
  const int order = k.order();
  const int regions = k.n() - order + 2;
  const auto& ob = p.arrangement.obstacles().front();
  const int rows = ob.region.rows();
  std::vector<int> choice(static_cast<std::size_t>(regions), 0);
  double best = 1e300;
  std::function<void(int)> rec = [&](int i) {
    if (i == regions) {
      qp::QuadraticProgram prog = as.qp;
      for (int r = 0; r < regions; ++r) {
        const Eigen::VectorXd a = ob.region.A.row(choice[static_cast<std::size_t>(r)]).transpose();
        const double s = a.norm();
        const double b = ob.region.b(choice[static_cast<std::size_t>(r)]) / s + p.config.margin;
        for (int j = r; j < r + order; ++j) {
          Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(prog.num_variables());
          row(as.index(0, j, 0)) = -a(0) / s;
          row(as.index(0, j, 1)) = -a(1) / s;
          prog.add_inequality(row, -b);
        }
      }
      const qp::QpSolution sol = qp::solve(prog);
      if (sol.status == qp::QpStatus::optimal) best = std::min(best, sol.objective);
      return;
    }
    for (int c = 0; c < rows; ++c) {
      choice[static_cast<std::size_t>(i)] = c;
      rec(i + 1);
    }
  };
  rec(0);
  return best;
}

}  // namespace flatplan::test
