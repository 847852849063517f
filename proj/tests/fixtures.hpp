// Shared scenario data for the test suites.
#pragma once

#include "flatplan/geoarr.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace flatplan::test {

/// Three-obstacle planar scene: nine support hyperplanes, three waypoints
/// at t = 0, 5, 10.
struct ThreeObstacleScene {
  std::vector<geo::Hyperplane> hyperplanes;
  std::vector<std::string> obstacle_tuples{"+++--+++-", "+-+-+++++", "+-+++--++"};
  std::vector<Eigen::Vector2d> waypoints{{-9.0, -0.5}, {0.0, 1.5}, {6.0, 0.0}};
  std::vector<double> times{0.0, 5.0, 10.0};
  geo::Box box;

  ThreeObstacleScene() {
    const double H[9][2] = {{-0.5931, 0.8051}, {0.1814, 0.9834},  {-0.0044, 1.0000},
                            {-0.1323, 0.9912}, {-0.7011, -0.7131}, {0.8152, -0.5792},
                            {0.4352, 0.9003},  {1.0000, -0.0075},  {-0.5961, -0.8029}};
    const double k[9] = {4.2239, 0.1719, 0.9975, 0.2728, 3.6785, 0.0317, 1.6598, 4.5790, 1.0280};
    for (int i = 0; i < 9; ++i) hyperplanes.emplace_back(Eigen::Vector2d(H[i][0], H[i][1]), k[i]);
    // waypoint spread scaled by 1.5 about its centre
    box.lo = Eigen::Vector2d(-12.75, -1.0);
    box.hi = Eigen::Vector2d(9.75, 2.0);
  }

  std::vector<geo::ObstacleSpec> obstacle_specs() const {
    std::vector<geo::ObstacleSpec> out;
    for (std::size_t i = 0; i < obstacle_tuples.size(); ++i)
      out.push_back({"O" + std::to_string(i + 1), obstacle_tuples[i], {}});
    return out;
  }

  geo::Arrangement arrangement() const {
    return geo::build_arrangement(hyperplanes, obstacle_specs(), box);
  }
};

/// Two slotted walls with offset openings; the path from (-5,0) to (5,0)
/// through the origin has to weave between them.
struct Chicane {
  double opening = 0.4;
  double offset = 1.0;
  double thickness = 0.5;
  geo::Box box{Eigen::Vector2d(-6.0, -4.0), Eigen::Vector2d(6.0, 4.0)};
  std::vector<Eigen::Vector2d> waypoints{{-5.0, 0.0}, {0.0, 0.0}, {5.0, 0.0}};
  std::vector<double> times{0.0, 5.0, 10.0};

  static std::vector<Eigen::VectorXd> rect(double x0, double y0, double x1, double y1) {
    return {Eigen::Vector2d(x0, y0), Eigen::Vector2d(x1, y0), Eigen::Vector2d(x1, y1),
            Eigen::Vector2d(x0, y1)};
  }

  std::vector<geo::ObstacleSpec> obstacle_specs() const {
    const double s = offset, t = thickness, w = opening;
    return {{"left_top", {}, rect(-s - t, 1.0 + w, -s, 4.0)},
            {"left_bottom", {}, rect(-s - t, -4.0, -s, 1.0)},
            {"right_top", {}, rect(s, -1.0, s + t, 4.0)},
            {"right_bottom", {}, rect(s, -4.0, s + t, -1.0 - w)}};
  }

  geo::Arrangement arrangement() const { return geo::build_arrangement({}, obstacle_specs(), box); }
};

}  // namespace flatplan::test
