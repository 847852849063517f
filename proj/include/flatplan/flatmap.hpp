#pragma once

#include "flatplan/splinecore.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace flatplan {

/// Flatness maps of the planar coordinated-turn aircraft:
///   xdot = Va cos(psi), ydot = Va sin(psi), psidot = g tan(phi) / Va
/// with the position as flat output.
namespace flat {

inline constexpr double kGravity = 9.81;
inline constexpr double kSingularSpeed = 1e-9;

struct StateSample {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;  ///< heading, wrapped to [0, 2pi)
};

struct InputSample {
  double va = 0.0;   ///< airspeed
  double phi = 0.0;  ///< roll, in (-pi/2, pi/2)
};

struct FlatSample {
  Eigen::Vector2d z = Eigen::Vector2d::Zero();
  Eigen::Vector2d dz = Eigen::Vector2d::Zero();
  Eigen::Vector2d ddz = Eigen::Vector2d::Zero();
};

struct TracePoint {
  double t = 0.0;
  StateSample state;
  InputSample input;
};

/// Wraps an angle to [0, 2pi).
double wrap_angle(double a);

StateSample theta(const FlatSample& s, double eps_v = kSingularSpeed);
InputSample phi_input(const FlatSample& s, double g = kGravity, double eps_v = kSingularSpeed);

/// z, z', z'' of a planar curve at t.
FlatSample flat_sample(const SplineCurve& curve, double t);

/// States and inputs along the curve. Needs order >= 4 and a 2D curve.
/// Throws SingularVelocityError carrying the offending time.
std::vector<TracePoint> trace(const SplineCurve& curve, std::span<const double> times,
                              double g = kGravity, double eps_v = kSingularSpeed);

/// Largest absolute residual of the three model equations at t, with the
/// state derivatives taken by centered differences of step h (one-sided
/// second-order differences near the ends of the curve).
double dynamics_residual(const SplineCurve& curve, double t, double h = 1e-4,
                         double g = kGravity, double eps_v = kSingularSpeed);

}  // namespace flat
}  // namespace flatplan
