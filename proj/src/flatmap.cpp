#include "flatplan/flatmap.hpp"

#include "flatplan/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace flatplan::flat {

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(a, two_pi);
  if (w < 0.0) w += two_pi;
  if (w >= two_pi) w = 0.0;
  return w;
}

StateSample theta(const FlatSample& s, double eps_v) {
  const double speed = s.dz.norm();
  if (speed < eps_v) throw SingularVelocityError(0.0, speed);
  return {s.z.x(), s.z.y(), wrap_angle(std::atan2(s.dz.y(), s.dz.x()))};
}

InputSample phi_input(const FlatSample& s, double g, double eps_v) {
  const double speed = s.dz.norm();
  if (speed < eps_v) throw SingularVelocityError(0.0, speed);
  const double cross = s.ddz.y() * s.dz.x() - s.dz.y() * s.ddz.x();
  return {speed, std::atan(cross / (g * speed))};
}

FlatSample flat_sample(const SplineCurve& curve, double t) {
  if (curve.dim() != 2) throw InputError("flat output must be planar");
  const SplineCurve v = curve.derivative(1);
  const SplineCurve a = curve.derivative(2);
  FlatSample s;
  s.z = curve(t);
  s.dz = v(t);
  s.ddz = a(t);
  return s;
}

std::vector<TracePoint> trace(const SplineCurve& curve, std::span<const double> times, double g,
                              double eps_v) {
  if (curve.knots().order() < 4) throw InputError("trace needs spline order d >= 4");
  if (curve.dim() != 2) throw InputError("flat output must be planar");
  const SplineCurve v = curve.derivative(1);
  const SplineCurve a = curve.derivative(2);
  std::vector<TracePoint> out;
  out.reserve(times.size());
  for (double t : times) {
    FlatSample s{curve(t), v(t), a(t)};
    try {
      out.push_back({t, theta(s, eps_v), phi_input(s, g, eps_v)});
    } catch (const SingularVelocityError&) {
      throw SingularVelocityError(t, s.dz.norm());
    }
  }
  return out;
}

namespace {

double angle_diff(double a, double b) {
  double d = std::remainder(a - b, 2.0 * std::numbers::pi);
  return d;
}

}  // namespace

double dynamics_residual(const SplineCurve& curve, double t, double h, double g, double eps_v) {
  const SplineCurve v = curve.derivative(1);
  const SplineCurve a = curve.derivative(2);
  auto state_at = [&](double tt) {
    FlatSample s{curve(tt), v(tt), a(tt)};
    try {
      return theta(s, eps_v);
    } catch (const SingularVelocityError&) {
      throw SingularVelocityError(tt, s.dz.norm());
    }
  };
  FlatSample s{curve(t), v(t), a(t)};
  StateSample x0;
  InputSample u0;
  try {
    x0 = theta(s, eps_v);
    u0 = phi_input(s, g, eps_v);
  } catch (const SingularVelocityError&) {
    throw SingularVelocityError(t, s.dz.norm());
  }

  double dx, dy, dpsi;
  if (t - h >= curve.t0() && t + h <= curve.t1()) {
    const StateSample xm = state_at(t - h), xp = state_at(t + h);
    dx = (xp.x - xm.x) / (2 * h);
    dy = (xp.y - xm.y) / (2 * h);
    dpsi = angle_diff(xp.psi, xm.psi) / (2 * h);
  } else {
    const double sgn = (t - h < curve.t0()) ? 1.0 : -1.0;
    const StateSample x1 = state_at(t + sgn * h), x2 = state_at(t + sgn * 2 * h);
    dx = sgn * (-3 * x0.x + 4 * x1.x - x2.x) / (2 * h);
    dy = sgn * (-3 * x0.y + 4 * x1.y - x2.y) / (2 * h);
    dpsi = sgn * (4 * angle_diff(x1.psi, x0.psi) - angle_diff(x2.psi, x0.psi)) / (2 * h);
  }
  const double r1 = std::abs(dx - u0.va * std::cos(x0.psi));
  const double r2 = std::abs(dy - u0.va * std::sin(x0.psi));
  const double r3 = std::abs(dpsi - g * std::tan(u0.phi) / u0.va);
  return std::max({r1, r2, r3});
}

}  // namespace flatplan::flat
