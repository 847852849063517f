#pragma once

#include <stdexcept>
#include <string>

namespace flatplan {

/// Argument lies outside the domain an operation is defined on (e.g. t outside
/// the knot range).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed or inconsistent input (dimensions, non-PSD objective, bad knots).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The flat output has (near) zero velocity, so heading and roll are undefined.
class SingularVelocityError : public std::runtime_error {
 public:
  SingularVelocityError(double t, double speed)
      : std::runtime_error("singular velocity at t=" + std::to_string(t) +
                           " (|dz|=" + std::to_string(speed) + ")"),
        time_(t) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Point is too close to a hyperplane to assign it a sign.
class AmbiguousCellError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every branch of a planning problem was infeasible.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario file violates the schema. The message starts with the JSON path.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace flatplan
