/**
 * @file geoarr.hpp
 * @brief Hyperplane arrangements over polyhedral obstacles.
 *
 * A hyperplane h'x = k splits space into H+ = {h'x <= k} and H- = {h'x >= k}.
 * A sign tuple picks one side per hyperplane; its cell is the intersection of
 * the chosen half-spaces. Cells that meet an obstacle are interdicted, the
 * rest admissible.
 */
#pragma once

#include <Eigen/Dense>

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flatplan::geo {

struct Hyperplane {
  Hyperplane(Eigen::VectorXd normal, double offset);

  Eigen::VectorXd normal;
  double offset;

  /// h'x - k; <= 0 on the '+' side.
  double eval(const Eigen::VectorXd& x) const { return normal.dot(x) - offset; }
  bool operator==(const Hyperplane&) const = default;
};

enum class Sign : char { plus = '+', minus = '-' };

class SignTuple {
 public:
  SignTuple() = default;
  explicit SignTuple(std::vector<Sign> signs) : signs_(std::move(signs)) {}
  /// Parses "+-+..."; throws InputError on other characters.
  static SignTuple parse(std::string_view text);

  std::size_t size() const noexcept { return signs_.size(); }
  Sign operator[](std::size_t i) const { return signs_[i]; }
  /// +1 for '+', -1 for '-'.
  double factor(std::size_t i) const { return signs_[i] == Sign::plus ? 1.0 : -1.0; }
  SignTuple extended(Sign s) const;
  std::string str() const;

  auto operator<=>(const SignTuple&) const = default;

 private:
  std::vector<Sign> signs_;
};

/// {x : A x <= b}.
struct HPolytope {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;

  int dim() const noexcept { return static_cast<int>(A.cols()); }
  int rows() const noexcept { return static_cast<int>(A.rows()); }
  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
  HPolytope intersect(const HPolytope& other) const;
};

struct Box {
  Eigen::VectorXd lo, hi;

  HPolytope polytope() const;
  /// Radius of the smallest origin-centred ball containing the box.
  double radius_from_origin() const;
  bool valid() const;
};

/// Polytope attached to an agent, given by its vertices; must contain the
/// origin.
class SafetyRegion {
 public:
  SafetyRegion() = default;
  explicit SafetyRegion(std::vector<Eigen::VectorXd> vertices);
  /// Axis-aligned square [-half, half]^2.
  static SafetyRegion square(double half_width);

  bool empty() const noexcept { return vertices_.empty(); }
  const std::vector<Eigen::VectorXd>& vertices() const noexcept { return vertices_; }
  /// max over s in S of dir's.
  double support(const Eigen::VectorXd& dir) const;
  bool operator==(const SafetyRegion&) const = default;

 private:
  std::vector<Eigen::VectorXd> vertices_;
};

struct Obstacle {
  std::string name;
  /// Representative tuple in the arrangement.
  SignTuple tuple;
  /// The obstacle set itself. For tuple obstacles these are the signed rows
  /// of every declared hyperplane; for vertex obstacles the hull facets.
  HPolytope region;
  /// Arrangement index of the hyperplane behind each row of `region`.
  std::vector<int> hyperplane_index;
  bool from_vertices = false;
  /// Vertex list as declared (vertex obstacles only).
  std::vector<Eigen::VectorXd> declared_vertices;
};

/// Obstacle declaration: either a sign tuple over the declared hyperplanes
/// or a vertex list.
struct ObstacleSpec {
  std::string name;
  std::optional<std::string> tuple;
  std::vector<Eigen::VectorXd> vertices;
};

struct ArrangementOptions {
  double interior_tol = 1e-7;  ///< Chebyshev radius above which a cell is nonempty
  double boundary_tol = 1e-9;  ///< cell_of refuses points this close to a hyperplane
  bool parallel = true;
};

class Arrangement {
 public:
  Arrangement(std::vector<Hyperplane> hyperplanes, Box box, std::vector<SignTuple> feasible,
              std::vector<Obstacle> obstacles, std::vector<SignTuple> interdicted,
              int declared_hyperplanes);

  int size() const noexcept { return static_cast<int>(hyperplanes_.size()); }
  int dim() const noexcept { return static_cast<int>(box_.lo.size()); }
  /// Number of hyperplanes given by the user (vertex-obstacle facets follow).
  int declared_hyperplanes() const noexcept { return declared_; }
  const std::vector<Hyperplane>& hyperplanes() const noexcept { return hyperplanes_; }
  const Box& box() const noexcept { return box_; }
  const std::vector<SignTuple>& feasible() const noexcept { return feasible_; }
  const std::vector<SignTuple>& interdicted() const noexcept { return interdicted_; }
  const std::vector<SignTuple>& admissible() const noexcept { return admissible_; }
  const std::vector<Obstacle>& obstacles() const noexcept { return obstacles_; }

  bool is_feasible(const SignTuple& s) const;
  bool is_interdicted(const SignTuple& s) const;
  /// Signed half-space rows of a tuple's cell (no box).
  HPolytope cell(const SignTuple& s) const;

 private:
  std::vector<Hyperplane> hyperplanes_;
  Box box_;
  std::vector<SignTuple> feasible_, interdicted_, admissible_;
  std::vector<Obstacle> obstacles_;
  int declared_;
};

/// Sign tuple of x: '+' where h'x <= k. Throws AmbiguousCellError within
/// `boundary_tol` of a hyperplane.
SignTuple cell_of(const Arrangement& arr, const Eigen::VectorXd& x, double boundary_tol = 1e-9);
SignTuple cell_of(const std::vector<Hyperplane>& hyperplanes, const Eigen::VectorXd& x,
                  double boundary_tol = 1e-9);

/// Nonempty cells of the arrangement inside the box, by incremental
/// sign-vector expansion. Tuple candidates of each level are tested with
/// OpenMP; the result does not depend on evaluation order.
std::vector<SignTuple> enumerate_cells(const std::vector<Hyperplane>& hyperplanes, const Box& box,
                                       const ArrangementOptions& opts = {});
/// Serial reference of enumerate_cells.
std::vector<SignTuple> enumerate_cells_serial(const std::vector<Hyperplane>& hyperplanes,
                                              const Box& box, const ArrangementOptions& opts = {});

/// Builds the full arrangement: adds vertex-obstacle facets, enumerates the
/// cells and splits them into interdicted / admissible.
Arrangement build_arrangement(std::vector<Hyperplane> hyperplanes,
                              const std::vector<ObstacleSpec>& obstacles, const Box& box,
                              const ArrangementOptions& opts = {});

/// Largest inscribed ball of {A x <= b} (negative when empty). The polytope
/// must be bounded.
double chebyshev_radius(const HPolytope& p, Eigen::VectorXd* center = nullptr);

/// Outer approximation of cell (+) (-S) keeping the cell's facet normals.
HPolytope inflate_obstacle(const HPolytope& cell, const SafetyRegion& region);

/// Vertices of a bounded polytope (2D: counter-clockwise).
std::vector<Eigen::VectorXd> polytope_vertices(const HPolytope& p, double tol = 1e-9);

/// Signed Euclidean distance: positive outside (projection program),
/// negative inside (depth to the nearest facet).
double signed_distance(const Eigen::VectorXd& x, const HPolytope& p);

/// Counter-clockwise convex hull of planar points (collinear points dropped).
std::vector<Eigen::Vector2d> convex_hull_2d(std::vector<Eigen::Vector2d> points);

/// H-representation of the hull of planar points, with unit normals.
/// Degenerate hulls (segment, point) get zero-width rows.
HPolytope hull_polytope_2d(const std::vector<Eigen::VectorXd>& points);

/// Obstacle polygon for drawing and separation: the region intersected with
/// the arrangement box when it is unbounded.
std::vector<Eigen::VectorXd> obstacle_vertices(const Obstacle& obstacle, const Box& box);

}  // namespace flatplan::geo
