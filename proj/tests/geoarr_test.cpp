#include "flatplan/geoarr.hpp"

#include "flatplan/errors.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

namespace flatplan::geo {
namespace {

using test::ThreeObstacleScene;

std::vector<Eigen::Vector2d> box_polygon(const Box& b) {
  return {{b.lo(0), b.lo(1)}, {b.hi(0), b.lo(1)}, {b.hi(0), b.hi(1)}, {b.lo(0), b.hi(1)}};
}

// Cell polygon by clipping the box with every signed half-plane.
std::vector<Eigen::Vector2d> clipped_cell(const std::vector<Hyperplane>& hs, const Box& box,
                                          const std::string& tuple) {
  std::vector<Eigen::Vector2d> poly = box_polygon(box);
  for (std::size_t m = 0; m < hs.size() && !poly.empty(); ++m) {
    const double f = tuple[m] == '+' ? 1.0 : -1.0;
    poly = test::clip_halfplane(poly, f * Eigen::Vector2d(hs[m].normal), f * hs[m].offset);
  }
  return poly;
}

std::set<std::string> oracle_cells(const std::vector<Hyperplane>& hs, const Box& box) {
  std::set<std::string> out;
  const std::size_t M = hs.size();
  for (unsigned mask = 0; mask < (1u << M); ++mask) {
    std::string t(M, '+');
    for (std::size_t m = 0; m < M; ++m)
      if (mask & (1u << m)) t[m] = '-';
    if (test::polygon_inradius(clipped_cell(hs, box, t)) > 1e-7) out.insert(t);
  }
  return out;
}

std::set<std::string> as_strings(const std::vector<SignTuple>& v) {
  std::set<std::string> out;
  for (const auto& s : v) out.insert(s.str());
  return out;
}

TEST(SignTuple, ParseAndOrder) {
  const SignTuple t = SignTuple::parse("+-+");
  EXPECT_EQ(t.size(), 3u);
  EXPECT_EQ(t.str(), "+-+");
  EXPECT_EQ(t.factor(1), -1.0);
  EXPECT_THROW(SignTuple::parse("+x-"), InputError);
  EXPECT_LT(SignTuple::parse("++"), SignTuple::parse("+-"));
}

TEST(Hyperplane, RejectsZeroNormal) {
  EXPECT_THROW(Hyperplane(Eigen::Vector2d::Zero(), 1.0), InputError);
  EXPECT_THROW(Hyperplane(Eigen::Vector2d(1, NAN), 1.0), InputError);
}

TEST(CellOf, SignConventionAndAmbiguity) {
  const std::vector<Hyperplane> hs{Hyperplane(Eigen::Vector2d(1, 0), 0.0),
                                   Hyperplane(Eigen::Vector2d(0, 2), 2.0)};
  EXPECT_EQ(cell_of(hs, Eigen::Vector2d(-1, 0)).str(), "++");
  EXPECT_EQ(cell_of(hs, Eigen::Vector2d(1, 3)).str(), "--");
  EXPECT_THROW(cell_of(hs, Eigen::Vector2d(1e-12, 0)), AmbiguousCellError);
  EXPECT_THROW(cell_of(hs, Eigen::Vector2d(1, 1.0 + 1e-11)), AmbiguousCellError);
}

TEST(EnumerateCells, MatchesClippingOracleOnSceneArrangement) {
  const ThreeObstacleScene scene;
  const auto cells = enumerate_cells(scene.hyperplanes, scene.box);
  EXPECT_EQ(as_strings(cells), oracle_cells(scene.hyperplanes, scene.box));
  EXPECT_EQ(cells.size(), 36u);
}

TEST(EnumerateCells, MatchesClippingOracleOnRandomArrangements) {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Box box{Eigen::Vector2d(-2, -2), Eigen::Vector2d(2, 2)};
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Hyperplane> hs;
    const int M = 3 + trial % 5;
    for (int m = 0; m < M; ++m) hs.emplace_back(Eigen::Vector2d(u(rng), u(rng)), u(rng));
    EXPECT_EQ(as_strings(enumerate_cells(hs, box)), oracle_cells(hs, box)) << trial;
  }
}

TEST(EnumerateCells, SerialAndParallelAgree) {
  const ThreeObstacleScene scene;
  EXPECT_EQ(enumerate_cells(scene.hyperplanes, scene.box),
            enumerate_cells_serial(scene.hyperplanes, scene.box));
}

TEST(EnumerateCells, RejectsBadInputs) {
  const ThreeObstacleScene scene;
  EXPECT_THROW(enumerate_cells(scene.hyperplanes, Box{Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)}),
               InputError);
  std::vector<Hyperplane> many;
  for (int i = 0; i < 26; ++i) many.emplace_back(Eigen::Vector2d(1, 0), 0.01 * i);
  EXPECT_THROW(enumerate_cells(many, scene.box), InputError);
}

TEST(Arrangement, SceneObstaclesAreTheInterdictedCells) {
  const Arrangement arr = ThreeObstacleScene().arrangement();
  EXPECT_EQ(as_strings(arr.interdicted()),
            (std::set<std::string>{"+++--+++-", "+-+-+++++", "+-+++--++"}));
  EXPECT_EQ(arr.admissible().size(), arr.feasible().size() - 3);
  for (const auto& ob : arr.obstacles()) EXPECT_TRUE(arr.is_interdicted(ob.tuple)) << ob.name;
}

TEST(Arrangement, CellsCoverTheBoxAndAreDisjoint) {
  const ThreeObstacleScene scene;
  const Arrangement arr = scene.arrangement();
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> ux(scene.box.lo(0), scene.box.hi(0));
  std::uniform_real_distribution<double> uy(scene.box.lo(1), scene.box.hi(1));
  int ambiguous = 0;
  for (int s = 0; s < 10000; ++s) {
    const Eigen::Vector2d x(ux(rng), uy(rng));
    try {
      const SignTuple t = cell_of(arr, x);
      EXPECT_TRUE(arr.is_feasible(t)) << t.str();
      int inside = 0;
      for (const SignTuple& c : arr.feasible())
        if (arr.cell(c).contains(x, -1e-12)) ++inside;
      EXPECT_EQ(inside, 1);
    } catch (const AmbiguousCellError&) {
      ++ambiguous;
    }
  }
  EXPECT_LT(ambiguous, 5);
}

TEST(Arrangement, WaypointsLieInAdmissibleCells) {
  const ThreeObstacleScene scene;
  const Arrangement arr = scene.arrangement();
  const std::vector<std::string> expect{"-++--+++-", "+---+++++", "+-+++---+"};
  for (std::size_t i = 0; i < scene.waypoints.size(); ++i) {
    const SignTuple t = cell_of(arr, scene.waypoints[i]);
    EXPECT_EQ(t.str(), expect[i]);
    EXPECT_FALSE(arr.is_interdicted(t));
  }
}

TEST(Arrangement, TupleLengthAndEmptyObstacleErrors) {
  const ThreeObstacleScene scene;
  try {
    build_arrangement(scene.hyperplanes, {{"bad", std::string("++-"), {}}}, scene.box);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("bad"), std::string::npos);
  }
  const auto cells = oracle_cells(scene.hyperplanes, scene.box);
  std::string empty = "+++++++++";
  for (unsigned mask = 0; cells.count(empty); ++mask)
    for (int m = 0; m < 9; ++m) empty[m] = (mask >> m) & 1u ? '-' : '+';
  EXPECT_THROW(build_arrangement(scene.hyperplanes, {{"void", empty, {}}}, scene.box), InputError);
}

TEST(Arrangement, VertexObstacleAddsFacetsAndInterdictsItsCells) {
  const Box box{Eigen::Vector2d(-5, -5), Eigen::Vector2d(5, 5)};
  const std::vector<Hyperplane> hs{Hyperplane(Eigen::Vector2d(1, 0), 0.0)};
  const ObstacleSpec sq{"sq", std::nullopt,
                        {Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, -1), Eigen::Vector2d(1, 1),
                         Eigen::Vector2d(-1, 1), Eigen::Vector2d(0, 0)}};
  const Arrangement arr = build_arrangement(hs, {sq}, box);
  EXPECT_EQ(arr.size(), 5);
  EXPECT_EQ(arr.declared_hyperplanes(), 1);
  // x = 0 splits the square into two interdicted cells
  EXPECT_EQ(arr.interdicted().size(), 2u);
  for (const SignTuple& t : arr.interdicted()) EXPECT_EQ(t.str().substr(1), "++++");
  EXPECT_EQ(arr.obstacles()[0].region.rows(), 4);
  EXPECT_EQ(obstacle_vertices(arr.obstacles()[0], box).size(), 4u);
}

TEST(Chebyshev, MatchesInradiusOracle) {
  const ThreeObstacleScene scene;
  const Arrangement arr = scene.arrangement();
  for (const SignTuple& t : arr.feasible()) {
    const double ref = test::polygon_inradius(clipped_cell(scene.hyperplanes, scene.box, t.str()));
    EXPECT_NEAR(chebyshev_radius(arr.cell(t).intersect(scene.box.polytope())), ref, 1e-6) << t.str();
  }
}

TEST(Chebyshev, SceneObstacleCentres) {
  const Arrangement arr = ThreeObstacleScene().arrangement();
  const double radius[3] = {0.573, 0.379, 0.460};
  for (int i = 0; i < 3; ++i)
    EXPECT_NEAR(chebyshev_radius(arr.obstacles()[i].region), radius[i], 1e-3);
}

TEST(Inflate, SquareCellBySquareRegion) {
  const Box unit{Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1)};
  const HPolytope grown = inflate_obstacle(unit.polytope(), SafetyRegion::square(0.5));
  const Eigen::Vector4d expect(1.5, 0.5, 1.5, 0.5);
  EXPECT_LE((grown.b - expect).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(grown.A, unit.polytope().A);
}

TEST(Inflate, EmptyRegionIsIdentityAndSupportBound) {
  const ThreeObstacleScene scene;
  const Arrangement arr = scene.arrangement();
  const HPolytope& c = arr.obstacles()[0].region;
  const HPolytope same = inflate_obstacle(c, SafetyRegion());
  EXPECT_EQ(same.b, c.b);
  // Every point of cell (+) (-S) satisfies the inflated rows.
  const SafetyRegion s({Eigen::Vector2d(-0.2, -0.1), Eigen::Vector2d(0.3, 0.0),
                        Eigen::Vector2d(0.0, 0.25)});
  const HPolytope grown = inflate_obstacle(c, s);
  for (const auto& v : obstacle_vertices(arr.obstacles()[0], scene.box))
    for (const auto& sv : s.vertices()) EXPECT_TRUE(grown.contains(v - sv, 1e-12));
}

TEST(SafetyRegion, MustContainOrigin) {
  EXPECT_THROW(SafetyRegion({Eigen::Vector2d(1, 1), Eigen::Vector2d(2, 1), Eigen::Vector2d(1, 2)}),
               InputError);
  EXPECT_NO_THROW(SafetyRegion({Eigen::Vector2d(0, 0)}));
  EXPECT_DOUBLE_EQ(SafetyRegion::square(0.5).support(Eigen::Vector2d(1, 1)), 1.0);
}

TEST(SignedDistance, BoxClosedForm) {
  const HPolytope p = Box{Eigen::Vector2d(0, 0), Eigen::Vector2d(2, 1)}.polytope();
  EXPECT_NEAR(signed_distance(Eigen::Vector2d(1, 0.5), p), -0.5, 1e-15);
  EXPECT_NEAR(signed_distance(Eigen::Vector2d(3, 0.5), p), 1.0, 1e-8);
  EXPECT_NEAR(signed_distance(Eigen::Vector2d(5, 5), p), 5.0, 1e-8);
  EXPECT_NEAR(signed_distance(Eigen::Vector2d(-1, 0.5), p), 1.0, 1e-8);
}

TEST(SignedDistance, DegenerateHulls) {
  const HPolytope seg = hull_polytope_2d({Eigen::Vector2d(0, 0), Eigen::Vector2d(2, 0)});
  EXPECT_NEAR(signed_distance(Eigen::Vector2d(1, 1), seg), 1.0, 1e-8);
  EXPECT_NEAR(signed_distance(Eigen::Vector2d(3, 0), seg), 1.0, 1e-8);
  const HPolytope pt = hull_polytope_2d({Eigen::Vector2d(1, 1)});
  EXPECT_NEAR(signed_distance(Eigen::Vector2d(4, 5), pt), 5.0, 1e-8);
}

TEST(PolytopeVertices, TriangleInCounterClockwiseOrder) {
  const HPolytope tri = hull_polytope_2d(
      {Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), Eigen::Vector2d(0.2, 0.2)});
  EXPECT_EQ(tri.rows(), 3);
  const auto v = polytope_vertices(tri);
  ASSERT_EQ(v.size(), 3u);
  double area = 0.0;
  for (std::size_t i = 0; i < 3; ++i) area += v[i](0) * v[(i + 1) % 3](1) - v[(i + 1) % 3](0) * v[i](1);
  EXPECT_NEAR(area, 1.0, 1e-12);
}

}  // namespace
}  // namespace flatplan::geo
