#include "artic/error.hpp"
#include "artic/mesh.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace artic;
using namespace artic::mesh;

TEST_CASE("obj parsing: fans, slashes, negative indices")
{
  const auto m = parse_obj("# quad\n"
                           "o thing\n"
                           "v 0 0 0\n"
                           "v 1 0 0\n"
                           "v 1 1 0\n"
                           "v 0 1 0\n"
                           "vn 0 0 1\n"
                           "f 1/1/1 2/2/1 3//1 4\n"
                           "f -4 -2 -1\n");
  REQUIRE(m.vertex_count() == 4);
  REQUIRE(m.triangle_count() == 3);
  CHECK(m.triangles()[0] == Triangle{0, 1, 2});
  CHECK(m.triangles()[1] == Triangle{0, 2, 3});
  CHECK(m.triangles()[2] == Triangle{0, 2, 3});
  CHECK((m.normals()[0] - Vec3::UnitZ()).norm() < 1e-15);
}

TEST_CASE("obj errors name the line")
{
  try {
    parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n");
    FAIL("expected error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
  try {
    parse_obj("v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n");
    FAIL("expected error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
  CHECK_THROWS_AS(parse_obj("v 0 zero 0\n"), ParseError);
}

TEST_CASE("obj write/parse round trip is exact")
{
  std::mt19937_64 rng(2);
  const auto m = testing::random_mesh(rng, 50);
  CHECK(parse_obj(write_obj(m)) == m);
}

TEST_CASE("construction rejects bad topology")
{
  CHECK_THROWS_AS(TriMesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 3}}), InputError);
  CHECK_THROWS_AS(TriMesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 1}}), InputError);
  CHECK_THROWS_AS(TriMesh({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, {{0, 1, 2}}), InputError);
}

TEST_CASE("closest point on a triangle matches the projection oracle")
{
  std::mt19937_64 rng(4);
  for (int i = 0; i < 5000; ++i) {
    const Vec3 a = testing::random_vec(rng, 5), b = testing::random_vec(rng, 5), c = testing::random_vec(rng, 5);
    if (triangle_area(a, b, c) < 1e-2) {
      continue;
    }
    const Vec3 p = testing::random_vec(rng, 10);
    const Vec3 got = closest_point_on_triangle(p, a, b, c);
    const Vec3 want = testing::brute_triangle_closest(p, a, b, c);
    CHECK(std::abs((got - p).norm() - (want - p).norm()) < 1e-9);
  }
}

TEST_CASE("bvh agrees with brute force")
{
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = testing::random_mesh(rng, 1 + rng() % 200);
    const Bvh bvh(m);
    CHECK(bvh.leaf_count() >= 1);
    for (int q = 0; q < 50; ++q) {
      const Vec3 p = testing::random_vec(rng, 15);
      const auto r = bvh.closest_point(p);
      CHECK(std::abs(r.distance - testing::brute_distance(m, p)) < 1e-9);
      CHECK(std::abs((r.closest_point - p).norm() - r.distance) < 1e-12);
    }
  }
}

TEST_CASE("bvh ties resolve to the lowest triangle index")
{
  // Two coincident triangles: every query ties.
  const TriMesh m({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}, {1, 2, 0}});
  CHECK(Bvh(m).closest_point({0.2, 0.2, 1}).triangle_index == 0);
}

TEST_CASE("sides, penetration, and contact on an oriented plane")
{
  const Bvh plane(testing::grid_plane(4, 10, 0.0));  // normal +z
  CHECK(plane.closest_point({5, 5, 2}).side == Side::front);
  CHECK(plane.closest_point({5, 5, -2}).side == Side::back);
  CHECK(penetration_depth(plane, {5, 5, 2}) == 0.0);
  CHECK(penetration_depth(plane, {5, 5, -0.3}) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(penetration_depth(plane, {5, 5, 0}) == 0.0);
  CHECK(in_contact(plane, {5, 5, 0.5}, 0.5));
  CHECK_FALSE(in_contact(plane, {5, 5, 0.51}, 0.5));
  CHECK_FALSE(in_contact(plane, {5, 5, -0.1}, 0.5));
}

TEST_CASE("penetration and contact are mutually exclusive")
{
  std::mt19937_64 rng(8);
  const auto m = testing::random_mesh(rng, 60);
  const Bvh bvh(m);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 p = testing::random_vec(rng, 12);
    CHECK_FALSE((penetration_depth(bvh, p) > 0.0 && in_contact(bvh, p, 1.0)));
  }
}

TEST_CASE("orientation consistency")
{
  auto m = testing::grid_plane(3, 1, 0);
  CHECK(is_consistently_oriented(m));
  auto tris = m.triangles();
  std::swap(tris[4][1], tris[4][2]);
  CHECK_FALSE(is_consistently_oriented(TriMesh(m.vertices(), tris)));
}

TEST_CASE("surface distance: identity and parallel planes")
{
  const auto a = testing::grid_plane(8, 10, 0.0);
  const auto s = surface_distance_stats(a, Bvh(a), 4);
  CHECK(s.max < 1e-12);
  CHECK(s.mean < 1e-12);
  CHECK(s.sample_count == a.vertex_count() + 4 * a.triangle_count());

  // Interior samples of one plane all sit exactly 1 mm from the other.
  const auto b = testing::grid_plane(8, 10, 1.0);
  const auto d = symmetric_surface_distance(a, b, 8);
  CHECK(std::abs(d.mean - 1.0) < 1e-6);
  CHECK(std::abs(d.max - 1.0) < 1e-6);
  CHECK(std::abs(d.rms - 1.0) < 1e-6);
  const auto e = symmetric_surface_distance(b, a, 8);
  CHECK(d.mean == e.mean);
  CHECK(d.max == e.max);
}

TEST_CASE("surface samples lie on the mesh and depend on the seed")
{
  std::mt19937_64 rng(10);
  const auto m = testing::random_mesh(rng, 30);
  const Bvh bvh(m);
  const auto s0 = surface_samples(m, 6, 0);
  const auto s1 = surface_samples(m, 6, 1);
  REQUIRE(s0.size() == m.vertex_count() + 6 * m.triangle_count());
  CHECK(s0 != s1);
  CHECK(s0 == surface_samples(m, 6, 0));
  for (const Vec3& p : s1) {
    CHECK(bvh.closest_point(p).distance < 1e-9);
  }
}
