#include <algorithm>
#include <numeric>

#include "json.hpp"

#include "artic/error.hpp"
#include "artic/eval.hpp"
#include "artic/hash.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "support.hpp"

using namespace artic;
using namespace artic::eval;

namespace {

/// One root bone carrying `tongue` rigidly, a coil glued at `coil`, and
/// `frames` of random rigid motion. Targets follow the coil.
asset::AnimatedModelAsset rigid_asset(const mesh::TriMesh& tongue, const Vec3& coil, std::size_t frames,
                                      std::uint64_t seed, bool still = false)
{
  asset::AnimatedModelAsset a;
  a.armature = rig::Armature({rig::Bone{"root", std::nullopt, {}, 1.0}});
  a.meshes.push_back({"tongue", tongue, rig::rigid_skin_weights(tongue.vertex_count(), 0)});
  a.coils.push_back({"T1", ema::Articulator::tongue, 0, coil, "tongue"});
  a.targets.push_back({"T1", {0, Vec3::Zero()}, {}});
  std::mt19937_64 rng(seed);
  a.clip.frame_rate_hz = 100;
  for (std::size_t f = 0; f < frames; ++f) {
    rig::Pose p = rig::Pose::bind(a.armature);
    if (!still) {
      p.rotations[0] = testing::random_rotation(rng);
      p.translations[0] = testing::random_vec(rng, 20);
    }
    const RigidTransform t{p.rotations[0], p.translations[0]};
    a.clip.poses.push_back(p);
    a.clip.residuals_mm.push_back(0);
    a.clip.iterations.push_back(0);
    a.clip.held.push_back(0);
    a.target_positions.push_back({t.apply(coil)});
    a.target_valid.push_back({1});
  }
  a.provenance = {std::string(64, 'e'), {}, "test"};
  return a;
}

}  // namespace

TEST_CASE("series summary against direct computation")
{
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + rng() % 300);
    for (double& x : v) {
      x = testing::uniform(rng, -5, 20);
    }
    const auto s = summarize(v);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    const double rms = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0) / n);
    const double rank = 0.95 * (n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = std::min(lo + 1, v.size() - 1);
    const double p95 = sorted[lo] + (rank - std::floor(rank)) * (sorted[hi] - sorted[lo]);
    CHECK(s.min == sorted.front());
    CHECK(s.max == sorted.back());
    CHECK(std::abs(s.mean - mean) < 1e-12);
    CHECK(std::abs(s.rms - rms) < 1e-12);
    CHECK(std::abs(s.p95 - p95) < 1e-12);
    CHECK(s.min <= s.p95);
    CHECK(s.p95 <= s.max);
  }
  CHECK(summarize({}) == SeriesSummary{});
  const std::vector<double> one = {3.5};
  CHECK(summarize(one) == SeriesSummary{3.5, 3.5, 3.5, 3.5, 3.5});
}

TEST_CASE("target distance under rigid motion stays at the coil offset")
{
  const auto plane = testing::grid_plane(10, 10, 0.0);
  // Coil 2 mm above the interior of the plane.
  const auto a = rigid_asset(plane, {5.5, 4.5, 2.0}, 25, 42);
  const auto series = target_surface_distance(a);
  REQUIRE(series.size() == 1);
  CHECK(series[0].name == "target_distance.T1");
  REQUIRE(series[0].values.size() == 25);
  for (double d : series[0].values) {
    CHECK(std::abs(d - 2.0) < 1e-9);
  }

  auto no_mesh = a;
  no_mesh.coils[0].mesh.reset();
  CHECK_THROWS_AS(target_surface_distance(no_mesh), InputError);
}

TEST_CASE("palate contact and penetration")
{
  const auto palate = testing::grid_plane(10, 10, 5.0, true);  // faces down toward the tongue

  SUBCASE("5 mm clearance: no contact, no penetration")
  {
    const auto a = rigid_asset(testing::grid_plane(10, 10, 0.0), {5, 5, 0}, 6, 0, true);
    const auto c = palate_contact(a, palate, 0.5);
    CHECK(c.contact.summary.max == 0.0);
    CHECK(c.penetration.summary.max == 0.0);
  }
  SUBCASE("one raised vertex penetrates by 0.3")
  {
    auto verts = testing::grid_plane(10, 10, 0.0).vertices();
    verts[60] = Vec3(verts[60].x(), verts[60].y(), 5.3);
    const auto a = rigid_asset(mesh::TriMesh(verts, testing::grid_plane(10, 10, 0.0).triangles()), {5, 5, 0}, 3, 0,
                               true);
    const auto c = palate_contact(a, palate, 0.5);
    for (double d : c.penetration.values) {
      CHECK(std::abs(d - 0.3) < 1e-12);
    }
    // Penetrating points are not counted as contact; the rest are 5 mm away.
    CHECK(c.contact.summary.max == 0.0);
  }
  SUBCASE("distance exactly eps counts as contact")
  {
    auto verts = testing::grid_plane(10, 10, 0.0).vertices();
    verts[60] = Vec3(verts[60].x(), verts[60].y(), 4.5);
    const auto a = rigid_asset(mesh::TriMesh(verts, testing::grid_plane(10, 10, 0.0).triangles()), {5, 5, 0}, 2, 0,
                               true);
    CHECK(palate_contact(a, palate, 0.5).contact.summary.min == 1.0);
    CHECK(palate_contact(a, palate, 0.49).contact.summary.max == 0.0);
  }
  SUBCASE("palate checks")
  {
    const auto a = rigid_asset(testing::grid_plane(4, 10, 0.0), {5, 5, 0}, 1, 0, true);
    auto tris = palate.triangles();
    std::swap(tris[3][0], tris[3][1]);
    CHECK_THROWS_AS(palate_contact(a, mesh::TriMesh(palate.vertices(), tris), 0.5), InputError);
    CHECK_THROWS_AS(palate_contact(a, mesh::TriMesh{}, 0.5), InputError);
    CHECK_THROWS_AS(palate_contact(a, palate, 0.0), InputError);
  }
}

TEST_CASE("pose similarity")
{
  std::mt19937_64 rng(43);
  const auto m = testing::random_mesh(rng, 30);
  CHECK(pose_similarity(m, m, 4).max < 1e-12);
  const auto a = testing::grid_plane(6, 10, 0.0), b = testing::grid_plane(6, 10, 1.0);
  const auto ab = pose_similarity(a, b, 4, 9), ba = pose_similarity(b, a, 4, 9);
  CHECK(std::abs(ab.max - 1.0) < 1e-9);
  CHECK(ab.max == ba.max);
  CHECK(ab.mean == ba.mean);
  CHECK_THROWS_AS(pose_similarity(mesh::TriMesh{}, m, 4), InputError);
}

TEST_CASE("evaluate attaches the gates its inputs allow")
{
  const auto a = testing::make_asset(20);
  EvalOptions o;
  auto r = evaluate(a, o);
  CHECK_NOTHROW(check_report(r));
  REQUIRE(r.gates.size() == 1);
  CHECK(r.gates[0].name == "target_distance");
  CHECK(r.frame_count == 20);
  CHECK(r.find_scalar("target_distance_max") != nullptr);

  o.palate = testing::grid_plane(10, 40, 30.0, true);
  o.reference = a.find_mesh("tongue")->mesh;
  o.reference_frame = 0;
  r = evaluate(a, o);
  CHECK_NOTHROW(check_report(r));
  REQUIRE(r.gates.size() == 3);
  CHECK(r.gates[1].name == "penetration");
  CHECK(r.gates[2].name == "pose_similarity");
  CHECK(r.passed());
  CHECK(r.find_series("palate_contact") != nullptr);
  CHECK(r.find_scalar("similarity_max")->value < 1e-9);

  o.distance_mm = -1;
  CHECK_THROWS_AS(evaluate(a, o), InputError);
}

TEST_CASE("gates compare measured against threshold")
{
  CHECK(make_gate("g", "m", 1.0, 1.0).pass);
  CHECK_FALSE(make_gate("g", "m", 1.0, 1.0000001).pass);

  EvalReport r;
  r.frame_count = 2;
  r.series.push_back(make_series("s", "mm", {0.5, 2.0}, 1.0));
  r.gates.push_back(make_gate("g", "s", 1.0, 2.0));
  CHECK_NOTHROW(check_report(r));
  CHECK_FALSE(r.passed());
  r.gates[0].measured = 1.5;
  CHECK_THROWS_AS(check_report(r), std::invalid_argument);
  r.gates[0] = make_gate("g", "nope", 1.0, 2.0);
  CHECK_THROWS_AS(check_report(r), std::invalid_argument);
}

TEST_CASE("report files")
{
  const auto a = testing::make_asset(15);
  EvalOptions o;
  o.palate = testing::grid_plane(10, 40, 30.0, true);
  const auto r = evaluate(a, o);

  const auto s = *r.find_series("palate_penetration");
  const auto svg = series_svg(s, r.frame_rate_hz);
  std::size_t polylines = 0;
  for (auto pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) {
    ++polylines;
  }
  CHECK(polylines == 1);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);

  const auto csv = series_csv(s, r.frame_rate_hz);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 16);
  CHECK(csv.rfind("frame,time_s,value\n0,0,", 0) == 0);

  testing::TempDir d1, d2;
  generate_report(r, d1.path() / "out");
  generate_report(r, d2.path() / "out");
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(d1.path() / "out")) {
    ++files;
    const auto name = e.path().filename();
    CHECK_MESSAGE(read_file_bytes(e.path()) == read_file_bytes(d2.path() / "out" / name), name.string());
  }
  CHECK(files == 1 + 2 * r.series.size());

  const auto j = nlohmann::json::parse(read_file_text(d1.path() / "out" / "report.json"));
  CHECK(j["schema"] == "report-v1");
  CHECK(j["status"] == "pass");
  CHECK(j["gates"].size() == r.gates.size());
  CHECK(j["frame_count"] == 15);
}
