#include <map>
#include <set>

#include "json.hpp"

#include "artic/ema.hpp"
#include "artic/error.hpp"
#include "artic/synth.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace artic;
using namespace artic::synth;

namespace {

std::map<std::string, std::string> as_map(const std::vector<GeneratedFile>& files)
{
  std::map<std::string, std::string> out;
  for (const auto& f : files) {
    out[f.name] = f.bytes;
  }
  return out;
}

}  // namespace

TEST_CASE("scenario names")
{
  for (auto s : {Scenario::bind, Scenario::fk_roundtrip, Scenario::penetrate, Scenario::two_link}) {
    CHECK(scenario_from_string(to_string(s)) == s);
  }
  CHECK(to_string(Scenario::fk_roundtrip) == "fk-roundtrip");
  CHECK_THROWS_AS(scenario_from_string("tongue-twister"), InputError);
}

TEST_CASE("generation is deterministic per seed")
{
  for (auto s : {Scenario::bind, Scenario::fk_roundtrip, Scenario::penetrate, Scenario::two_link}) {
    const auto a = generate(s, {20, 5});
    const auto b = generate(s, {20, 5});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].name == b[i].name);
      CHECK(a[i].bytes == b[i].bytes);
    }
    CHECK(as_map(a).count("config.json") == 1);
  }
  CHECK(as_map(generate(Scenario::fk_roundtrip, {20, 5}))["ema.csv"] !=
        as_map(generate(Scenario::fk_roundtrip, {20, 6}))["ema.csv"]);
}

TEST_CASE("default frame counts")
{
  const std::map<Scenario, std::size_t> want = {
      {Scenario::bind, 10}, {Scenario::fk_roundtrip, 500}, {Scenario::penetrate, 30}, {Scenario::two_link, 1}};
  for (const auto& [s, n] : want) {
    const auto files = as_map(generate(s));
    CHECK(ema::parse_ema_csv(files.at("ema.csv")).frame_count() == n);
  }
  CHECK(ema::parse_ema_csv(as_map(generate(Scenario::bind, {7, 0})).at("ema.csv")).frame_count() == 7);
}

TEST_CASE("truth files")
{
  const auto fk = as_map(generate(Scenario::fk_roundtrip, {12, 1}));
  REQUIRE(fk.count("truth.json") == 1);
  const auto two = as_map(generate(Scenario::two_link));
  const auto t = nlohmann::json::parse(two.at("truth.json"));
  CHECK(t.contains("reach_limit_point"));
  CHECK(two.count("config_unreachable.json") == 1);
  CHECK(two.count("ema_unreachable.csv") == 1);
}

TEST_CASE("tube meshes")
{
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Vec3> line = {testing::random_vec(rng, 5)};
    for (int k = 0; k < 3; ++k) {
      line.push_back(line.back() + Vec3(8, 0, 0) + testing::random_vec(rng, 2));
    }
    const auto m = tube_mesh(line, 2.0, 1.5);
    CHECK(mesh::is_consistently_oriented(m));
    // Closed: every directed edge has its reverse.
    std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (const auto& t : m.triangles()) {
      for (int e = 0; e < 3; ++e) {
        edges.insert({t[e], t[(e + 1) % 3]});
      }
    }
    for (const auto& [a, b] : edges) {
      CHECK(edges.count({b, a}) == 1);
    }
    // Outward normals enclose a positive volume.
    double volume = 0;
    for (std::size_t i = 0; i < m.triangle_count(); ++i) {
      const auto c = m.corners(i);
      volume += c[0].dot(c[1].cross(c[2])) / 6.0;
    }
    CHECK(volume > 0.0);
    for (const Vec3& p : line) {
      double best = 1e9;
      for (const Vec3& v : m.vertices()) {
        best = std::min(best, (v - p).norm());
      }
      CHECK(best == 0.0);
    }
  }
  CHECK_THROWS_AS(tube_mesh(std::vector<Vec3>{{0, 0, 0}}, 1, 1), std::invalid_argument);
}

TEST_CASE("fixture motion starts at bind")
{
  const auto arm = fixture_armature();
  CHECK(arm.index_of("jaw").has_value());
  const auto poses = sinusoidal_poses(arm, 40, kFrameRateHz, 9);
  REQUIRE(poses.size() == 40);
  CHECK(poses[0] == rig::Pose::bind(arm));
  CHECK_FALSE(poses[10] == rig::Pose::bind(arm));
  CHECK(poses == sinusoidal_poses(arm, 40, kFrameRateHz, 9));
}

TEST_CASE("write_fixture writes every generated file")
{
  testing::TempDir dir;
  const auto paths = write_fixture(Scenario::bind, {}, dir / "nested");
  const auto files = generate(Scenario::bind);
  REQUIRE(paths.size() == files.size());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    CHECK(paths[i].filename() == files[i].name);
    CHECK(std::filesystem::file_size(paths[i]) == files[i].bytes.size());
  }
}
