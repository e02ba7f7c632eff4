#include <algorithm>

#include "json.hpp"

#include "artic/asset.hpp"
#include "artic/error.hpp"
#include "artic/hash.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "support.hpp"

using namespace artic;
using namespace artic::asset;

namespace {

std::string error_of(const std::string& manifest, const std::vector<std::uint8_t>& buffer)
{
  try {
    deserialize_asset(manifest, buffer);
  } catch (const IntegrityError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("serialize/deserialize is lossless")
{
  const auto a = testing::make_asset(12);
  CHECK_NOTHROW(check_asset(a));
  const auto s = serialize_asset(a, "model.bin");
  CHECK(deserialize_asset(s.manifest, s.buffer) == a);
  // Same asset, same bytes.
  const auto again = serialize_asset(a, "model.bin");
  CHECK(again.manifest == s.manifest);
  CHECK(again.buffer == s.buffer);
}

TEST_CASE("minimal asset: one static mesh, one bone, one frame")
{
  AnimatedModelAsset a;
  rig::Bone b{"root", std::nullopt, {}, 2.0};
  a.armature = rig::Armature({b});
  a.meshes.push_back({"tongue", mesh::TriMesh({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}}), std::nullopt});
  a.clip.poses = {rig::Pose::bind(a.armature)};
  a.clip.residuals_mm = {0};
  a.clip.iterations = {0};
  a.clip.held = {0};
  a.target_positions = {{}};
  a.target_valid = {{}};
  a.provenance = {std::string(64, 'c'), {}, "test"};
  const auto s = serialize_asset(a, "x.bin");
  CHECK(deserialize_asset(s.manifest, s.buffer) == a);
}

TEST_CASE("file round trip and buffer naming")
{
  testing::TempDir dir;
  const auto a = testing::make_asset(5);
  const auto path = dir / "model.asset.json";
  write_asset(a, path);
  CHECK(buffer_path_for(path) == dir / "model.asset.bin");
  CHECK(std::filesystem::exists(buffer_path_for(path)));
  CHECK(read_asset(path) == a);
}

TEST_CASE("a flipped byte is reported against its view")
{
  const auto a = testing::make_asset(4);
  const auto s = serialize_asset(a, "model.bin");
  const auto views = manifest_views(s.manifest);
  REQUIRE_FALSE(views.empty());
  for (const auto& v : views) {
    if (v.length == 0) {
      continue;
    }
    auto bad = s.buffer;
    bad[v.offset + v.length / 2] ^= 0x5a;
    const auto msg = error_of(s.manifest, bad);
    CHECK_MESSAGE(msg.find("'" + v.name + "'") != std::string::npos, msg);
  }
  auto short_buffer = s.buffer;
  short_buffer.pop_back();
  CHECK_THROWS_AS(deserialize_asset(s.manifest, short_buffer), IntegrityError);
}

TEST_CASE("schema mismatch and malformed manifests")
{
  const auto s = serialize_asset(testing::make_asset(2), "model.bin");
  auto j = nlohmann::ordered_json::parse(s.manifest);
  j["schema"] = "asset-v2";
  CHECK_THROWS_AS(deserialize_asset(j.dump(), s.buffer), UnsupportedVersionError);
  CHECK_THROWS_AS(deserialize_asset("{not json", s.buffer), InputError);
}

TEST_CASE("views tile the buffer and carry correct hashes")
{
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = testing::make_asset(1 + rng() % 20, rng());
    const auto s = serialize_asset(a, "m.bin");
    auto views = manifest_views(s.manifest);
    std::sort(views.begin(), views.end(), [](const auto& x, const auto& y) { return x.offset < y.offset; });
    std::uint64_t cursor = 0;
    for (const auto& v : views) {
      CHECK(v.offset == cursor);
      std::uint64_t count = 1;
      for (auto d : v.shape) {
        count *= d;
      }
      const std::uint64_t width = v.dtype == "f64" ? 8 : v.dtype == "u32" ? 4 : 1;
      CHECK(v.length == count * width);
      CHECK(v.sha256 == sha256_hex(std::span(s.buffer).subspan(v.offset, v.length)));
      cursor += v.length;
    }
    CHECK(cursor == s.buffer.size());
    const auto j = nlohmann::json::parse(s.manifest);
    CHECK(j["buffer"]["byte_length"].get<std::uint64_t>() == s.buffer.size());
    CHECK(j["buffer"]["sha256"].get<std::string>() == sha256_hex(s.buffer));
  }
}

TEST_CASE("check_asset rejects inconsistent assets")
{
  auto a = testing::make_asset(3);
  a.target_positions.pop_back();
  CHECK_THROWS_AS(check_asset(a), InputError);

  a = testing::make_asset(3);
  a.coils[0].mesh = "velum";
  CHECK_THROWS_AS(check_asset(a), InputError);

  a = testing::make_asset(3);
  a.provenance.config_sha256.clear();
  CHECK_THROWS_AS(check_asset(a), InputError);

  a = testing::make_asset(3);
  a.clip.held.pop_back();
  CHECK_THROWS_AS(serialize_asset(a, "m.bin"), InputError);
}

TEST_CASE("posed meshes")
{
  const auto a = testing::make_asset(8);
  // Frame 0 of the fixture motion is the bind pose.
  const auto& tongue = a.find_mesh("tongue")->mesh;
  const auto p0 = posed_mesh(a, "tongue", 0);
  for (std::size_t i = 0; i < tongue.vertex_count(); ++i) {
    CHECK((p0.vertices()[i] - tongue.vertices()[i]).norm() < 1e-9);
  }
  CHECK(posed_mesh(a, "maxilla", 5) == a.find_mesh("maxilla")->mesh);
  const auto p5 = posed_mesh(a, "tongue", 5);
  const auto g = rig::forward_kinematics(a.armature, a.clip.poses[5]);
  const auto want = rig::skin_vertices(tongue.vertices(), *a.find_mesh("tongue")->weights,
                                       a.armature.bind_globals(), g);
  CHECK(p5.vertices() == want);
  CHECK_THROWS(posed_mesh(a, "tongue", 8));
  CHECK_THROWS(posed_mesh(a, "velum", 0));
}

TEST_CASE("verify_inputs reports changed and missing files")
{
  testing::TempDir dir;
  write_file_atomic(dir / "tongue.obj", std::string_view("v 0 0 0\n"));
  auto a = testing::make_asset(2);
  a.provenance.inputs = {{"mesh.tongue", "tongue.obj", sha256_hex(std::string_view("v 0 0 0\n"))},
                         {"ema", "gone.csv", std::string(64, 'd')}};
  const auto bad = verify_inputs(a, dir.path());
  REQUIRE(bad.size() == 1);
  CHECK(bad[0].find("gone.csv") != std::string::npos);
  write_file_atomic(dir / "tongue.obj", std::string_view("v 0 0 1\n"));
  CHECK(verify_inputs(a, dir.path()).size() == 2);
}
