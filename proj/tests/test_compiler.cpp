#include "json.hpp"

#include "artic/compiler.hpp"
#include "artic/error.hpp"
#include "artic/hash.hpp"
#include "artic/synth.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace artic;
using namespace artic::compiler;
using Json = nlohmann::ordered_json;

namespace {

Json fixture_config(const testing::TempDir& dir, synth::Scenario s, std::size_t frames = 0)
{
  synth::write_fixture(s, {frames, 3}, dir.path());
  return Json::parse(read_file_text(dir / "config.json"));
}

CompileResult compile_json(const testing::TempDir& dir, const Json& j, const CompileOptions& o = {})
{
  write_file_atomic(dir / "edited.json", j.dump(2));
  return compile_file(dir / "edited.json", o);
}

std::string phase_names(const LifecycleReport& r)
{
  std::string out;
  for (const auto& p : r.phases) {
    out += p.name + ":" + std::string(to_string(p.status)) + " ";
  }
  return out;
}

}  // namespace

TEST_CASE("config parsing")
{
  testing::TempDir dir;
  const auto j = fixture_config(dir, synth::Scenario::bind);
  const auto c = parse_config(j.dump(), dir.path());
  CHECK(c.meshes.tongue == "tongue.obj");
  CHECK(c.base_dir == dir.path());
  CHECK(c.coils.size() == 5);
  CHECK(c.rig.sigma_mm == 5.0);
  CHECK(c.ik.max_iterations == ik::IkConfig{}.max_iterations);
  CHECK(c.sha256 == sha256_hex(j.dump()));

  auto bad = j;
  bad["rig"]["sigma"] = 3;
  CHECK_THROWS_AS(parse_config(bad.dump(), dir.path()), InputError);
  bad = j;
  bad["schema"] = "config-v9";
  CHECK_THROWS_AS(parse_config(bad.dump(), dir.path()), UnsupportedVersionError);
  bad = j;
  bad["meshes"].erase("tongue");
  CHECK_THROWS_AS(parse_config(bad.dump(), dir.path()), InputError);
  bad = j;
  bad["ik"] = {{"tolerance_mm", -1}};
  CHECK_THROWS_AS(parse_config(bad.dump(), dir.path()), InputError);
  CHECK_THROWS_AS(parse_config("[1,2", dir.path()), InputError);
}

TEST_CASE("bind scenario compiles and packages")
{
  testing::TempDir dir;
  const auto j = fixture_config(dir, synth::Scenario::bind);
  const auto out = dir / "model.json";
  const auto r = compile_json(dir, j, {out, dir / "report"});
  INFO(phase_names(r.report));
  REQUIRE(r.report.ok());
  CHECK(r.report.exit_code() == 0);
  REQUIRE(r.report.phases.size() == 5);
  for (const auto& p : r.report.phases) {
    CHECK(p.status == PhaseStatus::passed);
  }
  CHECK(std::filesystem::exists(out));
  CHECK(r.report.asset_sha256 == sha256_hex(read_file_bytes(out)));
  CHECK(std::filesystem::exists(dir / "report" / "report.json"));
  CHECK(std::filesystem::exists(dir / "report" / "lifecycle.json"));

  const auto a = asset::read_asset(out);
  CHECK(a == *r.asset);
  CHECK(a.find_mesh("tongue")->weights.has_value());
  CHECK(a.find_mesh("mandible")->weights.has_value());
  CHECK_FALSE(a.find_mesh("maxilla")->weights.has_value());
  CHECK(a.armature.index_of("jaw").has_value());
  CHECK(asset::verify_inputs(a, dir.path()).empty());
  for (const auto& roles : {"mesh.tongue", "mesh.mandible", "mesh.maxilla", "ema"}) {
    CHECK(std::any_of(a.provenance.inputs.begin(), a.provenance.inputs.end(),
                      [&](const auto& in) { return in.role == roles; }));
  }

  // Editing an input after compiling is detected.
  write_file_atomic(dir / "tongue.obj", read_file_text(dir / "tongue.obj") + "# edited\n");
  CHECK(asset::verify_inputs(a, dir.path()).size() == 1);
}

TEST_CASE("a coil without a role fails validation and skips later phases")
{
  testing::TempDir dir;
  auto j = fixture_config(dir, synth::Scenario::bind);
  j["coils"].erase(j["coils"].begin() + 1);
  const auto out = dir / "model.json";
  // A stale asset from an earlier run must not survive a failed compile.
  write_file_atomic(out, std::string_view("{}"));
  const auto r = compile_json(dir, j, {out, dir / "report"});
  CHECK(r.report.exit_code() == 3);
  REQUIRE(r.report.failed_phase() != nullptr);
  CHECK(r.report.failed_phase()->name == "validate");
  CHECK(r.report.failed_phase()->diagnostic.find("T2") != std::string::npos);
  for (std::size_t i = 1; i < r.report.phases.size(); ++i) {
    CHECK(r.report.phases[i].status == PhaseStatus::skipped);
  }
  CHECK_FALSE(std::filesystem::exists(out));
  const auto lj = Json::parse(read_file_text(dir / "report" / "lifecycle.json"));
  CHECK(lj["phases"][0]["status"] == "failed");
  CHECK(lj["phases"][0]["failure"] == "input");
}

TEST_CASE("a missing mesh is named in the diagnostic")
{
  testing::TempDir dir;
  auto j = fixture_config(dir, synth::Scenario::bind);
  j["meshes"]["mandible"] = "nowhere/jaw.obj";
  const auto r = compile_json(dir, j);
  CHECK(r.report.exit_code() == 3);
  CHECK(r.report.failed_phase()->diagnostic.find("jaw.obj") != std::string::npos);

  const auto missing = compile_file(dir / "no-config.json");
  CHECK(missing.report.exit_code() == 3);
  CHECK(missing.report.failed_phase()->name == "validate");
}

TEST_CASE("fk-roundtrip compiles deterministically")
{
  testing::TempDir dir;
  const auto j = fixture_config(dir, synth::Scenario::fk_roundtrip, 60);
  const auto r1 = compile_json(dir, j, {dir / "a.json", dir / "ra"});
  const auto r2 = compile_json(dir, j, {dir / "b.json", dir / "rb"});
  INFO(phase_names(r1.report));
  REQUIRE(r1.report.ok());
  CHECK(read_file_bytes(dir / "a.bin") == read_file_bytes(dir / "b.bin"));
  // Manifests differ only in their buffer uri.
  auto ma = Json::parse(read_file_text(dir / "a.json"));
  auto mb = Json::parse(read_file_text(dir / "b.json"));
  ma["buffer"].erase("uri");
  mb["buffer"].erase("uri");
  CHECK(ma == mb);
  CHECK(read_file_text(dir / "ra" / "report.json") == read_file_text(dir / "rb" / "report.json"));
  CHECK(read_file_text(dir / "ra" / "lifecycle.json") != "");
  const auto* res = r1.evaluation->find_series("ik_residual");
  REQUIRE(res != nullptr);
  CHECK(res->summary.max <= parse_config(j.dump(), dir.path()).ik.tolerance_mm + 1e-12);
}

TEST_CASE("penetration gate fails the evaluate phase without packaging")
{
  testing::TempDir dir;
  const auto j = fixture_config(dir, synth::Scenario::penetrate);
  const auto out = dir / "model.json";
  const auto r = compile_json(dir, j, {out, dir / "report"});
  CHECK(r.report.exit_code() == 2);
  REQUIRE(r.report.failed_phase() != nullptr);
  CHECK(r.report.failed_phase()->name == "evaluate");
  CHECK(r.report.failed_phase()->failure == FailureKind::gate);
  CHECK(r.report.phases.back().status == PhaseStatus::skipped);
  CHECK_FALSE(std::filesystem::exists(out));
  CHECK_FALSE(std::filesystem::exists(dir / "model.bin"));
  // The report still documents the failure.
  const auto rj = Json::parse(read_file_text(dir / "report" / "report.json"));
  CHECK(rj["status"] == "fail");
}

TEST_CASE("pos-format recordings compile like csv ones")
{
  testing::TempDir dir;
  auto j = fixture_config(dir, synth::Scenario::bind);
  const auto traj = load_trajectory(parse_config(j.dump(), dir.path()));
  write_file_atomic(dir / "ema.pos", ema::write_ag500_pos(traj));
  j["ema"] = {{"path", "ema.pos"}, {"format", "pos"}, {"channels", traj.coil_count()}, {"rate_hz", traj.sample_rate_hz},
              {"channel_names", traj.coil_ids}};
  const auto r = compile_json(dir, j);
  INFO(phase_names(r.report));
  CHECK(r.report.ok());
  CHECK(r.asset->clip.frame_count() == traj.frame_count());
}

TEST_CASE("hygiene failures are input errors")
{
  testing::TempDir dir;
  auto j = fixture_config(dir, synth::Scenario::bind);
  auto traj = load_trajectory(parse_config(j.dump(), dir.path()));
  traj.frames[2][0].rms_error = 0.5;
  write_file_atomic(dir / "ema.csv", ema::write_ema_csv(traj));
  j["hygiene"] = {{"max_rms_mm", 0.1}, {"max_gap_frames", 0}};
  const auto r = compile_json(dir, j);
  CHECK(r.report.exit_code() == 3);
  CHECK(r.report.failed_phase()->name == "validate");
}
