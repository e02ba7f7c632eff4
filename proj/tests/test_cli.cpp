#include <sstream>

#include "json.hpp"

#include "artic/asset.hpp"
#include "artic/compiler.hpp"
#include "artic/ema.hpp"
#include "artic/hash.hpp"
#include "cli.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace artic;

namespace {

struct Run
{
  int code = -1;
  std::string out;
  std::string err;
};

Run articc(const std::vector<std::string>& args)
{
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string p(const std::filesystem::path& path) { return path.string(); }

}  // namespace

TEST_CASE("usage errors")
{
  CHECK(articc({"--help"}).code == 0);
  CHECK(articc({"compile", "--help"}).code == 0);
  const auto v = articc({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find(std::string(compiler::tool_version())) != std::string::npos);
  CHECK(articc({}).code == 3);
  CHECK(articc({"compile", "x.json", "--frobnicate"}).code == 3);
  CHECK(articc({"launch"}).code == 3);
  testing::TempDir dir;
  const auto r = articc({"synth", "vocal-folds", "--out-dir", p(dir.path())});
  CHECK(r.code == 3);
  CHECK(r.err.find("vocal-folds") != std::string::npos);
}

TEST_CASE("synth output is deterministic")
{
  testing::TempDir a, b;
  REQUIRE(articc({"synth", "fk-roundtrip", "--out-dir", p(a.path()), "--frames", "20", "--seed", "4"}).code == 0);
  REQUIRE(articc({"synth", "fk-roundtrip", "--out-dir", p(b.path()), "--frames", "20", "--seed", "4"}).code == 0);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(a.path())) {
    ++files;
    CHECK(read_file_bytes(e.path()) == read_file_bytes(b.path() / e.path().filename()));
  }
  CHECK(files >= 4);
}

TEST_CASE("compile, inspect, dump, and evaluate")
{
  testing::TempDir dir;
  REQUIRE(articc({"synth", "bind", "--out-dir", p(dir.path())}).code == 0);
  const auto model = dir / "model.json";
  const auto c = articc({"compile", p(dir / "config.json"), "--out", p(model), "--report-dir", p(dir / "report")});
  INFO(c.err);
  REQUIRE(c.code == 0);
  CHECK(c.err.find("package") != std::string::npos);

  const auto ins = articc({"inspect", p(model), "--verify-inputs", p(dir.path())});
  CHECK(ins.code == 0);
  CHECK(ins.out.find("asset-v1") != std::string::npos);
  CHECK(ins.out.find("tongue") != std::string::npos);

  SUBCASE("dump csv")
  {
    REQUIRE(articc({"dump", p(model), "--format", "csv", "--out", p(dir / "t.csv")}).code == 0);
    const auto t = ema::parse_ema_csv(read_file_text(dir / "t.csv"));
    CHECK(t.frame_count() == 10);
    CHECK(t.coil_ids == std::vector<std::string>{"T1", "T2", "T3", "J"});
  }
  SUBCASE("dump pos")
  {
    REQUIRE(articc({"dump", p(model), "--format", "pos", "--out", p(dir / "t.pos")}).code == 0);
    CHECK(std::filesystem::file_size(dir / "t.pos") == 10 * 4 * 28);
    CHECK(articc({"dump", p(model), "--format", "c3d", "--out", p(dir / "t.c3d")}).code == 3);
  }
  SUBCASE("evaluate")
  {
    const auto e = articc({"evaluate", p(model), "--palate", p(dir / "palate.obj"), "--reference-mesh",
                           p(dir / "tongue.obj"), "--report-dir", p(dir / "eval")});
    INFO(e.err);
    CHECK(e.code == 0);
    const auto j = nlohmann::json::parse(read_file_text(dir / "eval" / "report.json"));
    CHECK(j["gates"].size() == 3);
    CHECK(articc({"evaluate", p(model), "--distance-mm", "-1"}).code == 3);
    CHECK(articc({"evaluate", p(model), "--palate", p(dir / "palate.obj"), "--penetration-mm", "1e-12",
                  "--contact-eps-mm", "0.5"})
              .code == 0);
    CHECK(articc({"evaluate", p(model), "--distance-mm", "1e-300"}).code == 2);
  }
  SUBCASE("tampering")
  {
    write_file_atomic(dir / "tongue.obj", read_file_text(dir / "tongue.obj") + "# changed\n");
    const auto r = articc({"inspect", p(model), "--verify-inputs", p(dir.path())});
    CHECK(r.code == 3);
    CHECK(r.out.find("input changed: tongue.obj") != std::string::npos);
    auto bytes = read_file_bytes(asset::buffer_path_for(model));
    bytes[bytes.size() / 2] ^= 1;
    write_file_atomic(asset::buffer_path_for(model), bytes);
    CHECK(articc({"inspect", p(model)}).code == 3);
  }
}

TEST_CASE("compile exit codes follow the failing phase")
{
  testing::TempDir dir;
  REQUIRE(articc({"synth", "penetrate", "--out-dir", p(dir.path())}).code == 0);
  const auto gate = articc({"compile", p(dir / "config.json"), "--out", p(dir / "m.json")});
  CHECK(gate.code == 2);
  CHECK(gate.err.find("penetration") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "m.json"));

  CHECK(articc({"compile", p(dir / "missing.json")}).code == 3);
  write_file_atomic(dir / "broken.json", std::string_view("{\"schema\": \"config-v1\""));
  CHECK(articc({"compile", p(dir / "broken.json")}).code == 3);
}
