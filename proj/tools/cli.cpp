#include "cli.hpp"

#include <cstdio>
#include <exception>
#include <optional>

#include "CLI11.hpp"
#include "artic/asset.hpp"
#include "artic/compiler.hpp"
#include "artic/ema.hpp"
#include "artic/error.hpp"
#include "artic/eval.hpp"
#include "artic/hash.hpp"
#include "artic/ik.hpp"
#include "artic/mesh.hpp"
#include "artic/synth.hpp"

namespace artic::cli {

namespace {

constexpr int kOk = 0;
constexpr int kGate = 2;
constexpr int kInput = 3;
constexpr int kInternal = 4;

std::string fmt(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

int cmd_compile(const std::string& config, const std::string& out_path, const std::string& report_dir,
                std::ostream& err)
{
  compiler::CompileOptions opt;
  if (!out_path.empty()) {
    opt.asset_out = out_path;
  }
  if (!report_dir.empty()) {
    opt.report_dir = report_dir;
  }
  const auto result = compiler::compile_file(config, opt);
  for (const auto& p : result.report.phases) {
    char line[64];
    std::snprintf(line, sizeof line, "%-9s %-8s %8.3fs", p.name.c_str(), std::string(compiler::to_string(p.status)).c_str(),
                  p.seconds);
    err << line;
    if (!p.diagnostic.empty()) {
      err << "  " << p.diagnostic;
    }
    err << "\n";
  }
  for (const auto& g : result.report.gates) {
    err << "gate " << g.name << ": " << fmt(g.measured) << " <= " << fmt(g.threshold) << " "
        << (g.pass ? "pass" : "FAIL") << "\n";
  }
  return result.report.exit_code();
}

int cmd_dump(const std::string& asset_path, const std::string& format, const std::string& out_path)
{
  const auto a = asset::read_asset(asset_path);
  const auto traj = ik::dump_targets(a.armature, a.clip, a.targets, a.clip.frame_rate_hz);
  if (format == "csv") {
    write_file_atomic(out_path, ema::write_ema_csv(traj));
  } else {
    const auto bytes = ema::write_ag500_pos(traj);
    write_file_atomic(out_path, std::span(bytes));
  }
  return kOk;
}

struct EvaluateArgs
{
  std::string asset;
  std::string palate;
  std::string reference;
  std::size_t frame = 0;
  std::string report_dir;
  eval::EvalOptions options;
};

mesh::TriMesh load_mesh(const std::string& path, const std::string& role, std::vector<asset::InputHash>& inputs)
{
  const auto bytes = read_file_bytes(path);
  inputs.push_back({role, path, sha256_hex(std::span(bytes))});
  try {
    return mesh::parse_obj(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  } catch (const InputError& e) {
    throw InputError("'" + path + "': " + e.what());
  }
}

int cmd_evaluate(EvaluateArgs args, std::ostream& err)
{
  const auto a = asset::read_asset(args.asset);
  if (!args.palate.empty()) {
    args.options.palate = load_mesh(args.palate, "mesh.palate", args.options.extra_inputs);
  }
  if (!args.reference.empty()) {
    args.options.reference = load_mesh(args.reference, "mesh.reference", args.options.extra_inputs);
    args.options.reference_frame = args.frame;
  }
  const auto report = eval::evaluate(a, args.options);
  if (!args.report_dir.empty()) {
    eval::generate_report(report, args.report_dir);
  }
  for (const auto& s : report.series) {
    err << s.name << ": max " << fmt(s.summary.max) << " " << s.unit << "\n";
  }
  for (const auto& g : report.gates) {
    err << "gate " << g.name << ": " << fmt(g.measured) << " <= " << fmt(g.threshold) << " "
        << (g.pass ? "pass" : "FAIL") << "\n";
  }
  return report.passed() ? kOk : kGate;
}

int cmd_inspect(const std::string& asset_path, const std::string& verify_dir, std::ostream& out)
{
  const auto a = asset::read_asset(asset_path);
  out << "schema       " << asset::kAssetSchema << "\n";
  out << "tool_version " << a.provenance.tool_version << "\n";
  out << "config       " << a.provenance.config_sha256 << "\n";
  out << "frames       " << a.clip.frame_count() << " @ " << fmt(a.clip.frame_rate_hz) << " Hz\n";
  double worst = 0.0;
  std::size_t held = 0;
  for (std::size_t f = 0; f < a.clip.frame_count(); ++f) {
    worst = std::max(worst, a.clip.residuals_mm[f]);
    held += a.clip.held[f] ? 1 : 0;
  }
  out << "residual     max " << fmt(worst) << " mm, " << held << " held frames\n";
  out << "bones        " << a.armature.size() << "\n";
  for (const auto& b : a.armature.bones()) {
    out << "  " << b.id << " parent=" << (b.parent ? a.armature.bone(*b.parent).id : "-")
        << " length=" << fmt(b.length) << "\n";
  }
  out << "meshes       " << a.meshes.size() << "\n";
  for (const auto& m : a.meshes) {
    out << "  " << m.name << " " << m.mesh.vertex_count() << " vertices, " << m.mesh.triangle_count()
        << " triangles" << (m.weights ? ", skinned" : ", static") << "\n";
  }
  out << "coils        " << a.coils.size() << "\n";
  for (const auto& c : a.coils) {
    out << "  " << c.coil_id << " " << ema::to_string(c.articulator) << " mesh=" << c.mesh.value_or("-") << "\n";
  }
  out << "inputs\n";
  for (const auto& in : a.provenance.inputs) {
    out << "  " << in.role << " " << in.path << " " << in.sha256 << "\n";
  }
  if (!verify_dir.empty()) {
    const auto bad = asset::verify_inputs(a, verify_dir);
    for (const auto& b : bad) {
      out << "input changed: " << b << "\n";
    }
    if (!bad.empty()) {
      throw IntegrityError(std::to_string(bad.size()) + " input(s) no longer match the asset provenance");
    }
    out << "inputs verified\n";
  }
  return kOk;
}

int cmd_synth(const std::string& scenario, const std::string& out_dir, std::size_t frames, std::uint64_t seed,
              std::ostream& err)
{
  const auto s = synth::scenario_from_string(scenario);
  const auto files = synth::write_fixture(s, {frames, seed}, out_dir);
  for (const auto& f : files) {
    err << "wrote " << f.string() << "\n";
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{"Compile EMA-driven articulatory animation assets and evaluate them.", "articc"};
  app.set_version_flag("--version", std::string(compiler::tool_version()));
  app.require_subcommand(1);

  std::string config;
  std::string asset_out;
  std::string report_dir;
  auto* compile = app.add_subcommand("compile", "Run the compiler lifecycle on a config file");
  compile->add_option("config", config, "config-v1 JSON file")->required();
  compile->add_option("--out", asset_out, "Asset manifest to write (buffer goes next to it as .bin)");
  compile->add_option("--report-dir", report_dir, "Directory for lifecycle.json and the evaluation report");

  std::string asset_path;
  std::string format = "csv";
  std::string dump_out;
  auto* dump = app.add_subcommand("dump", "Write the solved IK targets as an EMA file");
  dump->add_option("asset", asset_path, "Asset manifest")->required();
  dump->add_option("--format", format, "csv or pos")->check(CLI::IsMember({"csv", "pos"}));
  dump->add_option("--out", dump_out, "Output file")->required();

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate an asset against the gates");
  evaluate->add_option("asset", ev.asset, "Asset manifest")->required();
  evaluate->add_option("--palate", ev.palate, "Palate OBJ (normals facing the tongue)");
  evaluate->add_option("--reference-mesh", ev.reference, "Reference tongue OBJ for pose similarity");
  evaluate->add_option("--frame", ev.frame, "Clip frame compared with the reference mesh");
  evaluate->add_option("--report-dir", ev.report_dir, "Directory for report.json, CSV and SVG files");
  evaluate->add_option("--distance-mm", ev.options.distance_mm, "Target-to-surface gate")->capture_default_str();
  evaluate->add_option("--penetration-mm", ev.options.penetration_mm, "Penetration gate")->capture_default_str();
  evaluate->add_option("--contact-eps-mm", ev.options.contact_eps_mm, "Contact distance")->capture_default_str();
  evaluate->add_option("--similarity-mm", ev.options.similarity_mm, "Pose similarity gate (Hausdorff)")
      ->capture_default_str();
  evaluate->add_option("--samples-per-triangle", ev.options.samples_per_triangle, "Surface samples per triangle")
      ->capture_default_str();
  evaluate->add_option("--seed", ev.options.seed, "Sampling seed")->capture_default_str();
  evaluate->add_flag("--sampled-penetration", ev.options.sampled_penetration,
                     "Also test interior surface samples for penetration");

  std::string verify_dir;
  auto* inspect = app.add_subcommand("inspect", "Print an asset summary after checking its integrity");
  inspect->add_option("asset", asset_path, "Asset manifest")->required();
  inspect->add_option("--verify-inputs", verify_dir, "Check recorded input hashes against files under this directory");

  std::string scenario;
  std::string out_dir;
  std::size_t frames = 0;
  std::uint64_t seed = 0;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic fixture");
  synth->add_option("scenario", scenario, "bind, fk-roundtrip, penetrate or two-link")->required();
  synth->add_option("--out-dir", out_dir, "Output directory")->required();
  synth->add_option("--frames", frames, "Frame count (0 = scenario default)");
  synth->add_option("--seed", seed, "Motion seed")->capture_default_str();

  std::vector<std::string> argv_store{"articc"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) {
    argv.push_back(a.c_str());
  }
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kInput;
  }

  try {
    if (*compile) {
      return cmd_compile(config, asset_out, report_dir, err);
    }
    if (*dump) {
      return cmd_dump(asset_path, format, dump_out);
    }
    if (*evaluate) {
      return cmd_evaluate(ev, err);
    }
    if (*inspect) {
      return cmd_inspect(asset_path, verify_dir, out);
    }
    if (*synth) {
      return cmd_synth(scenario, out_dir, frames, seed, err);
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}

}  // namespace artic::cli
