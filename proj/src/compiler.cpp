#include "artic/compiler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <set>

#include "artic/error.hpp"
#include "artic/hash.hpp"
#include "artic/mesh.hpp"
#include "artic/rig.hpp"
#include "json.hpp"

#ifndef ARTIC_VERSION
#define ARTIC_VERSION "0.0.0"
#endif

namespace artic::compiler {

using Json = nlohmann::ordered_json;

namespace {

constexpr const char* kPhaseNames[] = {"validate", "rig", "solve", "evaluate", "package"};

/// Typed access to one JSON object that remembers which keys were read, so
/// leftovers (typos) can be reported.
class Section
{
public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path))
  {
    if (!j.is_object()) {
      throw InputError("config: '" + path_ + "' must be an object");
    }
  }

  bool has(const std::string& key)
  {
    used_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const Json& raw(const std::string& key)
  {
    used_.insert(key);
    if (!j_.contains(key)) {
      throw InputError("config: missing '" + where(key) + "'");
    }
    return j_.at(key);
  }

  Section section(const std::string& key) { return Section(raw(key), where(key)); }

  std::string str(const std::string& key)
  {
    const Json& v = raw(key);
    if (!v.is_string()) {
      throw InputError("config: '" + where(key) + "' must be a string");
    }
    return v.get<std::string>();
  }

  std::string str_or(const std::string& key, std::string fallback) { return has(key) ? str(key) : fallback; }

  double num(const std::string& key)
  {
    const Json& v = raw(key);
    if (!v.is_number()) {
      throw InputError("config: '" + where(key) + "' must be a number");
    }
    return v.get<double>();
  }

  double num_or(const std::string& key, double fallback) { return has(key) ? num(key) : fallback; }

  std::uint64_t count_or(const std::string& key, std::uint64_t fallback)
  {
    if (!has(key)) {
      return fallback;
    }
    const Json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw InputError("config: '" + where(key) + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool flag_or(const std::string& key, bool fallback)
  {
    if (!has(key)) {
      return fallback;
    }
    const Json& v = raw(key);
    if (!v.is_boolean()) {
      throw InputError("config: '" + where(key) + "' must be true or false");
    }
    return v.get<bool>();
  }

  Vec3 vec(const std::string& key)
  {
    const Json& v = raw(key);
    if (!v.is_array() || v.size() != 3 || !std::all_of(v.begin(), v.end(), [](const Json& x) { return x.is_number(); })) {
      throw InputError("config: '" + where(key) + "' must be [x, y, z]");
    }
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
  }

  void finish() const
  {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) {
        throw InputError("config: unknown key '" + where(k) + "'");
      }
    }
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void require_positive(double v, const std::string& name)
{
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InputError("config: '" + name + "' must be a positive number");
  }
}

std::filesystem::path resolve(const CompileConfig& c, const std::string& p)
{
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : c.base_dir / path;
}

struct LoadedInput
{
  std::vector<std::uint8_t> bytes;
  asset::InputHash hash;
};

LoadedInput load_input(const CompileConfig& c, const std::string& role, const std::string& path)
{
  LoadedInput in;
  in.bytes = read_file_bytes(resolve(c, path));
  in.hash = {role, path, sha256_hex(std::span(in.bytes))};
  return in;
}

mesh::TriMesh parse_mesh_bytes(const std::vector<std::uint8_t>& bytes, const std::string& path)
{
  try {
    return mesh::parse_obj(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  } catch (const ParseError& e) {
    throw ParseError(e.line(), "'" + path + "': " + e.what());
  } catch (const InputError& e) {
    throw InputError("'" + path + "': " + e.what());
  }
}

ema::EmaTrajectory parse_trajectory(const CompileConfig& c, const std::vector<std::uint8_t>& bytes)
{
  const auto& src = c.ema;
  try {
    if (src.format == "csv") {
      return ema::parse_ema_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    }
    auto traj = ema::parse_ag500_pos(bytes, src.channels, src.rate_hz);
    if (!src.channel_names.empty()) {
      traj.coil_ids = src.channel_names;
    }
    return traj;
  } catch (const ParseError& e) {
    throw ParseError(e.line(), "'" + src.path + "': " + e.what());
  } catch (const InputError& e) {
    throw InputError("'" + src.path + "': " + e.what());
  }
}

std::string mesh_for(ema::Articulator a, const MeshPaths& m)
{
  switch (a) {
    case ema::Articulator::tongue:
      return "tongue";
    case ema::Articulator::jaw:
      return "mandible";
    case ema::Articulator::reference:
      return m.maxilla.empty() ? "" : "maxilla";
    case ema::Articulator::other:
      break;
  }
  return "";
}

class PhaseFailure : public std::runtime_error
{
public:
  PhaseFailure(FailureKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  FailureKind kind() const { return kind_; }

private:
  FailureKind kind_;
};

/// Everything the phases hand to each other.
struct Work
{
  std::map<std::string, mesh::TriMesh> meshes;
  std::optional<mesh::TriMesh> palate;
  std::optional<mesh::TriMesh> reference;
  std::vector<asset::InputHash> inputs;
  std::vector<asset::InputHash> eval_inputs;
  ema::EmaTrajectory traj;  // cleaned, EMA space

  rig::Armature armature;
  std::map<std::string, rig::SkinWeights> weights;
  std::vector<asset::CoilMarker> coils;

  ik::AttachedTargets targets;
  ik::AnimationClip clip;

  asset::AnimatedModelAsset asset;
  eval::EvalReport evaluation;
};

void phase_validate(const CompileConfig& c, Work& w)
{
  const auto load_mesh = [&](const std::string& role, const std::string& path) {
    auto in = load_input(c, role, path);
    auto m = parse_mesh_bytes(in.bytes, path);
    return std::pair(std::move(m), std::move(in.hash));
  };
  {
    auto [m, h] = load_mesh("mesh.tongue", c.meshes.tongue);
    w.meshes.emplace("tongue", std::move(m));
    w.inputs.push_back(std::move(h));
  }
  if (!c.meshes.mandible.empty()) {
    auto [m, h] = load_mesh("mesh.mandible", c.meshes.mandible);
    w.meshes.emplace("mandible", std::move(m));
    w.inputs.push_back(std::move(h));
  }
  if (!c.meshes.maxilla.empty()) {
    auto [m, h] = load_mesh("mesh.maxilla", c.meshes.maxilla);
    w.meshes.emplace("maxilla", std::move(m));
    w.inputs.push_back(std::move(h));
  }
  if (!c.meshes.palate.empty()) {
    auto [m, h] = load_mesh("mesh.palate", c.meshes.palate);
    if (!mesh::is_consistently_oriented(m)) {
      throw InputError("palate mesh '" + c.meshes.palate + "' is not consistently oriented");
    }
    w.palate = std::move(m);
    w.eval_inputs.push_back(std::move(h));
  }
  if (!c.evaluation.reference_mesh.empty()) {
    auto [m, h] = load_mesh("mesh.reference", c.evaluation.reference_mesh);
    w.reference = std::move(m);
    w.eval_inputs.push_back(std::move(h));
  }

  auto ema_in = load_input(c, "ema", c.ema.path);
  ema::EmaTrajectory traj = parse_trajectory(c, ema_in.bytes);
  w.inputs.push_back(std::move(ema_in.hash));

  std::vector<ema::CoilRole> roles;
  for (const auto& cc : c.coils) {
    roles.push_back(cc.role);
  }
  ema::check_roles(roles);
  for (const auto& id : traj.coil_ids) {
    if (std::none_of(roles.begin(), roles.end(), [&](const ema::CoilRole& r) { return r.coil_id == id; })) {
      throw InputError("coil '" + id + "' in '" + c.ema.path + "' is missing from the role map");
    }
  }
  for (const auto& r : roles) {
    if (!traj.coil_index(r.coil_id)) {
      throw InputError("coil '" + r.coil_id + "' has a role but is missing from '" + c.ema.path + "'");
    }
    if (r.articulator == ema::Articulator::jaw) {
      if (c.meshes.mandible.empty()) {
        throw InputError("jaw coil '" + r.coil_id + "' needs a mandible mesh");
      }
      if (!c.rig.hinge_point) {
        throw InputError("jaw coil '" + r.coil_id + "' needs rig.hinge_point");
      }
    }
  }

  const auto summary = ema::validate(traj, c.hygiene.max_rms_mm, c.hygiene.max_gap_frames);
  if (!summary.pass) {
    const auto worst = std::max_element(summary.runs.begin(), summary.runs.end(),
                                        [](const auto& a, const auto& b) { return a.length < b.length; });
    throw InputError("coil '" + traj.coil_ids[worst->coil] + "' drops out for " + std::to_string(worst->length) +
                     " frames from frame " + std::to_string(worst->first_frame) + " (max_gap_frames " +
                     std::to_string(c.hygiene.max_gap_frames) + ")");
  }
  traj = ema::apply_flags(traj, summary);
  if (c.hygiene.interpolate) {
    traj = ema::interpolate_gaps(traj, c.hygiene.max_gap_frames);
  }
  if (c.hygiene.smooth_window > 1) {
    traj = ema::smooth(traj, c.hygiene.smooth_window);
  }
  if (c.hygiene.resample_hz) {
    traj = ema::resample(traj, *c.hygiene.resample_hz);
  }
  w.traj = std::move(traj);
}

Vec3 default_bind(const CompileConfig& c, const ema::EmaTrajectory& traj, const std::string& id)
{
  const std::size_t col = *traj.coil_index(id);
  for (const auto& frame : traj.frames) {
    if (frame[col].valid) {
      return c.registration.apply(frame[col].position);
    }
  }
  throw InputError("coil '" + id + "' has no valid sample to take a bind position from");
}

void phase_rig(const CompileConfig& c, Work& w)
{
  std::vector<const CoilConfig*> tongue;
  const CoilConfig* jaw = nullptr;
  for (const auto& cc : c.coils) {
    if (cc.role.articulator == ema::Articulator::tongue) {
      tongue.push_back(&cc);
    } else if (cc.role.articulator == ema::Articulator::jaw) {
      if (jaw) {
        throw InputError("only one jaw coil is supported (found '" + jaw->role.coil_id + "' and '" +
                         cc.role.coil_id + "')");
      }
      jaw = &cc;
    }
  }
  std::sort(tongue.begin(), tongue.end(),
            [](const CoilConfig* a, const CoilConfig* b) { return *a->role.chain_index < *b->role.chain_index; });
  if (tongue.size() < 2) {
    throw InputError("the tongue chain needs at least 2 tongue coils");
  }

  for (const auto& cc : c.coils) {
    asset::CoilMarker m;
    m.coil_id = cc.role.coil_id;
    m.articulator = cc.role.articulator;
    m.chain_index = cc.role.chain_index;
    m.bind_position = cc.bind ? *cc.bind : default_bind(c, w.traj, cc.role.coil_id);
    const std::string mesh = mesh_for(cc.role.articulator, c.meshes);
    if (!mesh.empty()) {
      m.mesh = mesh;
    }
    w.coils.push_back(std::move(m));
  }
  const auto bind_of = [&](const std::string& id) {
    for (const auto& m : w.coils) {
      if (m.coil_id == id) {
        return m.bind_position;
      }
    }
    throw std::logic_error("coil marker missing");
  };

  std::vector<Vec3> chain;
  for (const auto* cc : tongue) {
    chain.push_back(bind_of(cc->role.coil_id));
  }
  rig::Armature arm = rig::build_tongue_armature(chain, c.rig.root_offset_mm);
  const std::size_t tongue_bones = arm.size();
  if (jaw) {
    arm = rig::merge(arm, rig::build_jaw_armature(bind_of(jaw->role.coil_id), *c.rig.hinge_point));
  }
  for (const auto& [bone, deg] : c.rig.joint_limits_deg) {
    if (!arm.index_of(bone)) {
      throw InputError("config: joint limit for unknown bone '" + bone + "'");
    }
  }
  w.armature = std::move(arm);

  std::vector<std::size_t> tongue_ids(tongue_bones);
  for (std::size_t i = 0; i < tongue_bones; ++i) {
    tongue_ids[i] = i;
  }
  w.weights.emplace("tongue",
                    rig::compute_skin_weights(w.meshes.at("tongue"), w.armature, c.rig.sigma_mm, tongue_ids));
  if (jaw) {
    w.weights.emplace("mandible", rig::rigid_skin_weights(w.meshes.at("mandible").vertex_count(),
                                                          w.armature.require_index(rig::kJawBoneId)));
  }
}

void phase_solve(const CompileConfig& c, Work& w)
{
  std::vector<ema::CoilRole> roles;
  std::map<std::string, ik::TargetWeights, std::less<>> weights;
  for (const auto& cc : c.coils) {
    roles.push_back(cc.role);
    weights[cc.role.coil_id] = cc.weights;
  }
  w.targets = ik::attach_targets(w.armature, roles, w.traj, c.registration, weights);

  ik::IkConfig cfg = c.ik;
  cfg.max_swing_rad.assign(w.armature.size(), std::numeric_limits<double>::infinity());
  for (const auto& [bone, deg] : c.rig.joint_limits_deg) {
    cfg.max_swing_rad[w.armature.require_index(bone)] = deg * std::numbers::pi / 180.0;
  }
  w.clip = ik::solve_sequence(w.armature, w.targets.frames, cfg, w.traj.sample_rate_hz);
}

void assemble_asset(const CompileConfig& c, Work& w)
{
  asset::AnimatedModelAsset& a = w.asset;
  for (const char* name : {"tongue", "mandible", "maxilla"}) {
    const auto it = w.meshes.find(name);
    if (it == w.meshes.end()) {
      continue;
    }
    asset::MeshEntry e{name, it->second, std::nullopt};
    if (const auto wt = w.weights.find(name); wt != w.weights.end()) {
      e.weights = wt->second;
    }
    a.meshes.push_back(std::move(e));
  }
  a.armature = w.armature;
  a.clip = w.clip;
  a.coils = w.coils;
  a.targets = w.targets.topology;

  // Targets as the solver saw them: invalid samples hold the last valid
  // position; before any valid sample the coil's bind position stands in.
  const std::size_t nt = a.targets.size();
  std::vector<Vec3> last(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    last[k] = a.find_coil(a.targets[k].coil_id)->bind_position;
  }
  for (const auto& frame : w.targets.frames) {
    std::vector<Vec3> pos(nt);
    std::vector<std::uint8_t> valid(nt);
    for (std::size_t k = 0; k < nt; ++k) {
      if (frame[k].valid) {
        last[k] = frame[k].target_position;
      }
      pos[k] = last[k];
      valid[k] = frame[k].valid ? 1 : 0;
    }
    a.target_positions.push_back(std::move(pos));
    a.target_valid.push_back(std::move(valid));
  }
  a.provenance.config_sha256 = c.sha256;
  a.provenance.inputs = w.inputs;
  a.provenance.tool_version = std::string(tool_version());
  asset::check_asset(a);
}

void phase_evaluate(const CompileConfig& c, Work& w, const CompileOptions& opt, LifecycleReport& report)
{
  assemble_asset(c, w);
  eval::EvalOptions eo;
  eo.distance_mm = c.evaluation.distance_mm;
  eo.penetration_mm = c.evaluation.penetration_mm;
  eo.contact_eps_mm = c.evaluation.contact_eps_mm;
  eo.similarity_mm = c.evaluation.similarity_mm;
  eo.samples_per_triangle = c.evaluation.samples_per_triangle;
  eo.seed = c.evaluation.seed;
  eo.sampled_penetration = c.evaluation.sampled_penetration;
  eo.palate = w.palate;
  eo.reference = w.reference;
  eo.reference_frame = c.evaluation.reference_frame;
  eo.extra_inputs = w.eval_inputs;
  w.evaluation = eval::evaluate(w.asset, eo);
  w.evaluation.series.insert(w.evaluation.series.begin(),
                             eval::make_series("ik_residual", "mm", w.clip.residuals_mm, c.ik.tolerance_mm));
  report.gates = w.evaluation.gates;
  if (opt.report_dir) {
    eval::generate_report(w.evaluation, *opt.report_dir);
  }
  std::string failed;
  for (const auto& g : w.evaluation.gates) {
    if (!g.pass) {
      failed += (failed.empty() ? "" : "; ") + g.name + " measured " + nlohmann::json(g.measured).dump() +
                " > threshold " + nlohmann::json(g.threshold).dump();
    }
  }
  if (!failed.empty()) {
    throw PhaseFailure(FailureKind::gate, "gate failed: " + failed);
  }
}

void remove_asset_files(const std::filesystem::path& manifest)
{
  std::error_code ec;
  std::filesystem::remove(manifest, ec);
  std::filesystem::remove(asset::buffer_path_for(manifest), ec);
}

LifecycleReport fresh_report(const std::string& config_sha)
{
  LifecycleReport r;
  for (const char* n : kPhaseNames) {
    r.phases.push_back({n, PhaseStatus::pending, FailureKind::none, "", 0.0});
  }
  r.config_sha256 = config_sha;
  return r;
}

void finish(CompileResult& result, const CompileOptions& opt)
{
  bool failed = false;
  for (auto& p : result.report.phases) {
    if (failed && p.status == PhaseStatus::pending) {
      p.status = PhaseStatus::skipped;
    }
    failed = failed || p.status == PhaseStatus::failed;
  }
  if (failed && opt.asset_out) {
    remove_asset_files(*opt.asset_out);
  }
  if (opt.report_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*opt.report_dir, ec);
    write_file_atomic(*opt.report_dir / "lifecycle.json", lifecycle_json(result.report));
  }
}

}  // namespace

std::string_view tool_version() { return ARTIC_VERSION; }

std::string_view to_string(PhaseStatus s)
{
  switch (s) {
    case PhaseStatus::pending:
      return "pending";
    case PhaseStatus::passed:
      return "passed";
    case PhaseStatus::failed:
      return "failed";
    case PhaseStatus::skipped:
      return "skipped";
  }
  return "?";
}

std::string_view to_string(FailureKind k)
{
  switch (k) {
    case FailureKind::none:
      return "none";
    case FailureKind::gate:
      return "gate";
    case FailureKind::input:
      return "input";
    case FailureKind::internal:
      return "internal";
  }
  return "?";
}

bool LifecycleReport::ok() const
{
  return std::all_of(phases.begin(), phases.end(), [](const PhaseReport& p) { return p.status == PhaseStatus::passed; });
}

const PhaseReport* LifecycleReport::failed_phase() const
{
  for (const auto& p : phases) {
    if (p.status == PhaseStatus::failed) {
      return &p;
    }
  }
  return nullptr;
}

int LifecycleReport::exit_code() const
{
  const PhaseReport* f = failed_phase();
  if (!f) {
    return ok() ? 0 : 4;
  }
  switch (f->failure) {
    case FailureKind::gate:
      return 2;
    case FailureKind::input:
      return 3;
    default:
      return 4;
  }
}

std::string lifecycle_json(const LifecycleReport& r)
{
  Json j;
  j["schema"] = kLifecycleSchema;
  j["status"] = r.ok() ? "pass" : "fail";
  j["config_sha256"] = r.config_sha256;
  j["asset_sha256"] = r.asset_sha256.empty() ? Json(nullptr) : Json(r.asset_sha256);
  Json phases = Json::array();
  for (const auto& p : r.phases) {
    Json jp;
    jp["name"] = p.name;
    jp["status"] = to_string(p.status);
    jp["failure"] = p.failure == FailureKind::none ? Json(nullptr) : Json(to_string(p.failure));
    jp["diagnostic"] = p.diagnostic;
    phases.push_back(jp);
  }
  j["phases"] = phases;
  Json gates = Json::array();
  for (const auto& g : r.gates) {
    gates.push_back({{"name", g.name},
                     {"metric", g.metric},
                     {"threshold", g.threshold},
                     {"measured", g.measured},
                     {"pass", g.pass}});
  }
  j["gates"] = gates;
  return j.dump(2) + "\n";
}

CompileConfig parse_config(std::string_view text, const std::filesystem::path& base_dir)
{
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InputError(std::string("config is not valid JSON: ") + e.what());
  }
  CompileConfig c;
  c.base_dir = base_dir;
  c.sha256 = sha256_hex(text);
  try {
    Section root(j, "");
    const std::string schema = root.str("schema");
    if (schema != kConfigSchema) {
      throw UnsupportedVersionError("unsupported config schema '" + schema + "' (expected " +
                                    std::string(kConfigSchema) + ")");
    }

    Section m = root.section("meshes");
    c.meshes.tongue = m.str("tongue");
    c.meshes.mandible = m.str_or("mandible", "");
    c.meshes.maxilla = m.str_or("maxilla", "");
    c.meshes.palate = m.str_or("palate", "");
    m.finish();
    if (c.meshes.tongue.empty()) {
      throw InputError("config: 'meshes.tongue' must not be empty");
    }

    Section e = root.section("ema");
    c.ema.path = e.str("path");
    c.ema.format = e.str_or("format", "csv");
    if (c.ema.format != "csv" && c.ema.format != "pos") {
      throw InputError("config: 'ema.format' must be \"csv\" or \"pos\"");
    }
    if (c.ema.format == "pos") {
      c.ema.channels = e.count_or("channels", 0);
      c.ema.rate_hz = e.num_or("rate_hz", 200.0);
      require_positive(c.ema.rate_hz, "ema.rate_hz");
      if (c.ema.channels == 0) {
        throw InputError("config: 'ema.channels' is required for the pos format");
      }
      if (e.has("channel_names")) {
        c.ema.channel_names = e.raw("channel_names").get<std::vector<std::string>>();
        if (c.ema.channel_names.size() != c.ema.channels) {
          throw InputError("config: 'ema.channel_names' must name every channel");
        }
      }
    }
    e.finish();
    if (c.ema.path.empty()) {
      throw InputError("config: 'ema.path' must not be empty");
    }

    const Json& coils = root.raw("coils");
    if (!coils.is_array() || coils.empty()) {
      throw InputError("config: 'coils' must be a nonempty array");
    }
    for (std::size_t i = 0; i < coils.size(); ++i) {
      Section s(coils[i], "coils[" + std::to_string(i) + "]");
      CoilConfig cc;
      cc.role.coil_id = s.str("id");
      cc.role.articulator = ema::articulator_from_string(s.str("articulator"));
      if (s.has("chain_index")) {
        const Json& v = s.raw("chain_index");
        if (!v.is_number_integer()) {
          throw InputError("config: '" + s.where("chain_index") + "' must be an integer");
        }
        cc.role.chain_index = v.get<int>();
      }
      if (s.has("bind")) {
        cc.bind = s.vec("bind");
      }
      cc.weights.position = s.num_or("position_weight", 1.0);
      cc.weights.orientation = s.num_or("orientation_weight", 0.0);
      s.finish();
      c.coils.push_back(std::move(cc));
    }

    if (root.has("registration")) {
      Section s = root.section("registration");
      if (s.has("rotation_wxyz")) {
        const auto q = s.raw("rotation_wxyz").get<std::vector<double>>();
        if (q.size() != 4) {
          throw InputError("config: 'registration.rotation_wxyz' must have 4 entries");
        }
        const Quat rq(q[0], q[1], q[2], q[3]);
        if (std::abs(rq.norm() - 1.0) > 1e-9) {
          throw InputError("config: 'registration.rotation_wxyz' must be a unit quaternion");
        }
        c.registration.rotation = rq;
      }
      if (s.has("translation")) {
        c.registration.translation = s.vec("translation");
      }
      s.finish();
    }

    if (root.has("rig")) {
      Section s = root.section("rig");
      c.rig.sigma_mm = s.num_or("sigma_mm", c.rig.sigma_mm);
      c.rig.root_offset_mm = s.num_or("root_offset_mm", c.rig.root_offset_mm);
      if (s.has("hinge_point")) {
        c.rig.hinge_point = s.vec("hinge_point");
      }
      if (s.has("joint_limits_deg")) {
        c.rig.joint_limits_deg = s.raw("joint_limits_deg").get<std::map<std::string, double>>();
        for (const auto& [bone, deg] : c.rig.joint_limits_deg) {
          require_positive(deg, "rig.joint_limits_deg." + bone);
        }
      }
      s.finish();
      require_positive(c.rig.sigma_mm, "rig.sigma_mm");
      require_positive(c.rig.root_offset_mm, "rig.root_offset_mm");
    }

    if (root.has("ik")) {
      Section s = root.section("ik");
      c.ik.max_iterations = static_cast<int>(s.count_or("max_iterations", static_cast<std::uint64_t>(c.ik.max_iterations)));
      c.ik.tolerance_mm = s.num_or("tolerance_mm", c.ik.tolerance_mm);
      c.ik.damping_lambda = s.num_or("damping_lambda", c.ik.damping_lambda);
      c.ik.step_clamp_rad = s.num_or("step_clamp_rad", c.ik.step_clamp_rad);
      c.ik.fd_step_rad = s.num_or("fd_step_rad", c.ik.fd_step_rad);
      s.finish();
    }
    ik::check_config(c.ik);

    if (root.has("hygiene")) {
      Section s = root.section("hygiene");
      c.hygiene.max_rms_mm = s.num_or("max_rms_mm", c.hygiene.max_rms_mm);
      c.hygiene.max_gap_frames = s.count_or("max_gap_frames", c.hygiene.max_gap_frames);
      c.hygiene.interpolate = s.flag_or("interpolate", c.hygiene.interpolate);
      c.hygiene.smooth_window = s.count_or("smooth_window", c.hygiene.smooth_window);
      if (s.has("resample_hz")) {
        c.hygiene.resample_hz = s.num("resample_hz");
        require_positive(*c.hygiene.resample_hz, "hygiene.resample_hz");
      }
      s.finish();
      require_positive(c.hygiene.max_rms_mm, "hygiene.max_rms_mm");
    }

    if (root.has("evaluation")) {
      Section s = root.section("evaluation");
      auto& ev = c.evaluation;
      ev.distance_mm = s.num_or("distance_mm", ev.distance_mm);
      ev.penetration_mm = s.num_or("penetration_mm", ev.penetration_mm);
      ev.contact_eps_mm = s.num_or("contact_eps_mm", ev.contact_eps_mm);
      ev.similarity_mm = s.num_or("similarity_mm", ev.similarity_mm);
      ev.samples_per_triangle = s.count_or("samples_per_triangle", ev.samples_per_triangle);
      ev.seed = s.count_or("seed", ev.seed);
      ev.sampled_penetration = s.flag_or("sampled_penetration", ev.sampled_penetration);
      ev.reference_mesh = s.str_or("reference_mesh", "");
      ev.reference_frame = s.count_or("reference_frame", ev.reference_frame);
      s.finish();
      require_positive(ev.distance_mm, "evaluation.distance_mm");
      require_positive(ev.penetration_mm, "evaluation.penetration_mm");
      require_positive(ev.contact_eps_mm, "evaluation.contact_eps_mm");
      require_positive(ev.similarity_mm, "evaluation.similarity_mm");
    }
    root.finish();
  } catch (const Json::exception& ex) {
    throw InputError(std::string("config: ") + ex.what());
  }
  return c;
}

CompileConfig load_config(const std::filesystem::path& path)
{
  const std::string text = read_file_text(path);
  try {
    return parse_config(text, path.parent_path());
  } catch (const InputError& e) {
    throw InputError("'" + path.string() + "': " + e.what());
  }
}

ema::EmaTrajectory load_trajectory(const CompileConfig& config)
{
  return parse_trajectory(config, read_file_bytes(resolve(config, config.ema.path)));
}

CompileResult compile(const CompileConfig& config, const CompileOptions& opt)
{
  CompileResult result;
  result.report = fresh_report(config.sha256);
  Work w;

  const std::function<void()> steps[] = {
      [&] { phase_validate(config, w); },
      [&] { phase_rig(config, w); },
      [&] { phase_solve(config, w); },
      [&] {
        try {
          phase_evaluate(config, w, opt, result.report);
        } catch (const PhaseFailure& e) {
          // Gate failures keep the evaluated model for inspection; it is not packaged.
          if (e.kind() == FailureKind::gate) {
            result.evaluation = w.evaluation;
            result.asset = w.asset;
          }
          throw;
        }
        result.evaluation = w.evaluation;
      },
      [&] {
        if (opt.asset_out) {
          asset::write_asset(w.asset, *opt.asset_out);
          result.report.asset_sha256 = sha256_hex(std::string_view(read_file_text(*opt.asset_out)));
        }
        result.asset = std::move(w.asset);
      },
  };

  for (std::size_t i = 0; i < result.report.phases.size(); ++i) {
    PhaseReport& p = result.report.phases[i];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      steps[i]();
      p.status = PhaseStatus::passed;
    } catch (const PhaseFailure& e) {
      p.status = PhaseStatus::failed;
      p.failure = e.kind();
      p.diagnostic = e.what();
    } catch (const InputError& e) {
      p.status = PhaseStatus::failed;
      p.failure = FailureKind::input;
      p.diagnostic = e.what();
    } catch (const std::exception& e) {
      p.status = PhaseStatus::failed;
      p.failure = FailureKind::internal;
      p.diagnostic = e.what();
    }
    p.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (p.status == PhaseStatus::failed) {
      break;
    }
  }
  finish(result, opt);
  return result;
}

CompileResult compile_file(const std::filesystem::path& config_path, const CompileOptions& opt)
{
  CompileConfig config;
  try {
    config = load_config(config_path);
  } catch (const std::exception& e) {
    CompileResult result;
    result.report = fresh_report("");
    auto& p = result.report.phases.front();
    p.status = PhaseStatus::failed;
    p.failure = dynamic_cast<const InputError*>(&e) ? FailureKind::input : FailureKind::internal;
    p.diagnostic = e.what();
    finish(result, opt);
    return result;
  }
  return compile(config, opt);
}

}  // namespace artic::compiler
