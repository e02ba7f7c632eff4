#include "artic/synth.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "artic/ema.hpp"
#include "artic/error.hpp"
#include "artic/hash.hpp"
#include "artic/ik.hpp"
#include "json.hpp"

namespace artic::synth {

using Json = nlohmann::ordered_json;

namespace {

// Cross-section in (side, up) units; the first point is the top seam.
constexpr std::array<std::array<double, 2>, 6> kRing = {{
    {0.0, 0.0},
    {0.8, -0.2},
    {1.0, -0.8},
    {0.0, -1.2},
    {-1.0, -0.8},
    {-0.8, -0.2},
}};

constexpr double kSigmaMm = 5.0;

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

/// Uniform double in [0, 1) from the raw generator bits, identical on every
/// standard library.
double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform(rng); }

/// Flat palate at height z facing down (normal -z).
mesh::TriMesh flat_palate(double z)
{
  const double x0 = -30.0;
  const double x1 = 50.0;
  const double y0 = -25.0;
  const double y1 = 25.0;
  return mesh::TriMesh({{x0, y0, z}, {x0, y1, z}, {x1, y1, z}, {x1, y0, z}}, {{0, 1, 2}, {0, 2, 3}});
}

std::vector<Vec3> tongue_polyline(const rig::Armature& arm)
{
  const auto g = arm.bind_globals();
  std::vector<Vec3> pts{g[0].translation};
  for (const Vec3& c : tongue_coil_binds()) {
    pts.push_back(c);
  }
  return pts;
}

mesh::TriMesh tongue_mesh(const rig::Armature& arm) { return tube_mesh(tongue_polyline(arm), 4.0, 2.0); }

mesh::TriMesh mandible_mesh() { return tube_mesh(std::vector<Vec3>{jaw_hinge(), jaw_coil_bind()}, 3.0, 3.0); }

mesh::TriMesh maxilla_mesh()
{
  return tube_mesh(std::vector<Vec3>{{-20.0, 0.0, 30.0}, reference_coil_bind()}, 3.0, 4.0);
}

std::vector<std::size_t> tongue_bone_indices(const rig::Armature& arm)
{
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < arm.size(); ++i) {
    if (arm.bone(i).id.starts_with("tongue")) {
      out.push_back(i);
    }
  }
  return out;
}

double max_z(const mesh::TriMesh& m)
{
  double z = -std::numeric_limits<double>::infinity();
  for (const Vec3& v : m.vertices()) {
    z = std::max(z, v.z());
  }
  return z;
}

struct CoilSpec
{
  std::string id;
  std::string articulator;
  std::optional<int> chain_index;
  Vec3 bind;
  double position_weight = 1.0;
};

/// EMA samples of the coils from FK of each pose: tongue coil i rides the tail
/// of chain bone i, the jaw coil the jaw tail; REF stays put.
ema::EmaTrajectory record(const rig::Armature& arm, std::span<const rig::Pose> poses, bool with_jaw)
{
  ema::EmaTrajectory t;
  t.sample_rate_hz = kFrameRateHz;
  const auto coils = tongue_coil_binds();
  for (std::size_t i = 0; i < coils.size(); ++i) {
    t.coil_ids.push_back("T" + std::to_string(i + 1));
  }
  if (with_jaw) {
    t.coil_ids.push_back("J");
    t.coil_ids.push_back("REF");
  }
  for (const auto& pose : poses) {
    const auto g = rig::forward_kinematics(arm, pose);
    std::vector<ema::CoilSample> frame;
    for (std::size_t i = 0; i < coils.size(); ++i) {
      const std::size_t b = arm.require_index(rig::tongue_bone_id(i));
      frame.push_back({rig::bone_tail(arm, g, b), ik::bone_axis(g, b), 0.0, true});
    }
    if (with_jaw) {
      const std::size_t b = arm.require_index(rig::kJawBoneId);
      frame.push_back({rig::bone_tail(arm, g, b), ik::bone_axis(g, b), 0.0, true});
      frame.push_back({reference_coil_bind(), Vec3::UnitX(), 0.0, true});
    }
    t.frames.push_back(std::move(frame));
  }
  return t;
}

std::vector<CoilSpec> fixture_coils(bool with_jaw)
{
  std::vector<CoilSpec> out;
  const auto coils = tongue_coil_binds();
  for (std::size_t i = 0; i < coils.size(); ++i) {
    out.push_back({"T" + std::to_string(i + 1), "tongue", static_cast<int>(i), coils[i]});
  }
  if (with_jaw) {
    out.push_back({"J", "jaw", std::nullopt, jaw_coil_bind()});
    out.push_back({"REF", "reference", std::nullopt, reference_coil_bind()});
  }
  return out;
}

Json coils_json(const std::vector<CoilSpec>& coils)
{
  Json arr = Json::array();
  for (const auto& c : coils) {
    Json j;
    j["id"] = c.id;
    j["articulator"] = c.articulator;
    if (c.chain_index) {
      j["chain_index"] = *c.chain_index;
    }
    j["bind"] = vec_json(c.bind);
    j["position_weight"] = c.position_weight;
    arr.push_back(j);
  }
  return arr;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::vector<GeneratedFile> scenario_bind(std::size_t frames)
{
  const rig::Armature arm = fixture_armature();
  const mesh::TriMesh tongue = tongue_mesh(arm);
  const std::vector<rig::Pose> poses(frames, rig::Pose::bind(arm));
  const double palate_z = max_z(tongue) + 5.0;

  Json c;
  c["schema"] = "config-v1";
  c["meshes"] = {{"tongue", "tongue.obj"},
                 {"mandible", "mandible.obj"},
                 {"maxilla", "maxilla.obj"},
                 {"palate", "palate.obj"}};
  c["ema"] = {{"path", "ema.csv"}, {"format", "csv"}};
  c["coils"] = coils_json(fixture_coils(true));
  c["rig"] = {{"sigma_mm", kSigmaMm}, {"root_offset_mm", kRootOffsetMm}, {"hinge_point", vec_json(jaw_hinge())}};
  c["evaluation"] = {{"reference_mesh", "tongue.obj"}, {"reference_frame", 0}};

  return {{"tongue.obj", mesh::write_obj(tongue)},
          {"mandible.obj", mesh::write_obj(mandible_mesh())},
          {"maxilla.obj", mesh::write_obj(maxilla_mesh())},
          {"palate.obj", mesh::write_obj(flat_palate(palate_z))},
          {"ema.csv", ema::write_ema_csv(record(arm, poses, true))},
          {"config.json", dump(c)}};
}

std::vector<GeneratedFile> scenario_fk_roundtrip(std::size_t frames, std::uint64_t seed)
{
  const rig::Armature arm = fixture_armature();
  const mesh::TriMesh tongue = tongue_mesh(arm);
  const auto poses = sinusoidal_poses(arm, frames, kFrameRateHz, seed);

  // Palate well clear of the tongue over the whole motion.
  const auto tongue_bones = tongue_bone_indices(arm);
  const auto weights = rig::compute_skin_weights(tongue, arm, kSigmaMm, tongue_bones);
  const auto bind = arm.bind_globals();
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& p : poses) {
    const auto g = rig::forward_kinematics(arm, p);
    for (const Vec3& v : rig::skin_vertices(tongue.vertices(), weights, bind, g)) {
      top = std::max(top, v.z());
    }
  }

  Json c;
  c["schema"] = "config-v1";
  c["meshes"] = {{"tongue", "tongue.obj"},
                 {"mandible", "mandible.obj"},
                 {"maxilla", "maxilla.obj"},
                 {"palate", "palate.obj"}};
  c["ema"] = {{"path", "ema.csv"}, {"format", "csv"}};
  c["coils"] = coils_json(fixture_coils(true));
  c["rig"] = {{"sigma_mm", kSigmaMm}, {"root_offset_mm", kRootOffsetMm}, {"hinge_point", vec_json(jaw_hinge())}};

  Json truth;
  truth["scenario"] = "fk-roundtrip";
  truth["frames"] = frames;
  truth["seed"] = seed;
  truth["frame_rate_hz"] = kFrameRateHz;

  return {{"tongue.obj", mesh::write_obj(tongue)},
          {"mandible.obj", mesh::write_obj(mandible_mesh())},
          {"maxilla.obj", mesh::write_obj(maxilla_mesh())},
          {"palate.obj", mesh::write_obj(flat_palate(top + 3.0))},
          {"ema.csv", ema::write_ema_csv(record(arm, poses, true))},
          {"config.json", dump(c)},
          {"truth.json", dump(truth)}};
}

std::vector<GeneratedFile> scenario_penetrate(std::size_t frames)
{
  if (frames <= kPenetrationFrame) {
    throw InputError("penetrate needs more than " + std::to_string(kPenetrationFrame) + " frames");
  }
  const auto coils = tongue_coil_binds();
  const rig::Armature arm = rig::build_tongue_armature(coils, kRootOffsetMm);
  const mesh::TriMesh tongue = tongue_mesh(arm);
  const auto weights = rig::compute_skin_weights(tongue, arm, kSigmaMm);
  const auto bind = arm.bind_globals();

  // Pitch the root up and back down, peaking at the penetration frame.
  const Vec3 pitch_axis = arm.bone(0).rest_local.rotation.inverse() * Vec3::UnitY();
  std::vector<rig::Pose> poses;
  std::vector<double> tops;
  for (std::size_t f = 0; f < frames; ++f) {
    const double s = (static_cast<double>(f) - static_cast<double>(kPenetrationFrame)) / 3.0;
    rig::Pose p = rig::Pose::bind(arm);
    p.rotations[0] = quat_exp(-0.25 * std::exp(-s * s) * pitch_axis);
    const auto g = rig::forward_kinematics(arm, p);
    double top = -std::numeric_limits<double>::infinity();
    for (const Vec3& v : rig::skin_vertices(tongue.vertices(), weights, bind, g)) {
      top = std::max(top, v.z());
    }
    tops.push_back(top);
    poses.push_back(std::move(p));
  }
  const double palate_z = tops[kPenetrationFrame] - kPenetrationDepthMm;
  for (std::size_t f = 0; f < frames; ++f) {
    if (f != kPenetrationFrame && tops[f] > palate_z - 1e-3) {
      throw std::logic_error("penetrate fixture: frame " + std::to_string(f) + " also reaches the palate");
    }
  }

  Json c;
  c["schema"] = "config-v1";
  c["meshes"] = {{"tongue", "tongue.obj"}, {"palate", "palate.obj"}};
  c["ema"] = {{"path", "ema.csv"}, {"format", "csv"}};
  c["coils"] = coils_json(fixture_coils(false));
  c["rig"] = {{"sigma_mm", kSigmaMm}, {"root_offset_mm", kRootOffsetMm}};
  c["ik"] = {{"tolerance_mm", 1e-9}, {"max_iterations", 100}};

  Json truth;
  truth["scenario"] = "penetrate";
  truth["frames"] = frames;
  truth["penetration_frame"] = kPenetrationFrame;
  truth["depth_mm"] = kPenetrationDepthMm;
  truth["palate_z"] = palate_z;

  return {{"tongue.obj", mesh::write_obj(tongue)},
          {"palate.obj", mesh::write_obj(flat_palate(palate_z))},
          {"ema.csv", ema::write_ema_csv(record(arm, poses, false))},
          {"config.json", dump(c)},
          {"truth.json", dump(truth)}};
}

std::vector<GeneratedFile> scenario_two_link(std::size_t frames)
{
  // Base at the origin, links of 1 mm along +x; only the tip is a target.
  const std::vector<Vec3> coils = {{1.0, 0.0, 0.0}, {2.0, 0.0, 0.0}};
  const rig::Armature arm = rig::build_tongue_armature(coils, 1.0);
  const mesh::TriMesh tongue = tube_mesh(std::vector<Vec3>{{0.0, 0.0, 0.0}, coils[0], coils[1]}, 0.05, 0.1);

  const auto trajectory = [&](const Vec3& tip) {
    ema::EmaTrajectory t;
    t.sample_rate_hz = kFrameRateHz;
    t.coil_ids = {"C1", "C2"};
    for (std::size_t f = 0; f < frames; ++f) {
      t.frames.push_back({{coils[0], Vec3::UnitX(), 0.0, true}, {tip, Vec3::UnitX(), 0.0, true}});
    }
    return ema::write_ema_csv(t);
  };
  const auto config = [&](const std::string& ema_path) {
    Json c;
    c["schema"] = "config-v1";
    c["meshes"] = {{"tongue", "tongue.obj"}};
    c["ema"] = {{"path", ema_path}, {"format", "csv"}};
    c["coils"] = coils_json({{"C1", "tongue", 0, coils[0], 0.0}, {"C2", "tongue", 1, coils[1], 1.0}});
    c["rig"] = {{"sigma_mm", 0.2}, {"root_offset_mm", 1.0}};
    c["ik"] = {{"tolerance_mm", 1e-7}, {"max_iterations", 200}};
    return dump(c);
  };

  Json truth;
  truth["scenario"] = "two-link";
  truth["target"] = vec_json({1.0, 1.0, 0.0});
  truth["joint_angles_rad"] = Json::array({0.0, std::numbers::pi / 2.0});
  truth["unreachable_target"] = vec_json({0.0, 3.0, 0.0});
  truth["reach_limit_point"] = vec_json({0.0, 2.0, 0.0});

  return {{"tongue.obj", mesh::write_obj(tongue)},
          {"ema.csv", trajectory({1.0, 1.0, 0.0})},
          {"config.json", config("ema.csv")},
          {"ema_unreachable.csv", trajectory({0.0, 3.0, 0.0})},
          {"config_unreachable.json", config("ema_unreachable.csv")},
          {"truth.json", dump(truth)}};
}

}  // namespace

std::string_view to_string(Scenario s)
{
  switch (s) {
    case Scenario::bind:
      return "bind";
    case Scenario::fk_roundtrip:
      return "fk-roundtrip";
    case Scenario::penetrate:
      return "penetrate";
    case Scenario::two_link:
      return "two-link";
  }
  return "?";
}

Scenario scenario_from_string(std::string_view name)
{
  for (Scenario s : {Scenario::bind, Scenario::fk_roundtrip, Scenario::penetrate, Scenario::two_link}) {
    if (to_string(s) == name) {
      return s;
    }
  }
  throw InputError("unknown scenario '" + std::string(name) + "' (expected bind, fk-roundtrip, penetrate, two-link)");
}

std::vector<Vec3> tongue_coil_binds() { return {{0.0, 0.0, 0.0}, {12.0, 0.0, 2.0}, {23.0, 0.0, 1.0}}; }
Vec3 jaw_coil_bind() { return {5.0, 0.0, -15.0}; }
Vec3 jaw_hinge() { return {-40.0, 0.0, 5.0}; }
Vec3 reference_coil_bind() { return {20.0, 0.0, 30.0}; }

rig::Armature fixture_armature()
{
  return rig::merge(rig::build_tongue_armature(tongue_coil_binds(), kRootOffsetMm),
                    rig::build_jaw_armature(jaw_coil_bind(), jaw_hinge()));
}

std::vector<rig::Pose> sinusoidal_poses(const rig::Armature& armature, std::size_t frames, double rate_hz,
                                        std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  struct Wave
  {
    Vec3 amplitude;
    double hz;
  };
  std::vector<std::array<Wave, 2>> waves(armature.size());
  for (auto& bone : waves) {
    for (auto& w : bone) {
      w.amplitude = {uniform(rng, -0.1, 0.1), uniform(rng, -0.1, 0.1), uniform(rng, -0.1, 0.1)};
      w.hz = uniform(rng, 0.5, 2.0);
    }
  }
  std::vector<rig::Pose> poses;
  poses.reserve(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    const double t = static_cast<double>(f) / rate_hz;
    rig::Pose p = rig::Pose::bind(armature);
    for (std::size_t b = 0; b < armature.size(); ++b) {
      Vec3 r = Vec3::Zero();
      for (const Wave& w : waves[b]) {
        r += w.amplitude * std::sin(2.0 * std::numbers::pi * w.hz * t);
      }
      p.rotations[b] = quat_exp(r);
    }
    poses.push_back(std::move(p));
  }
  return poses;
}

mesh::TriMesh tube_mesh(std::span<const Vec3> polyline, double radius, double spacing)
{
  if (polyline.size() < 2 || !(radius > 0.0) || !(spacing > 0.0)) {
    throw std::invalid_argument("tube_mesh needs >= 2 points and positive radius and spacing");
  }
  // Stations: every polyline point exactly, plus evenly spaced fill-ins.
  std::vector<Vec3> stations;
  std::vector<Vec3> tangents;
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    const Vec3 a = polyline[i];
    const Vec3 b = polyline[i + 1];
    const Vec3 dir = (b - a).normalized();
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a).norm() / spacing)));
    for (std::size_t k = 0; k < n; ++k) {
      stations.push_back(k == 0 ? a : a + (b - a) * (static_cast<double>(k) / static_cast<double>(n)));
      tangents.push_back(dir);
    }
  }
  stations.push_back(polyline.back());
  tangents.push_back(tangents.back());
  // Smooth the tangent at interior polyline points.
  for (std::size_t s = 1; s + 1 < stations.size(); ++s) {
    if (tangents[s] != tangents[s - 1]) {
      tangents[s] = (tangents[s] + tangents[s - 1]).normalized();
    }
  }

  std::vector<Vec3> verts;
  for (std::size_t s = 0; s < stations.size(); ++s) {
    const Vec3 t = tangents[s];
    Vec3 up = Vec3::UnitZ() - t * t.z();
    if (up.norm() < 1e-6) {
      up = Vec3::UnitX() - t * t.x();
    }
    up.normalize();
    const Vec3 side = t.cross(up);
    for (const auto& r : kRing) {
      verts.push_back(r[0] == 0.0 && r[1] == 0.0 ? stations[s]
                                                 : stations[s] + radius * (r[0] * side + r[1] * up));
    }
  }
  const auto ring = static_cast<std::uint32_t>(kRing.size());
  const auto ns = static_cast<std::uint32_t>(stations.size());
  std::vector<mesh::Triangle> tris;
  for (std::uint32_t s = 0; s + 1 < ns; ++s) {
    for (std::uint32_t k = 0; k < ring; ++k) {
      const std::uint32_t a = s * ring + k;
      const std::uint32_t b = s * ring + (k + 1) % ring;
      const std::uint32_t c = (s + 1) * ring + (k + 1) % ring;
      const std::uint32_t d = (s + 1) * ring + k;
      tris.push_back({a, b, c});
      tris.push_back({a, c, d});
    }
  }
  // Caps: a fan around each end ring's centroid.
  for (const bool front : {false, true}) {
    const std::uint32_t base = front ? (ns - 1) * ring : 0;
    Vec3 centre = Vec3::Zero();
    for (std::uint32_t k = 0; k < ring; ++k) {
      centre += verts[base + k];
    }
    verts.push_back(centre / static_cast<double>(ring));
    const auto ci = static_cast<std::uint32_t>(verts.size() - 1);
    for (std::uint32_t k = 0; k < ring; ++k) {
      const std::uint32_t a = base + k;
      const std::uint32_t b = base + (k + 1) % ring;
      tris.push_back(front ? mesh::Triangle{ci, a, b} : mesh::Triangle{ci, b, a});
    }
  }
  return mesh::TriMesh(std::move(verts), std::move(tris));
}

std::vector<GeneratedFile> generate(Scenario scenario, const SynthOptions& o)
{
  switch (scenario) {
    case Scenario::bind:
      return scenario_bind(o.frames ? o.frames : 10);
    case Scenario::fk_roundtrip:
      return scenario_fk_roundtrip(o.frames ? o.frames : 500, o.seed);
    case Scenario::penetrate:
      return scenario_penetrate(o.frames ? o.frames : 30);
    case Scenario::two_link:
      return scenario_two_link(o.frames ? o.frames : 1);
  }
  throw std::invalid_argument("unknown scenario");
}

std::vector<std::filesystem::path> write_fixture(Scenario scenario, const SynthOptions& options,
                                                 const std::filesystem::path& out_dir)
{
  const auto files = generate(scenario, options);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create '" + out_dir.string() + "': " + ec.message());
  }
  std::vector<std::filesystem::path> out;
  for (const auto& f : files) {
    out.push_back(out_dir / f.name);
    write_file_atomic(out.back(), f.bytes);
  }
  return out;
}

}  // namespace artic::synth
