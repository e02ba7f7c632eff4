#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "artic/geometry.hpp"
#include "artic/mesh.hpp"
#include "artic/rig.hpp"

/// Deterministic desk-scale fixtures: meshes, EMA recordings, and a compile
/// config per scenario.
namespace artic::synth {

enum class Scenario { bind, fk_roundtrip, penetrate, two_link };

std::string_view to_string(Scenario s);
/// Throws InputError for unknown names.
Scenario scenario_from_string(std::string_view name);

struct SynthOptions
{
  /// 0 picks the scenario default (bind 10, fk-roundtrip 500, penetrate 30, two-link 1).
  std::size_t frames = 0;
  std::uint64_t seed = 0;
};

struct GeneratedFile
{
  std::string name;
  std::string bytes;
};

/// Files of a scenario in a fixed order. Always includes config.json.
std::vector<GeneratedFile> generate(Scenario scenario, const SynthOptions& options = {});
/// Writes the generated files into `out_dir` (created when missing).
std::vector<std::filesystem::path> write_fixture(Scenario scenario, const SynthOptions& options,
                                                 const std::filesystem::path& out_dir);

/// Tube around a polyline whose top seam runs exactly through the polyline
/// points, so every polyline point is a mesh vertex. `radius` scales the
/// cross-section; stations are at most `spacing` apart. Ends are capped.
mesh::TriMesh tube_mesh(std::span<const Vec3> polyline, double radius, double spacing);

/// Fixture geometry shared by the scenarios.
inline constexpr double kRootOffsetMm = 5.0;
inline constexpr double kFrameRateHz = 200.0;
inline constexpr std::size_t kPenetrationFrame = 10;
inline constexpr double kPenetrationDepthMm = 0.3;

std::vector<Vec3> tongue_coil_binds();
Vec3 jaw_coil_bind();
Vec3 jaw_hinge();
Vec3 reference_coil_bind();

/// Tongue chain plus jaw bone, as the compiler rigs the fixture.
rig::Armature fixture_armature();

/// Smooth seeded joint motion: every bone's rotation vector is a sum of two
/// sinusoids that vanish at frame 0, so the first frame is the bind pose.
std::vector<rig::Pose> sinusoidal_poses(const rig::Armature& armature, std::size_t frames, double rate_hz,
                                        std::uint64_t seed);

}  // namespace artic::synth
