#pragma once

// Small in-memory assets for the asset and eval suites.

#include <string>

#include "artic/asset.hpp"
#include "artic/synth.hpp"

namespace testing {

/// Three-coil tongue chain on a tube mesh, a static maxilla, and `frames` of
/// seeded sinusoidal motion whose targets are the posed bone tails.
inline artic::asset::AnimatedModelAsset make_asset(std::size_t frames, std::uint64_t seed = 1)
{
  using namespace artic;
  const std::vector<Vec3> coils = {{0, 0, 0}, {12, 0, 2}, {23, 0, 1}};
  asset::AnimatedModelAsset a;
  a.armature = rig::build_tongue_armature(coils, 5.0);
  const auto tongue = synth::tube_mesh(coils, 2.0, 3.0);
  a.meshes.push_back({"tongue", tongue, rig::compute_skin_weights(tongue, a.armature, 5.0)});
  const std::vector<Vec3> roof = {{-5, 0, 20}, {30, 0, 20}};
  a.meshes.push_back({"maxilla", synth::tube_mesh(roof, 4.0, 5.0), std::nullopt});

  a.clip.frame_rate_hz = 200.0;
  a.clip.poses = synth::sinusoidal_poses(a.armature, frames, 200.0, seed);
  for (std::size_t f = 0; f < frames; ++f) {
    a.clip.residuals_mm.push_back(0.0);
    a.clip.iterations.push_back(static_cast<std::uint32_t>(f % 3));
    a.clip.held.push_back(f == 1 ? 1 : 0);
  }
  for (std::size_t c = 0; c < coils.size(); ++c) {
    const std::string id = "T" + std::to_string(c + 1);
    a.coils.push_back({id, ema::Articulator::tongue, static_cast<int>(c), coils[c], "tongue"});
    a.targets.push_back({id, {c, Vec3::Zero()}, {}});
  }
  a.coils.push_back({"REF", ema::Articulator::reference, std::nullopt, {20, 0, 30}, "maxilla"});
  for (const auto& pose : a.clip.poses) {
    const auto g = rig::forward_kinematics(a.armature, pose);
    std::vector<Vec3> tails;
    for (std::size_t c = 0; c < coils.size(); ++c) {
      tails.push_back(rig::bone_tail(a.armature, g, c));
    }
    a.target_positions.push_back(tails);
    a.target_valid.push_back(std::vector<std::uint8_t>(coils.size(), 1));
  }
  a.provenance.config_sha256 = std::string(64, 'a');
  a.provenance.tool_version = "test";
  a.provenance.inputs = {{"mesh.tongue", "tongue.obj", std::string(64, 'b')}};
  return a;
}

}  // namespace testing
