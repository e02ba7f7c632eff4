#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "artic/ema.hpp"
#include "artic/ik.hpp"
#include "artic/mesh.hpp"
#include "artic/rig.hpp"

/// The compiled animated model and its on-disk container: a JSON manifest
/// plus one little-endian binary buffer. See docs/asset-v1.md.
namespace artic::asset {

inline constexpr std::string_view kAssetSchema = "asset-v1";

struct MeshEntry
{
  std::string name;  // "tongue", "mandible", "maxilla"
  mesh::TriMesh mesh;
  /// Unset for static meshes.
  std::optional<rig::SkinWeights> weights;

  bool operator==(const MeshEntry&) const = default;
};

/// Coil marker at its bind position; rendered as a sphere by viewers.
struct CoilMarker
{
  std::string coil_id;
  ema::Articulator articulator = ema::Articulator::other;
  std::optional<int> chain_index;
  Vec3 bind_position = Vec3::Zero();
  /// Mesh the coil is glued to; unset for coils that do not drive the rig.
  std::optional<std::string> mesh;

  bool operator==(const CoilMarker&) const = default;
};

struct InputHash
{
  std::string role;
  std::string path;
  std::string sha256;

  bool operator==(const InputHash&) const = default;
};

struct Provenance
{
  std::string config_sha256;
  std::vector<InputHash> inputs;
  std::string tool_version;

  bool operator==(const Provenance&) const = default;
};

struct AnimatedModelAsset
{
  std::vector<MeshEntry> meshes;
  rig::Armature armature;
  ik::AnimationClip clip;
  std::vector<CoilMarker> coils;
  /// Solver target bindings and, per frame, the target positions the solver
  /// used (after holding invalid samples) plus the raw sample validity.
  std::vector<ik::TargetBinding> targets;
  std::vector<std::vector<Vec3>> target_positions;
  std::vector<std::vector<std::uint8_t>> target_valid;
  Provenance provenance;

  const MeshEntry* find_mesh(std::string_view name) const;
  const CoilMarker* find_coil(std::string_view id) const;

  bool operator==(const AnimatedModelAsset&) const = default;
};

/// Throws InputError when weights, clip, coils, or targets do not fit the
/// armature or provenance is missing.
void check_asset(const AnimatedModelAsset& asset);

struct BufferView
{
  std::string name;
  std::string dtype;  // "f64", "u32", "u8"
  std::vector<std::uint64_t> shape;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
  std::string sha256;
};

struct SerializedAsset
{
  std::string manifest;
  std::vector<std::uint8_t> buffer;
};

/// `buffer_uri` is the buffer file name recorded in the manifest.
SerializedAsset serialize_asset(const AnimatedModelAsset& asset, std::string_view buffer_uri);
/// Throws UnsupportedVersionError on a schema mismatch and IntegrityError when
/// a view or the buffer fails its hash.
AnimatedModelAsset deserialize_asset(std::string_view manifest, std::span<const std::uint8_t> buffer);
/// Buffer views as declared in a manifest.
std::vector<BufferView> manifest_views(std::string_view manifest);

/// Buffer file that accompanies a manifest path (same stem, `.bin`).
std::filesystem::path buffer_path_for(const std::filesystem::path& manifest_path);

/// Writes the buffer and then the manifest, each atomically.
void write_asset(const AnimatedModelAsset& asset, const std::filesystem::path& manifest_path);
AnimatedModelAsset read_asset(const std::filesystem::path& manifest_path);

/// Inputs whose current content hash differs from the recorded one (paths
/// resolved against `base_dir`). Missing files are reported too.
std::vector<std::string> verify_inputs(const AnimatedModelAsset& asset, const std::filesystem::path& base_dir);

/// Skinned geometry of mesh `name` at clip frame `frame`; static meshes are
/// returned unchanged.
mesh::TriMesh posed_mesh(const AnimatedModelAsset& asset, std::string_view name, std::size_t frame);

}  // namespace artic::asset
