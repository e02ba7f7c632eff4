#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "artic/geometry.hpp"
#include "artic/mesh.hpp"

/// Pseudo-skeletal armatures, forward kinematics, and linear blend skinning.
///
/// A bone's local frame has its head at the origin and its tail at
/// (length, 0, 0). `rest_local` places that frame relative to the parent
/// bone's frame (or model space for roots).
namespace artic::rig {

struct Bone
{
  std::string id;
  std::optional<std::size_t> parent;  // index of an earlier bone
  RigidTransform rest_local;
  double length = 1.0;  // mm

  Vec3 tail_local() const { return {length, 0.0, 0.0}; }
  bool operator==(const Bone&) const = default;
};

/// Bone forest ordered parent-before-child. The bind pose is identity local
/// rotation on every bone.
class Armature
{
public:
  Armature() = default;
  /// Throws InputError when ids repeat, a parent is not an earlier bone, a
  /// length is not positive, or a rest rotation is not a unit quaternion.
  explicit Armature(std::vector<Bone> bones);

  const std::vector<Bone>& bones() const { return bones_; }
  const Bone& bone(std::size_t i) const { return bones_.at(i); }
  std::size_t size() const { return bones_.size(); }
  bool empty() const { return bones_.empty(); }
  std::optional<std::size_t> index_of(std::string_view id) const;
  std::size_t require_index(std::string_view id) const;

  std::vector<RigidTransform> bind_globals() const;

  bool operator==(const Armature&) const = default;

private:
  std::vector<Bone> bones_;
};

/// Concatenates two forests; the second armature's parent indices are shifted.
Armature merge(const Armature& a, const Armature& b);

struct Pose
{
  std::vector<Quat> rotations;     // per bone, local
  std::vector<Vec3> translations;  // per bone; only roots use it (mm)

  static Pose bind(const Armature& armature);
  bool operator==(const Pose& o) const;
};

/// Throws std::invalid_argument when the pose does not match the armature or
/// holds a non-unit rotation.
void check_pose(const Armature& armature, const Pose& pose);

/// global(b) = global(parent) * rest_local * R(pose_b); a root starts from its
/// pose translation instead of a parent.
std::vector<RigidTransform> forward_kinematics(const Armature& armature, const Pose& pose);

inline Vec3 bone_tail(const Armature& armature, std::span<const RigidTransform> globals, std::size_t bone)
{
  return globals[bone].apply(armature.bone(bone).tail_local());
}

/// Bone id of tongue chain bone `i` (0 is the root bone behind the rearmost coil).
std::string tongue_bone_id(std::size_t i);
inline constexpr std::string_view kJawBoneId = "jaw";

/// Serial chain through tongue coil bind positions, rear to front. The root
/// bone starts `root_offset_mm` behind the first coil; bone i ends at coil i.
Armature build_tongue_armature(std::span<const Vec3> coil_bind_positions, double root_offset_mm);

/// One bone from the hinge to the jaw coil.
Armature build_jaw_armature(const Vec3& jaw_coil_bind, const Vec3& hinge_point);

struct Influence
{
  std::uint32_t bone = 0;
  double weight = 0.0;

  bool operator==(const Influence&) const = default;
};

inline constexpr std::size_t kMaxInfluences = 4;

struct SkinWeights
{
  std::vector<std::vector<Influence>> per_vertex;

  bool operator==(const SkinWeights&) const = default;
};

/// Throws std::invalid_argument when weights are negative, do not sum to 1
/// within 1e-6, exceed four influences, or reference missing bones.
void check_skin_weights(const SkinWeights& weights, std::size_t vertex_count, const Armature& armature);

/// Distance from p to the bind-pose segment head->tail of `bone`.
double distance_to_bone(const Armature& armature, std::span<const RigidTransform> bind_globals, std::size_t bone,
                        const Vec3& p);

/// Gaussian falloff exp(-d^2 / 2 sigma^2) on point-to-bone distance, top four
/// kept and renormalized. Vertices beyond 6 sigma of every candidate bind
/// fully to the nearest one. An empty `candidate_bones` means all bones.
SkinWeights compute_skin_weights(const mesh::TriMesh& mesh, const Armature& armature, double falloff_sigma_mm,
                                 std::span<const std::size_t> candidate_bones = {});

/// Every vertex bound with weight 1 to `bone`.
SkinWeights rigid_skin_weights(std::size_t vertex_count, std::size_t bone);

/// Linear blend skinning: v' = sum_b w_b (posed_b * bind_b^-1)(v).
std::vector<Vec3> skin_vertices(std::span<const Vec3> vertices, const SkinWeights& weights,
                                std::span<const RigidTransform> bind_globals,
                                std::span<const RigidTransform> posed_globals);
mesh::TriMesh skin(const mesh::TriMesh& mesh, const SkinWeights& weights, std::span<const RigidTransform> bind_globals,
                   std::span<const RigidTransform> posed_globals);

struct RigidFit
{
  RigidTransform transform;
  double residual_rms = 0.0;  // mm
};

/// Least-squares rigid alignment (Kabsch) of bind points onto observed points.
/// Throws InputError on fewer than 3 points or a collinear configuration.
RigidFit fit_rigid(std::span<const Vec3> bind_points, std::span<const Vec3> observed_points);

}  // namespace artic::rig
