#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "artic/ema.hpp"
#include "artic/geometry.hpp"
#include "artic/rig.hpp"

namespace artic::ik {

/// A point rigidly attached to a bone: the bone tail plus `offset` in the
/// bone's local frame.
struct Effector
{
  std::size_t bone = 0;
  Vec3 offset = Vec3::Zero();

  bool operator==(const Effector&) const = default;
};

Vec3 effector_position(const rig::Armature& armature, std::span<const RigidTransform> globals, const Effector& e);
/// Unit tail direction of a bone.
inline Vec3 bone_axis(std::span<const RigidTransform> globals, std::size_t bone)
{
  return globals[bone].rotate(Vec3::UnitX());
}

struct IkTarget
{
  Effector effector;
  Vec3 target_position = Vec3::Zero();
  std::optional<Vec3> target_orientation;
  double position_weight = 1.0;
  double orientation_weight = 0.0;
  /// False when the source coil sample was invalid for this frame.
  bool valid = true;
};

struct IkConfig
{
  int max_iterations = 50;
  double tolerance_mm = 0.01;
  double damping_lambda = 0.1;
  double step_clamp_rad = 0.2;
  /// Optional per-bone bound on the rotation angle away from bind; empty or
  /// infinite entries mean unlimited.
  std::vector<double> max_swing_rad;
  double fd_step_rad = 1e-5;
};

/// Throws InputError for non-positive tolerance/damping/step or max_iterations < 1.
void check_config(const IkConfig& config);

struct SolveResult
{
  rig::Pose pose;
  double residual_mm = 0.0;  // max effector position error
  int iterations_used = 0;
  bool converged = false;
};

/// Max distance between weighted, valid effectors and their targets.
double position_residual(const rig::Armature& armature, const rig::Pose& pose, std::span<const IkTarget> targets);

/// Damped least-squares solve from `seed`. The Jacobian comes from central
/// differences over 3 exponential-map parameters per bone. A step that would
/// raise the residual is halved up to 8 times before the solve gives up.
SolveResult solve_frame(const rig::Armature& armature, const rig::Pose& seed, std::span<const IkTarget> targets,
                        const IkConfig& config);

using TargetFrame = std::vector<IkTarget>;

struct AnimationClip
{
  double frame_rate_hz = 200.0;
  std::vector<rig::Pose> poses;
  std::vector<double> residuals_mm;
  std::vector<std::uint32_t> iterations;
  /// Nonzero when at least one target was held from an earlier frame or dropped.
  std::vector<std::uint8_t> held;

  std::size_t frame_count() const { return poses.size(); }
  bool operator==(const AnimationClip&) const = default;
};

/// Throws std::invalid_argument when the clip does not fit the armature.
void check_clip(const rig::Armature& armature, const AnimationClip& clip);

/// Frame 0 starts from bind; frame k starts from frame k-1. Invalid targets
/// hold their last valid value (or drop out until one appears).
AnimationClip solve_sequence(const rig::Armature& armature, std::span<const TargetFrame> frames,
                             const IkConfig& config, double frame_rate_hz);

struct TargetWeights
{
  double position = 1.0;
  double orientation = 0.0;

  bool operator==(const TargetWeights&) const = default;
};

struct TargetBinding
{
  std::string coil_id;
  Effector effector;
  TargetWeights weights;

  bool operator==(const TargetBinding&) const = default;
};

struct AttachedTargets
{
  std::vector<TargetBinding> topology;
  std::vector<TargetFrame> frames;
};

/// Tongue coil of chain rank i drives the tail of chain bone i; the jaw coil
/// drives the jaw bone tail. Reference/other roles and coils whose weights are
/// both zero produce no target. Target positions are `registration` applied
/// to the coil positions.
AttachedTargets attach_targets(const rig::Armature& armature, std::span<const ema::CoilRole> roles,
                               const ema::EmaTrajectory& traj, const RigidTransform& registration,
                               const std::map<std::string, TargetWeights, std::less<>>& weights = {});

/// Re-samples the solved effectors as a trajectory: positions, bone tail
/// axes as orientation, and the frame residual as rms.
ema::EmaTrajectory dump_targets(const rig::Armature& armature, const AnimationClip& clip,
                                std::span<const TargetBinding> topology, double rate_hz);

}  // namespace artic::ik
