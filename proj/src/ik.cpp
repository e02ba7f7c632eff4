#include "artic/ik.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "artic/error.hpp"

namespace artic::ik {

namespace {

constexpr int kMaxHalvings = 8;
constexpr double kMinImprovementMm = 1e-9;

bool position_active(const IkTarget& t) { return t.valid && t.position_weight > 0.0; }
bool orientation_active(const IkTarget& t)
{
  return t.valid && t.orientation_weight > 0.0 && t.target_orientation.has_value();
}

std::size_t row_count(std::span<const IkTarget> targets)
{
  std::size_t rows = 0;
  for (const auto& t : targets) {
    rows += position_active(t) ? 3 : 0;
    rows += orientation_active(t) ? 3 : 0;
  }
  return rows;
}

/// Weighted stacked effector features (positions, then axes where active).
Eigen::VectorXd features(const rig::Armature& armature, const rig::Pose& pose, std::span<const IkTarget> targets,
                         std::size_t rows)
{
  const auto globals = rig::forward_kinematics(armature, pose);
  Eigen::VectorXd f(static_cast<Eigen::Index>(rows));
  Eigen::Index r = 0;
  for (const auto& t : targets) {
    if (position_active(t)) {
      f.segment<3>(r) = t.position_weight * effector_position(armature, globals, t.effector);
      r += 3;
    }
    if (orientation_active(t)) {
      f.segment<3>(r) = t.orientation_weight * bone_axis(globals, t.effector.bone);
      r += 3;
    }
  }
  return f;
}

Eigen::VectorXd goals(std::span<const IkTarget> targets, std::size_t rows)
{
  Eigen::VectorXd g(static_cast<Eigen::Index>(rows));
  Eigen::Index r = 0;
  for (const auto& t : targets) {
    if (position_active(t)) {
      g.segment<3>(r) = t.position_weight * t.target_position;
      r += 3;
    }
    if (orientation_active(t)) {
      g.segment<3>(r) = t.orientation_weight * t.target_orientation->normalized();
      r += 3;
    }
  }
  return g;
}

double swing_limit(const IkConfig& config, std::size_t bone)
{
  if (bone < config.max_swing_rad.size()) {
    return config.max_swing_rad[bone];
  }
  return std::numeric_limits<double>::infinity();
}

/// Returns q unchanged when within the swing limit, else q scaled back onto it.
Quat clamp_swing(const Quat& q, double limit)
{
  if (!std::isfinite(limit)) {
    return q;
  }
  const Vec3 rv = quat_log(q);
  const double angle = rv.norm();
  return angle > limit ? quat_exp(rv * (limit / angle)) : q;
}

/// Right-multiplies a local rotation update and enforces the swing limit.
Quat apply_update(const Quat& q, const Vec3& delta, double limit)
{
  return clamp_swing((q * quat_exp(delta)).normalized(), limit);
}

}  // namespace

Vec3 effector_position(const rig::Armature& armature, std::span<const RigidTransform> globals, const Effector& e)
{
  return globals[e.bone].apply(armature.bone(e.bone).tail_local() + e.offset);
}

void check_config(const IkConfig& config)
{
  if (config.max_iterations < 1) {
    throw InputError("ik max_iterations must be at least 1");
  }
  if (!(config.tolerance_mm > 0.0) || !(config.damping_lambda > 0.0) || !(config.step_clamp_rad > 0.0) ||
      !(config.fd_step_rad > 0.0)) {
    throw InputError("ik tolerance, damping, step clamp, and finite-difference step must be positive");
  }
  for (double limit : config.max_swing_rad) {
    if (!(limit >= 0.0)) {
      throw InputError("ik joint limits must be non-negative");
    }
  }
}

double position_residual(const rig::Armature& armature, const rig::Pose& pose, std::span<const IkTarget> targets)
{
  const auto globals = rig::forward_kinematics(armature, pose);
  double worst = 0.0;
  for (const auto& t : targets) {
    if (position_active(t)) {
      worst = std::max(worst, (effector_position(armature, globals, t.effector) - t.target_position).norm());
    }
  }
  return worst;
}

SolveResult solve_frame(const rig::Armature& armature, const rig::Pose& seed, std::span<const IkTarget> targets,
                        const IkConfig& config)
{
  check_config(config);
  rig::check_pose(armature, seed);
  for (const auto& t : targets) {
    if (t.effector.bone >= armature.size()) {
      throw std::invalid_argument("ik target references a missing bone");
    }
    if (t.position_weight < 0.0 || t.orientation_weight < 0.0) {
      throw std::invalid_argument("ik target weights must be non-negative");
    }
  }

  SolveResult result;
  result.pose = seed;
  for (std::size_t b = 0; b < armature.size(); ++b) {
    result.pose.rotations[b] = clamp_swing(seed.rotations[b], swing_limit(config, b));
  }
  result.residual_mm = position_residual(armature, result.pose, targets);

  const std::size_t rows = row_count(targets);
  const auto cols = static_cast<Eigen::Index>(3 * armature.size());
  if (rows == 0) {
    result.converged = true;
    return result;
  }
  const Eigen::VectorXd goal = goals(targets, rows);
  const double h = config.fd_step_rad;
  const double lambda2 = config.damping_lambda * config.damping_lambda;

  for (int it = 0; it < config.max_iterations; ++it) {
    if (result.residual_mm <= config.tolerance_mm) {
      break;
    }
    const rig::Pose& pose = result.pose;
    const Eigen::VectorXd r = goal - features(armature, pose, targets, rows);

    Eigen::MatrixXd jac(static_cast<Eigen::Index>(rows), cols);
    rig::Pose probe = pose;
    for (std::size_t b = 0; b < armature.size(); ++b) {
      for (int k = 0; k < 3; ++k) {
        const Vec3 step = Vec3::Unit(k) * h;
        probe.rotations[b] = (pose.rotations[b] * quat_exp(step)).normalized();
        const Eigen::VectorXd fp = features(armature, probe, targets, rows);
        probe.rotations[b] = (pose.rotations[b] * quat_exp(-step)).normalized();
        const Eigen::VectorXd fm = features(armature, probe, targets, rows);
        probe.rotations[b] = pose.rotations[b];
        jac.col(static_cast<Eigen::Index>(3 * b) + k) = (fp - fm) / (2.0 * h);
      }
    }

    Eigen::MatrixXd normal = jac * jac.transpose();
    normal.diagonal().array() += lambda2;
    Eigen::VectorXd delta = jac.transpose() * normal.ldlt().solve(r);
    // Scale the whole step so no joint turns more than the clamp; clamping
    // joints independently would bend the step off the descent direction.
    double largest = 0.0;
    for (std::size_t b = 0; b < armature.size(); ++b) {
      largest = std::max(largest, delta.segment<3>(static_cast<Eigen::Index>(3 * b)).norm());
    }
    if (largest > config.step_clamp_rad) {
      delta *= config.step_clamp_rad / largest;
    }

    bool accepted = false;
    rig::Pose candidate = pose;
    double candidate_residual = result.residual_mm;
    double scale = 1.0;
    for (int halving = 0; halving <= kMaxHalvings; ++halving, scale *= 0.5) {
      for (std::size_t b = 0; b < armature.size(); ++b) {
        const Vec3 d = scale * delta.segment<3>(static_cast<Eigen::Index>(3 * b));
        candidate.rotations[b] = apply_update(pose.rotations[b], d, swing_limit(config, b));
      }
      candidate_residual = position_residual(armature, candidate, targets);
      if (candidate_residual <= result.residual_mm) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      break;
    }
    const double improvement = result.residual_mm - candidate_residual;
    result.pose = std::move(candidate);
    result.residual_mm = candidate_residual;
    result.iterations_used = it + 1;
    if (improvement < kMinImprovementMm) {
      break;
    }
  }
  result.converged = result.residual_mm <= config.tolerance_mm;
  return result;
}

void check_clip(const rig::Armature& armature, const AnimationClip& clip)
{
  const std::size_t n = clip.poses.size();
  if (!(clip.frame_rate_hz > 0.0)) {
    throw std::invalid_argument("clip frame rate must be positive");
  }
  if (clip.residuals_mm.size() != n || clip.iterations.size() != n || clip.held.size() != n) {
    throw std::invalid_argument("clip per-frame arrays differ in length");
  }
  for (const auto& p : clip.poses) {
    rig::check_pose(armature, p);
  }
}

AnimationClip solve_sequence(const rig::Armature& armature, std::span<const TargetFrame> frames,
                             const IkConfig& config, double frame_rate_hz)
{
  if (frames.empty()) {
    throw InputError("cannot solve an empty target sequence");
  }
  if (!(frame_rate_hz > 0.0)) {
    throw InputError("frame rate must be positive");
  }
  const TargetFrame& first = frames.front();
  for (const auto& f : frames) {
    if (f.size() != first.size()) {
      throw std::invalid_argument("target frames differ in topology");
    }
    for (std::size_t j = 0; j < f.size(); ++j) {
      if (!(f[j].effector == first[j].effector)) {
        throw std::invalid_argument("target frames differ in topology");
      }
    }
  }

  AnimationClip clip;
  clip.frame_rate_hz = frame_rate_hz;
  clip.poses.reserve(frames.size());

  std::vector<std::optional<IkTarget>> last_valid(first.size());
  rig::Pose seed = rig::Pose::bind(armature);
  for (const auto& frame : frames) {
    TargetFrame resolved = frame;
    bool held = false;
    for (std::size_t j = 0; j < frame.size(); ++j) {
      if (frame[j].valid) {
        last_valid[j] = frame[j];
      } else if (last_valid[j]) {
        resolved[j] = *last_valid[j];
        held = true;
      } else {
        held = true;
      }
    }
    SolveResult r = solve_frame(armature, seed, resolved, config);
    clip.residuals_mm.push_back(r.residual_mm);
    clip.iterations.push_back(static_cast<std::uint32_t>(r.iterations_used));
    clip.held.push_back(held ? 1 : 0);
    seed = r.pose;
    clip.poses.push_back(std::move(r.pose));
  }
  return clip;
}

AttachedTargets attach_targets(const rig::Armature& armature, std::span<const ema::CoilRole> roles,
                               const ema::EmaTrajectory& traj, const RigidTransform& registration,
                               const std::map<std::string, TargetWeights, std::less<>>& weights)
{
  ema::check_roles(roles);
  ema::check_trajectory(traj);

  std::vector<int> chain;
  for (const auto& r : roles) {
    if (r.articulator == ema::Articulator::tongue) {
      chain.push_back(*r.chain_index);
    }
  }
  std::sort(chain.begin(), chain.end());

  AttachedTargets out;
  std::vector<std::size_t> columns;
  for (const auto& r : roles) {
    if (r.articulator != ema::Articulator::tongue && r.articulator != ema::Articulator::jaw) {
      continue;
    }
    const auto col = traj.coil_index(r.coil_id);
    if (!col) {
      throw InputError("coil '" + r.coil_id + "' has a role but is missing from the trajectory");
    }
    TargetBinding binding;
    binding.coil_id = r.coil_id;
    if (r.articulator == ema::Articulator::tongue) {
      const auto rank = static_cast<std::size_t>(std::lower_bound(chain.begin(), chain.end(), *r.chain_index) -
                                                 chain.begin());
      const auto bone = armature.index_of(rig::tongue_bone_id(rank));
      if (!bone) {
        throw InputError("tongue coil '" + r.coil_id + "' has no rigged chain bone");
      }
      binding.effector.bone = *bone;
    } else {
      const auto bone = armature.index_of(rig::kJawBoneId);
      if (!bone) {
        throw InputError("jaw coil '" + r.coil_id + "' has no rigged jaw bone");
      }
      binding.effector.bone = *bone;
    }
    if (const auto it = weights.find(r.coil_id); it != weights.end()) {
      binding.weights = it->second;
    }
    if (binding.weights.position < 0.0 || binding.weights.orientation < 0.0) {
      throw InputError("coil '" + r.coil_id + "' has a negative target weight");
    }
    if (binding.weights.position == 0.0 && binding.weights.orientation == 0.0) {
      continue;
    }
    out.topology.push_back(std::move(binding));
    columns.push_back(*col);
  }

  out.frames.reserve(traj.frame_count());
  for (const auto& frame : traj.frames) {
    TargetFrame tf;
    tf.reserve(out.topology.size());
    for (std::size_t j = 0; j < out.topology.size(); ++j) {
      const ema::CoilSample& s = frame[columns[j]];
      IkTarget t;
      t.effector = out.topology[j].effector;
      t.position_weight = out.topology[j].weights.position;
      t.orientation_weight = out.topology[j].weights.orientation;
      t.valid = s.valid;
      if (s.valid) {
        t.target_position = registration.apply(s.position);
        if (t.orientation_weight > 0.0) {
          t.target_orientation = registration.rotate(s.orientation).normalized();
        }
      }
      tf.push_back(std::move(t));
    }
    out.frames.push_back(std::move(tf));
  }
  return out;
}

ema::EmaTrajectory dump_targets(const rig::Armature& armature, const AnimationClip& clip,
                                std::span<const TargetBinding> topology, double rate_hz)
{
  check_clip(armature, clip);
  if (clip.poses.empty()) {
    throw std::invalid_argument("cannot dump an empty clip");
  }
  if (!(rate_hz > 0.0)) {
    throw std::invalid_argument("dump rate must be positive");
  }
  ema::EmaTrajectory out;
  out.sample_rate_hz = rate_hz;
  for (const auto& b : topology) {
    if (b.effector.bone >= armature.size()) {
      throw std::invalid_argument("target binding references a missing bone");
    }
    out.coil_ids.push_back(b.coil_id);
  }
  out.frames.reserve(clip.poses.size());
  for (std::size_t f = 0; f < clip.poses.size(); ++f) {
    const auto globals = rig::forward_kinematics(armature, clip.poses[f]);
    std::vector<ema::CoilSample> frame;
    frame.reserve(topology.size());
    for (const auto& b : topology) {
      ema::CoilSample s;
      s.position = effector_position(armature, globals, b.effector);
      s.orientation = bone_axis(globals, b.effector.bone).normalized();
      s.rms_error = clip.residuals_mm[f];
      s.valid = true;
      frame.push_back(s);
    }
    out.frames.push_back(std::move(frame));
  }
  return out;
}

}  // namespace artic::ik
