#include "artic/rig.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <Eigen/SVD>

#include "artic/error.hpp"

namespace artic::rig {

namespace {

/// Model-space frame of a bone from head to tail: x-axis along the bone.
RigidTransform frame_between(const Vec3& head, const Vec3& tail)
{
  RigidTransform t;
  t.rotation = Quat::FromTwoVectors(Vec3::UnitX(), (tail - head).normalized()).normalized();
  t.translation = head;
  return t;
}

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b)
{
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

}  // namespace

Armature::Armature(std::vector<Bone> bones) : bones_(std::move(bones))
{
  std::set<std::string, std::less<>> ids;
  for (std::size_t i = 0; i < bones_.size(); ++i) {
    const Bone& b = bones_[i];
    if (b.id.empty() || !ids.insert(b.id).second) {
      throw InputError("bone id '" + b.id + "' is empty or repeated");
    }
    if (b.parent && *b.parent >= i) {
      throw InputError("bone '" + b.id + "' must come after its parent");
    }
    if (!(b.length > 0.0) || !std::isfinite(b.length)) {
      throw InputError("bone '" + b.id + "' needs a positive length");
    }
    if (std::abs(b.rest_local.rotation.norm() - 1.0) > 1e-9 || !b.rest_local.translation.allFinite()) {
      throw InputError("bone '" + b.id + "' has a non-rigid rest transform");
    }
  }
}

std::optional<std::size_t> Armature::index_of(std::string_view id) const
{
  for (std::size_t i = 0; i < bones_.size(); ++i) {
    if (bones_[i].id == id) {
      return i;
    }
  }
  return std::nullopt;
}

std::size_t Armature::require_index(std::string_view id) const
{
  if (auto i = index_of(id)) {
    return *i;
  }
  throw InputError("armature has no bone '" + std::string(id) + "'");
}

std::vector<RigidTransform> Armature::bind_globals() const
{
  return forward_kinematics(*this, Pose::bind(*this));
}

Armature merge(const Armature& a, const Armature& b)
{
  std::vector<Bone> bones = a.bones();
  const std::size_t shift = bones.size();
  for (Bone bone : b.bones()) {
    if (bone.parent) {
      *bone.parent += shift;
    }
    bones.push_back(std::move(bone));
  }
  return Armature(std::move(bones));
}

Pose Pose::bind(const Armature& armature)
{
  Pose p;
  p.rotations.assign(armature.size(), Quat::Identity());
  p.translations.assign(armature.size(), Vec3::Zero());
  return p;
}

bool Pose::operator==(const Pose& o) const
{
  if (rotations.size() != o.rotations.size() || translations != o.translations) {
    return false;
  }
  for (std::size_t i = 0; i < rotations.size(); ++i) {
    if (rotations[i].coeffs() != o.rotations[i].coeffs()) {
      return false;
    }
  }
  return true;
}

void check_pose(const Armature& armature, const Pose& pose)
{
  if (pose.rotations.size() != armature.size() || pose.translations.size() != armature.size()) {
    throw std::invalid_argument("pose has " + std::to_string(pose.rotations.size()) + " rotations for " +
                                std::to_string(armature.size()) + " bones");
  }
  for (std::size_t i = 0; i < pose.rotations.size(); ++i) {
    if (std::abs(pose.rotations[i].norm() - 1.0) > 1e-9) {
      throw std::invalid_argument("pose rotation of bone '" + armature.bone(i).id + "' is not unit length");
    }
  }
}

std::vector<RigidTransform> forward_kinematics(const Armature& armature, const Pose& pose)
{
  check_pose(armature, pose);
  std::vector<RigidTransform> globals(armature.size());
  for (std::size_t i = 0; i < armature.size(); ++i) {
    const Bone& b = armature.bone(i);
    RigidTransform local = b.rest_local;
    local.rotation = (local.rotation * pose.rotations[i]).normalized();
    if (b.parent) {
      globals[i] = globals[*b.parent] * local;
    } else {
      local.translation += pose.translations[i];
      globals[i] = local;
    }
  }
  return globals;
}

std::string tongue_bone_id(std::size_t i) { return "tongue" + std::to_string(i); }

Armature build_tongue_armature(std::span<const Vec3> coils, double root_offset_mm)
{
  if (coils.size() < 2) {
    throw InputError("tongue armature needs at least 2 coils, got " + std::to_string(coils.size()));
  }
  if (!(root_offset_mm > 0.0)) {
    throw InputError("tongue root offset must be positive");
  }
  for (std::size_t i = 0; i + 1 < coils.size(); ++i) {
    if ((coils[i + 1] - coils[i]).norm() < 1e-6) {
      throw InputError("tongue coils " + std::to_string(i) + " and " + std::to_string(i + 1) + " coincide");
    }
  }

  const Vec3 dir0 = (coils[1] - coils[0]).normalized();
  std::vector<Vec3> joints;
  joints.push_back(coils[0] - root_offset_mm * dir0);
  joints.insert(joints.end(), coils.begin(), coils.end());

  std::vector<Bone> bones;
  RigidTransform parent_global;
  for (std::size_t i = 0; i + 1 < joints.size(); ++i) {
    const RigidTransform global = frame_between(joints[i], joints[i + 1]);
    Bone b;
    b.id = tongue_bone_id(i);
    b.length = (joints[i + 1] - joints[i]).norm();
    if (i == 0) {
      b.rest_local = global;
    } else {
      b.parent = i - 1;
      b.rest_local = parent_global.inverse() * global;
    }
    parent_global = global;
    bones.push_back(std::move(b));
  }
  return Armature(std::move(bones));
}

Armature build_jaw_armature(const Vec3& jaw_coil_bind, const Vec3& hinge_point)
{
  const double length = (jaw_coil_bind - hinge_point).norm();
  if (length < 1e-6) {
    throw InputError("jaw coil and hinge point coincide");
  }
  Bone b;
  b.id = std::string(kJawBoneId);
  b.length = length;
  b.rest_local = frame_between(hinge_point, jaw_coil_bind);
  return Armature({std::move(b)});
}

void check_skin_weights(const SkinWeights& weights, std::size_t vertex_count, const Armature& armature)
{
  if (weights.per_vertex.size() != vertex_count) {
    throw std::invalid_argument("skin weights cover " + std::to_string(weights.per_vertex.size()) + " of " +
                                std::to_string(vertex_count) + " vertices");
  }
  for (std::size_t v = 0; v < vertex_count; ++v) {
    const auto& inf = weights.per_vertex[v];
    if (inf.empty() || inf.size() > kMaxInfluences) {
      throw std::invalid_argument("vertex " + std::to_string(v) + " has " + std::to_string(inf.size()) +
                                  " influences");
    }
    double sum = 0.0;
    for (const Influence& i : inf) {
      if (i.bone >= armature.size() || !(i.weight >= 0.0)) {
        throw std::invalid_argument("vertex " + std::to_string(v) + " has an invalid influence");
      }
      sum += i.weight;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw std::invalid_argument("weights of vertex " + std::to_string(v) + " sum to " + std::to_string(sum));
    }
  }
}

double distance_to_bone(const Armature& armature, std::span<const RigidTransform> bind_globals, std::size_t bone,
                        const Vec3& p)
{
  const Vec3 head = bind_globals[bone].translation;
  const Vec3 tail = bone_tail(armature, bind_globals, bone);
  return point_segment_distance(p, head, tail);
}

SkinWeights compute_skin_weights(const mesh::TriMesh& mesh, const Armature& armature, double falloff_sigma_mm,
                                 std::span<const std::size_t> candidate_bones)
{
  if (mesh.vertex_count() == 0) {
    throw InputError("cannot skin an empty mesh");
  }
  if (!(falloff_sigma_mm > 0.0)) {
    throw InputError("skin falloff sigma must be positive");
  }
  if (armature.empty()) {
    throw InputError("cannot skin to an empty armature");
  }
  std::vector<std::size_t> bones(candidate_bones.begin(), candidate_bones.end());
  if (bones.empty()) {
    for (std::size_t i = 0; i < armature.size(); ++i) {
      bones.push_back(i);
    }
  }
  for (auto b : bones) {
    if (b >= armature.size()) {
      throw std::invalid_argument("candidate bone index out of range");
    }
  }
  std::sort(bones.begin(), bones.end());
  bones.erase(std::unique(bones.begin(), bones.end()), bones.end());

  const auto bind = armature.bind_globals();
  const double cutoff = 6.0 * falloff_sigma_mm;
  const double two_sigma2 = 2.0 * falloff_sigma_mm * falloff_sigma_mm;

  SkinWeights out;
  out.per_vertex.reserve(mesh.vertex_count());
  std::vector<std::pair<double, std::size_t>> dist(bones.size());
  for (const Vec3& v : mesh.vertices()) {
    for (std::size_t k = 0; k < bones.size(); ++k) {
      dist[k] = {distance_to_bone(armature, bind, bones[k], v), bones[k]};
    }
    // Nearest first; ties by lower bone index.
    std::sort(dist.begin(), dist.end());
    std::vector<Influence> inf;
    if (dist.front().first > cutoff) {
      inf.push_back({static_cast<std::uint32_t>(dist.front().second), 1.0});
      out.per_vertex.push_back(std::move(inf));
      continue;
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < dist.size() && inf.size() < kMaxInfluences; ++k) {
      const double w = std::exp(-dist[k].first * dist[k].first / two_sigma2);
      if (w <= 0.0) {
        break;
      }
      inf.push_back({static_cast<std::uint32_t>(dist[k].second), w});
      sum += w;
    }
    for (Influence& i : inf) {
      i.weight /= sum;
    }
    out.per_vertex.push_back(std::move(inf));
  }
  return out;
}

SkinWeights rigid_skin_weights(std::size_t vertex_count, std::size_t bone)
{
  SkinWeights w;
  w.per_vertex.assign(vertex_count, {Influence{static_cast<std::uint32_t>(bone), 1.0}});
  return w;
}

std::vector<Vec3> skin_vertices(std::span<const Vec3> vertices, const SkinWeights& weights,
                                std::span<const RigidTransform> bind_globals,
                                std::span<const RigidTransform> posed_globals)
{
  if (weights.per_vertex.size() != vertices.size() || bind_globals.size() != posed_globals.size()) {
    throw std::invalid_argument("skin: weights, bind, and posed transforms do not match");
  }
  std::vector<RigidTransform> delta(bind_globals.size());
  for (std::size_t b = 0; b < delta.size(); ++b) {
    delta[b] = posed_globals[b] * bind_globals[b].inverse();
  }
  std::vector<Vec3> out(vertices.size());
  for (std::size_t v = 0; v < vertices.size(); ++v) {
    Vec3 acc = Vec3::Zero();
    for (const Influence& i : weights.per_vertex[v]) {
      if (i.bone >= delta.size()) {
        throw std::invalid_argument("skin: influence references a missing bone");
      }
      acc += i.weight * delta[i.bone].apply(vertices[v]);
    }
    out[v] = acc;
  }
  return out;
}

mesh::TriMesh skin(const mesh::TriMesh& mesh, const SkinWeights& weights, std::span<const RigidTransform> bind_globals,
                   std::span<const RigidTransform> posed_globals)
{
  return mesh.with_vertices(skin_vertices(mesh.vertices(), weights, bind_globals, posed_globals));
}

RigidFit fit_rigid(std::span<const Vec3> bind_points, std::span<const Vec3> observed_points)
{
  if (bind_points.size() != observed_points.size()) {
    throw std::invalid_argument("fit_rigid: point counts differ");
  }
  if (bind_points.size() < 3) {
    throw InputError("rigid fit needs at least 3 correspondences");
  }
  const auto n = static_cast<double>(bind_points.size());
  Vec3 cp = Vec3::Zero();
  Vec3 cq = Vec3::Zero();
  for (std::size_t i = 0; i < bind_points.size(); ++i) {
    cp += bind_points[i];
    cq += observed_points[i];
  }
  cp /= n;
  cq /= n;
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < bind_points.size(); ++i) {
    h += (bind_points[i] - cp) * (observed_points[i] - cq).transpose();
  }
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  // Three points span a plane, so rank 2 is the minimum for a unique fit.
  if (svd.singularValues()[1] < 1e-9) {
    throw InputError("rigid fit configuration is collinear or degenerate");
  }
  const Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Eigen::Matrix3d r = v * d * u.transpose();

  RigidFit fit;
  fit.transform.rotation = Quat(r).normalized();
  fit.transform.translation = cq - fit.transform.rotation * cp;
  double sq = 0.0;
  for (std::size_t i = 0; i < bind_points.size(); ++i) {
    sq += (fit.transform.apply(bind_points[i]) - observed_points[i]).squaredNorm();
  }
  fit.residual_rms = std::sqrt(sq / n);
  return fit;
}

}  // namespace artic::rig
