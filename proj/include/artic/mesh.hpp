#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "artic/geometry.hpp"

namespace artic::mesh {

using Triangle = std::array<std::uint32_t, 3>;

/// Indexed triangle surface in millimeters. Normals follow counter-clockwise
/// winding and are derived on construction.
class TriMesh
{
public:
  TriMesh() = default;

  /// Throws InputError on out-of-range or repeated indices and on triangles
  /// with area below 1e-12 mm^2.
  TriMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles);

  /// Same topology with new vertex positions. Degenerate triangles are
  /// tolerated here (they get a zero normal) since deformation can produce them.
  TriMesh with_vertices(std::vector<Vec3> vertices) const;

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Vec3>& normals() const { return normals_; }
  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t triangle_count() const { return triangles_.size(); }
  bool empty() const { return triangles_.empty(); }

  std::array<Vec3, 3> corners(std::size_t tri) const
  {
    const Triangle& t = triangles_[tri];
    return {vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]};
  }

  bool operator==(const TriMesh& o) const
  {
    return vertices_ == o.vertices_ && triangles_ == o.triangles_;
  }

private:
  void compute_normals();

  std::vector<Vec3> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Vec3> normals_;
};

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

/// False when some directed edge is used by two triangles, i.e. neighbours
/// disagree on winding (or an edge is non-manifold).
bool is_consistently_oriented(const TriMesh& mesh);

/// Wavefront OBJ subset: `v` and `f` records; polygons are fan-triangulated;
/// `i/t/n` face tokens use only the position index; everything else is ignored.
TriMesh parse_obj(std::string_view text);
std::string write_obj(const TriMesh& mesh);

enum class Side { front, back };

struct DistanceQueryResult
{
  double distance = 0.0;
  Vec3 closest_point = Vec3::Zero();
  std::size_t triangle_index = 0;
  Side side = Side::front;
};

/// Closest point on triangle (a, b, c) to p, covering vertex, edge, and face regions.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

struct Aabb
{
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p)
  {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const Aabb& b)
  {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  double squared_distance(const Vec3& p) const
  {
    const Vec3 d = (lo - p).cwiseMax(p - hi).cwiseMax(0.0);
    return d.squaredNorm();
  }
};

/// Axis-aligned bounding-box hierarchy over a mesh. Immutable after
/// construction; queries are safe from concurrent threads.
class Bvh
{
public:
  struct Node
  {
    Aabb box;
    std::uint32_t first = 0;  // leaf: offset into order; inner: left child index
    std::uint32_t count = 0;  // leaf: triangle count; inner: 0
    std::uint32_t right = 0;  // inner: right child index
  };

  /// Throws InputError for an empty mesh.
  explicit Bvh(TriMesh mesh, std::size_t leaf_size = 4);

  const TriMesh& mesh() const { return mesh_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const;

  /// Exact closest point; ties on distance resolve to the lowest triangle index.
  DistanceQueryResult closest_point(const Vec3& query) const;

private:
  std::uint32_t build(std::uint32_t first, std::uint32_t count, std::size_t leaf_size);

  TriMesh mesh_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
  std::vector<Aabb> tri_boxes_;
};

inline Bvh build_bvh(TriMesh mesh) { return Bvh(std::move(mesh)); }
inline DistanceQueryResult closest_point(const Bvh& bvh, const Vec3& query) { return bvh.closest_point(query); }

/// Depth of `query` behind an oriented surface: 0 on the front side or on the
/// surface, otherwise the distance to the surface.
double penetration_depth(const Bvh& surface, const Vec3& query);
/// Within `contact_eps` of the surface on its front side.
bool in_contact(const Bvh& surface, const Vec3& query, double contact_eps);

struct SurfaceDistanceStats
{
  double mean = 0.0;
  double max = 0.0;  // directed Hausdorff
  double rms = 0.0;
  std::size_t sample_count = 0;
};

/// Surface samples: every vertex, then `samples_per_triangle` low-discrepancy
/// interior points per triangle; `seed` shifts the sequence.
std::vector<Vec3> surface_samples(const TriMesh& mesh, std::size_t samples_per_triangle, std::uint64_t seed = 0);

/// Distances from the samples of `source` to the surface of `target`.
SurfaceDistanceStats surface_distance_stats(const TriMesh& source, const Bvh& target,
                                            std::size_t samples_per_triangle, std::uint64_t seed = 0);
/// Element-wise max of both directed stats (sample_count is the sum).
SurfaceDistanceStats symmetric_surface_distance(const TriMesh& a, const TriMesh& b,
                                                std::size_t samples_per_triangle, std::uint64_t seed = 0);

}  // namespace artic::mesh
