#include "artic/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "artic/error.hpp"
#include "text_util.hpp"

namespace artic::mesh {

namespace {

constexpr double kMinArea = 1e-12;

Aabb triangle_box(const TriMesh& m, std::size_t t)
{
  Aabb b;
  for (const Vec3& p : m.corners(t)) {
    b.extend(p);
  }
  return b;
}

/// Fractional part of x in [0, 1).
double frac(double x) { return x - std::floor(x); }

std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit_from_bits(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

SurfaceDistanceStats reduce(std::span<const double> d)
{
  SurfaceDistanceStats s;
  s.sample_count = d.size();
  if (d.empty()) {
    return s;
  }
  double sum = 0.0;
  double sq = 0.0;
  for (double v : d) {
    sum += v;
    sq += v * v;
    s.max = std::max(s.max, v);
  }
  const auto n = static_cast<double>(d.size());
  s.mean = std::min(sum / n, s.max);
  s.rms = std::sqrt(sq / n);
  return s;
}

}  // namespace

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c)
{
  return 0.5 * (b - a).cross(c - a).norm();
}

TriMesh::TriMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles)
  : vertices_(std::move(vertices)), triangles_(std::move(triangles))
{
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (!vertices_[i].allFinite()) {
      throw InputError("vertex " + std::to_string(i) + " is not finite");
    }
  }
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const Triangle& tri = triangles_[t];
    for (auto idx : tri) {
      if (idx >= vertices_.size()) {
        throw InputError("triangle " + std::to_string(t) + " references vertex " + std::to_string(idx) +
                         " of " + std::to_string(vertices_.size()));
      }
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      throw InputError("triangle " + std::to_string(t) + " repeats a vertex index");
    }
    const auto c = corners(t);
    if (triangle_area(c[0], c[1], c[2]) < kMinArea) {
      throw InputError("triangle " + std::to_string(t) + " is degenerate");
    }
  }
  compute_normals();
}

TriMesh TriMesh::with_vertices(std::vector<Vec3> vertices) const
{
  if (vertices.size() != vertices_.size()) {
    throw std::invalid_argument("with_vertices: vertex count mismatch");
  }
  TriMesh out;
  out.vertices_ = std::move(vertices);
  out.triangles_ = triangles_;
  out.compute_normals();
  return out;
}

void TriMesh::compute_normals()
{
  normals_.resize(triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto c = corners(t);
    const Vec3 n = (c[1] - c[0]).cross(c[2] - c[0]);
    const double len = n.norm();
    normals_[t] = len > 0.0 ? Vec3(n / len) : Vec3::Zero();
  }
}

// --- OBJ -------------------------------------------------------------------

TriMesh parse_obj(std::string_view text)
{
  const auto lines = detail::split_lines(text);
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<std::size_t> tri_lines;

  for (std::size_t li = 0; li < lines.size(); ++li) {
    std::string_view line = lines[li];
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const auto tok = detail::split_ws(line);
    if (tok.empty()) {
      continue;
    }
    const std::size_t lineno = li + 1;
    if (tok[0] == "v") {
      if (tok.size() < 4) {
        throw ParseError(lineno, "vertex needs 3 coordinates");
      }
      Vec3 p;
      for (int k = 0; k < 3; ++k) {
        const auto v = detail::parse_double(tok[1 + k]);
        if (!v || !std::isfinite(*v)) {
          throw ParseError(lineno, "non-numeric coordinate '" + std::string(tok[1 + k]) + "'");
        }
        p[k] = *v;
      }
      vertices.push_back(p);
    } else if (tok[0] == "f") {
      if (tok.size() < 4) {
        throw ParseError(lineno, "face needs at least 3 vertices");
      }
      std::vector<std::int64_t> idx;
      for (std::size_t k = 1; k < tok.size(); ++k) {
        const std::string_view head = tok[k].substr(0, tok[k].find('/'));
        const auto v = detail::parse_int(head);
        if (!v || *v == 0) {
          throw ParseError(lineno, "bad face index '" + std::string(tok[k]) + "'");
        }
        const auto count = static_cast<std::int64_t>(vertices.size());
        const std::int64_t zero_based = *v > 0 ? *v - 1 : count + *v;
        if (zero_based < 0) {
          throw ParseError(lineno, "face index " + std::string(head) + " out of range");
        }
        idx.push_back(zero_based);
      }
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
        for (auto i : {idx[0], idx[k], idx[k + 1]}) {
          if (i > std::numeric_limits<std::uint32_t>::max()) {
            throw ParseError(lineno, "face index out of range");
          }
        }
        triangles.push_back({static_cast<std::uint32_t>(idx[0]), static_cast<std::uint32_t>(idx[k]),
                             static_cast<std::uint32_t>(idx[k + 1])});
        tri_lines.push_back(lineno);
      }
    }
  }

  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const Triangle& tri = triangles[t];
    for (auto i : tri) {
      if (i >= vertices.size()) {
        throw ParseError(tri_lines[t], "face index " + std::to_string(i + 1) + " out of range (" +
                                           std::to_string(vertices.size()) + " vertices)");
      }
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] ||
        triangle_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) < kMinArea) {
      throw ParseError(tri_lines[t], "degenerate triangle");
    }
  }
  return TriMesh(std::move(vertices), std::move(triangles));
}

std::string write_obj(const TriMesh& mesh)
{
  std::string out;
  for (const Vec3& v : mesh.vertices()) {
    out += "v " + detail::format_double(v.x()) + " " + detail::format_double(v.y()) + " " +
           detail::format_double(v.z()) + "\n";
  }
  for (const Triangle& t : mesh.triangles()) {
    out += "f " + std::to_string(t[0] + 1) + " " + std::to_string(t[1] + 1) + " " + std::to_string(t[2] + 1) + "\n";
  }
  return out;
}

// --- closest point ---------------------------------------------------------

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c)
{
  // Voronoi-region walk over vertices, edges, then the face interior.
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) {
    return a;
  }

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) {
    return b;
  }

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    return a + (d1 / (d1 - d3)) * ab;
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) {
    return c;
  }

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    return a + (d2 / (d2 - d6)) * ac;
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return a + ab * v + ac * w;
}

Bvh::Bvh(TriMesh mesh, std::size_t leaf_size) : mesh_(std::move(mesh))
{
  if (mesh_.empty()) {
    throw InputError("cannot build a BVH over an empty mesh");
  }
  const std::size_t n = mesh_.triangle_count();
  tri_boxes_.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    tri_boxes_.push_back(triangle_box(mesh_, t));
  }
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0U);
  nodes_.reserve(2 * n);
  build(0, static_cast<std::uint32_t>(n), std::max<std::size_t>(leaf_size, 1));
}

std::uint32_t Bvh::build(std::uint32_t first, std::uint32_t count, std::size_t leaf_size)
{
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Aabb box;
  Aabb centroids;
  for (std::uint32_t i = first; i < first + count; ++i) {
    box.extend(tri_boxes_[order_[i]]);
    centroids.extend(0.5 * (tri_boxes_[order_[i]].lo + tri_boxes_[order_[i]].hi));
  }
  nodes_[index].box = box;
  if (count <= leaf_size) {
    nodes_[index].first = first;
    nodes_[index].count = count;
    return index;
  }

  int axis = 0;
  const Vec3 extent = centroids.hi - centroids.lo;
  if (extent.y() > extent[axis]) axis = 1;
  if (extent.z() > extent[axis]) axis = 2;
  const std::uint32_t mid = first + count / 2;
  std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                   [&](std::uint32_t l, std::uint32_t r) {
                     const double cl = tri_boxes_[l].lo[axis] + tri_boxes_[l].hi[axis];
                     const double cr = tri_boxes_[r].lo[axis] + tri_boxes_[r].hi[axis];
                     return cl < cr || (cl == cr && l < r);
                   });
  const std::uint32_t left = build(first, mid - first, leaf_size);
  const std::uint32_t right = build(mid, first + count - mid, leaf_size);
  nodes_[index].first = left;
  nodes_[index].count = 0;
  nodes_[index].right = right;
  return index;
}

std::size_t Bvh::leaf_count() const
{
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.count > 0; }));
}

DistanceQueryResult Bvh::closest_point(const Vec3& query) const
{
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_tri = 0;
  Vec3 best_point = Vec3::Zero();

  std::vector<std::uint32_t> stack;
  stack.reserve(64);
  stack.push_back(0);
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    // Boxes at exactly the best distance are still visited for the index tie-break.
    if (node.box.squared_distance(query) > best * best) {
      continue;
    }
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        const std::uint32_t t = order_[i];
        const auto c = mesh_.corners(t);
        const Vec3 cp = closest_point_on_triangle(query, c[0], c[1], c[2]);
        const double d = (query - cp).norm();
        if (d < best || (d == best && t < best_tri)) {
          best = d;
          best_tri = t;
          best_point = cp;
        }
      }
      continue;
    }
    const double dl = nodes_[node.first].box.squared_distance(query);
    const double dr = nodes_[node.right].box.squared_distance(query);
    // Push the farther child first so the nearer one is popped next.
    if (dl <= dr) {
      stack.push_back(node.right);
      stack.push_back(node.first);
    } else {
      stack.push_back(node.first);
      stack.push_back(node.right);
    }
  }

  DistanceQueryResult r;
  r.distance = best;
  r.closest_point = best_point;
  r.triangle_index = best_tri;
  r.side = (query - best_point).dot(mesh_.normals()[best_tri]) < 0.0 ? Side::back : Side::front;
  return r;
}

bool is_consistently_oriented(const TriMesh& mesh)
{
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  edges.reserve(3 * mesh.triangle_count());
  for (const Triangle& t : mesh.triangles()) {
    for (int k = 0; k < 3; ++k) {
      edges.emplace_back(t[k], t[(k + 1) % 3]);
    }
  }
  std::sort(edges.begin(), edges.end());
  return std::adjacent_find(edges.begin(), edges.end()) == edges.end();
}

double penetration_depth(const Bvh& surface, const Vec3& query)
{
  const DistanceQueryResult r = surface.closest_point(query);
  if (r.side == Side::front || r.distance == 0.0) {
    return 0.0;
  }
  return r.distance;
}

bool in_contact(const Bvh& surface, const Vec3& query, double contact_eps)
{
  const DistanceQueryResult r = surface.closest_point(query);
  return r.side == Side::front && r.distance <= contact_eps;
}

// --- surface comparison ----------------------------------------------------

std::vector<Vec3> surface_samples(const TriMesh& mesh, std::size_t samples_per_triangle, std::uint64_t seed)
{
  // R2 low-discrepancy sequence (generalized golden ratio), shifted by the seed.
  constexpr double g = 1.32471795724474602596;
  constexpr double a1 = 1.0 / g;
  constexpr double a2 = 1.0 / (g * g);
  const double off1 = seed == 0 ? 0.5 : unit_from_bits(splitmix64(seed));
  const double off2 = seed == 0 ? 0.5 : unit_from_bits(splitmix64(seed ^ 0x5bd1e995ULL));

  std::vector<Vec3> out(mesh.vertices());
  out.reserve(mesh.vertex_count() + mesh.triangle_count() * samples_per_triangle);
  std::uint64_t n = 0;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto c = mesh.corners(t);
    for (std::size_t k = 0; k < samples_per_triangle; ++k, ++n) {
      double u = frac(off1 + static_cast<double>(n) * a1);
      double v = frac(off2 + static_cast<double>(n) * a2);
      if (u + v > 1.0) {
        u = 1.0 - u;
        v = 1.0 - v;
      }
      out.push_back(c[0] + u * (c[1] - c[0]) + v * (c[2] - c[0]));
    }
  }
  return out;
}

SurfaceDistanceStats surface_distance_stats(const TriMesh& source, const Bvh& target,
                                            std::size_t samples_per_triangle, std::uint64_t seed)
{
  if (source.empty() || target.mesh().empty()) {
    throw InputError("surface distance needs two non-empty meshes");
  }
  if (samples_per_triangle < 1) {
    throw InputError("samples_per_triangle must be at least 1");
  }
  const auto samples = surface_samples(source, samples_per_triangle, seed);
  std::vector<double> d;
  d.reserve(samples.size());
  for (const Vec3& p : samples) {
    d.push_back(target.closest_point(p).distance);
  }
  return reduce(d);
}

SurfaceDistanceStats symmetric_surface_distance(const TriMesh& a, const TriMesh& b,
                                                std::size_t samples_per_triangle, std::uint64_t seed)
{
  if (a.empty() || b.empty()) {
    throw InputError("surface distance needs two non-empty meshes");
  }
  const Bvh bvh_a(a);
  const Bvh bvh_b(b);
  const SurfaceDistanceStats ab = surface_distance_stats(a, bvh_b, samples_per_triangle, seed);
  const SurfaceDistanceStats ba = surface_distance_stats(b, bvh_a, samples_per_triangle, seed);
  SurfaceDistanceStats s;
  s.mean = std::max(ab.mean, ba.mean);
  s.max = std::max(ab.max, ba.max);
  s.rms = std::max(ab.rms, ba.rms);
  s.sample_count = ab.sample_count + ba.sample_count;
  return s;
}

}  // namespace artic::mesh
