#pragma once

// Shared fixtures and independent oracles for the test suites.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "artic/geometry.hpp"
#include "artic/mesh.hpp"

namespace testing {

using artic::Vec3;

class TempDir
{
public:
  TempDir()
  {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("artic-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir()
  {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

inline double uniform(std::mt19937_64& rng, double lo, double hi)
{
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec3 random_vec(std::mt19937_64& rng, double extent)
{
  return {uniform(rng, -extent, extent), uniform(rng, -extent, extent), uniform(rng, -extent, extent)};
}

inline artic::Quat random_rotation(std::mt19937_64& rng)
{
  std::normal_distribution<double> n;
  artic::Quat q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q;
}

/// Triangle soup with `count` non-degenerate triangles inside a cube.
inline artic::mesh::TriMesh random_mesh(std::mt19937_64& rng, std::size_t count, double extent = 10.0)
{
  std::vector<Vec3> v;
  std::vector<artic::mesh::Triangle> t;
  while (t.size() < count) {
    const Vec3 a = random_vec(rng, extent);
    const Vec3 b = a + random_vec(rng, extent / 3);
    const Vec3 c = a + random_vec(rng, extent / 3);
    if (artic::mesh::triangle_area(a, b, c) < 1e-3) {
      continue;
    }
    const auto base = static_cast<std::uint32_t>(v.size());
    v.insert(v.end(), {a, b, c});
    t.push_back({base, base + 1, base + 2});
  }
  return {std::move(v), std::move(t)};
}

/// Closest point on segment ab.
inline Vec3 segment_closest(const Vec3& p, const Vec3& a, const Vec3& b)
{
  const Vec3 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return a + t * ab;
}

/// Closest point on a triangle by plane projection with a barycentric inside
/// test, falling back to the three edges.
inline Vec3 brute_triangle_closest(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c)
{
  const Vec3 n = (b - a).cross(c - a);
  const Vec3 proj = p - n * ((p - a).dot(n) / n.squaredNorm());
  const double area = n.norm();
  const double u = (c - b).cross(proj - b).dot(n) / (area * area);
  const double v = (a - c).cross(proj - c).dot(n) / (area * area);
  const double w = 1.0 - u - v;
  if (u >= 0 && v >= 0 && w >= 0) {
    return proj;
  }
  Vec3 best = segment_closest(p, a, b);
  for (const Vec3& q : {segment_closest(p, b, c), segment_closest(p, c, a)}) {
    if ((q - p).norm() < (best - p).norm()) {
      best = q;
    }
  }
  return best;
}

inline double brute_distance(const artic::mesh::TriMesh& m, const Vec3& p)
{
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m.triangle_count(); ++i) {
    const auto c = m.corners(i);
    best = std::min(best, (brute_triangle_closest(p, c[0], c[1], c[2]) - p).norm());
  }
  return best;
}

/// Regular grid in the plane z = `z`, `n` x `n` cells over [0, size]^2,
/// wound so the normal is +z (or -z when `down`).
inline artic::mesh::TriMesh grid_plane(std::size_t n, double size, double z, bool down = false)
{
  std::vector<Vec3> v;
  std::vector<artic::mesh::Triangle> t;
  for (std::size_t j = 0; j <= n; ++j) {
    for (std::size_t i = 0; i <= n; ++i) {
      v.push_back({size * static_cast<double>(i) / static_cast<double>(n),
                   size * static_cast<double>(j) / static_cast<double>(n), z});
    }
  }
  const auto idx = [n](std::size_t i, std::size_t j) { return static_cast<std::uint32_t>(j * (n + 1) + i); };
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = idx(i, j), b = idx(i + 1, j), c = idx(i + 1, j + 1), d = idx(i, j + 1);
      if (down) {
        t.push_back({a, c, b});
        t.push_back({a, d, c});
      } else {
        t.push_back({a, b, c});
        t.push_back({a, c, d});
      }
    }
  }
  return {std::move(v), std::move(t)};
}

}  // namespace testing

namespace testing {

inline void put_f32(std::vector<std::uint8_t>& out, float v)
{
  std::uint32_t bits = 0;
  std::memcpy(&bits, &v, 4);
  for (int b = 0; b < 4; ++b) {
    out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
  }
}

/// Well-formed articulograph buffer: finite float32 fields, elevation inside
/// (-90, 90), azimuth in (-180, 180], non-negative rms, extra field 0.
inline std::vector<std::uint8_t> random_pos_buffer(std::mt19937_64& rng, std::size_t frames, std::size_t channels)
{
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < frames * channels; ++i) {
    float phi = static_cast<float>(uniform(rng, -89.9, 89.9));
    float theta = static_cast<float>(uniform(rng, -179.9, 180.0));
    for (float v : {static_cast<float>(uniform(rng, -80, 80)), static_cast<float>(uniform(rng, -80, 80)),
                    static_cast<float>(uniform(rng, -80, 80)), phi, theta, static_cast<float>(uniform(rng, 0, 3)),
                    0.0F}) {
      put_f32(out, v);
    }
  }
  return out;
}

}  // namespace testing
