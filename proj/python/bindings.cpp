#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "artic/asset.hpp"
#include "artic/compiler.hpp"
#include "artic/error.hpp"
#include "artic/mesh.hpp"
#include "artic/synth.hpp"

namespace py = pybind11;
using namespace artic;

namespace {

py::array_t<double> points_array(const std::vector<Vec3>& pts)
{
  py::array_t<double> out({static_cast<py::ssize_t>(pts.size()), py::ssize_t{3}});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      m(static_cast<py::ssize_t>(i), k) = pts[i][k];
    }
  }
  return out;
}

py::array_t<std::uint32_t> triangles_array(const mesh::TriMesh& mesh)
{
  py::array_t<std::uint32_t> out({static_cast<py::ssize_t>(mesh.triangle_count()), py::ssize_t{3}});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < mesh.triangle_count(); ++i) {
    for (int k = 0; k < 3; ++k) {
      m(static_cast<py::ssize_t>(i), k) = mesh.triangles()[i][k];
    }
  }
  return out;
}

std::vector<Vec3> to_points(const py::array_t<double, py::array::c_style | py::array::forcecast>& a)
{
  if (a.ndim() != 2 || a.shape(1) != 3) {
    throw InputError("expected an (N, 3) array of points");
  }
  auto r = a.unchecked<2>();
  std::vector<Vec3> out(static_cast<std::size_t>(a.shape(0)));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    out[static_cast<std::size_t>(i)] = Vec3(r(i, 0), r(i, 1), r(i, 2));
  }
  return out;
}

mesh::TriMesh to_mesh(const py::array_t<double, py::array::c_style | py::array::forcecast>& vertices,
                      const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& triangles)
{
  if (triangles.ndim() != 2 || triangles.shape(1) != 3) {
    throw InputError("expected an (M, 3) array of triangle indices");
  }
  auto r = triangles.unchecked<2>();
  std::vector<mesh::Triangle> tris(static_cast<std::size_t>(triangles.shape(0)));
  for (py::ssize_t i = 0; i < triangles.shape(0); ++i) {
    for (int k = 0; k < 3; ++k) {
      if (r(i, k) < 0) {
        throw InputError("triangle indices must be non-negative");
      }
      tris[static_cast<std::size_t>(i)][k] = static_cast<std::uint32_t>(r(i, k));
    }
  }
  return {to_points(vertices), std::move(tris)};
}

py::dict lifecycle_dict(const compiler::LifecycleReport& r)
{
  py::list phases;
  for (const auto& p : r.phases) {
    py::dict d;
    d["name"] = p.name;
    d["status"] = std::string(compiler::to_string(p.status));
    d["failure"] = std::string(compiler::to_string(p.failure));
    d["diagnostic"] = p.diagnostic;
    d["seconds"] = p.seconds;
    phases.append(d);
  }
  py::list gates;
  for (const auto& g : r.gates) {
    py::dict d;
    d["name"] = g.name;
    d["metric"] = g.metric;
    d["threshold"] = g.threshold;
    d["measured"] = g.measured;
    d["pass"] = g.pass;
    gates.append(d);
  }
  py::dict out;
  out["exit_code"] = r.exit_code();
  out["phases"] = phases;
  out["gates"] = gates;
  out["config_sha256"] = r.config_sha256;
  out["asset_sha256"] = r.asset_sha256;
  return out;
}

}  // namespace

PYBIND11_MODULE(_artic, m)
{
  m.doc() = "Articulatory model compiler core";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);

  m.def("version", [] { return std::string(compiler::tool_version()); });

  m.def(
      "compile",
      [](const std::filesystem::path& config, std::optional<std::filesystem::path> out,
         std::optional<std::filesystem::path> report_dir) {
        compiler::CompileResult r;
        {
          py::gil_scoped_release release;
          r = compiler::compile_file(config, {std::move(out), std::move(report_dir)});
        }
        return lifecycle_dict(r.report);
      },
      py::arg("config"), py::arg("out") = py::none(), py::arg("report_dir") = py::none(),
      "Run the compile lifecycle. Returns exit_code, phases and gates.");

  m.def(
      "synth",
      [](const std::string& scenario, const std::filesystem::path& out_dir, std::size_t frames, std::uint64_t seed) {
        return synth::write_fixture(synth::scenario_from_string(scenario), {frames, seed}, out_dir);
      },
      py::arg("scenario"), py::arg("out_dir"), py::arg("frames") = 0, py::arg("seed") = 0);

  m.def(
      "parse_obj",
      [](const std::string& text) {
        const auto mesh = mesh::parse_obj(text);
        return py::make_tuple(points_array(mesh.vertices()), triangles_array(mesh));
      },
      py::arg("text"), "Returns (vertices (N,3) float64, triangles (M,3) uint32).");

  m.def(
      "closest_points",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& vertices,
         const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& triangles,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& queries) {
        const mesh::Bvh bvh(to_mesh(vertices, triangles));
        const auto q = to_points(queries);
        std::vector<Vec3> points(q.size());
        py::array_t<double> dist(static_cast<py::ssize_t>(q.size()));
        py::array_t<std::int64_t> tri(static_cast<py::ssize_t>(q.size()));
        py::array_t<bool> back(static_cast<py::ssize_t>(q.size()));
        auto d = dist.mutable_unchecked<1>();
        auto t = tri.mutable_unchecked<1>();
        auto b = back.mutable_unchecked<1>();
        for (std::size_t i = 0; i < q.size(); ++i) {
          const auto r = bvh.closest_point(q[i]);
          const auto j = static_cast<py::ssize_t>(i);
          points[i] = r.closest_point;
          d(j) = r.distance;
          t(j) = static_cast<std::int64_t>(r.triangle_index);
          b(j) = r.side == mesh::Side::back;
        }
        return py::make_tuple(dist, points_array(points), tri, back);
      },
      py::arg("vertices"), py::arg("triangles"), py::arg("queries"),
      "Returns (distance, closest point, triangle index, back side) per query.");

  py::class_<asset::AnimatedModelAsset>(m, "Asset")
      .def_static("read", &asset::read_asset, py::arg("path"))
      .def_property_readonly("frame_count", [](const asset::AnimatedModelAsset& a) { return a.clip.frame_count(); })
      .def_property_readonly("frame_rate_hz", [](const asset::AnimatedModelAsset& a) { return a.clip.frame_rate_hz; })
      .def_property_readonly("mesh_names",
                             [](const asset::AnimatedModelAsset& a) {
                               std::vector<std::string> names;
                               for (const auto& e : a.meshes) {
                                 names.push_back(e.name);
                               }
                               return names;
                             })
      .def_property_readonly("bone_ids",
                             [](const asset::AnimatedModelAsset& a) {
                               std::vector<std::string> ids;
                               for (const auto& b : a.armature.bones()) {
                                 ids.push_back(b.id);
                               }
                               return ids;
                             })
      .def_property_readonly("coil_ids",
                             [](const asset::AnimatedModelAsset& a) {
                               std::vector<std::string> ids;
                               for (const auto& t : a.targets) {
                                 ids.push_back(t.coil_id);
                               }
                               return ids;
                             })
      .def_property_readonly("residuals_mm",
                             [](const asset::AnimatedModelAsset& a) {
                               return py::array_t<double>(static_cast<py::ssize_t>(a.clip.residuals_mm.size()),
                                                          a.clip.residuals_mm.data());
                             })
      .def(
          "target_positions",
          [](const asset::AnimatedModelAsset& a, std::size_t frame) {
            if (frame >= a.target_positions.size()) {
              throw InputError("frame is outside the clip");
            }
            return points_array(a.target_positions[frame]);
          },
          py::arg("frame"))
      .def(
          "triangles",
          [](const asset::AnimatedModelAsset& a, const std::string& name) {
            const auto* e = a.find_mesh(name);
            if (!e) {
              throw InputError("asset has no mesh '" + name + "'");
            }
            return triangles_array(e->mesh);
          },
          py::arg("name"))
      .def(
          "posed_vertices",
          [](const asset::AnimatedModelAsset& a, const std::string& name, std::size_t frame) {
            return points_array(asset::posed_mesh(a, name, frame).vertices());
          },
          py::arg("name"), py::arg("frame"));
}
