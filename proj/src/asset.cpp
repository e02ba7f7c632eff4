#include "artic/asset.hpp"

#include <cstring>
#include <map>

#include "artic/error.hpp"
#include "artic/hash.hpp"
#include "json.hpp"

namespace artic::asset {

using Json = nlohmann::ordered_json;

namespace {

constexpr std::uint32_t kNoBone = 0xffffffffU;

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 json_vec(const Json& j)
{
  if (!j.is_array() || j.size() != 3) {
    throw InputError("expected a 3-vector in asset manifest");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json quat_json(const Quat& q) { return Json::array({q.w(), q.x(), q.y(), q.z()}); }

Quat json_quat(const Json& j)
{
  if (!j.is_array() || j.size() != 4) {
    throw InputError("expected a quaternion [w, x, y, z] in asset manifest");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

/// Appends typed arrays to one buffer and records their views.
class BufferWriter
{
public:
  std::string add_f64(std::string name, const std::vector<double>& values, std::vector<std::uint64_t> shape)
  {
    std::vector<std::uint8_t> bytes(values.size() * 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, &values[i], 8);
      for (int b = 0; b < 8; ++b) {
        bytes[8 * i + b] = static_cast<std::uint8_t>((bits >> (8 * b)) & 0xffU);
      }
    }
    return add(std::move(name), "f64", bytes, std::move(shape));
  }

  std::string add_u32(std::string name, const std::vector<std::uint32_t>& values, std::vector<std::uint64_t> shape)
  {
    std::vector<std::uint8_t> bytes(values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
      for (int b = 0; b < 4; ++b) {
        bytes[4 * i + b] = static_cast<std::uint8_t>((values[i] >> (8 * b)) & 0xffU);
      }
    }
    return add(std::move(name), "u32", bytes, std::move(shape));
  }

  std::string add_u8(std::string name, const std::vector<std::uint8_t>& values, std::vector<std::uint64_t> shape)
  {
    return add(std::move(name), "u8", values, std::move(shape));
  }

  const std::vector<BufferView>& views() const { return views_; }
  std::vector<std::uint8_t>& buffer() { return buffer_; }

private:
  std::string add(std::string name, std::string dtype, const std::vector<std::uint8_t>& bytes,
                  std::vector<std::uint64_t> shape)
  {
    BufferView v;
    v.name = name;
    v.dtype = std::move(dtype);
    v.shape = std::move(shape);
    v.offset = buffer_.size();
    v.length = bytes.size();
    v.sha256 = sha256_hex(std::span(bytes));
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
    views_.push_back(std::move(v));
    return name;
  }

  std::vector<std::uint8_t> buffer_;
  std::vector<BufferView> views_;
};

std::size_t dtype_size(std::string_view dtype)
{
  if (dtype == "f64") return 8;
  if (dtype == "u32") return 4;
  if (dtype == "u8") return 1;
  throw InputError("unknown buffer dtype '" + std::string(dtype) + "'");
}

class BufferReader
{
public:
  BufferReader(const Json& manifest, std::span<const std::uint8_t> buffer) : buffer_(buffer)
  {
    for (const auto& v : manifest.at("views")) {
      BufferView view;
      view.name = v.at("name").get<std::string>();
      view.dtype = v.at("dtype").get<std::string>();
      view.shape = v.at("shape").get<std::vector<std::uint64_t>>();
      view.offset = v.at("offset").get<std::uint64_t>();
      view.length = v.at("length").get<std::uint64_t>();
      view.sha256 = v.at("sha256").get<std::string>();
      std::uint64_t count = 1;
      for (auto s : view.shape) {
        count *= s;
      }
      if (view.length != count * dtype_size(view.dtype)) {
        throw InputError("buffer view '" + view.name + "' length does not match its shape");
      }
      if (view.offset > buffer.size() || view.length > buffer.size() - view.offset) {
        throw IntegrityError("buffer view '" + view.name + "' lies outside the buffer");
      }
      if (sha256_hex(buffer.subspan(view.offset, view.length)) != view.sha256) {
        throw IntegrityError("buffer view '" + view.name + "' failed its integrity check");
      }
      views_.emplace(view.name, view);
    }
  }

  std::vector<double> f64(const std::string& name, std::uint64_t expected_count) const
  {
    const BufferView& v = view(name, "f64", expected_count);
    std::vector<double> out(v.length / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) {
        bits |= static_cast<std::uint64_t>(buffer_[v.offset + 8 * i + b]) << (8 * b);
      }
      std::memcpy(&out[i], &bits, 8);
    }
    return out;
  }

  std::vector<std::uint32_t> u32(const std::string& name, std::uint64_t expected_count) const
  {
    const BufferView& v = view(name, "u32", expected_count);
    std::vector<std::uint32_t> out(v.length / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
      std::uint32_t x = 0;
      for (int b = 0; b < 4; ++b) {
        x |= static_cast<std::uint32_t>(buffer_[v.offset + 4 * i + b]) << (8 * b);
      }
      out[i] = x;
    }
    return out;
  }

  std::vector<std::uint8_t> u8(const std::string& name, std::uint64_t expected_count) const
  {
    const BufferView& v = view(name, "u8", expected_count);
    return {buffer_.begin() + static_cast<std::ptrdiff_t>(v.offset),
            buffer_.begin() + static_cast<std::ptrdiff_t>(v.offset + v.length)};
  }

private:
  const BufferView& view(const std::string& name, std::string_view dtype, std::uint64_t expected_count) const
  {
    const auto it = views_.find(name);
    if (it == views_.end()) {
      throw InputError("asset manifest references missing buffer view '" + name + "'");
    }
    if (it->second.dtype != dtype || it->second.length != expected_count * dtype_size(dtype)) {
      throw InputError("buffer view '" + name + "' has an unexpected type or size");
    }
    return it->second;
  }

  std::span<const std::uint8_t> buffer_;
  std::map<std::string, BufferView> views_;
};

}  // namespace

const MeshEntry* AnimatedModelAsset::find_mesh(std::string_view name) const
{
  for (const auto& m : meshes) {
    if (m.name == name) {
      return &m;
    }
  }
  return nullptr;
}

const CoilMarker* AnimatedModelAsset::find_coil(std::string_view id) const
{
  for (const auto& c : coils) {
    if (c.coil_id == id) {
      return &c;
    }
  }
  return nullptr;
}

void check_asset(const AnimatedModelAsset& asset)
{
  try {
    for (const auto& m : asset.meshes) {
      if (m.weights) {
        rig::check_skin_weights(*m.weights, m.mesh.vertex_count(), asset.armature);
      }
    }
    ik::check_clip(asset.armature, asset.clip);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("asset does not match its armature: ") + e.what());
  }
  const std::size_t frames = asset.clip.frame_count();
  if (asset.target_positions.size() != frames || asset.target_valid.size() != frames) {
    throw InputError("asset target arrays do not cover every clip frame");
  }
  for (std::size_t f = 0; f < frames; ++f) {
    if (asset.target_positions[f].size() != asset.targets.size() ||
        asset.target_valid[f].size() != asset.targets.size()) {
      throw InputError("asset target arrays do not match the target bindings");
    }
  }
  for (const auto& t : asset.targets) {
    if (t.effector.bone >= asset.armature.size()) {
      throw InputError("target binding for coil '" + t.coil_id + "' references a missing bone");
    }
    if (!asset.find_coil(t.coil_id)) {
      throw InputError("target binding references unknown coil '" + t.coil_id + "'");
    }
  }
  for (const auto& c : asset.coils) {
    if (c.mesh && !asset.find_mesh(*c.mesh)) {
      throw InputError("coil '" + c.coil_id + "' references missing mesh '" + *c.mesh + "'");
    }
  }
  if (asset.provenance.config_sha256.empty() || asset.provenance.tool_version.empty()) {
    throw InputError("asset provenance is incomplete");
  }
  for (const auto& in : asset.provenance.inputs) {
    if (in.sha256.empty()) {
      throw InputError("asset provenance lacks a hash for '" + in.path + "'");
    }
  }
}

SerializedAsset serialize_asset(const AnimatedModelAsset& asset, std::string_view buffer_uri)
{
  check_asset(asset);
  BufferWriter w;
  Json j;
  j["schema"] = kAssetSchema;
  j["tool_version"] = asset.provenance.tool_version;

  Json meshes = Json::array();
  for (const auto& m : asset.meshes) {
    std::vector<double> verts;
    verts.reserve(3 * m.mesh.vertex_count());
    for (const Vec3& v : m.mesh.vertices()) {
      verts.insert(verts.end(), {v.x(), v.y(), v.z()});
    }
    std::vector<std::uint32_t> tris;
    tris.reserve(3 * m.mesh.triangle_count());
    for (const auto& t : m.mesh.triangles()) {
      tris.insert(tris.end(), t.begin(), t.end());
    }
    Json jm;
    jm["name"] = m.name;
    jm["vertices"] = w.add_f64("mesh." + m.name + ".vertices", verts, {m.mesh.vertex_count(), 3});
    jm["triangles"] = w.add_u32("mesh." + m.name + ".triangles", tris, {m.mesh.triangle_count(), 3});
    if (m.weights) {
      std::vector<std::uint32_t> bones(rig::kMaxInfluences * m.mesh.vertex_count(), kNoBone);
      std::vector<double> weights(rig::kMaxInfluences * m.mesh.vertex_count(), 0.0);
      for (std::size_t v = 0; v < m.weights->per_vertex.size(); ++v) {
        const auto& inf = m.weights->per_vertex[v];
        for (std::size_t k = 0; k < inf.size(); ++k) {
          bones[rig::kMaxInfluences * v + k] = inf[k].bone;
          weights[rig::kMaxInfluences * v + k] = inf[k].weight;
        }
      }
      Json skin;
      skin["bones"] = w.add_u32("mesh." + m.name + ".skin_bones", bones, {m.mesh.vertex_count(), rig::kMaxInfluences});
      skin["weights"] =
          w.add_f64("mesh." + m.name + ".skin_weights", weights, {m.mesh.vertex_count(), rig::kMaxInfluences});
      jm["skin"] = skin;
    } else {
      jm["skin"] = nullptr;
    }
    meshes.push_back(jm);
  }
  j["meshes"] = meshes;

  Json bones = Json::array();
  for (const auto& b : asset.armature.bones()) {
    Json jb;
    jb["id"] = b.id;
    jb["parent"] = b.parent ? Json(asset.armature.bone(*b.parent).id) : Json(nullptr);
    jb["rest_rotation_wxyz"] = quat_json(b.rest_local.rotation);
    jb["rest_translation"] = vec_json(b.rest_local.translation);
    jb["length"] = b.length;
    bones.push_back(jb);
  }
  j["armature"] = {{"bones", bones}};

  const std::size_t frames = asset.clip.frame_count();
  const std::size_t nb = asset.armature.size();
  std::vector<double> rot;
  std::vector<double> trans;
  rot.reserve(frames * nb * 4);
  trans.reserve(frames * nb * 3);
  for (const auto& p : asset.clip.poses) {
    for (std::size_t b = 0; b < nb; ++b) {
      const Quat& q = p.rotations[b];
      rot.insert(rot.end(), {q.w(), q.x(), q.y(), q.z()});
      const Vec3& t = p.translations[b];
      trans.insert(trans.end(), {t.x(), t.y(), t.z()});
    }
  }
  Json clip;
  clip["frame_rate_hz"] = asset.clip.frame_rate_hz;
  clip["frame_count"] = frames;
  clip["rotations_wxyz"] = w.add_f64("clip.rotations", rot, {frames, nb, 4});
  clip["translations"] = w.add_f64("clip.translations", trans, {frames, nb, 3});
  clip["residuals_mm"] = w.add_f64("clip.residuals_mm", asset.clip.residuals_mm, {frames});
  clip["iterations"] = w.add_u32("clip.iterations", asset.clip.iterations, {frames});
  clip["held"] = w.add_u8("clip.held", asset.clip.held, {frames});
  j["clip"] = clip;

  Json coils = Json::array();
  for (const auto& c : asset.coils) {
    Json jc;
    jc["id"] = c.coil_id;
    jc["articulator"] = ema::to_string(c.articulator);
    jc["chain_index"] = c.chain_index ? Json(*c.chain_index) : Json(nullptr);
    jc["bind_position"] = vec_json(c.bind_position);
    jc["mesh"] = c.mesh ? Json(*c.mesh) : Json(nullptr);
    coils.push_back(jc);
  }
  j["coils"] = coils;

  Json bindings = Json::array();
  for (const auto& t : asset.targets) {
    Json jt;
    jt["coil"] = t.coil_id;
    jt["bone"] = asset.armature.bone(t.effector.bone).id;
    jt["offset"] = vec_json(t.effector.offset);
    jt["position_weight"] = t.weights.position;
    jt["orientation_weight"] = t.weights.orientation;
    bindings.push_back(jt);
  }
  std::vector<double> tpos;
  std::vector<std::uint8_t> tvalid;
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t k = 0; k < asset.targets.size(); ++k) {
      const Vec3& p = asset.target_positions[f][k];
      tpos.insert(tpos.end(), {p.x(), p.y(), p.z()});
      tvalid.push_back(asset.target_valid[f][k]);
    }
  }
  Json targets;
  targets["bindings"] = bindings;
  targets["positions"] = w.add_f64("targets.positions", tpos, {frames, asset.targets.size(), 3});
  targets["valid"] = w.add_u8("targets.valid", tvalid, {frames, asset.targets.size()});
  j["targets"] = targets;

  Json inputs = Json::array();
  for (const auto& in : asset.provenance.inputs) {
    inputs.push_back({{"role", in.role}, {"path", in.path}, {"sha256", in.sha256}});
  }
  j["provenance"] = {{"config_sha256", asset.provenance.config_sha256}, {"inputs", inputs}};

  Json views = Json::array();
  for (const auto& v : w.views()) {
    views.push_back({{"name", v.name},
                     {"dtype", v.dtype},
                     {"shape", v.shape},
                     {"offset", v.offset},
                     {"length", v.length},
                     {"sha256", v.sha256}});
  }
  SerializedAsset out;
  out.buffer = std::move(w.buffer());
  j["buffer"] = {{"uri", std::string(buffer_uri)},
                 {"byte_length", out.buffer.size()},
                 {"sha256", sha256_hex(std::span(out.buffer))}};
  j["views"] = views;
  out.manifest = j.dump(2) + "\n";
  return out;
}

std::vector<BufferView> manifest_views(std::string_view manifest)
{
  const Json j = Json::parse(manifest);
  std::vector<BufferView> out;
  for (const auto& v : j.at("views")) {
    BufferView view;
    view.name = v.at("name").get<std::string>();
    view.dtype = v.at("dtype").get<std::string>();
    view.shape = v.at("shape").get<std::vector<std::uint64_t>>();
    view.offset = v.at("offset").get<std::uint64_t>();
    view.length = v.at("length").get<std::uint64_t>();
    view.sha256 = v.at("sha256").get<std::string>();
    out.push_back(std::move(view));
  }
  return out;
}

AnimatedModelAsset deserialize_asset(std::string_view manifest, std::span<const std::uint8_t> buffer)
{
  Json j;
  try {
    j = Json::parse(manifest);
  } catch (const Json::parse_error& e) {
    throw InputError(std::string("asset manifest is not valid JSON: ") + e.what());
  }
  try {
    const auto schema = j.at("schema").get<std::string>();
    if (schema != kAssetSchema) {
      throw UnsupportedVersionError("unsupported asset schema '" + schema + "' (expected " +
                                    std::string(kAssetSchema) + ")");
    }
    const auto& jb = j.at("buffer");
    if (jb.at("byte_length").get<std::uint64_t>() != buffer.size()) {
      throw IntegrityError("buffer '" + jb.at("uri").get<std::string>() + "' is " + std::to_string(buffer.size()) +
                           " bytes; manifest declares " + std::to_string(jb.at("byte_length").get<std::uint64_t>()));
    }
    const BufferReader r(j, buffer);
    if (sha256_hex(buffer) != jb.at("sha256").get<std::string>()) {
      throw IntegrityError("buffer '" + jb.at("uri").get<std::string>() + "' failed its integrity check");
    }

    AnimatedModelAsset a;
    a.provenance.tool_version = j.at("tool_version").get<std::string>();

    std::vector<rig::Bone> bones;
    std::map<std::string, std::size_t> bone_index;
    for (const auto& b : j.at("armature").at("bones")) {
      rig::Bone bone;
      bone.id = b.at("id").get<std::string>();
      if (!b.at("parent").is_null()) {
        const auto it = bone_index.find(b.at("parent").get<std::string>());
        if (it == bone_index.end()) {
          throw InputError("bone '" + bone.id + "' references an unknown or later parent");
        }
        bone.parent = it->second;
      }
      bone.rest_local.rotation = json_quat(b.at("rest_rotation_wxyz"));
      bone.rest_local.translation = json_vec(b.at("rest_translation"));
      bone.length = b.at("length").get<double>();
      bone_index[bone.id] = bones.size();
      bones.push_back(std::move(bone));
    }
    a.armature = rig::Armature(std::move(bones));
    const std::size_t nb = a.armature.size();

    for (const auto& jm : j.at("meshes")) {
      MeshEntry m;
      m.name = jm.at("name").get<std::string>();
      const auto& vview = jm.at("vertices").get<std::string>();
      const auto& tview = jm.at("triangles").get<std::string>();
      std::uint64_t nv = 0;
      std::uint64_t nt = 0;
      for (const auto& v : j.at("views")) {
        if (v.at("name") == vview) nv = v.at("shape").at(0).get<std::uint64_t>();
        if (v.at("name") == tview) nt = v.at("shape").at(0).get<std::uint64_t>();
      }
      const auto verts = r.f64(vview, nv * 3);
      const auto tris = r.u32(tview, nt * 3);
      std::vector<Vec3> vv(nv);
      for (std::size_t i = 0; i < nv; ++i) {
        vv[i] = {verts[3 * i], verts[3 * i + 1], verts[3 * i + 2]};
      }
      std::vector<mesh::Triangle> tt(nt);
      for (std::size_t i = 0; i < nt; ++i) {
        tt[i] = {tris[3 * i], tris[3 * i + 1], tris[3 * i + 2]};
      }
      m.mesh = mesh::TriMesh(std::move(vv), std::move(tt));
      if (!jm.at("skin").is_null()) {
        const auto sb = r.u32(jm.at("skin").at("bones").get<std::string>(), nv * rig::kMaxInfluences);
        const auto sw = r.f64(jm.at("skin").at("weights").get<std::string>(), nv * rig::kMaxInfluences);
        rig::SkinWeights w;
        w.per_vertex.resize(nv);
        for (std::size_t v = 0; v < nv; ++v) {
          for (std::size_t k = 0; k < rig::kMaxInfluences; ++k) {
            const std::uint32_t bone = sb[rig::kMaxInfluences * v + k];
            if (bone != kNoBone) {
              w.per_vertex[v].push_back({bone, sw[rig::kMaxInfluences * v + k]});
            }
          }
        }
        m.weights = std::move(w);
      }
      a.meshes.push_back(std::move(m));
    }

    const auto& jc = j.at("clip");
    const auto frames = jc.at("frame_count").get<std::uint64_t>();
    a.clip.frame_rate_hz = jc.at("frame_rate_hz").get<double>();
    const auto rot = r.f64(jc.at("rotations_wxyz").get<std::string>(), frames * nb * 4);
    const auto trans = r.f64(jc.at("translations").get<std::string>(), frames * nb * 3);
    a.clip.residuals_mm = r.f64(jc.at("residuals_mm").get<std::string>(), frames);
    a.clip.iterations = r.u32(jc.at("iterations").get<std::string>(), frames);
    a.clip.held = r.u8(jc.at("held").get<std::string>(), frames);
    a.clip.poses.resize(frames);
    for (std::size_t f = 0; f < frames; ++f) {
      rig::Pose& p = a.clip.poses[f];
      p.rotations.resize(nb);
      p.translations.resize(nb);
      for (std::size_t b = 0; b < nb; ++b) {
        const double* q = rot.data() + (f * nb + b) * 4;
        p.rotations[b] = Quat(q[0], q[1], q[2], q[3]);
        const double* t = trans.data() + (f * nb + b) * 3;
        p.translations[b] = Vec3(t[0], t[1], t[2]);
      }
    }

    for (const auto& c : j.at("coils")) {
      CoilMarker m;
      m.coil_id = c.at("id").get<std::string>();
      m.articulator = ema::articulator_from_string(c.at("articulator").get<std::string>());
      if (!c.at("chain_index").is_null()) {
        m.chain_index = c.at("chain_index").get<int>();
      }
      m.bind_position = json_vec(c.at("bind_position"));
      if (!c.at("mesh").is_null()) {
        m.mesh = c.at("mesh").get<std::string>();
      }
      a.coils.push_back(std::move(m));
    }

    const auto& jt = j.at("targets");
    for (const auto& b : jt.at("bindings")) {
      ik::TargetBinding t;
      t.coil_id = b.at("coil").get<std::string>();
      t.effector.bone = a.armature.require_index(b.at("bone").get<std::string>());
      t.effector.offset = json_vec(b.at("offset"));
      t.weights.position = b.at("position_weight").get<double>();
      t.weights.orientation = b.at("orientation_weight").get<double>();
      a.targets.push_back(std::move(t));
    }
    const std::size_t nt = a.targets.size();
    const auto tpos = r.f64(jt.at("positions").get<std::string>(), frames * nt * 3);
    const auto tvalid = r.u8(jt.at("valid").get<std::string>(), frames * nt);
    a.target_positions.assign(frames, std::vector<Vec3>(nt));
    a.target_valid.assign(frames, std::vector<std::uint8_t>(nt));
    for (std::size_t f = 0; f < frames; ++f) {
      for (std::size_t k = 0; k < nt; ++k) {
        const double* p = tpos.data() + (f * nt + k) * 3;
        a.target_positions[f][k] = Vec3(p[0], p[1], p[2]);
        a.target_valid[f][k] = tvalid[f * nt + k];
      }
    }

    const auto& jp = j.at("provenance");
    a.provenance.config_sha256 = jp.at("config_sha256").get<std::string>();
    for (const auto& in : jp.at("inputs")) {
      a.provenance.inputs.push_back(
          {in.at("role").get<std::string>(), in.at("path").get<std::string>(), in.at("sha256").get<std::string>()});
    }
    check_asset(a);
    return a;
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed asset manifest: ") + e.what());
  }
}

std::filesystem::path buffer_path_for(const std::filesystem::path& manifest_path)
{
  std::filesystem::path p = manifest_path;
  p.replace_extension(".bin");
  if (p == manifest_path) {
    p += ".bin";
  }
  return p;
}

void write_asset(const AnimatedModelAsset& asset, const std::filesystem::path& manifest_path)
{
  const auto buffer_path = buffer_path_for(manifest_path);
  const SerializedAsset s = serialize_asset(asset, buffer_path.filename().string());
  write_file_atomic(buffer_path, std::span(s.buffer));
  try {
    write_file_atomic(manifest_path, s.manifest);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(buffer_path, ec);
    throw;
  }
}

AnimatedModelAsset read_asset(const std::filesystem::path& manifest_path)
{
  const std::string manifest = read_file_text(manifest_path);
  std::string uri;
  try {
    const auto j = Json::parse(manifest);
    const auto schema = j.value("schema", std::string());
    if (schema != kAssetSchema) {
      throw UnsupportedVersionError("unsupported asset schema '" + schema + "' (expected " +
                                    std::string(kAssetSchema) + ")");
    }
    uri = j.at("buffer").at("uri").get<std::string>();
  } catch (const Json::exception& e) {
    throw InputError("'" + manifest_path.string() + "' is not an asset manifest: " + e.what());
  }
  const auto buffer = read_file_bytes(manifest_path.parent_path() / uri);
  return deserialize_asset(manifest, buffer);
}

std::vector<std::string> verify_inputs(const AnimatedModelAsset& asset, const std::filesystem::path& base_dir)
{
  std::vector<std::string> mismatches;
  for (const auto& in : asset.provenance.inputs) {
    const auto path = base_dir / in.path;
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) {
      mismatches.push_back(in.path + " (missing)");
      continue;
    }
    const auto bytes = read_file_bytes(path);
    if (sha256_hex(std::span(bytes)) != in.sha256) {
      mismatches.push_back(in.path);
    }
  }
  return mismatches;
}

mesh::TriMesh posed_mesh(const AnimatedModelAsset& asset, std::string_view name, std::size_t frame)
{
  const MeshEntry* m = asset.find_mesh(name);
  if (!m) {
    throw InputError("asset has no mesh '" + std::string(name) + "'");
  }
  if (!m->weights) {
    return m->mesh;
  }
  if (frame >= asset.clip.frame_count()) {
    throw InputError("frame " + std::to_string(frame) + " is outside the clip (" +
                     std::to_string(asset.clip.frame_count()) + " frames)");
  }
  const auto bind = asset.armature.bind_globals();
  const auto posed = rig::forward_kinematics(asset.armature, asset.clip.poses[frame]);
  return rig::skin(m->mesh, *m->weights, bind, posed);
}

}  // namespace artic::asset
