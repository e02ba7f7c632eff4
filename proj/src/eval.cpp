#include "artic/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <thread>

#include "artic/error.hpp"
#include "artic/hash.hpp"
#include "artic/rig.hpp"
#include "json.hpp"
#include "text_util.hpp"

namespace artic::eval {

using Json = nlohmann::ordered_json;

namespace {

/// Runs fn(frame) for every frame on a few worker threads. Results must be
/// stored per frame by the caller so the outcome does not depend on scheduling.
template <typename Fn>
void for_each_frame(std::size_t frames, Fn&& fn)
{
  const std::size_t workers =
      std::min<std::size_t>(std::max(1U, std::thread::hardware_concurrency()), std::max<std::size_t>(1, frames / 8));
  if (workers <= 1) {
    for (std::size_t f = 0; f < frames; ++f) {
      fn(f);
    }
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t f = w; f < frames; f += workers) {
          fn(f);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) {
    t.join();
  }
  for (auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
}

const asset::MeshEntry& require_mesh(const asset::AnimatedModelAsset& a, std::string_view name)
{
  const asset::MeshEntry* m = a.find_mesh(name);
  if (!m) {
    throw InputError("asset has no '" + std::string(name) + "' mesh");
  }
  return *m;
}

std::string fmt3(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string fmt_label(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

SeriesSummary summarize(std::span<const double> values)
{
  SeriesSummary s;
  if (values.empty()) {
    return s;
  }
  std::vector<double> sorted(values.begin(), values.end());
  for (double v : sorted) {
    if (std::isnan(v)) {
      throw std::invalid_argument("metric series contains NaN");
    }
  }
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  double sum = 0.0;
  double sq = 0.0;
  for (double v : values) {
    sum += v;
    sq += v * v;
  }
  const auto n = static_cast<double>(values.size());
  s.mean = sum / n;
  s.rms = std::sqrt(sq / n);
  const double rank = 0.95 * (n - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double t = rank - static_cast<double>(lo);
  s.p95 = sorted[lo] + t * (sorted[hi] - sorted[lo]);
  return s;
}

MetricSeries make_series(std::string name, std::string unit, std::vector<double> values,
                         std::optional<double> threshold)
{
  MetricSeries m;
  m.name = std::move(name);
  m.unit = std::move(unit);
  m.summary = summarize(values);
  m.values = std::move(values);
  m.threshold = threshold;
  return m;
}

Gate make_gate(std::string name, std::string metric, double threshold, double measured)
{
  return {std::move(name), std::move(metric), threshold, measured, measured <= threshold};
}

bool EvalReport::passed() const
{
  return std::all_of(gates.begin(), gates.end(), [](const Gate& g) { return g.pass; });
}

const MetricSeries* EvalReport::find_series(std::string_view name) const
{
  for (const auto& s : series) {
    if (s.name == name) {
      return &s;
    }
  }
  return nullptr;
}

const ScalarMetric* EvalReport::find_scalar(std::string_view name) const
{
  for (const auto& s : scalars) {
    if (s.name == name) {
      return &s;
    }
  }
  return nullptr;
}

void check_report(const EvalReport& report)
{
  for (const auto& s : report.series) {
    if (s.values.size() != report.frame_count) {
      throw std::invalid_argument("series '" + s.name + "' does not have one value per frame");
    }
  }
  for (const auto& g : report.gates) {
    double expected = 0.0;
    if (const auto* s = report.find_series(g.metric)) {
      expected = s->summary.max;
    } else if (const auto* c = report.find_scalar(g.metric)) {
      expected = c->value;
    } else {
      throw std::invalid_argument("gate '" + g.name + "' references unknown metric '" + g.metric + "'");
    }
    if (expected != g.measured || g.pass != (g.measured <= g.threshold)) {
      throw std::invalid_argument("gate '" + g.name + "' is inconsistent with its metric");
    }
  }
}

std::vector<MetricSeries> target_surface_distance(const asset::AnimatedModelAsset& asset)
{
  const std::size_t frames = asset.clip.frame_count();
  const std::size_t nt = asset.targets.size();
  std::vector<std::string> mesh_names;
  std::vector<std::size_t> mesh_of(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    const auto& id = asset.targets[k].coil_id;
    const asset::CoilMarker* c = asset.find_coil(id);
    if (!c || !c->mesh) {
      throw InputError("coil '" + id + "' is not mapped to a mesh");
    }
    require_mesh(asset, *c->mesh);
    auto it = std::find(mesh_names.begin(), mesh_names.end(), *c->mesh);
    mesh_of[k] = static_cast<std::size_t>(it - mesh_names.begin());
    if (it == mesh_names.end()) {
      mesh_names.push_back(*c->mesh);
    }
  }

  std::vector<std::vector<double>> d(nt, std::vector<double>(frames, 0.0));
  for_each_frame(frames, [&](std::size_t f) {
    for (std::size_t m = 0; m < mesh_names.size(); ++m) {
      const mesh::Bvh bvh(asset::posed_mesh(asset, mesh_names[m], f));
      for (std::size_t k = 0; k < nt; ++k) {
        if (mesh_of[k] == m) {
          d[k][f] = bvh.closest_point(asset.target_positions[f][k]).distance;
        }
      }
    }
  });

  std::vector<MetricSeries> out;
  for (std::size_t k = 0; k < nt; ++k) {
    out.push_back(make_series("target_distance." + asset.targets[k].coil_id, "mm", std::move(d[k])));
  }
  return out;
}

ContactSeries palate_contact(const asset::AnimatedModelAsset& asset, const mesh::TriMesh& palate,
                             double contact_eps_mm, std::size_t samples_per_triangle)
{
  if (palate.empty()) {
    throw InputError("palate mesh is empty");
  }
  if (!mesh::is_consistently_oriented(palate)) {
    throw InputError("palate mesh is not consistently oriented");
  }
  if (!(contact_eps_mm > 0.0)) {
    throw InputError("contact_eps must be positive");
  }
  require_mesh(asset, "tongue");
  const mesh::Bvh bvh(palate);
  const std::size_t frames = asset.clip.frame_count();
  std::vector<double> contact(frames, 0.0);
  std::vector<double> depth(frames, 0.0);
  for_each_frame(frames, [&](std::size_t f) {
    const mesh::TriMesh tongue = asset::posed_mesh(asset, "tongue", f);
    const std::vector<Vec3> points =
        samples_per_triangle > 0 ? mesh::surface_samples(tongue, samples_per_triangle) : tongue.vertices();
    double max_depth = 0.0;
    bool touching = false;
    for (const Vec3& p : points) {
      const auto r = bvh.closest_point(p);
      if (r.side == mesh::Side::back && r.distance > 0.0) {
        max_depth = std::max(max_depth, r.distance);
      } else if (r.distance <= contact_eps_mm) {
        touching = true;
      }
    }
    depth[f] = max_depth;
    contact[f] = touching ? 1.0 : 0.0;
  });
  return {make_series("palate_contact", "bool", std::move(contact)),
          make_series("palate_penetration", "mm", std::move(depth))};
}

mesh::SurfaceDistanceStats pose_similarity(const mesh::TriMesh& deformed, const mesh::TriMesh& reference,
                                           std::size_t samples_per_triangle, std::uint64_t seed)
{
  if (deformed.empty() || reference.empty()) {
    throw InputError("pose similarity needs two nonempty meshes");
  }
  return mesh::symmetric_surface_distance(deformed, reference, samples_per_triangle, seed);
}

EvalReport evaluate(const asset::AnimatedModelAsset& asset, const EvalOptions& o)
{
  for (double t : {o.distance_mm, o.penetration_mm, o.contact_eps_mm, o.similarity_mm}) {
    if (!(t > 0.0)) {
      throw InputError("evaluation thresholds must be positive");
    }
  }
  EvalReport r;
  r.frame_count = asset.clip.frame_count();
  r.frame_rate_hz = asset.clip.frame_rate_hz;
  r.seed = o.seed;
  r.provenance = asset.provenance;
  r.provenance.inputs.insert(r.provenance.inputs.end(), o.extra_inputs.begin(), o.extra_inputs.end());
  r.parameters = {{"distance_mm", o.distance_mm},
                  {"penetration_mm", o.penetration_mm},
                  {"contact_eps_mm", o.contact_eps_mm},
                  {"similarity_mm", o.similarity_mm},
                  {"samples_per_triangle", static_cast<double>(o.samples_per_triangle)}};

  double worst = 0.0;
  for (auto& s : target_surface_distance(asset)) {
    s.threshold = o.distance_mm;
    worst = std::max(worst, s.summary.max);
    r.series.push_back(std::move(s));
  }
  r.scalars.push_back({"target_distance_max", "mm", worst});
  r.gates.push_back(make_gate("target_distance", "target_distance_max", o.distance_mm, worst));

  if (o.palate) {
    auto c = palate_contact(asset, *o.palate, o.contact_eps_mm, o.sampled_penetration ? o.samples_per_triangle : 0);
    c.penetration.threshold = o.penetration_mm;
    double frames_in_contact = 0.0;
    for (double v : c.contact.values) {
      frames_in_contact += v;
    }
    r.scalars.push_back({"contact_frames", "frames", frames_in_contact});
    r.gates.push_back(make_gate("penetration", c.penetration.name, o.penetration_mm, c.penetration.summary.max));
    r.series.push_back(std::move(c.contact));
    r.series.push_back(std::move(c.penetration));
  }

  if (o.reference) {
    if (o.reference_frame >= r.frame_count) {
      throw InputError("reference frame " + std::to_string(o.reference_frame) + " is outside the clip (" +
                       std::to_string(r.frame_count) + " frames)");
    }
    const auto tongue = asset::posed_mesh(asset, "tongue", o.reference_frame);
    const auto s = pose_similarity(tongue, *o.reference, o.samples_per_triangle, o.seed);
    r.parameters.emplace_back("reference_frame", static_cast<double>(o.reference_frame));
    r.scalars.push_back({"similarity_mean", "mm", s.mean});
    r.scalars.push_back({"similarity_max", "mm", s.max});
    r.scalars.push_back({"similarity_rms", "mm", s.rms});
    r.gates.push_back(make_gate("pose_similarity", "similarity_max", o.similarity_mm, s.max));
  }
  check_report(r);
  return r;
}

std::string series_csv(const MetricSeries& series, double frame_rate_hz)
{
  std::string out = "frame,time_s,value\n";
  for (std::size_t f = 0; f < series.values.size(); ++f) {
    const double t = frame_rate_hz > 0.0 ? static_cast<double>(f) / frame_rate_hz : 0.0;
    out += std::to_string(f) + "," + detail::format_double(t) + "," + detail::format_double(series.values[f]) + "\n";
  }
  return out;
}

std::string series_svg(const MetricSeries& series, double frame_rate_hz)
{
  constexpr double width = 640.0;
  constexpr double height = 320.0;
  constexpr double left = 60.0;
  constexpr double right = 20.0;
  constexpr double top = 30.0;
  constexpr double bottom = 40.0;
  const double pw = width - left - right;
  const double ph = height - top - bottom;

  double lo = std::min(0.0, series.summary.min);
  double hi = series.summary.max;
  if (series.threshold) {
    hi = std::max(hi, *series.threshold);
    lo = std::min(lo, *series.threshold);
  }
  if (hi - lo <= 0.0) {
    hi = lo + 1.0;
  }
  const std::size_t n = series.values.size();
  auto x_of = [&](std::size_t f) { return left + (n > 1 ? pw * static_cast<double>(f) / static_cast<double>(n - 1) : 0.0); };
  auto y_of = [&](double v) { return top + ph * (1.0 - (v - lo) / (hi - lo)); };

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"640\" height=\"320\" viewBox=\"0 0 640 320\">\n";
  s += "<title>" + series.name + " (" + series.unit + ")</title>\n";
  s += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"320\" fill=\"white\"/>\n";
  s += "<rect x=\"" + fmt3(left) + "\" y=\"" + fmt3(top) + "\" width=\"" + fmt3(pw) + "\" height=\"" + fmt3(ph) +
       "\" fill=\"none\" stroke=\"#888\"/>\n";
  s += "<text x=\"" + fmt3(left) + "\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">" + series.name + " [" +
       series.unit + "]</text>\n";
  s += "<text x=\"" + fmt3(left - 4) + "\" y=\"" + fmt3(top + 4) +
       "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" + fmt_label(hi) + "</text>\n";
  s += "<text x=\"" + fmt3(left - 4) + "\" y=\"" + fmt3(top + ph + 4) +
       "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" + fmt_label(lo) + "</text>\n";
  const double duration = (n > 1 && frame_rate_hz > 0.0) ? static_cast<double>(n - 1) / frame_rate_hz : 0.0;
  s += "<text x=\"" + fmt3(left + pw) + "\" y=\"" + fmt3(height - 12) +
       "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" + fmt_label(duration) + " s</text>\n";
  if (series.threshold) {
    const double y = y_of(*series.threshold);
    s += "<line x1=\"" + fmt3(left) + "\" y1=\"" + fmt3(y) + "\" x2=\"" + fmt3(left + pw) + "\" y2=\"" + fmt3(y) +
         "\" stroke=\"#c00\" stroke-dasharray=\"6,4\"/>\n";
  }
  s += "<polyline fill=\"none\" stroke=\"#036\" stroke-width=\"1.5\" points=\"";
  for (std::size_t f = 0; f < n; ++f) {
    if (f > 0) {
      s += ' ';
    }
    s += fmt3(x_of(f)) + "," + fmt3(y_of(series.values[f]));
  }
  s += "\"/>\n</svg>\n";
  return s;
}

std::string report_json(const EvalReport& r)
{
  Json j;
  j["schema"] = kReportSchema;
  j["status"] = r.passed() ? "pass" : "fail";
  j["frame_count"] = r.frame_count;
  j["frame_rate_hz"] = r.frame_rate_hz;
  j["seed"] = r.seed;
  Json params = Json::object();
  for (const auto& [k, v] : r.parameters) {
    params[k] = v;
  }
  j["parameters"] = params;
  Json inputs = Json::array();
  for (const auto& in : r.provenance.inputs) {
    inputs.push_back({{"role", in.role}, {"path", in.path}, {"sha256", in.sha256}});
  }
  j["provenance"] = {{"tool_version", r.provenance.tool_version},
                     {"config_sha256", r.provenance.config_sha256},
                     {"inputs", inputs}};
  Json series = Json::array();
  for (const auto& s : r.series) {
    Json js;
    js["name"] = s.name;
    js["unit"] = s.unit;
    js["summary"] = {{"min", s.summary.min},
                     {"max", s.summary.max},
                     {"mean", s.summary.mean},
                     {"rms", s.summary.rms},
                     {"p95", s.summary.p95}};
    js["threshold"] = s.threshold ? Json(*s.threshold) : Json(nullptr);
    js["csv"] = s.name + ".csv";
    js["svg"] = s.name + ".svg";
    series.push_back(js);
  }
  j["series"] = series;
  Json scalars = Json::array();
  for (const auto& s : r.scalars) {
    scalars.push_back({{"name", s.name}, {"unit", s.unit}, {"value", s.value}});
  }
  j["scalars"] = scalars;
  Json gates = Json::array();
  for (const auto& g : r.gates) {
    gates.push_back({{"name", g.name},
                     {"metric", g.metric},
                     {"threshold", g.threshold},
                     {"measured", g.measured},
                     {"pass", g.pass}});
  }
  j["gates"] = gates;
  return j.dump(2) + "\n";
}

void generate_report(const EvalReport& report, const std::filesystem::path& dir)
{
  check_report(report);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create report directory '" + dir.string() + "': " + ec.message());
  }
  for (const auto& s : report.series) {
    write_file_atomic(dir / (s.name + ".csv"), series_csv(s, report.frame_rate_hz));
    write_file_atomic(dir / (s.name + ".svg"), series_svg(s, report.frame_rate_hz));
  }
  // Summary last, so a present report.json implies its series files exist.
  write_file_atomic(dir / "report.json", report_json(report));
}

}  // namespace artic::eval
