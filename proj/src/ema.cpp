#include "artic/ema.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

#include "artic/error.hpp"
#include "text_util.hpp"

namespace artic::ema {

namespace {

constexpr std::array<std::string_view, 7> kColumnSuffixes = {"x", "y", "z", "ox", "oy", "oz", "rms"};
constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

CoilSample invalid_sample()
{
  CoilSample s;
  s.valid = false;
  return s;
}

/// Builds a sample from raw fields; any non-finite value, negative rms, or a
/// zero-length axis makes it invalid.
CoilSample make_sample(const Vec3& pos, const Vec3& axis, double rms)
{
  if (!pos.allFinite() || !axis.allFinite() || !std::isfinite(rms) || rms < 0.0) {
    return invalid_sample();
  }
  const double n = axis.norm();
  if (n < 1e-9) {
    return invalid_sample();
  }
  return CoilSample{pos, axis / n, rms, true};
}

void require_all_valid(const EmaTrajectory& traj, std::string_view what)
{
  for (std::size_t f = 0; f < traj.frames.size(); ++f) {
    for (std::size_t c = 0; c < traj.frames[f].size(); ++c) {
      if (!traj.frames[f][c].valid) {
        throw InputError(std::string(what) + ": invalid sample for coil '" + traj.coil_ids[c] +
                         "' at frame " + std::to_string(f) + "; interpolate or drop gaps first");
      }
    }
  }
}

float read_f32_le(const std::uint8_t* p)
{
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

void write_f32_le(std::vector<std::uint8_t>& out, float v)
{
  const auto bits = std::bit_cast<std::uint32_t>(v);
  out.push_back(static_cast<std::uint8_t>(bits & 0xffU));
  out.push_back(static_cast<std::uint8_t>((bits >> 8) & 0xffU));
  out.push_back(static_cast<std::uint8_t>((bits >> 16) & 0xffU));
  out.push_back(static_cast<std::uint8_t>((bits >> 24) & 0xffU));
}

CoilSample lerp_sample(const CoilSample& a, const CoilSample& b, double t)
{
  CoilSample s;
  s.position = (1.0 - t) * a.position + t * b.position;
  s.orientation = slerp_axis(a.orientation, b.orientation, t);
  s.rms_error = (1.0 - t) * a.rms_error + t * b.rms_error;
  s.valid = true;
  return s;
}

}  // namespace

std::optional<std::size_t> EmaTrajectory::coil_index(std::string_view id) const
{
  for (std::size_t i = 0; i < coil_ids.size(); ++i) {
    if (coil_ids[i] == id) {
      return i;
    }
  }
  return std::nullopt;
}

void check_trajectory(const EmaTrajectory& traj)
{
  if (!(traj.sample_rate_hz > 0.0) || !std::isfinite(traj.sample_rate_hz)) {
    throw InputError("sample rate must be positive");
  }
  if (traj.frames.empty()) {
    throw InputError("trajectory has no frames");
  }
  std::set<std::string, std::less<>> seen;
  for (const auto& id : traj.coil_ids) {
    if (id.empty()) {
      throw InputError("empty coil id");
    }
    if (!seen.insert(id).second) {
      throw InputError("duplicate coil id '" + id + "'");
    }
  }
  for (std::size_t f = 0; f < traj.frames.size(); ++f) {
    if (traj.frames[f].size() != traj.coil_ids.size()) {
      throw InputError("frame " + std::to_string(f) + " has " + std::to_string(traj.frames[f].size()) +
                       " samples, expected " + std::to_string(traj.coil_ids.size()));
    }
  }
}

std::string_view to_string(Articulator a)
{
  switch (a) {
    case Articulator::tongue: return "tongue";
    case Articulator::jaw: return "jaw";
    case Articulator::reference: return "reference";
    case Articulator::other: return "other";
  }
  return "other";
}

Articulator articulator_from_string(std::string_view name)
{
  if (name == "tongue") return Articulator::tongue;
  if (name == "jaw") return Articulator::jaw;
  if (name == "reference") return Articulator::reference;
  if (name == "other") return Articulator::other;
  throw InputError("unknown articulator '" + std::string(name) + "'");
}

void check_roles(std::span<const CoilRole> roles)
{
  std::set<std::string, std::less<>> ids;
  std::set<int> chain;
  for (const auto& r : roles) {
    if (!ids.insert(r.coil_id).second) {
      throw InputError("coil '" + r.coil_id + "' has more than one role");
    }
    if (r.articulator == Articulator::tongue) {
      if (!r.chain_index) {
        throw InputError("tongue coil '" + r.coil_id + "' has no chain index");
      }
      if (*r.chain_index < 0 || !chain.insert(*r.chain_index).second) {
        throw InputError("tongue coil '" + r.coil_id + "' has an invalid or duplicate chain index");
      }
    }
  }
}

// --- CSV -------------------------------------------------------------------

EmaTrajectory parse_ema_csv(std::string_view text)
{
  const auto lines = detail::split_lines(text);
  if (lines.empty()) {
    throw ParseError(1, "empty input");
  }

  EmaTrajectory traj;
  {
    const std::string_view first = detail::trim(lines[0]);
    constexpr std::string_view magic = "ema-csv v1;";
    if (!first.starts_with(magic)) {
      throw ParseError(1, "expected header 'ema-csv v1; rate=<hz>'");
    }
    std::string_view rest = detail::trim(first.substr(magic.size()));
    if (!rest.starts_with("rate=")) {
      throw ParseError(1, "missing 'rate=' field");
    }
    const auto rate = detail::parse_double(detail::trim(rest.substr(5)));
    if (!rate || !std::isfinite(*rate) || *rate <= 0.0) {
      throw ParseError(1, "sample rate must be a positive number");
    }
    traj.sample_rate_hz = *rate;
  }

  if (lines.size() < 2) {
    throw ParseError(2, "missing column header");
  }
  const auto columns = detail::split(detail::trim(lines[1]), ',');
  if (columns.empty() || columns.size() % kColumnSuffixes.size() != 0) {
    throw ParseError(2, "column count must be a multiple of 7");
  }
  for (std::size_t g = 0; g < columns.size() / kColumnSuffixes.size(); ++g) {
    std::string id;
    for (std::size_t k = 0; k < kColumnSuffixes.size(); ++k) {
      const std::string_view col = detail::trim(columns[g * kColumnSuffixes.size() + k]);
      if (!col.starts_with("coil:")) {
        throw ParseError(2, "column '" + std::string(col) + "' does not start with 'coil:'");
      }
      const auto dot = col.rfind('.');
      if (dot == std::string_view::npos || dot <= 5) {
        throw ParseError(2, "malformed column '" + std::string(col) + "'");
      }
      const std::string_view cid = col.substr(5, dot - 5);
      const std::string_view suffix = col.substr(dot + 1);
      if (suffix != kColumnSuffixes[k]) {
        throw ParseError(2, "column '" + std::string(col) + "' out of order; expected suffix '" +
                                std::string(kColumnSuffixes[k]) + "'");
      }
      if (k == 0) {
        id = std::string(cid);
      } else if (cid != id) {
        throw ParseError(2, "column group for coil '" + id + "' mixes in '" + std::string(cid) + "'");
      }
    }
    if (traj.coil_index(id)) {
      throw ParseError(2, "duplicate coil id '" + id + "'");
    }
    traj.coil_ids.push_back(id);
  }

  const std::size_t ncols = columns.size();
  for (std::size_t li = 2; li < lines.size(); ++li) {
    const std::string_view line = detail::trim(lines[li]);
    if (line.empty()) {
      continue;
    }
    const auto fields = detail::split(line, ',');
    if (fields.size() != ncols) {
      throw ParseError(li + 1, "expected " + std::to_string(ncols) + " values, found " +
                                   std::to_string(fields.size()));
    }
    std::vector<double> values(ncols);
    for (std::size_t i = 0; i < ncols; ++i) {
      const auto v = detail::parse_double(detail::trim(fields[i]));
      if (!v) {
        throw ParseError(li + 1, "non-numeric value '" + std::string(fields[i]) + "'");
      }
      values[i] = *v;
    }
    std::vector<CoilSample> frame;
    frame.reserve(traj.coil_ids.size());
    for (std::size_t c = 0; c < traj.coil_ids.size(); ++c) {
      const double* v = values.data() + c * kColumnSuffixes.size();
      frame.push_back(make_sample(Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5]), v[6]));
    }
    traj.frames.push_back(std::move(frame));
  }
  if (traj.frames.empty()) {
    throw ParseError(lines.size(), "no data rows");
  }
  return traj;
}

std::string write_ema_csv(const EmaTrajectory& traj)
{
  check_trajectory(traj);
  std::string out = "ema-csv v1; rate=" + detail::format_double(traj.sample_rate_hz) + "\n";
  for (std::size_t c = 0; c < traj.coil_ids.size(); ++c) {
    for (std::size_t k = 0; k < kColumnSuffixes.size(); ++k) {
      if (c + k > 0) {
        out += ',';
      }
      out += "coil:" + traj.coil_ids[c] + "." + std::string(kColumnSuffixes[k]);
    }
  }
  out += '\n';
  for (const auto& frame : traj.frames) {
    for (std::size_t c = 0; c < frame.size(); ++c) {
      const CoilSample& s = frame[c];
      if (c > 0) {
        out += ',';
      }
      if (!s.valid) {
        out += "nan,nan,nan,nan,nan,nan,nan";
        continue;
      }
      const double v[7] = {s.position.x(),    s.position.y(),    s.position.z(), s.orientation.x(),
                           s.orientation.y(), s.orientation.z(), s.rms_error};
      for (int k = 0; k < 7; ++k) {
        if (k > 0) {
          out += ',';
        }
        out += detail::format_double(v[k]);
      }
    }
    out += '\n';
  }
  return out;
}

// --- AG500 -----------------------------------------------------------------

Vec3 axis_from_angles(double phi_deg, double theta_deg)
{
  const double phi = phi_deg * kDegToRad;
  const double theta = theta_deg * kDegToRad;
  return Vec3(std::cos(phi) * std::cos(theta), std::cos(phi) * std::sin(theta), std::sin(phi));
}

SphericalAngles angles_from_axis(const Vec3& axis)
{
  const double h = std::hypot(axis.x(), axis.y());
  SphericalAngles a{};
  a.phi_deg = std::atan2(axis.z(), h) * kRadToDeg;
  if (h < 1e-12) {
    a.theta_deg = 0.0;
  } else {
    a.theta_deg = std::atan2(axis.y(), axis.x()) * kRadToDeg;
    if (a.theta_deg <= -180.0) {
      a.theta_deg = 180.0;
    }
  }
  return a;
}

EmaTrajectory parse_ag500_pos(std::span<const std::uint8_t> bytes, std::size_t channel_count,
                              double sample_rate_hz)
{
  if (channel_count == 0) {
    throw FormatError("channel count must be at least 1");
  }
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    throw FormatError("sample rate must be positive");
  }
  const std::size_t frame_bytes = channel_count * kAg500RecordBytes;
  if (bytes.empty() || bytes.size() % frame_bytes != 0) {
    const std::size_t frames = bytes.size() / frame_bytes;
    throw FormatError("pos data is " + std::to_string(bytes.size()) + " bytes; expected a nonzero multiple of " +
                      std::to_string(frame_bytes) + " (" + std::to_string(channel_count) +
                      " channels x 7 float32), e.g. " + std::to_string((frames + 1) * frame_bytes));
  }

  EmaTrajectory traj;
  traj.sample_rate_hz = sample_rate_hz;
  for (std::size_t c = 0; c < channel_count; ++c) {
    char name[16];
    std::snprintf(name, sizeof name, "ch%02u", static_cast<unsigned>((c + 1) % 100000U));
    traj.coil_ids.emplace_back(name);
  }
  const std::size_t n_frames = bytes.size() / frame_bytes;
  traj.frames.reserve(n_frames);
  const std::uint8_t* p = bytes.data();
  for (std::size_t f = 0; f < n_frames; ++f) {
    std::vector<CoilSample> frame;
    frame.reserve(channel_count);
    for (std::size_t c = 0; c < channel_count; ++c) {
      double v[kAg500FloatsPerChannel];
      for (std::size_t k = 0; k < kAg500FloatsPerChannel; ++k) {
        v[k] = read_f32_le(p);
        p += 4;
      }
      if (!std::isfinite(v[3]) || !std::isfinite(v[4])) {
        frame.push_back(invalid_sample());
        continue;
      }
      frame.push_back(make_sample(Vec3(v[0], v[1], v[2]), axis_from_angles(v[3], v[4]), v[5]));
    }
    traj.frames.push_back(std::move(frame));
  }
  return traj;
}

std::vector<std::uint8_t> write_ag500_pos(const EmaTrajectory& traj)
{
  check_trajectory(traj);
  require_all_valid(traj, "write_ag500_pos");
  std::vector<std::uint8_t> out;
  out.reserve(traj.frames.size() * traj.coil_ids.size() * kAg500RecordBytes);
  for (const auto& frame : traj.frames) {
    for (const auto& s : frame) {
      const SphericalAngles a = angles_from_axis(s.orientation);
      write_f32_le(out, static_cast<float>(s.position.x()));
      write_f32_le(out, static_cast<float>(s.position.y()));
      write_f32_le(out, static_cast<float>(s.position.z()));
      write_f32_le(out, static_cast<float>(a.phi_deg));
      write_f32_le(out, static_cast<float>(a.theta_deg));
      write_f32_le(out, static_cast<float>(s.rms_error));
      write_f32_le(out, 0.0F);
    }
  }
  return out;
}

// --- hygiene ---------------------------------------------------------------

ValidationSummary validate(const EmaTrajectory& traj, double max_rms_mm, std::size_t max_gap_frames)
{
  ValidationSummary summary;
  const std::size_t n = traj.frames.size();
  std::vector<std::vector<bool>> bad(traj.coil_ids.size(), std::vector<bool>(n, false));
  for (std::size_t f = 0; f < n; ++f) {
    for (std::size_t c = 0; c < traj.frames[f].size() && c < bad.size(); ++c) {
      const CoilSample& s = traj.frames[f][c];
      if (!s.valid) {
        bad[c][f] = true;
      } else if (s.rms_error > max_rms_mm) {
        bad[c][f] = true;
        summary.flagged.push_back({f, c});
      }
    }
  }
  for (std::size_t c = 0; c < bad.size(); ++c) {
    std::size_t f = 0;
    while (f < n) {
      if (!bad[c][f]) {
        ++f;
        continue;
      }
      const std::size_t start = f;
      while (f < n && bad[c][f]) {
        ++f;
      }
      summary.runs.push_back({c, start, f - start});
      summary.longest_run = std::max(summary.longest_run, f - start);
    }
  }
  summary.pass = summary.longest_run <= max_gap_frames;
  return summary;
}

EmaTrajectory apply_flags(const EmaTrajectory& traj, const ValidationSummary& summary)
{
  EmaTrajectory out = traj;
  for (const auto& ref : summary.flagged) {
    out.frames.at(ref.frame).at(ref.coil).valid = false;
  }
  return out;
}

EmaTrajectory interpolate_gaps(const EmaTrajectory& traj, std::size_t max_gap_frames)
{
  check_trajectory(traj);
  EmaTrajectory out = traj;
  const std::size_t n = traj.frames.size();
  for (std::size_t c = 0; c < traj.coil_ids.size(); ++c) {
    std::size_t f = 0;
    while (f < n) {
      if (traj.frames[f][c].valid) {
        ++f;
        continue;
      }
      const std::size_t start = f;
      while (f < n && !traj.frames[f][c].valid) {
        ++f;
      }
      const std::string range = "coil '" + traj.coil_ids[c] + "' frames " + std::to_string(start) + ".." +
                                std::to_string(f - 1);
      if (start == 0 || f == n) {
        throw InputError("cannot interpolate gap at sequence boundary: " + range);
      }
      if (f - start > max_gap_frames) {
        throw InputError("gap longer than " + std::to_string(max_gap_frames) + " frames: " + range);
      }
      const CoilSample& a = traj.frames[start - 1][c];
      const CoilSample& b = traj.frames[f][c];
      const double span = static_cast<double>(f - (start - 1));
      for (std::size_t k = start; k < f; ++k) {
        out.frames[k][c] = lerp_sample(a, b, static_cast<double>(k - (start - 1)) / span);
      }
    }
  }
  return out;
}

EmaTrajectory smooth(const EmaTrajectory& traj, std::size_t window_frames)
{
  check_trajectory(traj);
  if (window_frames == 0 || window_frames % 2 == 0) {
    throw InputError("smoothing window must be a positive odd number of frames");
  }
  if (window_frames > traj.frames.size()) {
    throw InputError("smoothing window exceeds frame count");
  }
  require_all_valid(traj, "smooth");
  if (window_frames == 1) {
    return traj;
  }
  EmaTrajectory out = traj;
  const std::size_t n = traj.frames.size();
  const std::size_t half = window_frames / 2;
  for (std::size_t f = 0; f < n; ++f) {
    const std::size_t h = std::min({half, f, n - 1 - f});
    for (std::size_t c = 0; c < traj.coil_ids.size(); ++c) {
      Vec3 pos = Vec3::Zero();
      Vec3 axis = Vec3::Zero();
      double rms = 0.0;
      for (std::size_t k = f - h; k <= f + h; ++k) {
        const CoilSample& s = traj.frames[k][c];
        pos += s.position;
        axis += s.orientation;
        rms += s.rms_error;
      }
      const double count = static_cast<double>(2 * h + 1);
      CoilSample& o = out.frames[f][c];
      o.position = pos / count;
      o.rms_error = rms / count;
      const double norm = axis.norm();
      if (norm > 1e-12) {
        o.orientation = axis / norm;
      }
    }
  }
  return out;
}

EmaTrajectory resample(const EmaTrajectory& traj, double target_hz)
{
  check_trajectory(traj);
  if (!(target_hz > 0.0) || !std::isfinite(target_hz)) {
    throw InputError("target rate must be positive");
  }
  require_all_valid(traj, "resample");
  const std::size_t n = traj.frames.size();
  const double ratio = traj.sample_rate_hz / target_hz;
  const double span = static_cast<double>(n - 1) * target_hz / traj.sample_rate_hz;
  const auto m = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;

  EmaTrajectory out;
  out.coil_ids = traj.coil_ids;
  out.sample_rate_hz = target_hz;
  out.frames.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double s = static_cast<double>(j) * ratio;
    auto i0 = static_cast<std::size_t>(std::floor(s + 1e-12));
    double frac = s - static_cast<double>(i0);
    if (i0 >= n - 1) {
      i0 = n - 1;
      frac = 0.0;
    }
    if (frac < 1e-12) {
      out.frames.push_back(traj.frames[i0]);
      continue;
    }
    std::vector<CoilSample> frame;
    frame.reserve(traj.coil_ids.size());
    for (std::size_t c = 0; c < traj.coil_ids.size(); ++c) {
      frame.push_back(lerp_sample(traj.frames[i0][c], traj.frames[i0 + 1][c], frac));
    }
    out.frames.push_back(std::move(frame));
  }
  return out;
}

}  // namespace artic::ema
