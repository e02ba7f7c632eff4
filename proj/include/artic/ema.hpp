#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "artic/geometry.hpp"

/// Electromagnetic articulography (EMA) trajectories: parsing, hygiene, and
/// writing in the canonical CSV and the articulograph-compatible `.pos` layout.
namespace artic::ema {

struct CoilSample
{
  Vec3 position = Vec3::Zero();           // mm
  Vec3 orientation = Vec3::UnitX();       // unit axis
  double rms_error = 0.0;                 // mm
  bool valid = true;

  bool operator==(const CoilSample&) const = default;
};

/// Frame-major coil samples at a fixed rate.
struct EmaTrajectory
{
  std::vector<std::string> coil_ids;
  double sample_rate_hz = 200.0;
  std::vector<std::vector<CoilSample>> frames;

  std::size_t frame_count() const { return frames.size(); }
  std::size_t coil_count() const { return coil_ids.size(); }
  /// Index of `id` in coil_ids, or nullopt.
  std::optional<std::size_t> coil_index(std::string_view id) const;

  bool operator==(const EmaTrajectory&) const = default;
};

/// Throws InputError when the trajectory shape invariants do not hold.
void check_trajectory(const EmaTrajectory& traj);

enum class Articulator { tongue, jaw, reference, other };

struct CoilRole
{
  std::string coil_id;
  Articulator articulator = Articulator::other;
  std::optional<int> chain_index;  // tongue coils only; 0 = rearmost

  bool operator==(const CoilRole&) const = default;
};

std::string_view to_string(Articulator a);
/// Throws InputError for unknown names.
Articulator articulator_from_string(std::string_view name);

/// Throws InputError when tongue roles lack chain indices or reuse one.
void check_roles(std::span<const CoilRole> roles);

// --- canonical CSV ---------------------------------------------------------

/// Layout:
///   ema-csv v1; rate=<hz>
///   coil:<id>.x,coil:<id>.y,coil:<id>.z,coil:<id>.ox,coil:<id>.oy,coil:<id>.oz,coil:<id>.rms,...
///   <float>,... (one row per frame, `nan` allowed)
EmaTrajectory parse_ema_csv(std::string_view text);
std::string write_ema_csv(const EmaTrajectory& traj);

// --- articulograph binary --------------------------------------------------

inline constexpr std::size_t kAg500FloatsPerChannel = 7;
inline constexpr std::size_t kAg500RecordBytes = kAg500FloatsPerChannel * 4;

/// Each channel of each sample holds 7 little-endian float32 values
/// (x, y, z, phi, theta, rms, extra), angles in degrees, frames in order.
EmaTrajectory parse_ag500_pos(std::span<const std::uint8_t> bytes, std::size_t channel_count,
                              double sample_rate_hz);
/// Refuses trajectories holding invalid samples. The extra field is written as 0.
std::vector<std::uint8_t> write_ag500_pos(const EmaTrajectory& traj);

/// Axis from elevation phi and azimuth theta (degrees).
Vec3 axis_from_angles(double phi_deg, double theta_deg);
struct SphericalAngles
{
  double phi_deg;
  double theta_deg;
};
/// Inverse of axis_from_angles; theta is 0 at the poles and lies in (-180, 180].
SphericalAngles angles_from_axis(const Vec3& axis);

// --- hygiene ---------------------------------------------------------------

struct DropoutRun
{
  std::size_t coil = 0;
  std::size_t first_frame = 0;
  std::size_t length = 0;

  bool operator==(const DropoutRun&) const = default;
};

struct SampleRef
{
  std::size_t frame = 0;
  std::size_t coil = 0;

  bool operator==(const SampleRef&) const = default;
};

struct ValidationSummary
{
  /// Valid samples whose rms exceeds the threshold.
  std::vector<SampleRef> flagged;
  /// Maximal runs of invalid samples (flagged or already invalid) per coil.
  std::vector<DropoutRun> runs;
  std::size_t longest_run = 0;
  bool pass = true;
};

ValidationSummary validate(const EmaTrajectory& traj, double max_rms_mm, std::size_t max_gap_frames);
/// Copy of `traj` with the summary's flagged samples marked invalid.
EmaTrajectory apply_flags(const EmaTrajectory& traj, const ValidationSummary& summary);

EmaTrajectory interpolate_gaps(const EmaTrajectory& traj, std::size_t max_gap_frames);
EmaTrajectory smooth(const EmaTrajectory& traj, std::size_t window_frames);
EmaTrajectory resample(const EmaTrajectory& traj, double target_hz);

}  // namespace artic::ema
