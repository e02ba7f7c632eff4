#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "artic/asset.hpp"
#include "artic/ema.hpp"
#include "artic/eval.hpp"
#include "artic/geometry.hpp"
#include "artic/ik.hpp"

/// The model compiler: config -> validated inputs -> rig -> solved clip ->
/// evaluation gates -> packaged asset, with a lifecycle report.
namespace artic::compiler {

inline constexpr std::string_view kConfigSchema = "config-v1";
inline constexpr std::string_view kLifecycleSchema = "lifecycle-v1";

std::string_view tool_version();

struct MeshPaths
{
  std::string tongue;  // required
  std::string mandible;
  std::string maxilla;
  std::string palate;
};

struct EmaSource
{
  std::string path;
  std::string format = "csv";  // "csv" or "pos"
  /// `.pos` only: channel count, rate, and the coil id of each channel.
  std::size_t channels = 0;
  double rate_hz = 200.0;
  std::vector<std::string> channel_names;
};

struct CoilConfig
{
  ema::CoilRole role;
  /// Model-space bind position; defaults to the coil's first valid registered sample.
  std::optional<Vec3> bind;
  ik::TargetWeights weights;
};

struct RigConfig
{
  double sigma_mm = 5.0;
  double root_offset_mm = 5.0;
  std::optional<Vec3> hinge_point;
  /// Max swing from bind per bone id, degrees.
  std::map<std::string, double> joint_limits_deg;
};

struct HygieneConfig
{
  double max_rms_mm = 1.0;
  std::size_t max_gap_frames = 10;
  /// Fill interior dropouts linearly; otherwise the solver holds the last valid target.
  bool interpolate = false;
  std::size_t smooth_window = 0;  // 0 or 1 disables smoothing
  std::optional<double> resample_hz;
};

struct EvaluationConfig
{
  double distance_mm = 1.0;
  double penetration_mm = 0.2;
  double contact_eps_mm = 0.5;
  double similarity_mm = 2.0;
  std::size_t samples_per_triangle = 4;
  std::uint64_t seed = 0;
  bool sampled_penetration = false;
  std::string reference_mesh;
  std::size_t reference_frame = 0;
};

struct CompileConfig
{
  /// Relative paths are resolved against this directory.
  std::filesystem::path base_dir;
  std::string sha256;  // of the config document bytes

  MeshPaths meshes;
  EmaSource ema;
  std::vector<CoilConfig> coils;
  RigidTransform registration;
  RigConfig rig;
  ik::IkConfig ik;
  HygieneConfig hygiene;
  EvaluationConfig evaluation;
};

/// Throws InputError on malformed JSON, unknown keys, a wrong schema, or
/// values that break the config invariants.
CompileConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);
CompileConfig load_config(const std::filesystem::path& path);

enum class PhaseStatus { pending, passed, failed, skipped };
enum class FailureKind { none, gate, input, internal };

std::string_view to_string(PhaseStatus s);
std::string_view to_string(FailureKind k);

struct PhaseReport
{
  std::string name;
  PhaseStatus status = PhaseStatus::pending;
  FailureKind failure = FailureKind::none;
  std::string diagnostic;
  /// Wall time; kept out of persisted reports so they stay deterministic.
  double seconds = 0.0;
};

struct LifecycleReport
{
  std::vector<PhaseReport> phases;  // validate, rig, solve, evaluate, package
  std::vector<eval::Gate> gates;
  std::string config_sha256;
  std::string asset_sha256;  // manifest hash once packaged

  bool ok() const;
  const PhaseReport* failed_phase() const;
  /// 0 success, 2 gate failure, 3 input error, 4 internal error.
  int exit_code() const;
};

std::string lifecycle_json(const LifecycleReport& report);

struct CompileOptions
{
  std::optional<std::filesystem::path> asset_out;
  std::optional<std::filesystem::path> report_dir;
};

struct CompileResult
{
  LifecycleReport report;
  /// Set after packaging, or after a gate failure (in memory only).
  std::optional<asset::AnimatedModelAsset> asset;
  /// Set once the evaluate phase has measured its metrics.
  std::optional<eval::EvalReport> evaluation;
};

/// Runs the phases in order and stops at the first failure. The asset is
/// written only when every phase passes; a failure removes any asset left at
/// the target path. lifecycle.json is always written when a report dir is set.
CompileResult compile(const CompileConfig& config, const CompileOptions& options = {});
/// Like compile, but config loading failures are reported as a failed
/// validate phase instead of thrown.
CompileResult compile_file(const std::filesystem::path& config_path, const CompileOptions& options = {});

/// The EMA source as read, before hygiene and registration.
ema::EmaTrajectory load_trajectory(const CompileConfig& config);

}  // namespace artic::compiler
