#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "artic/asset.hpp"
#include "artic/mesh.hpp"

/// Evaluation metrics over a compiled asset, gates, and report files.
namespace artic::eval {

inline constexpr std::string_view kReportSchema = "report-v1";

struct SeriesSummary
{
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double rms = 0.0;
  double p95 = 0.0;  // linear interpolation between order statistics

  bool operator==(const SeriesSummary&) const = default;
};

/// All zeros for an empty input. NaN values are not allowed.
SeriesSummary summarize(std::span<const double> values);

struct MetricSeries
{
  std::string name;
  std::string unit;
  std::vector<double> values;  // one per frame
  SeriesSummary summary;
  /// Drawn as a horizontal line in the plot when set.
  std::optional<double> threshold;
};

MetricSeries make_series(std::string name, std::string unit, std::vector<double> values,
                         std::optional<double> threshold = std::nullopt);

struct ScalarMetric
{
  std::string name;
  std::string unit;
  double value = 0.0;
};

/// A gate passes when measured <= threshold. `metric` names a series (then
/// measured is its max) or a scalar.
struct Gate
{
  std::string name;
  std::string metric;
  double threshold = 0.0;
  double measured = 0.0;
  bool pass = true;
};

Gate make_gate(std::string name, std::string metric, double threshold, double measured);

struct EvalReport
{
  std::vector<MetricSeries> series;
  std::vector<ScalarMetric> scalars;
  std::vector<Gate> gates;
  /// Thresholds and evaluation settings, in insertion order.
  std::vector<std::pair<std::string, double>> parameters;
  asset::Provenance provenance;
  std::uint64_t seed = 0;
  double frame_rate_hz = 0.0;
  std::size_t frame_count = 0;

  bool passed() const;
  const MetricSeries* find_series(std::string_view name) const;
  const ScalarMetric* find_scalar(std::string_view name) const;
};

/// Throws std::invalid_argument when a gate references an unknown metric, its
/// measured value does not match that metric, or a series has the wrong length.
void check_report(const EvalReport& report);

/// Distance from each bound coil's target to its deformed articulator surface,
/// one series per coil named "target_distance.<coil>".
std::vector<MetricSeries> target_surface_distance(const asset::AnimatedModelAsset& asset);

struct ContactSeries
{
  MetricSeries contact;      // 1 when any point is within eps on the front side
  MetricSeries penetration;  // max depth behind the palate per frame
};

/// Tongue vertices against an oriented palate. A nonzero `samples_per_triangle`
/// also tests interior surface samples.
ContactSeries palate_contact(const asset::AnimatedModelAsset& asset, const mesh::TriMesh& palate,
                             double contact_eps_mm, std::size_t samples_per_triangle = 0);

/// Symmetric surface-distance stats between a deformed tongue and a reference.
mesh::SurfaceDistanceStats pose_similarity(const mesh::TriMesh& deformed, const mesh::TriMesh& reference,
                                           std::size_t samples_per_triangle, std::uint64_t seed = 0);

struct EvalOptions
{
  double distance_mm = 1.0;
  double penetration_mm = 0.2;
  double contact_eps_mm = 0.5;
  double similarity_mm = 2.0;
  std::size_t samples_per_triangle = 4;
  std::uint64_t seed = 0;
  bool sampled_penetration = false;

  std::optional<mesh::TriMesh> palate;
  std::optional<mesh::TriMesh> reference;
  std::size_t reference_frame = 0;
  /// Hashes of the palate/reference files, appended to the provenance.
  std::vector<asset::InputHash> extra_inputs;
};

/// Runs every evaluation the supplied inputs allow and attaches the gates:
/// target distance always, palate contact/penetration with a palate, pose
/// similarity with a reference mesh.
EvalReport evaluate(const asset::AnimatedModelAsset& asset, const EvalOptions& options);

/// report.json plus one CSV and one SVG per series in `dir` (created when
/// missing). Every file is written to a temporary name and renamed.
void generate_report(const EvalReport& report, const std::filesystem::path& dir);

std::string report_json(const EvalReport& report);
std::string series_csv(const MetricSeries& series, double frame_rate_hz);
std::string series_svg(const MetricSeries& series, double frame_rate_hz);

}  // namespace artic::eval
