#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gazecrop/cost_model.hpp"
#include "gazecrop/error.hpp"
#include "gazecrop/gaze_heatmap.hpp"
#include "gazecrop/input_assembly.hpp"
#include "gazecrop/roi.hpp"

namespace gazecrop {

struct Sample {
  std::string sample_id;
  std::string image_path;  // as written; relative paths resolve against the manifest
  std::vector<GazePoint> gaze_points;
  std::string question;
  std::string reference_answer;
  std::string caption;
  std::optional<std::int64_t> text_token_count;

  // Filled in by load_manifest; not serialized.
  int image_width = 0;
  int image_height = 0;
  std::size_t clamped_points = 0;
  std::size_t line_no = 0;
};

/// Field-for-field equality over the serialized fields.
bool same_fields(const Sample& a, const Sample& b);

struct SampleIssue {
  std::string sample_id;
  std::size_t line_no = 0;
  ErrorCode code = ErrorCode::kValidationError;
  std::string message;
};

struct Manifest {
  std::string source_name = "unknown";
  std::string version = "1";
  std::vector<Sample> samples;
  std::filesystem::path base_dir;
  // Samples dropped by a lenient load.
  std::vector<SampleIssue> rejected;
};

struct LoadOptions {
  /// Strict loads throw on the first bad sample; lenient loads record it in
  /// Manifest::rejected and keep going. Malformed JSON is fatal either way.
  bool strict = true;
};

// JSONL: an optional header line {"manifest": {"source_name", "version",
// "gaze_units": "pixels" | "normalized"}} followed by one sample object per
// line with keys sample_id, image_path, gaze_points ([[x, y] or [x, y, t]]),
// question, reference_answer, caption and optional text_token_count.
Manifest load_manifest(const std::filesystem::path& path, const LoadOptions& options = {});

/// Writes pixel-unit gaze coordinates; load_manifest(write_manifest(m))
/// reproduces every sample field.
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

std::filesystem::path resolve_image_path(const Manifest& manifest, const Sample& sample);
const Sample* find_sample(const Manifest& manifest, std::string_view sample_id);
GazeTrace make_trace(const Sample& sample);

/// Number rounded to six significant digits, so serialized floats are
/// stable and compact.
double round_sig6(double value);

/// Deterministic JSON text: sorted keys, two-space indent, trailing newline.
std::string dump_json(const nlohmann::json& value);
/// One compact line, sorted keys, no newline.
std::string dump_json_line(const nlohmann::json& value);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

struct BundleContext {
  std::optional<double> rho;
  std::optional<RoiBox> box;
  std::optional<double> support_mass;
  double sigma_px = 0.0;
  int token_pitch = kDefaultTokenPitch;
  std::string manifest_version;
  std::string profile_name;
  std::uint64_t seed = 0;
};

/// Writes <out_dir>/<sample_id>/ with global.png (two_scale), roi.png
/// (full.png in baseline mode), prompt.txt and meta.json.
std::filesystem::path export_bundle(const Sample& sample, const TwoScaleInput& input,
                                    const CostReport& cost, const std::filesystem::path& out_dir,
                                    const BundleContext& context);

/// One row of a results file. Prepared rows leave verdict, total_score and
/// answer empty; answer files produced by an inference runner fill answer.
struct ResultRow {
  std::string sample_id;
  std::optional<double> rho;
  std::string mode;
  std::int64_t visual_tokens = 0;
  std::int64_t total_tokens = 0;
  double flops_g = 0.0;
  std::int64_t roi_pixels = 0;
  std::optional<std::string> verdict;
  std::optional<double> total_score;
  std::optional<std::string> answer;
};

nlohmann::json to_json(const ResultRow& row);
ResultRow result_row_from_json(const nlohmann::json& j);
std::vector<ResultRow> read_results(const std::filesystem::path& path);
void write_results(const std::filesystem::path& path, const std::vector<ResultRow>& rows);

}  // namespace gazecrop
