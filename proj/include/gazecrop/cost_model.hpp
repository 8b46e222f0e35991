#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gazecrop/input_assembly.hpp"
#include "gazecrop/token_geometry.hpp"

namespace gazecrop {

/// Affine FLOP model for one VLM: flops = intercept + per_token * total_tokens.
struct ModelProfile {
  std::string name;
  double flops_intercept_g = 0.0;
  double flops_per_token_g = 1.0;
  double default_text_tokens = 36.0;
  TokenGeometry geometry;
};

void validate_profile(const ModelProfile& profile);

// key=value text; '#' starts a comment. Keys: name, flops_intercept_g,
// flops_per_token_g, default_text_tokens, token_pitch.
ModelProfile parse_profile(std::string_view text);
ModelProfile load_profile(const std::filesystem::path& path);

/// Profiles calibrated on the published Qwen2.5-VL-3B / 7B measurements:
/// "qwen25vl-3b-paper" and "qwen25vl-7b-paper".
std::optional<ModelProfile> builtin_profile(std::string_view name);
std::vector<std::string> builtin_profile_names();

/// A name resolves to a built-in profile first, then to a profile file.
ModelProfile resolve_profile(std::string_view name_or_path);

struct ViewDims {
  int width = 0;
  int height = 0;
};

std::int64_t count_visual_tokens(std::span<const ViewDims> views, const TokenGeometry& geometry);
std::int64_t count_visual_tokens(std::span<const ScaledView> views, const TokenGeometry& geometry);
std::int64_t count_visual_tokens(const TwoScaleInput& input, const TokenGeometry& geometry);

inline std::int64_t count_total_tokens(std::int64_t visual, std::int64_t text_tokens) {
  return visual + text_tokens;
}
// Batch means are fractional.
inline double count_total_tokens(double visual, double text_tokens) { return visual + text_tokens; }

double estimate_flops(double total_tokens, const ModelProfile& profile);

struct CalibrationRow {
  double total_tokens = 0.0;
  double flops_g = 0.0;
};

struct AffineFit {
  double intercept = 0.0;
  double slope = 0.0;
};

/// Ordinary least squares; with two rows this is the exact interpolant.
AffineFit calibrate(std::span<const CalibrationRow> rows);

struct Reductions {
  double visual_pct = 0.0;
  double total_pct = 0.0;
  double flops_pct = 0.0;
};

struct CostReport {
  double visual_tokens = 0.0;
  double text_tokens = 0.0;
  double total_tokens = 0.0;
  double flops_g = 0.0;
  std::optional<Reductions> reductions;
  std::string baseline_name;
};

CostReport make_cost_report(double visual_tokens, double text_tokens, const ModelProfile& profile);

/// 100 * (1 - candidate / baseline); positive numbers are savings.
double reduction_pct(double candidate, double baseline);

CostReport reduction_report(const CostReport& candidate, const CostReport& baseline,
                            std::string baseline_name = "baseline");

/// Signed change with one decimal, e.g. a 93.125% saving renders "-93.1%".
std::string format_change(double reduction_percent);

}  // namespace gazecrop
