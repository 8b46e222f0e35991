#include "gazecrop/cost_model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gazecrop/error.hpp"

namespace gazecrop {

void validate_profile(const ModelProfile& profile) {
  if (!(profile.flops_per_token_g > 0.0)) {
    throw Error(ErrorCode::kValidationError, "flops_per_token_g must be positive");
  }
  if (!(profile.flops_intercept_g >= 0.0)) {
    throw Error(ErrorCode::kValidationError, "flops_intercept_g must be non-negative");
  }
  if (!(profile.default_text_tokens >= 0.0)) {
    throw Error(ErrorCode::kValidationError, "default_text_tokens must be non-negative");
  }
  if (profile.geometry.token_pitch < 1) {
    throw Error(ErrorCode::kValidationError, "token_pitch must be >= 1");
  }
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_number(const std::string& key, const std::string& value, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::kParseError,
                "profile line " + std::to_string(line) + ": '" + key + "' is not a number");
  }
  return v;
}

}  // namespace

ModelProfile parse_profile(std::string_view text) {
  ModelProfile profile;
  bool have_intercept = false;
  bool have_slope = false;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParseError,
                  "profile line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key == "name") {
      profile.name = value;
    } else if (key == "flops_intercept_g") {
      profile.flops_intercept_g = parse_number(key, value, line_no);
      have_intercept = true;
    } else if (key == "flops_per_token_g") {
      profile.flops_per_token_g = parse_number(key, value, line_no);
      have_slope = true;
    } else if (key == "default_text_tokens") {
      profile.default_text_tokens = parse_number(key, value, line_no);
    } else if (key == "token_pitch") {
      const double pitch = parse_number(key, value, line_no);
      if (pitch != std::floor(pitch)) {
        throw Error(ErrorCode::kParseError, "token_pitch must be an integer");
      }
      profile.geometry.token_pitch = static_cast<int>(pitch);
    } else {
      throw Error(ErrorCode::kParseError,
                  "profile line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (profile.name.empty() || !have_intercept || !have_slope) {
    throw Error(ErrorCode::kParseError,
                "profile needs name, flops_intercept_g and flops_per_token_g");
  }
  validate_profile(profile);
  return profile;
}

ModelProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read profile " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_profile(ss.str());
}

std::optional<ModelProfile> builtin_profile(std::string_view name) {
  // Exact two-point solves through the full-image row (100 tokens) and the
  // rho = 0.05 row (40.4 tokens) of the published Qwen2.5-VL measurements.
  if (name == "qwen25vl-3b-paper") {
    // (100, 267.6 G), (40.4, 132.8 G)
    return ModelProfile{"qwen25vl-3b-paper", 41.425503355704734, 2.261744966442953, 36.0, {28}};
  }
  if (name == "qwen25vl-7b-paper") {
    // (100, 631.0 G), (40.4, 315.3 G)
    return ModelProfile{"qwen25vl-7b-paper", 101.30201342281885, 5.296979865771812, 36.0, {28}};
  }
  return std::nullopt;
}

std::vector<std::string> builtin_profile_names() {
  return {"qwen25vl-3b-paper", "qwen25vl-7b-paper"};
}

ModelProfile resolve_profile(std::string_view name_or_path) {
  if (auto p = builtin_profile(name_or_path)) return *p;
  const std::filesystem::path path{std::string(name_or_path)};
  if (std::filesystem::exists(path)) return load_profile(path);
  throw Error(ErrorCode::kNotFound, "no built-in profile or file named '" +
                                        std::string(name_or_path) + "'");
}

std::int64_t count_visual_tokens(std::span<const ViewDims> views, const TokenGeometry& geometry) {
  const int pitch = geometry.token_pitch;
  if (pitch < 1) throw Error(ErrorCode::kUnsnappedView, "token pitch must be >= 1");
  std::int64_t total = 0;
  for (const ViewDims& v : views) {
    if (v.width <= 0 || v.height <= 0 || v.width % pitch != 0 || v.height % pitch != 0) {
      throw Error(ErrorCode::kUnsnappedView, std::to_string(v.width) + "x" +
                                                 std::to_string(v.height) +
                                                 " is not snapped to pitch " +
                                                 std::to_string(pitch));
    }
    total += static_cast<std::int64_t>(v.width / pitch) * (v.height / pitch);
  }
  return total;
}

std::int64_t count_visual_tokens(std::span<const ScaledView> views, const TokenGeometry& geometry) {
  std::vector<ViewDims> dims;
  dims.reserve(views.size());
  for (const ScaledView& v : views) dims.push_back({v.width(), v.height()});
  return count_visual_tokens(std::span<const ViewDims>(dims), geometry);
}

std::int64_t count_visual_tokens(const TwoScaleInput& input, const TokenGeometry& geometry) {
  std::vector<ViewDims> dims;
  if (input.global_view) dims.push_back({input.global_view->width(), input.global_view->height()});
  dims.push_back({input.roi_view.width(), input.roi_view.height()});
  return count_visual_tokens(std::span<const ViewDims>(dims), geometry);
}

double estimate_flops(double total_tokens, const ModelProfile& profile) {
  return profile.flops_intercept_g + profile.flops_per_token_g * total_tokens;
}

AffineFit calibrate(std::span<const CalibrationRow> rows) {
  if (rows.size() < 2) throw Error(ErrorCode::kDegenerateRows, "calibration needs >= 2 rows");
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const auto& r : rows) {
    mean_x += r.total_tokens;
    mean_y += r.flops_g;
  }
  mean_x /= static_cast<double>(rows.size());
  mean_y /= static_cast<double>(rows.size());
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& r : rows) {
    const double dx = r.total_tokens - mean_x;
    sxx += dx * dx;
    sxy += dx * (r.flops_g - mean_y);
  }
  if (sxx == 0.0) {
    throw Error(ErrorCode::kDegenerateRows, "calibration rows share one token count");
  }
  const double slope = sxy / sxx;
  return {mean_y - slope * mean_x, slope};
}

CostReport make_cost_report(double visual_tokens, double text_tokens, const ModelProfile& profile) {
  CostReport r;
  r.visual_tokens = visual_tokens;
  r.text_tokens = text_tokens;
  r.total_tokens = count_total_tokens(visual_tokens, text_tokens);
  r.flops_g = estimate_flops(r.total_tokens, profile);
  return r;
}

double reduction_pct(double candidate, double baseline) {
  if (!(baseline > 0.0)) throw Error(ErrorCode::kZeroBaseline, "baseline must be positive");
  return 100.0 * (1.0 - candidate / baseline);
}

CostReport reduction_report(const CostReport& candidate, const CostReport& baseline,
                            std::string baseline_name) {
  CostReport out = candidate;
  out.reductions = Reductions{reduction_pct(candidate.visual_tokens, baseline.visual_tokens),
                              reduction_pct(candidate.total_tokens, baseline.total_tokens),
                              reduction_pct(candidate.flops_g, baseline.flops_g)};
  out.baseline_name = std::move(baseline_name);
  return out;
}

std::string format_change(double reduction_percent) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", std::abs(reduction_percent));
  const std::string magnitude = buf;
  if (magnitude == "0.0") return "0.0%";
  return (reduction_percent > 0.0 ? "-" : "+") + magnitude + "%";
}

}  // namespace gazecrop
