#include "gazecrop/input_assembly.hpp"

#include <algorithm>
#include <string>

#include "gazecrop/error.hpp"

namespace gazecrop {

std::string_view view_role_name(ViewRole role) {
  switch (role) {
    case ViewRole::kGlobal: return "global";
    case ViewRole::kRoi: return "roi";
    case ViewRole::kFull: return "full";
  }
  return "unknown";
}

std::string_view input_mode_name(InputMode mode) {
  switch (mode) {
    case InputMode::kRoiOnly: return "roi_only";
    case InputMode::kTwoScale: return "two_scale";
    case InputMode::kBaseline: return "baseline";
  }
  return "unknown";
}

InputMode parse_input_mode(std::string_view name) {
  if (name == "roi_only") return InputMode::kRoiOnly;
  if (name == "two_scale") return InputMode::kTwoScale;
  if (name == "baseline") return InputMode::kBaseline;
  throw Error(ErrorCode::kUsage, "unknown mode '" + std::string(name) +
                                     "' (expected roi_only, two_scale or baseline)");
}

namespace {

void check_pitch(const TokenGeometry& geometry) {
  if (geometry.token_pitch < 1) throw Error(ErrorCode::kBadTarget, "token pitch must be >= 1");
}

}  // namespace

ScaledView make_global_view(const Image& image, int target_height, int target_width,
                            const TokenGeometry& geometry, const Resampler& resampler) {
  check_pitch(geometry);
  const int pitch = geometry.token_pitch;
  if (target_height <= 0 || target_width <= 0 || target_height % pitch != 0 ||
      target_width % pitch != 0) {
    throw Error(ErrorCode::kBadTarget, "global view " + std::to_string(target_width) + "x" +
                                           std::to_string(target_height) +
                                           " is not a positive multiple of pitch " +
                                           std::to_string(pitch));
  }
  if (image.empty()) throw Error(ErrorCode::kEmptyInput, "global view of an empty image");
  return {resampler.resize(image, target_width, target_height), ViewRole::kGlobal};
}

int snap_to_pitch(int side, const TokenGeometry& geometry, const RoiViewOptions& options) {
  check_pitch(geometry);
  const int pitch = geometry.token_pitch;
  const int tokens = (side + pitch / 2) / pitch;
  return std::clamp(tokens, 1, std::max(1, options.max_pitches)) * pitch;
}

ScaledView make_roi_view(const Image& crop, const TokenGeometry& geometry,
                         const RoiViewOptions& options, const Resampler& resampler) {
  if (crop.empty()) throw Error(ErrorCode::kEmptyInput, "ROI crop is empty");
  const int w = snap_to_pitch(crop.width(), geometry, options);
  const int h = snap_to_pitch(crop.height(), geometry, options);
  return {resampler.resize(crop, w, h), ViewRole::kRoi};
}

ScaledView make_baseline_view(const Image& image, const TokenGeometry& geometry,
                              const RoiViewOptions& options, const Resampler& resampler) {
  check_pitch(geometry);
  if (image.empty()) throw Error(ErrorCode::kEmptyInput, "baseline view of an empty image");
  const int side = std::max(1, options.max_pitches) * geometry.token_pitch;
  return {resampler.resize(image, side, side), ViewRole::kFull};
}

std::string render_prompt(InputMode mode, std::string_view question) {
  std::string_view tmpl;
  switch (mode) {
    case InputMode::kTwoScale: tmpl = kTwoScaleTemplate; break;
    case InputMode::kRoiOnly: tmpl = kRoiOnlyTemplate; break;
    case InputMode::kBaseline: tmpl = kBaselineTemplate; break;
  }
  constexpr std::string_view kSlot = "{question}";
  const auto pos = tmpl.find(kSlot);
  std::string out(tmpl.substr(0, pos));
  out += question;
  out += tmpl.substr(pos + kSlot.size());
  return out;
}

TwoScaleInput assemble(std::optional<ScaledView> global, ScaledView roi, std::string_view question,
                       InputMode mode) {
  if (mode == InputMode::kTwoScale && !global) {
    throw Error(ErrorCode::kModeMismatch, "two_scale mode needs a global view");
  }
  if (mode != InputMode::kTwoScale && global) {
    throw Error(ErrorCode::kModeMismatch,
                std::string(input_mode_name(mode)) + " mode takes no global view");
  }
  if (global && global->role != ViewRole::kGlobal) {
    throw Error(ErrorCode::kModeMismatch, "first image must be the global view");
  }
  const ViewRole expected = mode == InputMode::kBaseline ? ViewRole::kFull : ViewRole::kRoi;
  if (roi.role != expected) {
    throw Error(ErrorCode::kModeMismatch, "view role does not match " +
                                              std::string(input_mode_name(mode)) + " mode");
  }
  TwoScaleInput input;
  input.global_view = std::move(global);
  input.roi_view = std::move(roi);
  input.prompt_text = render_prompt(mode, question);
  input.mode = mode;
  input.template_version = std::string(kPromptTemplateVersion);
  return input;
}

}  // namespace gazecrop
