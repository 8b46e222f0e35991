#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "gazecrop/image.hpp"
#include "gazecrop/token_geometry.hpp"

namespace gazecrop {

enum class ViewRole { kGlobal, kRoi, kFull };

std::string_view view_role_name(ViewRole role);

/// An image ready for the vision encoder: both sides are positive multiples
/// of the token pitch it was built for.
struct ScaledView {
  Image pixels;
  ViewRole role = ViewRole::kRoi;

  int width() const noexcept { return pixels.width(); }
  int height() const noexcept { return pixels.height(); }
};

enum class InputMode { kRoiOnly, kTwoScale, kBaseline };

std::string_view input_mode_name(InputMode mode);
InputMode parse_input_mode(std::string_view name);

struct TwoScaleInput {
  std::optional<ScaledView> global_view;
  ScaledView roi_view;
  std::string prompt_text;
  InputMode mode = InputMode::kTwoScale;
  std::string template_version;
};

inline constexpr std::string_view kPromptTemplateVersion = "gazecrop-prompt-v1";
inline constexpr std::string_view kTwoScaleTemplate =
    "You are given two images. The first image is a low-resolution view of the whole scene. "
    "The second image is a region of interest (ROI) selected by the user's eye gaze; "
    "prioritize the ROI when reasoning. Question: {question}";
inline constexpr std::string_view kRoiOnlyTemplate =
    "You are given one image showing the region the user is looking at. Question: {question}";
inline constexpr std::string_view kBaselineTemplate =
    "You are given one image of the whole scene. Question: {question}";
inline constexpr std::string_view kRoiPrioritySentence =
    "The second image is a region of interest (ROI) selected by the user's eye gaze; "
    "prioritize the ROI when reasoning.";

struct RoiViewOptions {
  int max_pitches = 8;  // per side; 224 px under a 28 px pitch
};

ScaledView make_global_view(const Image& image, int target_height, int target_width,
                            const TokenGeometry& geometry = {},
                            const Resampler& resampler = default_resampler());

/// Snaps each side independently to the nearest multiple of the pitch
/// (halves round up), clamped to [1, max_pitches] pitches.
int snap_to_pitch(int side, const TokenGeometry& geometry, const RoiViewOptions& options = {});

ScaledView make_roi_view(const Image& crop, const TokenGeometry& geometry = {},
                         const RoiViewOptions& options = {},
                         const Resampler& resampler = default_resampler());

/// Full image resampled to the view cap on both sides (the full-image
/// reference input).
ScaledView make_baseline_view(const Image& image, const TokenGeometry& geometry = {},
                              const RoiViewOptions& options = {},
                              const Resampler& resampler = default_resampler());

std::string render_prompt(InputMode mode, std::string_view question);

TwoScaleInput assemble(std::optional<ScaledView> global, ScaledView roi, std::string_view question,
                       InputMode mode);

}  // namespace gazecrop
