#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "gazecrop/error.hpp"
#include "gazecrop/image.hpp"

namespace gazecrop {

struct GazePoint {
  double x = 0.0;
  double y = 0.0;
  std::optional<double> t;

  friend bool operator==(const GazePoint&, const GazePoint&) = default;
};

/// An eye-gaze trace in pixel coordinates of its image. Construction clamps
/// every point into [0, width) x [0, height) and rejects non-finite
/// coordinates and decreasing timestamps.
class GazeTrace {
 public:
  GazeTrace(std::vector<GazePoint> points, int image_width, int image_height);

  const std::vector<GazePoint>& points() const noexcept { return points_; }
  int image_width() const noexcept { return width_; }
  int image_height() const noexcept { return height_; }
  bool empty() const noexcept { return points_.empty(); }
  /// Number of points that were moved onto the grid at ingest.
  std::size_t clamped_count() const noexcept { return clamped_; }

 private:
  std::vector<GazePoint> points_;
  int width_;
  int height_;
  std::size_t clamped_ = 0;
};

/// Normalized attention distribution over the pixel grid: non-negative,
/// sums to one, shape (image_height, image_width).
class GazeHeatmap {
 public:
  GazeHeatmap(Grid values, double sigma_px);

  const Grid& values() const noexcept { return values_; }
  double sigma_px() const noexcept { return sigma_px_; }
  int width() const noexcept { return static_cast<int>(values_.cols()); }
  int height() const noexcept { return static_cast<int>(values_.rows()); }
  double at(int x, int y) const { return values_(static_cast<std::size_t>(y), static_cast<std::size_t>(x)); }

 private:
  Grid values_;
  double sigma_px_;
};

/// Two percent of the image diagonal.
double default_sigma_px(int image_width, int image_height);

/// Radius in pixels at which the smoothing kernel is truncated: ceil(3 sigma).
int kernel_radius(double sigma_px);

/// Each point adds weight 1 to the cell containing floor(x), floor(y).
Grid rasterize_trace(const GazeTrace& trace);

/// Zero-padded separable convolution with a truncated, renormalized
/// isotropic Gaussian.
Grid gaussian_smooth(const Grid& raw, double sigma_px);

GazeHeatmap normalize(const Grid& smoothed, double sigma_px = 0.0);

GazeHeatmap build_heatmap(const GazeTrace& trace, double sigma_px);

inline constexpr double kHeatmapSumTolerance = 1e-6;

// Float grid export: 16-byte header {"GZHM", u32 height, u32 width, u32 0}
// followed by little-endian float32 values in row-major order.
std::vector<std::byte> encode_heatmap_grid(const GazeHeatmap& heatmap);
Grid decode_heatmap_grid(std::span<const std::byte> bytes);
void write_heatmap_grid(const std::filesystem::path& path, const GazeHeatmap& heatmap);

/// Heatmap rescaled so its maximum maps to 255.
std::vector<std::uint8_t> heatmap_to_gray(const GazeHeatmap& heatmap);
void write_heatmap_png(const std::filesystem::path& path, const GazeHeatmap& heatmap);

}  // namespace gazecrop
