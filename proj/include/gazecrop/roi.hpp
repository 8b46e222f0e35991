#pragma once

#include <cstddef>
#include <vector>

#include "gazecrop/gaze_heatmap.hpp"
#include "gazecrop/image.hpp"

namespace gazecrop {

struct PixelCoord {
  int x = 0;
  int y = 0;

  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// Inclusive pixel box together with the heatmap mass it covers.
struct RoiBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
  double covered_mass = 0.0;
  double rho = 0.0;

  int width() const noexcept { return x1 - x0 + 1; }
  int height() const noexcept { return y1 - y0 + 1; }
  long long area() const noexcept { return static_cast<long long>(width()) * height(); }
  bool contains(const RoiBox& other) const noexcept {
    return x0 <= other.x0 && y0 <= other.y0 && other.x1 <= x1 && other.y1 <= y1;
  }
  bool same_region(const RoiBox& other) const noexcept {
    return x0 == other.x0 && y0 == other.y0 && x1 == other.x1 && y1 == other.y1;
  }
};

struct MinSizePolicy {
  int min_width = 56;
  int min_height = 56;
};

void validate_rho(double rho);

/// Pixels of a heatmap in descending value order, ties broken by ascending
/// row-major index, with running cumulative mass. Ranking once lets a ρ
/// sweep reuse the same order; prefixes for growing ρ are nested.
class RankedPixels {
 public:
  explicit RankedPixels(const GazeHeatmap& heatmap);

  /// Length of the shortest prefix whose cumulative mass reaches rho.
  std::size_t prefix_length(double rho) const;

  const std::vector<std::size_t>& order() const noexcept { return order_; }
  double cumulative_mass(std::size_t prefix_len) const {
    return prefix_len == 0 ? 0.0 : cumulative_[prefix_len - 1];
  }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

 private:
  std::vector<std::size_t> order_;
  std::vector<double> cumulative_;
  int width_;
  int height_;
};

struct RoiSelection {
  std::vector<PixelCoord> support;  // in ranking order
  double support_mass = 0.0;
  RoiBox box;
};

std::vector<PixelCoord> support_set(const GazeHeatmap& heatmap, double rho);

RoiSelection select_roi(const GazeHeatmap& heatmap, const RankedPixels& ranked, double rho);

RoiBox support_mass_box(const GazeHeatmap& heatmap, double rho);
RoiBox support_mass_box(const GazeHeatmap& heatmap, const RankedPixels& ranked, double rho);

double box_mass(const GazeHeatmap& heatmap, const RoiBox& box);

/// Grows the box about its center to the policy size and shifts it back
/// inside the image. covered_mass is carried over unchanged (it remains a
/// lower bound); use box_mass to refresh it.
RoiBox enforce_min_size(const RoiBox& box, const MinSizePolicy& policy, int image_width,
                        int image_height);

Image extract_roi(const Image& image, const RoiBox& box);

}  // namespace gazecrop
