#include "gazecrop/roi.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

#include "gazecrop/error.hpp"

namespace gazecrop {

void validate_rho(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) {
    throw Error(ErrorCode::kInvalidRho, "rho must lie in (0, 1), got " + std::to_string(rho));
  }
}

RankedPixels::RankedPixels(const GazeHeatmap& heatmap)
    : width_(heatmap.width()), height_(heatmap.height()) {
  auto values = heatmap.values().values();
  order_.resize(values.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  });
  cumulative_.resize(order_.size());
  double running = 0.0;
  for (std::size_t i = 0; i < order_.size(); ++i) {
    running += values[order_[i]];
    cumulative_[i] = running;
  }
}

std::size_t RankedPixels::prefix_length(double rho) const {
  validate_rho(rho);
  const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), rho);
  // Rounding can leave the full sum a hair under rho; the whole grid is then
  // the support set.
  if (it == cumulative_.end()) return cumulative_.size();
  return static_cast<std::size_t>(it - cumulative_.begin()) + 1;
}

RoiSelection select_roi(const GazeHeatmap& heatmap, const RankedPixels& ranked, double rho) {
  const std::size_t len = ranked.prefix_length(rho);
  RoiSelection sel;
  sel.support.reserve(len);
  const auto w = static_cast<std::size_t>(ranked.width());
  int x0 = ranked.width();
  int y0 = ranked.height();
  int x1 = -1;
  int y1 = -1;
  for (std::size_t i = 0; i < len; ++i) {
    const std::size_t idx = ranked.order()[i];
    const PixelCoord p{static_cast<int>(idx % w), static_cast<int>(idx / w)};
    sel.support.push_back(p);
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  }
  sel.support_mass = ranked.cumulative_mass(len);
  sel.box = RoiBox{x0, y0, x1, y1, 0.0, rho};
  sel.box.covered_mass = box_mass(heatmap, sel.box);
  return sel;
}

std::vector<PixelCoord> support_set(const GazeHeatmap& heatmap, double rho) {
  validate_rho(rho);
  return select_roi(heatmap, RankedPixels(heatmap), rho).support;
}

RoiBox support_mass_box(const GazeHeatmap& heatmap, double rho) {
  validate_rho(rho);
  return select_roi(heatmap, RankedPixels(heatmap), rho).box;
}

RoiBox support_mass_box(const GazeHeatmap& heatmap, const RankedPixels& ranked, double rho) {
  return select_roi(heatmap, ranked, rho).box;
}

double box_mass(const GazeHeatmap& heatmap, const RoiBox& box) {
  double mass = 0.0;
  for (int y = box.y0; y <= box.y1; ++y) {
    for (int x = box.x0; x <= box.x1; ++x) mass += heatmap.at(x, y);
  }
  return mass;
}

namespace {

void check_box(const RoiBox& box, int image_width, int image_height) {
  if (box.x0 < 0 || box.y0 < 0 || box.x1 < box.x0 || box.y1 < box.y0 || box.x1 >= image_width ||
      box.y1 >= image_height) {
    throw Error(ErrorCode::kOutOfBounds,
                "box (" + std::to_string(box.x0) + "," + std::to_string(box.y0) + "," +
                    std::to_string(box.x1) + "," + std::to_string(box.y1) + ") outside " +
                    std::to_string(image_width) + "x" + std::to_string(image_height));
  }
}

// Expands [lo, hi] about its center to at least `extent`, then shifts the
// interval into [0, limit).
void grow_axis(int& lo, int& hi, int extent, int limit) {
  const int current = hi - lo + 1;
  if (current >= extent) return;
  const int need = extent - current;
  lo -= need / 2;
  hi += need - need / 2;
  if (lo < 0) {
    hi -= lo;
    lo = 0;
  }
  if (hi >= limit) {
    lo -= hi - (limit - 1);
    hi = limit - 1;
  }
}

}  // namespace

RoiBox enforce_min_size(const RoiBox& box, const MinSizePolicy& policy, int image_width,
                        int image_height) {
  if (policy.min_width < 1 || policy.min_height < 1) {
    throw Error(ErrorCode::kValidationError, "min crop size must be at least 1x1");
  }
  if (policy.min_width > image_width || policy.min_height > image_height) {
    throw Error(ErrorCode::kPolicyLargerThanImage,
                "min crop " + std::to_string(policy.min_width) + "x" +
                    std::to_string(policy.min_height) + " exceeds image " +
                    std::to_string(image_width) + "x" + std::to_string(image_height));
  }
  check_box(box, image_width, image_height);
  RoiBox out = box;
  grow_axis(out.x0, out.x1, policy.min_width, image_width);
  grow_axis(out.y0, out.y1, policy.min_height, image_height);
  return out;
}

Image extract_roi(const Image& image, const RoiBox& box) {
  check_box(box, image.width(), image.height());
  Image crop(box.width(), box.height());
  const std::size_t row_bytes = static_cast<std::size_t>(box.width()) * Image::kChannels;
  for (int y = 0; y < box.height(); ++y) {
    std::memcpy(crop.pixel(0, y), image.pixel(box.x0, box.y0 + y), row_bytes);
  }
  return crop;
}

}  // namespace gazecrop
