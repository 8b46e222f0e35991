#include "gazecrop/gaze_heatmap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "gazecrop/error.hpp"

namespace gazecrop {

GazeTrace::GazeTrace(std::vector<GazePoint> points, int image_width, int image_height)
    : points_(std::move(points)), width_(image_width), height_(image_height) {
  if (image_width <= 0 || image_height <= 0) {
    throw Error(ErrorCode::kValidationError, "gaze trace needs a positive image size");
  }
  // Largest coordinate that still floors into the last row / column.
  const double max_x = std::nextafter(static_cast<double>(width_), 0.0);
  const double max_y = std::nextafter(static_cast<double>(height_), 0.0);
  std::optional<double> last_t;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    GazePoint& p = points_[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error(ErrorCode::kValidationError, "gaze point " + std::to_string(i) + " is not finite");
    }
    const double cx = std::clamp(p.x, 0.0, max_x);
    const double cy = std::clamp(p.y, 0.0, max_y);
    if (cx != p.x || cy != p.y) ++clamped_;
    p.x = cx;
    p.y = cy;
    if (p.t) {
      if (!std::isfinite(*p.t)) {
        throw Error(ErrorCode::kValidationError, "gaze point " + std::to_string(i) + " has a non-finite timestamp");
      }
      if (last_t && *p.t < *last_t) {
        throw Error(ErrorCode::kValidationError,
                    "gaze timestamps decrease at point " + std::to_string(i));
      }
      last_t = p.t;
    }
  }
}

GazeHeatmap::GazeHeatmap(Grid values, double sigma_px)
    : values_(std::move(values)), sigma_px_(sigma_px) {
  if (values_.size() == 0) throw Error(ErrorCode::kZeroMass, "heatmap grid is empty");
  for (double v : values_.values()) {
    if (!(v >= 0.0)) throw Error(ErrorCode::kValidationError, "heatmap has a negative or NaN entry");
  }
  if (std::abs(values_.sum() - 1.0) > kHeatmapSumTolerance) {
    throw Error(ErrorCode::kValidationError, "heatmap does not sum to one");
  }
}

double default_sigma_px(int image_width, int image_height) {
  return 0.02 * std::hypot(static_cast<double>(image_width), static_cast<double>(image_height));
}

int kernel_radius(double sigma_px) { return static_cast<int>(std::ceil(3.0 * sigma_px)); }

Grid rasterize_trace(const GazeTrace& trace) {
  if (trace.empty()) throw Error(ErrorCode::kEmptyTrace, "gaze trace has no points");
  Grid grid(static_cast<std::size_t>(trace.image_height()), static_cast<std::size_t>(trace.image_width()));
  for (const GazePoint& p : trace.points()) {
    grid(static_cast<std::size_t>(p.y), static_cast<std::size_t>(p.x)) += 1.0;
  }
  return grid;
}

namespace {

std::vector<double> gaussian_kernel(double sigma_px) {
  const int radius = kernel_radius(sigma_px);
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int d = -radius; d <= radius; ++d) {
    const double w = std::exp(-0.5 * (d * d) / (sigma_px * sigma_px));
    k[static_cast<std::size_t>(d + radius)] = w;
    total += w;
  }
  for (double& w : k) w /= total;
  return k;
}

}  // namespace

Grid gaussian_smooth(const Grid& raw, double sigma_px) {
  if (!std::isfinite(sigma_px) || sigma_px <= 0.0) {
    throw Error(ErrorCode::kInvalidSigma, "sigma_px must be positive and finite");
  }
  const auto kernel = gaussian_kernel(sigma_px);
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const auto rows = static_cast<std::ptrdiff_t>(raw.rows());
  const auto cols = static_cast<std::ptrdiff_t>(raw.cols());

  // Scatter form of the two 1-D passes; rasterized traces are sparse, so
  // only non-zero cells pay for the kernel. Zero padding: taps falling
  // off-grid are simply dropped.
  Grid horizontal(raw.rows(), raw.cols());
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    for (std::ptrdiff_t c = 0; c < cols; ++c) {
      const double v = raw(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
      if (v == 0.0) continue;
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(c - radius, 0);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(c + radius, cols - 1);
      for (std::ptrdiff_t cc = lo; cc <= hi; ++cc) {
        horizontal(static_cast<std::size_t>(r), static_cast<std::size_t>(cc)) +=
            kernel[static_cast<std::size_t>(cc - c + radius)] * v;
      }
    }
  }
  Grid out(raw.rows(), raw.cols());
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    for (std::ptrdiff_t c = 0; c < cols; ++c) {
      const double v = horizontal(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
      if (v == 0.0) continue;
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(r - radius, 0);
      const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(r + radius, rows - 1);
      for (std::ptrdiff_t rr = lo; rr <= hi; ++rr) {
        out(static_cast<std::size_t>(rr), static_cast<std::size_t>(c)) +=
            kernel[static_cast<std::size_t>(rr - r + radius)] * v;
      }
    }
  }
  return out;
}

GazeHeatmap normalize(const Grid& smoothed, double sigma_px) {
  for (double v : smoothed.values()) {
    if (!(v >= 0.0)) throw Error(ErrorCode::kValidationError, "grid has a negative or NaN entry");
  }
  const double total = smoothed.sum();
  if (!(total > 0.0)) throw Error(ErrorCode::kZeroMass, "grid has no mass to normalize");
  Grid out = smoothed;
  for (double& v : out.values()) v /= total;
  return GazeHeatmap(std::move(out), sigma_px);
}

GazeHeatmap build_heatmap(const GazeTrace& trace, double sigma_px) {
  return normalize(gaussian_smooth(rasterize_trace(trace), sigma_px), sigma_px);
}

namespace {

constexpr char kGridMagic[4] = {'G', 'Z', 'H', 'M'};
constexpr std::size_t kGridHeaderBytes = 16;

void put_u32_le(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32_le(std::span<const std::byte> in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(std::to_integer<std::uint8_t>(in[offset + i])) << (8 * i);
  }
  return v;
}

}  // namespace

std::vector<std::byte> encode_heatmap_grid(const GazeHeatmap& heatmap) {
  const Grid& g = heatmap.values();
  std::vector<std::byte> out;
  out.reserve(kGridHeaderBytes + g.size() * 4);
  for (char c : kGridMagic) out.push_back(static_cast<std::byte>(c));
  put_u32_le(out, static_cast<std::uint32_t>(g.rows()));
  put_u32_le(out, static_cast<std::uint32_t>(g.cols()));
  put_u32_le(out, 0);
  for (double v : g.values()) put_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

Grid decode_heatmap_grid(std::span<const std::byte> bytes) {
  if (bytes.size() < kGridHeaderBytes ||
      std::memcmp(bytes.data(), kGridMagic, sizeof(kGridMagic)) != 0) {
    throw Error(ErrorCode::kParseError, "not a GZHM float grid");
  }
  const std::uint32_t rows = get_u32_le(bytes, 4);
  const std::uint32_t cols = get_u32_le(bytes, 8);
  const std::size_t count = static_cast<std::size_t>(rows) * cols;
  if (bytes.size() != kGridHeaderBytes + count * 4) {
    throw Error(ErrorCode::kParseError, "GZHM payload size does not match header");
  }
  Grid grid(rows, cols);
  auto values = grid.values();
  for (std::size_t i = 0; i < count; ++i) {
    values[i] = std::bit_cast<float>(get_u32_le(bytes, kGridHeaderBytes + 4 * i));
  }
  return grid;
}

void write_heatmap_grid(const std::filesystem::path& path, const GazeHeatmap& heatmap) {
  const auto bytes = encode_heatmap_grid(heatmap);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "short write to " + path.string());
}

std::vector<std::uint8_t> heatmap_to_gray(const GazeHeatmap& heatmap) {
  const Grid& g = heatmap.values();
  const double peak = g.max();
  std::vector<std::uint8_t> gray(g.size());
  auto values = g.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    gray[i] = static_cast<std::uint8_t>(std::lround(255.0 * values[i] / peak));
  }
  return gray;
}

void write_heatmap_png(const std::filesystem::path& path, const GazeHeatmap& heatmap) {
  write_gray_png(path, heatmap.width(), heatmap.height(), heatmap_to_gray(heatmap));
}

}  // namespace gazecrop
