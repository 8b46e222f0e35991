#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace gazecrop {

/// 8-bit interleaved RGB image, row-major.
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int width, int height, std::uint8_t fill = 0);
  Image(int width, int height, std::vector<std::uint8_t> rgb);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return width_ == 0 || height_ == 0; }

  std::uint8_t* pixel(int x, int y) {
    return data_.data() + (static_cast<std::size_t>(y) * width_ + x) * kChannels;
  }
  const std::uint8_t* pixel(int x, int y) const {
    return data_.data() + (static_cast<std::size_t>(y) * width_ + x) * kChannels;
  }

  std::span<const std::uint8_t> bytes() const noexcept { return data_; }
  std::span<std::uint8_t> bytes() noexcept { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Dense row-major 2-D grid of doubles (counts, smoothed mass, heatmaps).
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t row, std::size_t col) { return data_[row * cols_ + col]; }
  double operator()(std::size_t row, std::size_t col) const { return data_[row * cols_ + col]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  double sum() const noexcept;
  double max() const noexcept;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct ImageSize {
  int width = 0;
  int height = 0;
};

// PNG and JPEG are detected from the file signature.
Image read_image(const std::filesystem::path& path);
ImageSize probe_image_size(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const Image& image);
void write_gray_png(const std::filesystem::path& path, int width, int height,
                    std::span<const std::uint8_t> gray);

/// Image resampling strategy. Implementations must be deterministic.
class Resampler {
 public:
  virtual ~Resampler() = default;
  virtual Image resize(const Image& src, int width, int height) const = 0;
};

/// Bilinear interpolation with half-pixel centers and edge clamping. An
/// exact 2:1 reduction therefore averages each 2x2 block.
class BilinearResampler final : public Resampler {
 public:
  Image resize(const Image& src, int width, int height) const override;
};

const Resampler& default_resampler();

}  // namespace gazecrop
