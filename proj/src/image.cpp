#include "gazecrop/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numeric>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "gazecrop/error.hpp"

namespace gazecrop {

Image::Image(int width, int height, std::uint8_t fill)
    : width_(width),
      height_(height),
      data_(static_cast<std::size_t>(width) * height * kChannels, fill) {
  if (width < 0 || height < 0) throw Error(ErrorCode::kEmptyInput, "negative image size");
}

Image::Image(int width, int height, std::vector<std::uint8_t> rgb)
    : width_(width), height_(height), data_(std::move(rgb)) {
  if (width < 0 || height < 0 ||
      data_.size() != static_cast<std::size_t>(width) * height * kChannels) {
    throw Error(ErrorCode::kEmptyInput, "pixel buffer does not match image size");
  }
}

double Grid::sum() const noexcept { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double Grid::max() const noexcept {
  if (data_.empty()) return 0.0;
  return *std::max_element(data_.begin(), data_.end());
}

namespace {

enum class Format { kPng, kJpeg, kUnknown };

Format sniff(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::array<unsigned char, 8> sig{};
  in.read(reinterpret_cast<char*>(sig.data()), sig.size());
  const auto got = in.gcount();
  if (got >= 8 && png_sig_cmp(sig.data(), 0, 8) == 0) return Format::kPng;
  if (got >= 3 && sig[0] == 0xFF && sig[1] == 0xD8 && sig[2] == 0xFF) return Format::kJpeg;
  return Format::kUnknown;
}

struct PngImage {
  png_image img{};
  PngImage() {
    img.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&img); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

Image read_png(const std::filesystem::path& path, bool header_only, ImageSize* size) {
  PngImage png;
  if (!png_image_begin_read_from_file(&png.img, path.c_str())) {
    throw Error(ErrorCode::kIoError, "bad PNG " + path.string() + ": " + png.img.message);
  }
  if (size) *size = {static_cast<int>(png.img.width), static_cast<int>(png.img.height)};
  if (header_only) return {};
  png.img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(png.img));
  if (!png_image_finish_read(&png.img, nullptr, buf.data(), 0, nullptr)) {
    throw Error(ErrorCode::kIoError, "bad PNG " + path.string() + ": " + png.img.message);
  }
  return Image(static_cast<int>(png.img.width), static_cast<int>(png.img.height), std::move(buf));
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

Image read_jpeg(const std::filesystem::path& path, bool header_only, ImageSize* size) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!file) throw Error(ErrorCode::kIoError, "cannot open " + path.string());

  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;

  // Only POD state lives across the setjmp boundary.
  std::vector<std::uint8_t>* out = new std::vector<std::uint8_t>();
  int width = 0;
  int height = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    delete out;
    throw Error(ErrorCode::kIoError, "bad JPEG " + path.string() + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  width = static_cast<int>(cinfo.image_width);
  height = static_cast<int>(cinfo.image_height);
  if (!header_only) {
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    out->resize(static_cast<std::size_t>(width) * height * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
      JSAMPROW row = out->data() + static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
      jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
  }
  jpeg_destroy_decompress(&cinfo);

  std::vector<std::uint8_t> pixels = std::move(*out);
  delete out;
  if (size) *size = {width, height};
  if (header_only) return {};
  return Image(width, height, std::move(pixels));
}

Image read_any(const std::filesystem::path& path, bool header_only, ImageSize* size) {
  switch (sniff(path)) {
    case Format::kPng:
      return read_png(path, header_only, size);
    case Format::kJpeg:
      return read_jpeg(path, header_only, size);
    case Format::kUnknown:
      break;
  }
  throw Error(ErrorCode::kIoError, "unsupported image format: " + path.string());
}

void write_png_format(const std::filesystem::path& path, int width, int height,
                      std::uint32_t format, const void* data) {
  PngImage png;
  png.img.width = static_cast<png_uint_32>(width);
  png.img.height = static_cast<png_uint_32>(height);
  png.img.format = format;
  if (!png_image_write_to_file(&png.img, path.c_str(), 0, data, 0, nullptr)) {
    throw Error(ErrorCode::kIoError, "cannot write " + path.string() + ": " + png.img.message);
  }
}

}  // namespace

Image read_image(const std::filesystem::path& path) { return read_any(path, false, nullptr); }

ImageSize probe_image_size(const std::filesystem::path& path) {
  ImageSize size;
  read_any(path, true, &size);
  return size;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  if (image.empty()) throw Error(ErrorCode::kEmptyInput, "cannot write empty image");
  write_png_format(path, image.width(), image.height(), PNG_FORMAT_RGB, image.bytes().data());
}

void write_gray_png(const std::filesystem::path& path, int width, int height,
                    std::span<const std::uint8_t> gray) {
  if (width <= 0 || height <= 0 || gray.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kEmptyInput, "grayscale buffer does not match image size");
  }
  write_png_format(path, width, height, PNG_FORMAT_GRAY, gray.data());
}

Image BilinearResampler::resize(const Image& src, int width, int height) const {
  if (src.empty()) throw Error(ErrorCode::kEmptyInput, "cannot resample an empty image");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kBadTarget, "non-positive target size");
  if (width == src.width() && height == src.height()) return src;

  Image dst(width, height);
  const double sx = static_cast<double>(src.width()) / width;
  const double sy = static_cast<double>(src.height()) / height;

  // Per-axis taps are shared by every row / column.
  struct Tap {
    int lo, hi;
    double frac;
  };
  auto taps = [](int out_len, int in_len, double scale) {
    std::vector<Tap> result(static_cast<std::size_t>(out_len));
    for (int i = 0; i < out_len; ++i) {
      double pos = (i + 0.5) * scale - 0.5;
      pos = std::clamp(pos, 0.0, static_cast<double>(in_len - 1));
      const int lo = static_cast<int>(std::floor(pos));
      const int hi = std::min(lo + 1, in_len - 1);
      result[static_cast<std::size_t>(i)] = {lo, hi, pos - lo};
    }
    return result;
  };
  const auto xt = taps(width, src.width(), sx);
  const auto yt = taps(height, src.height(), sy);

  for (int y = 0; y < height; ++y) {
    const Tap& ty = yt[static_cast<std::size_t>(y)];
    for (int x = 0; x < width; ++x) {
      const Tap& tx = xt[static_cast<std::size_t>(x)];
      const std::uint8_t* p00 = src.pixel(tx.lo, ty.lo);
      const std::uint8_t* p01 = src.pixel(tx.hi, ty.lo);
      const std::uint8_t* p10 = src.pixel(tx.lo, ty.hi);
      const std::uint8_t* p11 = src.pixel(tx.hi, ty.hi);
      std::uint8_t* out = dst.pixel(x, y);
      for (int c = 0; c < Image::kChannels; ++c) {
        const double top = p00[c] + (p01[c] - p00[c]) * tx.frac;
        const double bottom = p10[c] + (p11[c] - p10[c]) * tx.frac;
        const double v = top + (bottom - top) * ty.frac;
        out[c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return dst;
}

const Resampler& default_resampler() {
  static const BilinearResampler instance;
  return instance;
}

}  // namespace gazecrop
