#include "freeseed/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace freeseed::image_io {

namespace {

void write_png(const std::filesystem::path& path, const std::uint8_t* pixels, std::int64_t height, std::int64_t width,
               int channels) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!file) throw std::runtime_error("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::int64_t r = 0; r < height; ++r) {
    png_write_row(png, const_cast<png_bytep>(pixels + r * width * channels));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0))); }

}  // namespace

void write_gray_png(const std::filesystem::path& path, const Tensor<double>& image) {
  if (image.ndim() != 2) throw std::invalid_argument("write_gray_png expects an [H, W] map");
  std::vector<std::uint8_t> px(image.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = to_byte(image[i]);
  write_png(path, px.data(), image.dim(0), image.dim(1), 1);
}

Tensor<double> read_gray_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw std::runtime_error("cannot read " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> px(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, px.data(), 0, nullptr)) {
    png_image_free(&image);
    throw std::runtime_error("cannot decode " + path.string() + ": " + image.message);
  }
  Tensor<double> out({static_cast<std::int64_t>(image.height), static_cast<std::int64_t>(image.width)});
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = px[i] / 255.0;
  return out;
}

void write_rgb_png(const std::filesystem::path& path, const std::vector<std::uint8_t>& rgb, std::int64_t height,
                   std::int64_t width) {
  if (rgb.size() != static_cast<std::size_t>(3 * height * width)) throw std::invalid_argument("write_rgb_png: size mismatch");
  write_png(path, rgb.data(), height, width, 3);
}

std::vector<std::uint8_t> contour_overlay(const Tensor<double>& base, const Tensor<double>& overlay, double threshold) {
  require_same_shape(base.shape(), overlay.shape(), "contour_overlay");
  const std::int64_t h = base.dim(0), w = base.dim(1);
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(3 * h * w));
  auto inside = [&](std::int64_t i, std::int64_t j) { return overlay.at(i, j) > threshold; };
  for (std::int64_t i = 0; i < h; ++i) {
    for (std::int64_t j = 0; j < w; ++j) {
      const std::uint8_t g = to_byte(base.at(i, j));
      bool edge = false;
      if (inside(i, j)) {
        edge = i == 0 || j == 0 || i == h - 1 || j == w - 1 || !inside(i - 1, j) || !inside(i + 1, j) ||
               !inside(i, j - 1) || !inside(i, j + 1);
      }
      std::uint8_t* p = rgb.data() + 3 * (i * w + j);
      p[0] = edge ? 255 : g;
      p[1] = edge ? 0 : g;
      p[2] = edge ? 0 : g;
    }
  }
  return rgb;
}

Tensor<double> hstack(const std::vector<Tensor<double>>& images) {
  if (images.empty()) throw std::invalid_argument("hstack: nothing to stack");
  const std::int64_t h = images.front().dim(0);
  std::int64_t w = 0;
  for (const auto& im : images) {
    if (im.ndim() != 2 || im.dim(0) != h) throw std::invalid_argument("hstack: heights differ");
    w += im.dim(1);
  }
  Tensor<double> out({h, w});
  std::int64_t col = 0;
  for (const auto& im : images) {
    for (std::int64_t i = 0; i < h; ++i) {
      for (std::int64_t j = 0; j < im.dim(1); ++j) out.at(i, col + j) = im.at(i, j);
    }
    col += im.dim(1);
  }
  return out;
}

}  // namespace freeseed::image_io
