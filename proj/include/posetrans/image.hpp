#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "posetrans/error.hpp"

namespace posetrans {

/// 8-bit raster, row-major, interleaved channels (1 = gray/mask, 3 = RGB).
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;

  static Image create(int w, int h, int c, std::uint8_t fill = 0);

  bool empty() const { return width <= 0 || height <= 0 || channels <= 0; }
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }

  std::uint8_t at(int x, int y, int c = 0) const {
    return data[static_cast<std::size_t>((y * width + x) * channels + c)];
  }
  std::uint8_t& at(int x, int y, int c = 0) {
    return data[static_cast<std::size_t>((y * width + x) * channels + c)];
  }

  bool same_dims(const Image& other) const {
    return width == other.width && height == other.height;
  }
};

/// PNG/JPEG loading via OpenCV imgcodecs. Color images come back as 3-channel
/// RGB, grayscale as 1-channel. Throws IoError / MalformedFile.
Image load_image(const std::string& path);
Image load_image_gray(const std::string& path);

void save_png(const Image& image, const std::string& path);

/// Binary-mask dilation by one pixel with a 3x3 structuring element.
/// Non-zero = set.
Image dilate_once(const Image& mask);

/// Count of non-zero pixels in a 1-channel mask.
std::size_t mask_area(const Image& mask);

}  // namespace posetrans
