#include "posetrans/image.hpp"

#include <cstring>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace posetrans {

Image Image::create(int w, int h, int c, std::uint8_t fill) {
  if (w <= 0 || h <= 0 || (c != 1 && c != 3)) {
    throw Error(ErrorCode::InvalidArgument, "bad image dimensions");
  }
  Image img;
  img.width = w;
  img.height = h;
  img.channels = c;
  img.data.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) *
                      static_cast<std::size_t>(c),
                  fill);
  return img;
}

namespace {

Image from_mat(const cv::Mat& mat) {
  Image img;
  img.width = mat.cols;
  img.height = mat.rows;
  img.channels = mat.channels();
  img.data.resize(static_cast<std::size_t>(mat.total()) *
                  static_cast<std::size_t>(mat.channels()));
  if (mat.isContinuous()) {
    std::memcpy(img.data.data(), mat.data, img.data.size());
  } else {
    for (int y = 0; y < mat.rows; ++y) {
      std::memcpy(img.data.data() +
                      static_cast<std::size_t>(y) * static_cast<std::size_t>(mat.cols * mat.channels()),
                  mat.ptr(y), static_cast<std::size_t>(mat.cols * mat.channels()));
    }
  }
  return img;
}

}  // namespace

Image load_image(const std::string& path) {
  cv::Mat mat = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (mat.empty()) {
    throw Error(ErrorCode::IoError, "cannot read image: " + path);
  }
  if (mat.depth() != CV_8U) {
    throw Error(ErrorCode::MalformedFile, "only 8-bit rasters supported: " + path);
  }
  if (mat.channels() == 4) {
    cv::cvtColor(mat, mat, cv::COLOR_BGRA2BGR);
  }
  if (mat.channels() == 3) {
    cv::cvtColor(mat, mat, cv::COLOR_BGR2RGB);
  } else if (mat.channels() != 1) {
    throw Error(ErrorCode::MalformedFile, "unsupported channel count: " + path);
  }
  return from_mat(mat);
}

Image load_image_gray(const std::string& path) {
  cv::Mat mat = cv::imread(path, cv::IMREAD_GRAYSCALE);
  if (mat.empty()) {
    throw Error(ErrorCode::IoError, "cannot read image: " + path);
  }
  return from_mat(mat);
}

void save_png(const Image& image, const std::string& path) {
  if (image.empty()) {
    throw Error(ErrorCode::EmptyImage, "cannot save empty image");
  }
  cv::Mat mat(image.height, image.width,
              image.channels == 3 ? CV_8UC3 : CV_8UC1,
              const_cast<std::uint8_t*>(image.data.data()));
  cv::Mat out = mat;
  if (image.channels == 3) {
    cv::cvtColor(mat, out, cv::COLOR_RGB2BGR);
  }
  if (!cv::imwrite(path, out)) {
    throw Error(ErrorCode::IoError, "cannot write image: " + path);
  }
}

Image dilate_once(const Image& mask) {
  if (mask.channels != 1) {
    throw Error(ErrorCode::InvalidArgument, "dilate expects a 1-channel mask");
  }
  Image out = Image::create(mask.width, mask.height, 1, 0);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(x, y) == 0) continue;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx;
          const int ny = y + dy;
          if (mask.in_bounds(nx, ny)) out.at(nx, ny) = 1;
        }
      }
    }
  }
  return out;
}

std::size_t mask_area(const Image& mask) {
  std::size_t n = 0;
  for (std::uint8_t v : mask.data) {
    if (v != 0) ++n;
  }
  return n;
}

}  // namespace posetrans
