#include "posetrans/inpaint.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace posetrans {

Image inpaint(const Image& image, const Image& hole, const InpaintParams& params) {
  if (image.empty()) {
    throw Error(ErrorCode::EmptyImage, "inpaint on empty image");
  }
  if (!image.same_dims(hole) || hole.channels != 1) {
    throw Error(ErrorCode::DimensionMismatch, "hole mask must be 1-channel and match image dims");
  }

  // Collect hole pixel coordinates once; everything below runs on this list.
  std::vector<int> hx, hy;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      if (hole.at(x, y) != 0) {
        hx.push_back(x);
        hy.push_back(y);
      }
    }
  }
  Image out = image;
  if (hx.empty()) return out;
  const std::size_t total = static_cast<std::size_t>(image.width) *
                            static_cast<std::size_t>(image.height);
  if (hx.size() >= total) {
    throw Error(ErrorCode::FullMask, "hole covers the entire image");
  }

  const int w = image.width;
  const int h = image.height;
  const std::size_t n = hx.size();
  // Per-pixel index into the hole list, -1 for boundary pixels.
  std::vector<int> hole_index(total, -1);
  for (std::size_t i = 0; i < n; ++i) {
    hole_index[static_cast<std::size_t>(hy[i] * w + hx[i])] = static_cast<int>(i);
  }

  const int dx[4] = {1, -1, 0, 0};
  const int dy[4] = {0, 0, 1, -1};

  for (int c = 0; c < image.channels; ++c) {
    // Initial guess: mean over the hole's immediate boundary values. Keeps
    // the iterates inside [min, max] of the boundary from the start.
    double boundary_sum = 0.0;
    std::size_t boundary_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < 4; ++k) {
        const int nx = hx[i] + dx[k];
        const int ny = hy[i] + dy[k];
        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
        if (hole_index[static_cast<std::size_t>(ny * w + nx)] < 0) {
          boundary_sum += image.at(nx, ny, c);
          ++boundary_count;
        }
      }
    }
    const double init = boundary_count > 0 ? boundary_sum / static_cast<double>(boundary_count) : 128.0;

    std::vector<double> cur(n, init), next(n, init);
    for (int iter = 0; iter < params.max_iters; ++iter) {
      double max_change = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        int cnt = 0;
        for (int k = 0; k < 4; ++k) {
          const int nx = hx[i] + dx[k];
          const int ny = hy[i] + dy[k];
          if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
          const int hi = hole_index[static_cast<std::size_t>(ny * w + nx)];
          sum += hi >= 0 ? cur[static_cast<std::size_t>(hi)]
                         : static_cast<double>(image.at(nx, ny, c));
          ++cnt;
        }
        const double v = cnt > 0 ? sum / cnt : cur[i];
        next[i] = v;
        max_change = std::max(max_change, std::abs(v - cur[i]));
      }
      cur.swap(next);
      if (max_change < params.tol) break;
    }

    for (std::size_t i = 0; i < n; ++i) {
      const double v = std::clamp(cur[i], 0.0, 255.0);
      out.at(hx[i], hy[i], c) = static_cast<std::uint8_t>(std::lround(v));
    }
  }
  return out;
}

}  // namespace posetrans
