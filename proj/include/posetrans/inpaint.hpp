#pragma once

#include "posetrans/image.hpp"

namespace posetrans {

struct InpaintParams {
  int max_iters = 2000;
  double tol = 0.1;  // max per-pixel change, in intensity levels
};

/// Fills hole pixels with the discrete harmonic interpolant: Jacobi
/// relaxation of the 5-point Laplacian over the hole, with non-hole pixels
/// held fixed as Dirichlet boundary. Channels are processed independently.
/// Non-hole pixels are returned bit-identical to the input.
///
/// Throws EmptyImage, DimensionMismatch and FullMask (the hole must leave at
/// least one boundary pixel).
Image inpaint(const Image& image, const Image& hole,
              const InpaintParams& params = {});

}  // namespace posetrans
