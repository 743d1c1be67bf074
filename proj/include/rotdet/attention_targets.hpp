// Copyright 2026 The rotdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "rotdet/error.hpp"
#include "rotdet/geometry.hpp"
#include "rotdet/grid.hpp"
#include "rotdet/losses.hpp"

namespace rotdet {

/// Binary supervision map for the pixel attention branch. Cell (i, j) covers
/// image pixels [j*downscale, (j+1)*downscale) x [i*downscale, (i+1)*downscale).
struct MaskGrid {
  double downscale = 1.0;
  BinaryMask values;

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }
  std::size_t foreground_count() const {
    return static_cast<std::size_t>(std::count(values.data().begin(), values.data().end(), std::uint8_t{1}));
  }
};

/// Marks a cell as foreground iff its center lies inside (or within 1e-9 of
/// the boundary of) any gt rectangle.
inline MaskGrid rasterize_mask(std::span<const RotatedBox> gts, std::size_t rows, std::size_t cols, double downscale) {
  if (rows == 0 || cols == 0) throw InvalidArgument("mask grid needs rows, cols >= 1");
  if (!(downscale > 0.0) || !std::isfinite(downscale)) throw InvalidArgument("mask downscale must be positive");
  MaskGrid mask{downscale, BinaryMask(rows, cols, 0)};
  for (const RotatedBox& box : gts) {
    const Quadrilateral quad = rbox_to_quad(box);
    const AxisAlignedBox ext = hbb_of(box);
    // Only cells whose centers fall inside the extent can be hit.
    const auto first = [downscale](double lo) {
      return static_cast<long>(std::floor((lo - kGeomEps) / downscale - 0.5));
    };
    const auto last = [downscale](double hi) {
      return static_cast<long>(std::ceil((hi + kGeomEps) / downscale - 0.5));
    };
    const long i0 = std::max(0L, first(ext.ymin));
    const long i1 = std::min(static_cast<long>(rows) - 1, last(ext.ymax));
    const long j0 = std::max(0L, first(ext.xmin));
    const long j1 = std::min(static_cast<long>(cols) - 1, last(ext.xmax));
    for (long i = i0; i <= i1; ++i) {
      for (long j = j0; j <= j1; ++j) {
        const Point c{(static_cast<double>(j) + 0.5) * downscale, (static_cast<double>(i) + 0.5) * downscale};
        if (point_in_convex_polygon(c, quad.vertices)) mask.values(i, j) = 1;
      }
    }
  }
  return mask;
}

/// Plain-text PGM (P2), foreground 255, background 0.
inline std::string to_pgm(const BinaryMask& mask) {
  std::string out = "P2\n" + std::to_string(mask.cols()) + " " + std::to_string(mask.rows()) + "\n255\n";
  for (std::size_t i = 0; i < mask.rows(); ++i) {
    for (std::size_t j = 0; j < mask.cols(); ++j) {
      if (j) out += ' ';
      out += mask(i, j) ? "255" : "0";
    }
    out += '\n';
  }
  return out;
}

}  // namespace rotdet
