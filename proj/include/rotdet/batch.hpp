// Copyright 2026 The rotdet Authors
// SPDX-License-Identifier: Apache-2.0

// Array entry points over contiguous N x 5 row-major buffers with columns
// (cx, cy, w, h, theta-radians). These are what foreign-language bindings wrap;
// every element is produced by the same scalar routine as the rest of the API.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rotdet/box_coding.hpp"
#include "rotdet/error.hpp"
#include "rotdet/geometry.hpp"

namespace rotdet {

class BoxArrayView {
 public:
  /// Validates shape (multiple of 5), finiteness and w, h > 0 per row.
  explicit BoxArrayView(std::span<const double> flat, bool require_positive_size = true) : flat_(flat) {
    if (flat.size() % 5 != 0) throw InvalidArgument("box array length must be a multiple of 5");
    for (std::size_t i = 0; i < rows(); ++i) {
      for (std::size_t k = 0; k < 5; ++k) {
        if (!std::isfinite(flat_[5 * i + k])) throw InvalidArgument("non-finite value in row " + std::to_string(i));
      }
      if (require_positive_size && !(flat_[5 * i + 2] > 0.0 && flat_[5 * i + 3] > 0.0)) {
        throw InvalidArgument("non-positive size in row " + std::to_string(i));
      }
    }
  }

  std::size_t rows() const { return flat_.size() / 5; }
  RotatedBox operator[](std::size_t i) const {
    const double* r = flat_.data() + 5 * i;
    return RotatedBox{r[0], r[1], r[2], r[3], r[4]};
  }

 private:
  std::span<const double> flat_;
};

/// Row-major N x M matrix of skew_iou(a_i, b_j).
inline std::vector<double> iou_matrix(const BoxArrayView& a, const BoxArrayView& b) {
  std::vector<double> out(a.rows() * b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const RotatedBox ai = a[i];
    for (std::size_t j = 0; j < b.rows(); ++j) out[i * b.rows() + j] = skew_iou(ai, b[j]);
  }
  return out;
}

/// Row-wise encode(gt_i, anchor_i); N x 5 (tx, ty, tw, th, ttheta).
inline std::vector<double> encode_batch(const BoxArrayView& gts, const BoxArrayView& anchors) {
  if (gts.rows() != anchors.rows()) throw InvalidArgument("encode_batch needs equal row counts");
  std::vector<double> out;
  out.reserve(5 * gts.rows());
  for (std::size_t i = 0; i < gts.rows(); ++i) {
    for (double v : encode(gts[i], anchors[i]).as_array()) out.push_back(v);
  }
  return out;
}

/// Row-wise decode(t_i, anchor_i); `targets` is N x 5 offsets.
inline std::vector<double> decode_batch(std::span<const double> targets, const BoxArrayView& anchors) {
  const BoxArrayView t(targets, /*require_positive_size=*/false);
  if (t.rows() != anchors.rows()) throw InvalidArgument("decode_batch needs equal row counts");
  std::vector<double> out;
  out.reserve(5 * t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i) {
    const RotatedBox r = t[i];
    const RotatedBox b = decode(RegressionTarget{r.cx, r.cy, r.w, r.h, r.theta}, anchors[i]);
    for (double v : {b.cx, b.cy, b.w, b.h, b.theta}) out.push_back(v);
  }
  return out;
}

}  // namespace rotdet
