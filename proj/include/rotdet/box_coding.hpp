// Copyright 2026 The rotdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>

#include "rotdet/error.hpp"
#include "rotdet/geometry.hpp"

namespace rotdet {

/// Regression offsets of a box relative to an anchor. Centers are normalized
/// by the anchor size, sizes are log ratios, and ttheta is the raw angle
/// difference in radians (never wrapped).
struct RegressionTarget {
  double tx = 0.0;
  double ty = 0.0;
  double tw = 0.0;
  double th = 0.0;
  double ttheta = 0.0;

  std::array<double, 5> as_array() const { return {tx, ty, tw, th, ttheta}; }
  static RegressionTarget from_array(const std::array<double, 5>& v) { return {v[0], v[1], v[2], v[3], v[4]}; }

  friend bool operator==(const RegressionTarget&, const RegressionTarget&) = default;
};

// |tw| or |th| beyond this would overflow or underflow exp() in practice.
inline constexpr double kMaxLogSizeOffset = 50.0;

/// Offsets of `gt` relative to `anchor`, on the raw parameters as given.
/// Neither box is canonicalized; the caller owns the angle representation.
inline RegressionTarget encode(const RotatedBox& gt, const RotatedBox& anchor) {
  detail::require_valid(gt);
  detail::require_valid(anchor);
  return RegressionTarget{
      (gt.cx - anchor.cx) / anchor.w,
      (gt.cy - anchor.cy) / anchor.h,
      std::log(gt.w / anchor.w),
      std::log(gt.h / anchor.h),
      gt.theta - anchor.theta,
  };
}

/// Inverse of encode(). Throws OutOfRange when |tw| or |th| exceeds 50 and
/// InvalidArgument for non-finite offsets.
inline RotatedBox decode(const RegressionTarget& t, const RotatedBox& anchor) {
  detail::require_valid(anchor);
  for (double v : t.as_array()) {
    if (!std::isfinite(v)) throw InvalidArgument("regression target has non-finite component");
  }
  if (std::abs(t.tw) > kMaxLogSizeOffset || std::abs(t.th) > kMaxLogSizeOffset) {
    throw OutOfRange("log-size offset out of range (|tw|, |th| must be <= 50)");
  }
  return RotatedBox{
      t.tx * anchor.w + anchor.cx,
      t.ty * anchor.h + anchor.cy,
      anchor.w * std::exp(t.tw),
      anchor.h * std::exp(t.th),
      t.ttheta + anchor.theta,
  };
}

}  // namespace rotdet
