// Copyright 2026 The rotdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "rotdet/error.hpp"
#include "rotdet/geometry.hpp"

namespace rotdet {

/// Anchor lattice configuration. Anchor (scale s, ratio r) has width
/// base*s*sqrt(r) and height base*s/sqrt(r), so area depends only on scale.
struct AnchorSpec {
  double stride = 6.0;
  double base_size = 256.0;
  std::vector<double> scales;
  std::vector<double> ratios;

  /// DOTA settings: stride 6, base 256, scales 2^-4..2^1, eight ratios.
  static AnchorSpec dota_default() {
    return AnchorSpec{6.0,
                      256.0,
                      {1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0, 2.0},
                      {1.0, 1.0 / 2, 1.0 / 3, 1.0 / 4, 1.0 / 5, 1.0 / 6, 1.0 / 7, 1.0 / 9}};
  }

  void validate() const {
    if (!(stride > 0.0) || !std::isfinite(stride)) throw InvalidArgument("anchor stride must be positive");
    if (!(base_size > 0.0) || !std::isfinite(base_size)) throw InvalidArgument("anchor base size must be positive");
    if (scales.empty() || ratios.empty()) throw InvalidArgument("anchor scales and ratios must be nonempty");
    for (double s : scales) {
      if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("anchor scales must be positive");
    }
    for (double r : ratios) {
      if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("anchor ratios must be positive");
    }
  }
};

struct Anchor {
  AxisAlignedBox box;
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t scale_index = 0;
  std::size_t ratio_index = 0;
};

struct AnchorSet {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Anchor> anchors;  // ordered by row, col, scale, ratio

  std::size_t size() const { return anchors.size(); }
  std::vector<AxisAlignedBox> boxes() const {
    std::vector<AxisAlignedBox> out;
    out.reserve(anchors.size());
    for (const Anchor& a : anchors) out.push_back(a.box);
    return out;
  }
};

/// Anchors centered at ((col + 0.5) * stride, (row + 0.5) * stride) for every
/// lattice cell and every (scale, ratio) pair. Anchors may extend past the grid.
inline AnchorSet generate_anchors(std::size_t rows, std::size_t cols, const AnchorSpec& spec) {
  spec.validate();
  if (rows == 0 || cols == 0) throw InvalidArgument("anchor grid needs rows, cols >= 1");
  AnchorSet set;
  set.rows = rows;
  set.cols = cols;
  set.anchors.reserve(rows * cols * spec.scales.size() * spec.ratios.size());
  for (std::size_t i = 0; i < rows; ++i) {
    const double cy = (static_cast<double>(i) + 0.5) * spec.stride;
    for (std::size_t j = 0; j < cols; ++j) {
      const double cx = (static_cast<double>(j) + 0.5) * spec.stride;
      for (std::size_t si = 0; si < spec.scales.size(); ++si) {
        for (std::size_t ri = 0; ri < spec.ratios.size(); ++ri) {
          const double root = std::sqrt(spec.ratios[ri]);
          const double hw = 0.5 * spec.base_size * spec.scales[si] * root;
          const double hh = 0.5 * spec.base_size * spec.scales[si] / root;
          set.anchors.push_back(Anchor{{cx - hw, cy - hh, cx + hw, cy + hh}, i, j, si, ri});
        }
      }
    }
  }
  return set;
}

enum class AnchorLabel { kNegative, kIgnore, kPositive };

struct AnchorAssignment {
  AnchorLabel label = AnchorLabel::kNegative;
  int gt_index = -1;  // matched gt for positives, -1 otherwise
  double max_iou = 0.0;
};

struct AssignmentResult {
  std::vector<AnchorAssignment> anchors;

  std::size_t count(AnchorLabel l) const {
    return static_cast<std::size_t>(
        std::count_if(anchors.begin(), anchors.end(), [l](const AnchorAssignment& a) { return a.label == l; }));
  }
};

/// Labels each anchor by its best-overlapping gt.
///
/// Positive if max IoU > `pos`, or if the anchor is the (first) best anchor of
/// some gt, so every gt gets at least one positive. Negative if max IoU < `neg`
/// and not forced positive. Everything else is ignored. `iou` is any callable
/// (Box, Box) -> double, which lets the rotated second stage reuse this with
/// skew IoU.
template <class Box, class IouFn>
AssignmentResult assign_labels(std::span<const Box> anchors, std::span<const Box> gts, double pos, double neg,
                               IouFn&& iou) {
  if (!(0.0 <= neg && neg <= pos && pos <= 1.0)) throw InvalidArgument("assignment needs 0 <= neg <= pos <= 1");
  AssignmentResult out;
  out.anchors.resize(anchors.size());
  if (gts.empty()) return out;

  std::vector<double> gt_best(gts.size(), -1.0);
  std::vector<std::size_t> gt_best_anchor(gts.size(), 0);
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    AnchorAssignment& asg = out.anchors[a];
    double best = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double v = iou(anchors[a], gts[g]);
      if (v > best) {
        best = v;
        asg.gt_index = static_cast<int>(g);
      }
      if (v > gt_best[g]) {
        gt_best[g] = v;
        gt_best_anchor[g] = a;
      }
    }
    asg.max_iou = best;
    if (best > pos) {
      asg.label = AnchorLabel::kPositive;
    } else if (best < neg) {
      asg.label = AnchorLabel::kNegative;
      asg.gt_index = -1;
    } else {
      asg.label = AnchorLabel::kIgnore;
      asg.gt_index = -1;
    }
  }
  if (anchors.empty()) return out;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    AnchorAssignment& asg = out.anchors[gt_best_anchor[g]];
    if (asg.label != AnchorLabel::kPositive) {
      asg.label = AnchorLabel::kPositive;
      asg.gt_index = static_cast<int>(g);
    }
  }
  return out;
}

/// First-stage assignment: axis-aligned IoU against horizontal gts.
inline AssignmentResult assign_labels(const AnchorSet& anchors, std::span<const AxisAlignedBox> gts, double pos,
                                      double neg) {
  const std::vector<AxisAlignedBox> boxes = anchors.boxes();
  return assign_labels<AxisAlignedBox>(std::span<const AxisAlignedBox>(boxes), gts, pos, neg,
                                       [](const AxisAlignedBox& a, const AxisAlignedBox& b) { return aabb_iou(a, b); });
}

/// Expected max overlap: mean, over object centers on a regular
/// samples x samples grid inside one stride x stride lattice cell, of the best
/// IoU between the object and any lattice-placed anchor of the given shape.
inline double expected_max_iou(double obj_w, double obj_h, double anchor_w, double anchor_h, double stride,
                               int samples) {
  for (double v : {obj_w, obj_h, anchor_w, anchor_h, stride}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("EMO needs positive finite sizes and stride");
  }
  if (samples < 1) throw InvalidArgument("EMO needs samples >= 1");

  // Anchors whose centers are farther than this from the object never overlap it.
  const double reach_x = 0.5 * (obj_w + anchor_w);
  const double reach_y = 0.5 * (obj_h + anchor_h);
  const auto lattice_range = [stride](double c, double reach) {
    const long lo = static_cast<long>(std::floor((c - reach) / stride - 0.5)) - 1;
    const long hi = static_cast<long>(std::ceil((c + reach) / stride - 0.5)) + 1;
    return std::pair{lo, hi};
  };

  double sum = 0.0;
  for (int sy = 0; sy < samples; ++sy) {
    const double oy = (sy + 0.5) / samples * stride;
    const auto [ylo, yhi] = lattice_range(oy, reach_y);
    for (int sx = 0; sx < samples; ++sx) {
      const double ox = (sx + 0.5) / samples * stride;
      const AxisAlignedBox obj{ox - 0.5 * obj_w, oy - 0.5 * obj_h, ox + 0.5 * obj_w, oy + 0.5 * obj_h};
      const auto [xlo, xhi] = lattice_range(ox, reach_x);
      double best = 0.0;
      for (long iy = ylo; iy <= yhi; ++iy) {
        const double ay = (static_cast<double>(iy) + 0.5) * stride;
        for (long ix = xlo; ix <= xhi; ++ix) {
          const double ax = (static_cast<double>(ix) + 0.5) * stride;
          const AxisAlignedBox anc{ax - 0.5 * anchor_w, ay - 0.5 * anchor_h, ax + 0.5 * anchor_w, ay + 0.5 * anchor_h};
          best = std::max(best, aabb_iou(obj, anc));
        }
      }
      sum += best;
    }
  }
  return sum / (static_cast<double>(samples) * samples);
}

}  // namespace rotdet
