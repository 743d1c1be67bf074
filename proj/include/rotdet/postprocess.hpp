// Copyright 2026 The rotdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rotdet/error.hpp"
#include "rotdet/geometry.hpp"

namespace rotdet {

/// A scored, class-labeled box. `Box` is RotatedBox or AxisAlignedBox.
template <class Box>
struct BasicDetection {
  Box box;
  double score = 0.0;
  std::string category;
  std::string image_id;

  friend bool operator==(const BasicDetection&, const BasicDetection&) = default;
};

using Detection = BasicDetection<RotatedBox>;
using HorizontalDetection = BasicDetection<AxisAlignedBox>;

/// Per-category NMS thresholds with an optional fallback for categories not
/// listed. The documented fallback is 0.3.
struct NmsThresholds {
  std::map<std::string, double> per_category;
  std::optional<double> fallback;

  static NmsThresholds uniform(double t) { return NmsThresholds{{}, t}; }

  double for_category(const std::string& category) const {
    if (auto it = per_category.find(category); it != per_category.end()) return it->second;
    if (fallback) return *fallback;
    throw InvalidArgument("no NMS threshold for category '" + category + "'");
  }
};

inline constexpr double kDefaultNmsThreshold = 0.3;

namespace detail {

inline void require_threshold(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("NMS threshold must be in [0, 1]");
}

template <class Box>
void require_scores(std::span<const BasicDetection<Box>> dets) {
  for (const auto& d : dets) {
    if (!(d.score >= 0.0 && d.score <= 1.0)) throw InvalidArgument("detection score must be in [0, 1]");
  }
}

// Indices ordered by descending score, ties by input order.
template <class Box>
std::vector<std::size_t> score_order(std::span<const BasicDetection<Box>> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  return order;
}

}  // namespace detail

/// Greedy NMS over `candidates` (indices into `dets`, already in priority
/// order). A candidate is dropped iff its IoU with an already kept one is
/// strictly greater than `thresh`. Returns kept indices in priority order.
template <class Box>
std::vector<std::size_t> greedy_nms(std::span<const BasicDetection<Box>> dets, std::span<const std::size_t> candidates,
                                    double thresh) {
  std::vector<std::size_t> kept;
  for (std::size_t i : candidates) {
    bool keep = true;
    for (std::size_t k : kept) {
      if (box_iou(dets[k].box, dets[i].box) > thresh) {
        keep = false;
        break;
      }
    }
    if (keep) kept.push_back(i);
  }
  return kept;
}

/// Class-agnostic greedy NMS. Output is sorted by descending score.
template <class Box>
std::vector<BasicDetection<Box>> nms(std::span<const BasicDetection<Box>> dets, double thresh) {
  detail::require_threshold(thresh);
  detail::require_scores(dets);
  const auto order = detail::score_order(dets);
  std::vector<BasicDetection<Box>> out;
  for (std::size_t i : greedy_nms(dets, std::span<const std::size_t>(order), thresh)) out.push_back(dets[i]);
  return out;
}

template <class Box>
std::vector<BasicDetection<Box>> nms(const std::vector<BasicDetection<Box>>& dets, double thresh) {
  return nms(std::span<const BasicDetection<Box>>(dets), thresh);
}

/// Per-category greedy NMS (R-NMS for rotated boxes). Categories never
/// suppress each other. Output is sorted by descending score, ties by input
/// order. Throws InvalidArgument when a category has no threshold.
template <class Box>
std::vector<BasicDetection<Box>> rnms(std::span<const BasicDetection<Box>> dets, const NmsThresholds& thresholds) {
  detail::require_scores(dets);
  const auto order = detail::score_order(dets);
  std::map<std::string, std::vector<std::size_t>> by_category;
  for (std::size_t i : order) by_category[dets[i].category].push_back(i);

  std::vector<std::size_t> kept;
  for (const auto& [category, idx] : by_category) {
    const double t = thresholds.for_category(category);
    detail::require_threshold(t);
    const auto k = greedy_nms(dets, std::span<const std::size_t>(idx), t);
    kept.insert(kept.end(), k.begin(), k.end());
  }
  std::sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    return a < b;
  });
  std::vector<BasicDetection<Box>> out;
  out.reserve(kept.size());
  for (std::size_t i : kept) out.push_back(dets[i]);
  return out;
}

template <class Box>
std::vector<BasicDetection<Box>> rnms(const std::vector<BasicDetection<Box>>& dets, const NmsThresholds& thresholds) {
  return rnms(std::span<const BasicDetection<Box>>(dets), thresholds);
}

/// Keeps the `pre_k` best-scoring boxes, runs NMS, keeps the first `post_k`.
/// Common settings: 12000 / 2000 for training proposals, 10000 / 300 at test time.
template <class Box>
std::vector<BasicDetection<Box>> top_k_then_nms(std::span<const BasicDetection<Box>> dets, std::size_t pre_k,
                                                std::size_t post_k, double thresh) {
  if (pre_k < 1 || post_k < 1) throw InvalidArgument("top-k sizes must be >= 1");
  detail::require_threshold(thresh);
  detail::require_scores(dets);
  auto order = detail::score_order(dets);
  if (order.size() > pre_k) order.resize(pre_k);
  auto kept = greedy_nms(dets, std::span<const std::size_t>(order), thresh);
  if (kept.size() > post_k) kept.resize(post_k);
  std::vector<BasicDetection<Box>> out;
  out.reserve(kept.size());
  for (std::size_t i : kept) out.push_back(dets[i]);
  return out;
}

template <class Box>
std::vector<BasicDetection<Box>> top_k_then_nms(const std::vector<BasicDetection<Box>>& dets, std::size_t pre_k,
                                                std::size_t post_k, double thresh) {
  return top_k_then_nms(std::span<const BasicDetection<Box>>(dets), pre_k, post_k, thresh);
}

/// Detections of one tile, in tile-local pixel coordinates.
template <class Box>
struct BasicTileDetections {
  Point origin;  // tile top-left in image coordinates
  std::vector<BasicDetection<Box>> detections;
};

using TileDetections = BasicTileDetections<RotatedBox>;

/// Shifts every detection by its tile origin and runs per-category NMS
/// separately for each image. Output is grouped by image id (ascending), each
/// group sorted by descending score.
template <class Box>
std::vector<BasicDetection<Box>> merge_tiles(std::span<const BasicTileDetections<Box>> tiles,
                                             const NmsThresholds& thresholds) {
  std::map<std::string, std::vector<BasicDetection<Box>>> by_image;
  for (const auto& tile : tiles) {
    for (const auto& d : tile.detections) {
      auto moved = d;
      moved.box = translated(d.box, tile.origin);
      by_image[d.image_id].push_back(std::move(moved));
    }
  }
  std::vector<BasicDetection<Box>> out;
  for (const auto& [image, dets] : by_image) {
    auto kept = rnms(std::span<const BasicDetection<Box>>(dets), thresholds);
    out.insert(out.end(), kept.begin(), kept.end());
  }
  return out;
}

template <class Box>
std::vector<BasicDetection<Box>> merge_tiles(const std::vector<BasicTileDetections<Box>>& tiles,
                                             const NmsThresholds& thresholds) {
  return merge_tiles(std::span<const BasicTileDetections<Box>>(tiles), thresholds);
}

}  // namespace rotdet
