// Copyright 2026 The rotdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <future>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rotdet/error.hpp"
#include "rotdet/geometry.hpp"

namespace rotdet {

// ---------------------------------------------------------------------------
// Tiling

struct Window {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;  // exclusive
  int y1 = 0;  // exclusive

  friend bool operator==(const Window&, const Window&) = default;
};

using TilePlan = std::vector<Window>;

namespace detail {

inline std::vector<int> tile_starts(int size, int tile, int overlap) {
  if (size <= tile) return {0};
  std::vector<int> starts;
  const int step = tile - overlap;
  for (int s = 0;; s += step) {
    starts.push_back(std::min(s, size - tile));
    if (s + tile >= size) break;
  }
  return starts;
}

}  // namespace detail

/// Crop windows of at most `tile` x `tile` pixels. Starts are multiples of
/// (tile - overlap), the last one clamped so the window ends at the image edge.
/// Windows are ordered row by row.
inline TilePlan tile_plan(int img_w, int img_h, int tile, int overlap) {
  if (img_w <= 0 || img_h <= 0) throw InvalidArgument("image dimensions must be positive");
  if (tile <= 0) throw InvalidArgument("tile size must be positive");
  if (overlap < 0 || overlap >= tile) throw InvalidArgument("overlap must satisfy 0 <= overlap < tile");
  const auto xs = detail::tile_starts(img_w, tile, overlap);
  const auto ys = detail::tile_starts(img_h, tile, overlap);
  TilePlan plan;
  plan.reserve(xs.size() * ys.size());
  for (int y : ys) {
    for (int x : xs) plan.push_back(Window{x, y, std::min(x + tile, img_w), std::min(y + tile, img_h)});
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Matching and AP

enum class Task { kObb, kHbb };
enum class ApMetric { kVoc07, kContinuous };

inline std::string_view to_string(Task t) { return t == Task::kObb ? "obb" : "hbb"; }
inline std::string_view to_string(ApMetric m) { return m == ApMetric::kVoc07 ? "voc07" : "continuous"; }

struct GroundTruthObject {
  Quadrilateral quad;
  std::string category;
  bool difficult = false;
};

// image id -> annotated objects
using GroundTruthSet = std::map<std::string, std::vector<GroundTruthObject>>;

/// One line of a per-class detection file.
struct ScoredQuad {
  std::string image_id;
  double score = 0.0;
  Quadrilateral quad;
};

// class name -> detections of that class
using DetectionSet = std::map<std::string, std::vector<ScoredQuad>>;

enum class MatchOutcome { kTruePositive, kFalsePositive, kIgnored };

/// Greedy VOC-style matching of one class.
///
/// `dets` must be in descending-score order. Each detection takes the
/// unmatched non-difficult gt of its image with the highest IoU >= iou_thresh
/// (TP). Failing that, a detection overlapping a difficult gt at >= iou_thresh
/// is ignored; otherwise it is a FP. `gts` holds only this class's objects.
inline std::vector<MatchOutcome> match_detections(std::span<const ScoredQuad> dets, const GroundTruthSet& gts,
                                                  double iou_thresh, Task task) {
  struct Prepared {
    RotatedBox rbox;
    AxisAlignedBox hbb;
    bool difficult;
  };
  std::map<std::string, std::vector<Prepared>> prepared;
  for (const auto& [image, objs] : gts) {
    auto& v = prepared[image];
    for (const auto& o : objs) {
      Prepared p{};
      p.difficult = o.difficult;
      if (task == Task::kObb) {
        p.rbox = quad_to_rbox(o.quad);
      } else {
        p.hbb = extent_of(o.quad);
      }
      v.push_back(p);
    }
  }
  std::map<std::string, std::vector<bool>> used;
  for (const auto& [image, v] : prepared) used[image].assign(v.size(), false);

  std::vector<MatchOutcome> out;
  out.reserve(dets.size());
  for (const ScoredQuad& d : dets) {
    auto it = prepared.find(d.image_id);
    if (it == prepared.end()) {
      out.push_back(MatchOutcome::kFalsePositive);
      continue;
    }
    RotatedBox drbox{};
    AxisAlignedBox dhbb{};
    if (task == Task::kObb) {
      drbox = quad_to_rbox(d.quad);
    } else {
      dhbb = extent_of(d.quad);
    }
    auto& taken = used[d.image_id];
    double best = -1.0;
    std::ptrdiff_t best_idx = -1;
    bool hits_difficult = false;
    for (std::size_t g = 0; g < it->second.size(); ++g) {
      const Prepared& p = it->second[g];
      const double iou = task == Task::kObb ? skew_iou(drbox, p.rbox) : aabb_iou(dhbb, p.hbb);
      if (iou < iou_thresh) continue;
      if (p.difficult) {
        hits_difficult = true;
      } else if (!taken[g] && iou > best) {
        best = iou;
        best_idx = static_cast<std::ptrdiff_t>(g);
      }
    }
    if (best_idx >= 0) {
      taken[static_cast<std::size_t>(best_idx)] = true;
      out.push_back(MatchOutcome::kTruePositive);
    } else {
      out.push_back(hits_difficult ? MatchOutcome::kIgnored : MatchOutcome::kFalsePositive);
    }
  }
  return out;
}

struct PrCurve {
  std::vector<double> precision;
  std::vector<double> recall;
};

/// Precision/recall after each counted detection; ignored entries are skipped.
inline PrCurve pr_curve(std::span<const MatchOutcome> flags, std::size_t n_gt) {
  PrCurve pr;
  std::size_t tp = 0, fp = 0;
  for (MatchOutcome f : flags) {
    if (f == MatchOutcome::kIgnored) continue;
    (f == MatchOutcome::kTruePositive ? tp : fp) += 1;
    pr.precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    pr.recall.push_back(n_gt == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(n_gt));
  }
  return pr;
}

/// AP of a ranked TP/FP sequence. VOC07 averages the interpolated precision at
/// recall 0, 0.1, ..., 1; Continuous integrates the monotonized PR curve.
/// Returns 0 when n_gt == 0.
inline double average_precision(std::span<const MatchOutcome> flags, std::size_t n_gt, ApMetric metric) {
  if (n_gt == 0) return 0.0;
  const PrCurve pr = pr_curve(flags, n_gt);
  const std::size_t n = pr.precision.size();
  if (n == 0) return 0.0;

  // Sums are divided once at the end so a perfect ranking gives exactly 1.
  if (metric == ApMetric::kVoc07) {
    double sum = 0.0;
    for (int i = 0; i <= 10; ++i) {
      const double t = i / 10.0;
      double p = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (pr.recall[k] >= t) p = std::max(p, pr.precision[k]);
      }
      sum += p;
    }
    return sum / 11.0;
  }

  // Recall rises by 1/n_gt at each true positive and is flat elsewhere.
  std::vector<double> mono = pr.precision;
  for (std::size_t k = n - 1; k-- > 0;) mono[k] = std::max(mono[k], mono[k + 1]);
  double sum = 0.0;
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (pr.recall[k] > prev_recall) sum += mono[k];
    prev_recall = pr.recall[k];
  }
  return sum / static_cast<double>(n_gt);
}

// ---------------------------------------------------------------------------
// Full evaluation

struct EvalConfig {
  double iou_thresh = 0.5;
  Task task = Task::kObb;
  ApMetric metric = ApMetric::kVoc07;
  unsigned jobs = 1;
};

struct ClassReport {
  std::string name;
  double ap = 0.0;
  std::size_t n_gt = 0;        // non-difficult objects
  std::size_t n_det = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t ignored = 0;
  bool no_ground_truth = false;  // AP forced to 0
  PrCurve pr;
};

struct EvalReport {
  std::vector<ClassReport> classes;  // in declared class order
  double map = 0.0;
  EvalConfig config;
  std::vector<std::string> warnings;
};

namespace detail {

inline ClassReport evaluate_class(const std::string& name, const GroundTruthSet& all_gt,
                                  const std::vector<ScoredQuad>* dets, const EvalConfig& cfg) {
  ClassReport rep;
  rep.name = name;
  GroundTruthSet class_gt;
  for (const auto& [image, objs] : all_gt) {
    auto& v = class_gt[image];
    for (const auto& o : objs) {
      if (o.category != name) continue;
      v.push_back(o);
      if (!o.difficult) ++rep.n_gt;
    }
  }
  std::vector<ScoredQuad> sorted;
  if (dets) sorted = *dets;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ScoredQuad& a, const ScoredQuad& b) { return a.score > b.score; });
  const auto flags = match_detections(sorted, class_gt, cfg.iou_thresh, cfg.task);
  rep.n_det = sorted.size();
  for (MatchOutcome f : flags) {
    if (f == MatchOutcome::kTruePositive) ++rep.tp;
    if (f == MatchOutcome::kFalsePositive) ++rep.fp;
    if (f == MatchOutcome::kIgnored) ++rep.ignored;
  }
  rep.no_ground_truth = rep.n_gt == 0;
  rep.ap = average_precision(flags, rep.n_gt, cfg.metric);
  rep.pr = pr_curve(flags, rep.n_gt);
  return rep;
}

}  // namespace detail

/// Per-class AP and mAP over the declared `classes`.
///
/// Throws InvalidArgument if a detection class or gt category is not in
/// `classes`. Classes without gt score AP 0 and add a warning. With
/// cfg.jobs > 1 classes are evaluated concurrently; the report is identical.
inline EvalReport evaluate(const GroundTruthSet& gt, const DetectionSet& dets, const std::vector<std::string>& classes,
                           const EvalConfig& cfg) {
  if (classes.empty()) throw InvalidArgument("class list is empty");
  if (!(cfg.iou_thresh >= 0.0 && cfg.iou_thresh <= 1.0)) throw InvalidArgument("IoU threshold must be in [0, 1]");
  const std::set<std::string> declared(classes.begin(), classes.end());
  if (declared.size() != classes.size()) throw InvalidArgument("class list has duplicates");
  for (const auto& [name, unused] : dets) {
    if (!declared.count(name)) throw InvalidArgument("detections for unknown category '" + name + "'");
  }
  for (const auto& [image, objs] : gt) {
    for (const auto& o : objs) {
      if (!declared.count(o.category)) {
        throw InvalidArgument("ground truth for image '" + image + "' has unknown category '" + o.category + "'");
      }
    }
  }

  EvalReport report;
  report.config = cfg;
  report.classes.resize(classes.size());
  const auto run = [&](std::size_t c) {
    auto it = dets.find(classes[c]);
    report.classes[c] = detail::evaluate_class(classes[c], gt, it == dets.end() ? nullptr : &it->second, cfg);
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min<std::size_t>(cfg.jobs, classes.size()));
  if (jobs == 1) {
    for (std::size_t c = 0; c < classes.size(); ++c) run(c);
  } else {
    std::vector<std::future<void>> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t c = w; c < classes.size(); c += jobs) run(c);
      }));
    }
    for (auto& f : workers) f.get();
  }

  double sum = 0.0;
  for (const ClassReport& c : report.classes) {
    sum += c.ap;
    if (c.no_ground_truth) report.warnings.push_back("class '" + c.name + "' has no ground truth; AP set to 0");
  }
  report.map = sum / static_cast<double>(classes.size());
  return report;
}

}  // namespace rotdet
