// Copyright 2026 The rotdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rotdet/box_coding.hpp"
#include "rotdet/error.hpp"
#include "rotdet/geometry.hpp"
#include "rotdet/grid.hpp"

namespace rotdet {

/// Trade-off weights of the multi-task loss: regression, attention,
/// classification. Defaults are the DOTA training settings.
struct LossWeights {
  double lambda1 = 4.0;
  double lambda2 = 1.0;
  double lambda3 = 2.0;

  void validate() const {
    for (double l : {lambda1, lambda2, lambda3}) {
      if (!std::isfinite(l) || l < 0.0) throw InvalidArgument("loss weights must be finite and non-negative");
    }
  }
};

// Per-cell (background, foreground) logits.
using SaliencyLogits = Grid2D<std::array<double, 2>>;
// Per-cell 0/1 label; 1 is foreground.
using BinaryMask = Grid2D<std::uint8_t>;

// IoU is clamped to this floor before taking the log.
inline constexpr double kMinIou = 1e-10;

inline double smooth_l1(double x) {
  const double a = std::abs(x);
  return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

inline double smooth_l1_grad(double x) {
  if (x >= 1.0) return 1.0;
  if (x <= -1.0) return -1.0;
  return x;
}

/// |-log(IoU)| with IoU clamped to [1e-10, 1].
inline double iou_magnitude(double iou) { return std::abs(-std::log(std::clamp(iou, kMinIou, 1.0))); }

struct RegressionLoss {
  double value = 0.0;
  std::array<double, 5> grads{};  // d value / d predicted offset (x, y, w, h, theta)
  double iou = 0.0;
};

/// IoU-smooth L1 regression loss for one proposal.
///
/// Each offset coordinate contributes smooth_l1(d) / |smooth_l1(d)| * |-log IoU|,
/// so any coordinate that differs adds exactly |-log IoU| and an exact match
/// adds 0. The gradient treats 1/|smooth_l1(d)| and |-log IoU| as constants:
/// grad_j = smooth_l1'(d_j) / smooth_l1(d_j) * |-log IoU|.
///
/// Throws InvalidArgument if either box is invalid (e.g. a decoded prediction
/// with non-positive size).
inline RegressionLoss iou_smooth_l1_reg(const RegressionTarget& pred, const RegressionTarget& target,
                                        const RotatedBox& pred_box, const RotatedBox& gt_box) {
  RegressionLoss out;
  out.iou = skew_iou(pred_box, gt_box);
  const double mag = iou_magnitude(out.iou);
  const auto p = pred.as_array();
  const auto t = target.as_array();
  for (std::size_t j = 0; j < 5; ++j) {
    const double d = p[j] - t[j];
    const double l = smooth_l1(d);
    if (l == 0.0) continue;  // 0/0 contributes nothing
    out.value += mag;
    out.grads[j] = smooth_l1_grad(d) / l * mag;
  }
  return out;
}

namespace detail {

inline void check_attention_inputs(const SaliencyLogits& s, const BinaryMask& m) {
  if (!s.same_shape(m.rows(), m.cols())) {
    throw InvalidArgument("saliency " + std::to_string(s.rows()) + "x" + std::to_string(s.cols()) +
                          " does not match mask " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  if (s.size() == 0) throw InvalidArgument("empty saliency grid");
  for (std::uint8_t v : m.data()) {
    if (v > 1) throw InvalidArgument("mask values must be 0 or 1");
  }
  for (const auto& l : s.data()) {
    if (!std::isfinite(l[0]) || !std::isfinite(l[1])) throw InvalidArgument("non-finite saliency logit");
  }
}

// -log softmax(l)[k], stable for large logits.
inline double neg_log_softmax(const std::array<double, 2>& l, std::size_t k) {
  const double hi = std::max(l[0], l[1]);
  const double lse = hi + std::log1p(std::exp(-std::abs(l[0] - l[1])));
  return lse - l[k];
}

}  // namespace detail

struct AttentionLoss {
  double value = 0.0;
  SaliencyLogits grads;  // d value / d logit, same shape as the input
};

/// Pixel-wise softmax cross-entropy averaged over the h x w grid.
inline AttentionLoss attention_loss_with_grad(const SaliencyLogits& s, const BinaryMask& m) {
  detail::check_attention_inputs(s, m);
  const double inv_n = 1.0 / static_cast<double>(s.size());
  AttentionLoss out;
  out.grads = SaliencyLogits(s.rows(), s.cols());
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& l = s.data()[i];
    const std::size_t k = m.data()[i];
    sum += detail::neg_log_softmax(l, k);
    // softmax via the complementary channel keeps both terms accurate
    const double p1 = 1.0 / (1.0 + std::exp(l[0] - l[1]));
    const double p0 = 1.0 / (1.0 + std::exp(l[1] - l[0]));
    out.grads.data()[i] = {(p0 - (k == 0 ? 1.0 : 0.0)) * inv_n, (p1 - (k == 1 ? 1.0 : 0.0)) * inv_n};
  }
  out.value = sum * inv_n;
  return out;
}

inline double attention_loss(const SaliencyLogits& s, const BinaryMask& m) {
  detail::check_attention_inputs(s, m);
  double sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) sum += detail::neg_log_softmax(s.data()[i], m.data()[i]);
  return sum / static_cast<double>(s.size());
}

/// -log p[label] with p clamped to >= 1e-12.
inline double classification_loss(std::span<const double> probs, std::size_t label) {
  if (label >= probs.size()) {
    throw InvalidArgument("class label " + std::to_string(label) + " out of range for " +
                          std::to_string(probs.size()) + " classes");
  }
  return -std::log(std::max(probs[label], 1e-12));
}

/// One second-stage proposal. Background proposals (foreground == false) carry
/// no meaningful regression fields and are never read for regression.
struct Proposal {
  RegressionTarget pred_offsets;
  RegressionTarget target_offsets;
  RotatedBox pred_box;
  RotatedBox gt_box;
  bool foreground = false;
  std::size_t label = 0;
  std::vector<double> probs;
};

struct MultitaskLoss {
  double total = 0.0;
  double regression = 0.0;      // (1/N) sum over foreground, before lambda1
  double attention = 0.0;       // mean pixel cross-entropy, before lambda2
  double classification = 0.0;  // (1/N) sum, before lambda3
};

inline MultitaskLoss multitask_loss_terms(std::span<const Proposal> batch, const SaliencyLogits& s,
                                          const BinaryMask& m, const LossWeights& w) {
  w.validate();
  if (batch.empty()) throw InvalidArgument("multitask loss needs at least one proposal");
  double reg = 0.0;
  double cls = 0.0;
  for (const Proposal& p : batch) {
    double total_p = 0.0;
    for (double v : p.probs) {
      if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("class probabilities must be finite and >= 0");
      total_p += v;
    }
    if (std::abs(total_p - 1.0) > 1e-6) throw InvalidArgument("class probabilities must sum to 1");
    if (p.foreground) reg += iou_smooth_l1_reg(p.pred_offsets, p.target_offsets, p.pred_box, p.gt_box).value;
    cls += classification_loss(p.probs, p.label);
  }
  const double n = static_cast<double>(batch.size());
  MultitaskLoss out;
  out.regression = reg / n;
  out.attention = attention_loss(s, m);
  out.classification = cls / n;
  out.total = w.lambda1 * out.regression + w.lambda2 * out.attention + w.lambda3 * out.classification;
  return out;
}

inline double multitask_loss(std::span<const Proposal> batch, const SaliencyLogits& s, const BinaryMask& m,
                             const LossWeights& w) {
  return multitask_loss_terms(batch, s, m, w).total;
}

/// Central-difference gradient of `f` at `x`.
template <class F>
std::vector<double> numerical_gradient(F&& f, std::span<const double> x, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    probe[j] = x[j] + eps;
    const double up = f(std::span<const double>(probe));
    probe[j] = x[j] - eps;
    const double down = f(std::span<const double>(probe));
    probe[j] = x[j];
    grad[j] = (up - down) / (2.0 * eps);
  }
  return grad;
}

}  // namespace rotdet
