// Copyright 2026 The rotdet Authors
// SPDX-License-Identifier: Apache-2.0

#include "rotdet/postprocess.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "oracles.hpp"

namespace rotdet {
namespace {

HorizontalDetection hd(AxisAlignedBox b, double score, std::string cat = "a", std::string img = "i") {
  return {b, score, std::move(cat), std::move(img)};
}

Detection rd(RotatedBox b, double score, std::string cat = "a", std::string img = "i") {
  return {b, score, std::move(cat), std::move(img)};
}

TEST(Nms, SingleDetection) {
  const std::vector<HorizontalDetection> d{hd({0, 0, 1, 1}, 0.5)};
  EXPECT_EQ(nms(d, 0.5), d);
}

TEST(Nms, IdenticalBoxes) {
  const auto out = nms(std::vector{hd({0, 0, 4, 4}, 0.8), hd({0, 0, 4, 4}, 0.9)}, 0.5);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].score, 0.9);
}

TEST(Nms, GreedyTrace) {
  const auto a = hd({0, 0, 10, 10}, 0.9), b = hd({0, 2.5, 10, 12.5}, 0.8), c = hd({50, 50, 60, 60}, 0.7);
  EXPECT_DOUBLE_EQ(aabb_iou(a.box, b.box), 0.6);
  const auto out = nms(std::vector{b, c, a}, 0.5);
  EXPECT_EQ(out, (std::vector{a, c}));
}

TEST(Nms, SuppressionIsStrict) {
  const auto a = hd({0, 0, 10, 10}, 0.9), b = hd({0, 2.5, 10, 12.5}, 0.8);
  EXPECT_EQ(nms(std::vector{a, b}, 0.6).size(), 2u);
}

TEST(Nms, EqualScoresKeepInputOrder) {
  const auto a = hd({0, 0, 10, 10}, 0.5, "x"), b = hd({0, 0, 10, 10}, 0.5, "y");
  EXPECT_EQ(nms(std::vector{a, b}, 0.5)[0].category, "x");
  EXPECT_EQ(nms(std::vector{b, a}, 0.5)[0].category, "y");
}

TEST(Nms, Errors) {
  EXPECT_THROW(nms(std::vector{hd({0, 0, 1, 1}, 0.5)}, 1.5), InvalidArgument);
  EXPECT_THROW(nms(std::vector{hd({0, 0, 1, 1}, 1.5)}, 0.5), InvalidArgument);
  EXPECT_TRUE(nms(std::vector<HorizontalDetection>{}, 0.5).empty());
}

TEST(Rnms, IdenticalSameCategory) {
  const RotatedBox b{5, 5, 10, 3, -0.4};
  EXPECT_EQ(rnms(std::vector{rd(b, 0.9), rd(b, 0.8)}, NmsThresholds::uniform(0.3)).size(), 1u);
}

TEST(Rnms, CategoriesNeverSuppressEachOther) {
  const RotatedBox b{5, 5, 10, 3, -0.4};
  const auto out = rnms(std::vector{rd(b, 0.8, "plane"), rd(b, 0.9, "ship")}, NmsThresholds::uniform(0.3));
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].category, "ship");
}

TEST(Rnms, CrossingBoxes) {
  const auto a = rd({0, 0, 10, 2, -kHalfPi}, 0.9), b = rd({0, 0, 2, 10, -kHalfPi}, 0.8);
  // the 10x2 boxes cross at a 2x2 square
  EXPECT_NEAR(skew_iou(a.box, b.box), 1.0 / 9.0, 1e-12);
  const auto lo = rnms(std::vector{a, b}, NmsThresholds::uniform(0.1));
  ASSERT_EQ(lo.size(), 1u);
  EXPECT_EQ(lo[0].score, 0.9);
  EXPECT_EQ(rnms(std::vector{a, b}, NmsThresholds::uniform(0.2)).size(), 2u);
}

TEST(Rnms, PerCategoryThresholds) {
  const auto a = rd({0, 0, 10, 2, -kHalfPi}, 0.9, "x"), b = rd({0, 0, 2, 10, -kHalfPi}, 0.8, "x");
  const auto c = rd({0, 0, 10, 2, -kHalfPi}, 0.9, "y"), d = rd({0, 0, 2, 10, -kHalfPi}, 0.8, "y");
  NmsThresholds t{{{"x", 0.1}, {"y", 0.2}}, std::nullopt};
  const auto out = rnms(std::vector{a, b, c, d}, t);
  EXPECT_EQ(out.size(), 3u);
  EXPECT_THROW(rnms(std::vector{rd({0, 0, 1, 1, -0.1}, 0.5, "z")}, t), InvalidArgument);
  t.fallback = kDefaultNmsThreshold;
  EXPECT_EQ(rnms(std::vector{rd({0, 0, 1, 1, -0.1}, 0.5, "z")}, t).size(), 1u);
}

std::vector<Detection> random_set(std::mt19937_64& rng, int n, int categories) {
  std::uniform_real_distribution<double> score(0, 1);
  std::uniform_int_distribution<int> cat(0, categories - 1);
  std::vector<Detection> out;
  for (int i = 0; i < n; ++i) {
    out.push_back(rd(oracle::random_box(rng, 40, 5, 40), score(rng), std::string(1, static_cast<char>('a' + cat(rng)))));
  }
  return out;
}

TEST(Rnms, KeptSetAndSuppressionProperties) {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 200; ++trial) {
    const auto dets = random_set(rng, 30, 3);
    const double t = 0.1 + 0.05 * (trial % 10);
    const auto kept = rnms(dets, NmsThresholds::uniform(t));
    for (std::size_t i = 1; i < kept.size(); ++i) EXPECT_GE(kept[i - 1].score, kept[i].score);
    for (std::size_t i = 0; i < kept.size(); ++i) {
      EXPECT_NE(std::find(dets.begin(), dets.end(), kept[i]), dets.end());
      for (std::size_t j = i + 1; j < kept.size(); ++j) {
        if (kept[i].category == kept[j].category) {
          EXPECT_LE(skew_iou(kept[i].box, kept[j].box), t);
        }
      }
    }
    for (const auto& d : dets) {
      if (std::find(kept.begin(), kept.end(), d) != kept.end()) continue;
      const bool explained = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
        return k.category == d.category && k.score >= d.score && skew_iou(k.box, d.box) > t;
      });
      EXPECT_TRUE(explained);
    }
  }
}

TEST(Rnms, PermutationInvariantForDistinctScores) {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 50; ++trial) {
    auto dets = random_set(rng, 25, 2);
    const auto base = rnms(dets, NmsThresholds::uniform(0.3));
    std::shuffle(dets.begin(), dets.end(), rng);
    EXPECT_EQ(rnms(dets, NmsThresholds::uniform(0.3)), base);
  }
}

TEST(Rnms, AgreesWithNmsOnAxisAlignedBoxes) {
  std::mt19937_64 rng(79);
  std::uniform_real_distribution<double> p(0, 100), s(2, 40), score(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<HorizontalDetection> h;
    std::vector<Detection> r;
    for (int i = 0; i < 20; ++i) {
      const double x = p(rng), y = p(rng), w = s(rng), ht = s(rng), sc = score(rng);
      h.push_back(hd({x, y, x + w, y + ht}, sc));
      r.push_back(rd(to_rotated(AxisAlignedBox{x, y, x + w, y + ht}), sc));
    }
    const auto a = nms(h, 0.4);
    const auto b = rnms(r, NmsThresholds::uniform(0.4));
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].score, b[i].score);
  }
}

TEST(TopK, Truncation) {
  std::mt19937_64 rng(83);
  const auto dets = random_set(rng, 40, 1);
  const auto all = rnms(dets, NmsThresholds::uniform(0.3));
  EXPECT_EQ(top_k_then_nms(dets, 1000, 1000, 0.3), all);
  const auto one = top_k_then_nms(dets, 1000, 1, 0.3);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].score, std::max_element(dets.begin(), dets.end(), [](auto& x, auto& y) { return x.score < y.score; })->score);
  EXPECT_LE(top_k_then_nms(dets, 5, 1000, 0.3).size(), 5u);
  EXPECT_THROW(top_k_then_nms(dets, 0, 1, 0.3), InvalidArgument);
  EXPECT_THROW(top_k_then_nms(dets, 1, 0, 0.3), InvalidArgument);
}

TEST(MergeTiles, SingleTileAtOriginIsRnms) {
  std::mt19937_64 rng(89);
  const auto dets = random_set(rng, 20, 2);
  const std::vector<TileDetections> tiles{{{0, 0}, dets}};
  EXPECT_EQ(merge_tiles(tiles, NmsThresholds::uniform(0.3)), rnms(dets, NmsThresholds::uniform(0.3)));
}

TEST(MergeTiles, DuplicateFromOverlappingTiles) {
  // Object at image (700, 100) seen by the tile at x=0 and the tile at x=600.
  const std::vector<TileDetections> tiles{{{0, 0}, {rd({700, 100, 40, 12, -0.3}, 0.9)}},
                                          {{600, 0}, {rd({100, 100, 40, 12, -0.3}, 0.8)}}};
  const auto out = merge_tiles(tiles, NmsThresholds::uniform(0.3));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].score, 0.9);
  EXPECT_EQ(out[0].box.cx, 700.0);
}

TEST(MergeTiles, DisjointAndPerImage) {
  const std::vector<TileDetections> tiles{{{0, 0}, {rd({10, 10, 5, 5, -0.3}, 0.9, "a", "p1")}},
                                          {{600, 600}, {rd({10, 10, 5, 5, -0.3}, 0.8, "a", "p1")}},
                                          {{0, 0}, {rd({10, 10, 5, 5, -0.3}, 0.7, "a", "p0")}}};
  const auto out = merge_tiles(tiles, NmsThresholds::uniform(0.3));
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].image_id, "p0");
  EXPECT_EQ(out[2].box.cx, 610.0);
}

}  // namespace
}  // namespace rotdet
