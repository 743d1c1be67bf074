// Copyright 2026 The rotdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "rotdet/error.hpp"

namespace rotdet {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kHalfPi = std::numbers::pi / 2.0;

// Tolerance used by clipping and point-in-polygon predicates (signed distance,
// pixels) and for merging clipped vertices.
inline constexpr double kGeomEps = 1e-9;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline constexpr Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline constexpr Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline constexpr Point operator*(Point a, double s) { return {a.x * s, a.y * s}; }
inline constexpr double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline constexpr double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }

/// Five-parameter oriented rectangle (OpenCV convention).
///
/// `w` is the side whose direction (cos theta, sin theta) makes angle `theta`
/// with the x-axis; `h` is the perpendicular side. The canonical form keeps
/// theta in [-pi/2, 0). (cx, cy, w, h, theta) and (cx, cy, h, w, theta + pi/2)
/// describe the same rectangle.
struct RotatedBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
  double theta = 0.0;

  double area() const { return w * h; }

  friend bool operator==(const RotatedBox&, const RotatedBox&) = default;
};

struct AxisAlignedBox {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }

  friend bool operator==(const AxisAlignedBox&, const AxisAlignedBox&) = default;
};

// Four-vertex polygon as found in DOTA annotations. Vertex order is whatever
// the producer wrote; geometry routines that need CCW order normalize it.
struct Quadrilateral {
  std::array<Point, 4> vertices{};

  friend bool operator==(const Quadrilateral&, const Quadrilateral&) = default;
};

// Shoelace signed area; positive for counter-clockwise order (y up).
inline double signed_area(std::span<const Point> pts) {
  const std::size_t n = pts.size();
  if (n < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = pts[i];
    const Point& q = pts[(i + 1) % n];
    acc += p.x * q.y - q.x * p.y;
  }
  return 0.5 * acc;
}

inline double polygon_area(std::span<const Point> pts) { return std::abs(signed_area(pts)); }

/// Convex polygon with counter-clockwise vertices. An empty polygon is a valid
/// value (e.g. the intersection of disjoint shapes).
class ConvexPolygon {
 public:
  ConvexPolygon() = default;

  /// Takes the vertices of a convex polygon in either winding; stores them CCW.
  explicit ConvexPolygon(std::vector<Point> vertices) : vertices_(std::move(vertices)) {
    if (vertices_.size() < 3) {
      vertices_.clear();
    } else if (signed_area(vertices_) < 0.0) {
      std::reverse(vertices_.begin(), vertices_.end());
    }
  }

  std::span<const Point> vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  bool empty() const { return vertices_.empty(); }
  double area() const { return signed_area(vertices_); }

 private:
  std::vector<Point> vertices_;
};

namespace detail {

inline bool finite(const RotatedBox& b) {
  return std::isfinite(b.cx) && std::isfinite(b.cy) && std::isfinite(b.w) &&
         std::isfinite(b.h) && std::isfinite(b.theta);
}

inline void require_valid(const RotatedBox& b) {
  if (!finite(b)) throw InvalidArgument("rotated box has non-finite fields");
  if (!(b.w > 0.0) || !(b.h > 0.0)) {
    throw InvalidArgument("rotated box needs w > 0 and h > 0 (got w=" + std::to_string(b.w) +
                          ", h=" + std::to_string(b.h) + ")");
  }
}

// Fixed-capacity vertex buffer for clipping two quadrilaterals, which never
// produces more than 8 vertices.
template <std::size_t N>
class FixedPolygon {
 public:
  void clear() { size_ = 0; }
  void push_back(Point p) {
    if (size_ < N) pts_[size_++] = p;
  }
  void pop_back() { --size_; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  Point& operator[](std::size_t i) { return pts_[i]; }
  const Point& operator[](std::size_t i) const { return pts_[i]; }
  Point& back() { return pts_[size_ - 1]; }
  const Point* data() const { return pts_.data(); }
  Point* begin() { return pts_.data(); }
  Point* end() { return pts_.data() + size_; }
  operator std::span<const Point>() const { return {pts_.data(), size_}; }

 private:
  std::array<Point, N> pts_{};
  std::size_t size_ = 0;
};

// Signed distance of p from the directed line a->b; positive on the left.
inline double edge_distance(Point a, Point b, Point p) {
  const Point d = b - a;
  const double len = std::hypot(d.x, d.y);
  if (len == 0.0) return 0.0;
  return cross(d, p - a) / len;
}

// Removes consecutive (cyclic) vertices closer than kGeomEps and empties the
// polygon if fewer than three remain.
template <class Buffer>
void merge_close_vertices(Buffer& poly) {
  Buffer tmp;
  tmp.clear();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point p = poly[i];
    if (!tmp.empty()) {
      const Point d = p - tmp.back();
      if (std::hypot(d.x, d.y) < kGeomEps) continue;
    }
    tmp.push_back(p);
  }
  while (tmp.size() > 1) {
    const Point d = tmp.back() - tmp[0];
    if (std::hypot(d.x, d.y) >= kGeomEps) break;
    tmp.pop_back();
  }
  if (tmp.size() < 3) tmp.clear();
  poly = std::move(tmp);
}

/// Sutherland-Hodgman clipping of `subject` by the convex CCW `clipper`.
/// Points within kGeomEps of a clip edge count as inside. If every subject
/// vertex is inside, the output equals the subject in the same order.
template <class Buffer>
void clip_convex(std::span<const Point> subject, std::span<const Point> clipper, Buffer& out) {
  out.clear();
  for (const Point& p : subject) out.push_back(p);
  if (subject.size() < 3 || clipper.size() < 3) {
    out.clear();
    return;
  }
  Buffer input;
  const std::size_t m = clipper.size();
  for (std::size_t e = 0; e < m && !out.empty(); ++e) {
    const Point a = clipper[e];
    const Point b = clipper[(e + 1) % m];
    input = out;
    out.clear();
    const std::size_t n = input.size();
    Point prev = input[n - 1];
    double d_prev = edge_distance(a, b, prev);
    for (std::size_t i = 0; i < n; ++i) {
      const Point cur = input[i];
      const double d_cur = edge_distance(a, b, cur);
      const bool cur_in = d_cur >= -kGeomEps;
      const bool prev_in = d_prev >= -kGeomEps;
      if (cur_in != prev_in) {
        const double t = d_prev / (d_prev - d_cur);
        out.push_back(prev + (cur - prev) * t);
      }
      if (cur_in) out.push_back(cur);
      prev = cur;
      d_prev = d_cur;
    }
  }
  merge_close_vertices(out);
}

// Corners of `b` relative to `origin`, counter-clockwise.
inline std::array<Point, 4> corners(const RotatedBox& b, Point origin = {}) {
  const double c = std::cos(b.theta);
  const double s = std::sin(b.theta);
  const Point u{0.5 * b.w * c, 0.5 * b.w * s};
  const Point v{-0.5 * b.h * s, 0.5 * b.h * c};
  const Point ctr{b.cx - origin.x, b.cy - origin.y};
  return {ctr - u - v, ctr + u - v, ctr + u + v, ctr - u + v};
}

}  // namespace detail

/// Maps `box` to the representative with theta in [-pi/2, 0), swapping w and h
/// whenever theta moves by an odd multiple of pi/2.
///
/// Throws InvalidArgument for non-finite fields or non-positive sizes.
inline RotatedBox canonicalize(const RotatedBox& box) {
  detail::require_valid(box);
  const double k = std::floor(box.theta / kHalfPi) + 1.0;
  RotatedBox out = box;
  out.theta = box.theta - k * kHalfPi;
  bool swap = std::fmod(std::abs(k), 2.0) == 1.0;
  // Rounding can land exactly on 0 or just under -pi/2.
  if (out.theta >= 0.0) {
    out.theta -= kHalfPi;
    swap = !swap;
  } else if (out.theta < -kHalfPi) {
    out.theta += kHalfPi;
    swap = !swap;
  }
  if (swap) std::swap(out.w, out.h);
  return out;
}

inline bool is_canonical(const RotatedBox& box) {
  return box.theta >= -kHalfPi && box.theta < 0.0;
}

/// Corners of the rectangle in counter-clockwise order: the axis-aligned w x h
/// rectangle centered at (cx, cy), rotated by theta.
inline Quadrilateral rbox_to_quad(const RotatedBox& box) {
  detail::require_valid(box);
  return Quadrilateral{detail::corners(box)};
}

/// Convex hull (Andrew's monotone chain), CCW, collinear points dropped.
inline std::vector<Point> convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(), [](Point a, Point b) { return std::tie(a.x, a.y) < std::tie(b.x, b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point& p : pts) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    const Point& p = pts[i];
    while (k >= lower && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

/// Minimum-area enclosing rotated rectangle of the quad's vertices (rotating
/// calipers over the hull edges), canonicalized.
///
/// Throws DegenerateInput when the vertices span (numerically) zero area.
inline RotatedBox quad_to_rbox(const Quadrilateral& quad) {
  for (const Point& p : quad.vertices) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InvalidArgument("quadrilateral has non-finite vertex");
  }
  // Work relative to the vertex mean to keep the projections well conditioned.
  Point mean{};
  for (const Point& p : quad.vertices) mean = mean + p * 0.25;
  std::vector<Point> rel;
  rel.reserve(4);
  double scale = 0.0;
  for (const Point& p : quad.vertices) {
    rel.push_back(p - mean);
    scale = std::max(scale, std::hypot(p.x - mean.x, p.y - mean.y));
  }
  const std::vector<Point> hull = convex_hull(std::move(rel));
  if (hull.size() < 3 || polygon_area(hull) <= 1e-12 * std::max(1.0, scale * scale)) {
    throw DegenerateInput("quadrilateral has zero area");
  }

  double best_area = std::numeric_limits<double>::infinity();
  RotatedBox best{};
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point e = hull[(i + 1) % hull.size()] - hull[i];
    const double len = std::hypot(e.x, e.y);
    const Point dir{e.x / len, e.y / len};
    const Point nrm{-dir.y, dir.x};
    double umin = std::numeric_limits<double>::infinity(), umax = -umin;
    double vmin = umin, vmax = -umin;
    for (const Point& p : hull) {
      const double u = dot(p, dir);
      const double v = dot(p, nrm);
      umin = std::min(umin, u);
      umax = std::max(umax, u);
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
    const double area = (umax - umin) * (vmax - vmin);
    if (area < best_area) {
      best_area = area;
      const Point c = dir * (0.5 * (umin + umax)) + nrm * (0.5 * (vmin + vmax));
      best = RotatedBox{c.x + mean.x, c.y + mean.y, umax - umin, vmax - vmin, std::atan2(dir.y, dir.x)};
    }
  }
  return canonicalize(best);
}

/// Intersection of two convex CCW polygons; empty when they do not overlap
/// with positive area.
inline ConvexPolygon convex_intersection(const ConvexPolygon& a, const ConvexPolygon& b) {
  std::vector<Point> out;
  detail::clip_convex(a.vertices(), b.vertices(), out);
  return ConvexPolygon(std::move(out));
}

/// Tightest axis-aligned box around the rotated rectangle's corners.
inline AxisAlignedBox hbb_of(const RotatedBox& box) {
  const Quadrilateral q = rbox_to_quad(box);
  AxisAlignedBox r{q.vertices[0].x, q.vertices[0].y, q.vertices[0].x, q.vertices[0].y};
  for (const Point& p : q.vertices) {
    r.xmin = std::min(r.xmin, p.x);
    r.ymin = std::min(r.ymin, p.y);
    r.xmax = std::max(r.xmax, p.x);
    r.ymax = std::max(r.ymax, p.y);
  }
  return r;
}

/// Vertex extents of an arbitrary quadrilateral (the HBB of a DOTA polygon).
inline AxisAlignedBox extent_of(const Quadrilateral& quad) {
  AxisAlignedBox r{quad.vertices[0].x, quad.vertices[0].y, quad.vertices[0].x, quad.vertices[0].y};
  for (const Point& p : quad.vertices) {
    r.xmin = std::min(r.xmin, p.x);
    r.ymin = std::min(r.ymin, p.y);
    r.xmax = std::max(r.xmax, p.x);
    r.ymax = std::max(r.ymax, p.y);
  }
  return r;
}

/// Axis-aligned box as a RotatedBox in canonical form (theta = -pi/2, so w is
/// the vertical extent).
inline RotatedBox to_rotated(const AxisAlignedBox& b) {
  return RotatedBox{0.5 * (b.xmin + b.xmax), 0.5 * (b.ymin + b.ymax), b.height(), b.width(), -kHalfPi};
}

inline Quadrilateral to_quad(const AxisAlignedBox& b) {
  return Quadrilateral{{Point{b.xmin, b.ymin}, Point{b.xmax, b.ymin}, Point{b.xmax, b.ymax}, Point{b.xmin, b.ymax}}};
}

inline double aabb_iou(const AxisAlignedBox& a, const AxisAlignedBox& b) {
  const double iw = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  const double ih = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

/// Intersection-over-union of two rotated rectangles via convex clipping.
///
/// The pair is ordered before clipping so skew_iou(a, b) == skew_iou(b, a)
/// bit for bit, and coordinates are taken relative to the midpoint of the
/// centers. Throws InvalidArgument for invalid boxes.
inline double skew_iou(const RotatedBox& a, const RotatedBox& b) {
  detail::require_valid(a);
  detail::require_valid(b);
  const auto key = [](const RotatedBox& r) { return std::tie(r.cx, r.cy, r.w, r.h, r.theta); };
  const bool in_order = !(key(b) < key(a));
  const RotatedBox& first = in_order ? a : b;
  const RotatedBox& second = in_order ? b : a;

  const Point origin{0.5 * (a.cx + b.cx), 0.5 * (a.cy + b.cy)};
  const auto pa = detail::corners(first, origin);
  const auto pb = detail::corners(second, origin);

  // Cheap reject on the axis-aligned extents.
  const auto extent = [](const std::array<Point, 4>& p) {
    AxisAlignedBox r{p[0].x, p[0].y, p[0].x, p[0].y};
    for (const Point& q : p) {
      r.xmin = std::min(r.xmin, q.x);
      r.ymin = std::min(r.ymin, q.y);
      r.xmax = std::max(r.xmax, q.x);
      r.ymax = std::max(r.ymax, q.y);
    }
    return r;
  };
  const AxisAlignedBox ea = extent(pa);
  const AxisAlignedBox eb = extent(pb);
  if (ea.xmax <= eb.xmin || eb.xmax <= ea.xmin || ea.ymax <= eb.ymin || eb.ymax <= ea.ymin) return 0.0;

  detail::FixedPolygon<16> inter;
  detail::clip_convex(std::span<const Point>(pa), std::span<const Point>(pb), inter);
  const double area_i = polygon_area(inter);
  const double area_a = polygon_area(pa);
  const double area_b = polygon_area(pb);
  const double uni = area_a + area_b - area_i;
  if (uni <= 0.0) return 0.0;
  return std::clamp(area_i / uni, 0.0, 1.0);
}

/// Closed point-in-convex-polygon test; points within `eps` of the boundary
/// count as inside. `poly` must be CCW.
inline bool point_in_convex_polygon(Point p, std::span<const Point> poly, double eps = kGeomEps) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (detail::edge_distance(poly[i], poly[(i + 1) % n], p) < -eps) return false;
  }
  return true;
}

// Overload set used by the generic NMS and assignment code.
inline double box_iou(const AxisAlignedBox& a, const AxisAlignedBox& b) { return aabb_iou(a, b); }
inline double box_iou(const RotatedBox& a, const RotatedBox& b) { return skew_iou(a, b); }

inline AxisAlignedBox translated(const AxisAlignedBox& b, Point d) {
  return {b.xmin + d.x, b.ymin + d.y, b.xmax + d.x, b.ymax + d.y};
}
inline RotatedBox translated(const RotatedBox& b, Point d) {
  return {b.cx + d.x, b.cy + d.y, b.w, b.h, b.theta};
}

}  // namespace rotdet
