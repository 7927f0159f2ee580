#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>

#include "divdrive/trajectory.hpp"

namespace divdrive {

struct Segment {
  Vec2 a;
  Vec2 b;

  [[nodiscard]] double length() const { return distance(a, b); }
  [[nodiscard]] Vec2 direction() const {
    const Vec2 d = b - a;
    const double len = d.norm();
    return len > 0.0 ? (1.0 / len) * d : Vec2{1.0, 0.0};
  }
  [[nodiscard]] double angle() const { return std::atan2(b.y - a.y, b.x - a.x); }
};

inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a;
}

inline Vec2 unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

inline double point_segment_distance(Vec2 p, const Segment& s) {
  const Vec2 d = s.b - s.a;
  const double len2 = dot(d, d);
  if (len2 == 0.0) return distance(p, s.a);
  const double t = std::clamp(dot(p - s.a, d) / len2, 0.0, 1.0);
  return distance(p, s.a + t * d);
}

/// Distance along a ray (unit direction) to a segment, if it is hit.
inline std::optional<double> ray_segment_hit(Vec2 origin, Vec2 dir, const Segment& s) {
  const Vec2 e = s.b - s.a;
  const double denom = cross(dir, e);
  const Vec2 w = s.a - origin;
  if (std::abs(denom) < 1e-14) {
    // parallel: only collinear overlap counts, reported at the nearest endpoint ahead
    if (std::abs(cross(w, dir)) > 1e-12) return std::nullopt;
    const double ta = dot(s.a - origin, dir);
    const double tb = dot(s.b - origin, dir);
    if (ta < 0.0 && tb < 0.0) return std::nullopt;
    if (ta <= 0.0 || tb <= 0.0) return 0.0;
    return std::min(ta, tb);
  }
  const double t = cross(w, e) / denom;
  const double u = cross(w, dir) / denom;
  if (t < 0.0 || u < 0.0 || u > 1.0) return std::nullopt;
  return t;
}

inline bool segments_intersect(const Segment& p, const Segment& q) {
  auto orient = [](Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); };
  auto on_segment = [](Vec2 a, Vec2 b, Vec2 c) {
    return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= c.y &&
           c.y <= std::max(a.y, b.y);
  };
  const double d1 = orient(q.a, q.b, p.a);
  const double d2 = orient(q.a, q.b, p.b);
  const double d3 = orient(p.a, p.b, q.a);
  const double d4 = orient(p.a, p.b, q.b);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  if (d1 == 0 && on_segment(q.a, q.b, p.a)) return true;
  if (d2 == 0 && on_segment(q.a, q.b, p.b)) return true;
  if (d3 == 0 && on_segment(p.a, p.b, q.a)) return true;
  if (d4 == 0 && on_segment(p.a, p.b, q.b)) return true;
  return false;
}

/// Rectangle centred at `center`, `length` along `heading`, `width` across.
struct OrientedRect {
  Vec2 center;
  double heading = 0.0;
  double length = 0.0;
  double width = 0.0;

  [[nodiscard]] Vec2 axis() const { return unit(heading); }
  [[nodiscard]] Vec2 normal() const { return unit(heading + std::numbers::pi / 2.0); }

  /// Corners in order front-left, front-right, rear-right, rear-left.
  [[nodiscard]] std::array<Vec2, 4> corners() const {
    const Vec2 f = (length / 2.0) * axis();
    const Vec2 s = (width / 2.0) * normal();
    return {center + f + s, center + f - s, center - f - s, center - f + s};
  }

  [[nodiscard]] std::array<Segment, 4> edges() const {
    const auto c = corners();
    return {Segment{c[0], c[1]}, Segment{c[1], c[2]}, Segment{c[2], c[3]}, Segment{c[3], c[0]}};
  }

  [[nodiscard]] bool contains(Vec2 p) const {
    const Vec2 d = p - center;
    return std::abs(dot(d, axis())) <= length / 2.0 && std::abs(dot(d, normal())) <= width / 2.0;
  }
};

/// Separating-axis overlap test for two oriented rectangles (touching counts).
inline bool overlaps(const OrientedRect& r1, const OrientedRect& r2) {
  const auto c1 = r1.corners();
  const auto c2 = r2.corners();
  const std::array<Vec2, 4> axes = {r1.axis(), r1.normal(), r2.axis(), r2.normal()};
  for (const Vec2& ax : axes) {
    double min1 = dot(c1[0], ax), max1 = min1, min2 = dot(c2[0], ax), max2 = min2;
    for (int i = 1; i < 4; ++i) {
      min1 = std::min(min1, dot(c1[i], ax));
      max1 = std::max(max1, dot(c1[i], ax));
      min2 = std::min(min2, dot(c2[i], ax));
      max2 = std::max(max2, dot(c2[i], ax));
    }
    if (max1 < min2 || max2 < min1) return false;
  }
  return true;
}

inline bool overlaps(const OrientedRect& r, const Segment& s) {
  if (r.contains(s.a) || r.contains(s.b)) return true;
  for (const Segment& e : r.edges())
    if (segments_intersect(e, s)) return true;
  return false;
}

}  // namespace divdrive
