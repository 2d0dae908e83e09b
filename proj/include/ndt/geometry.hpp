#pragma once

#include <cmath>

namespace ndt {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline double distance(Vec3 a, Vec3 b) { return (a - b).norm(); }
inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Axis-aligned rectangle in the ground plane, meters.
struct Rect {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  friend bool operator==(const Rect&, const Rect&) = default;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  bool contains(double x, double y) const {
    return x >= min_x && x <= max_x && y >= min_y && y <= max_y;
  }
  bool contains_strict(double x, double y) const {
    return x > min_x && x < max_x && y > min_y && y < max_y;
  }
};

/// Vertical extrusion of a rectangle from the ground up to `top`.
struct Box {
  Rect footprint;
  double top = 0.0;
};

/// True when the open segment (a, b) passes through the open interior of `box`.
/// Exact slab test; touching a face or an endpoint lying on a face does not count.
bool segment_hits_box(const Vec3& a, const Vec3& b, const Box& box);

/// Shortest distance from point p to segment [a, b] in the plane.
double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

}  // namespace ndt
