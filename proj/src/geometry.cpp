#include "ndt/geometry.hpp"

#include <algorithm>
#include <limits>

namespace ndt {

bool segment_hits_box(const Vec3& a, const Vec3& b, const Box& box) {
  const double lo[3] = {box.footprint.min_x, box.footprint.min_y, 0.0};
  const double hi[3] = {box.footprint.max_x, box.footprint.max_y, box.top};
  const double o[3] = {a.x, a.y, a.z};
  const double d[3] = {b.x - a.x, b.y - a.y, b.z - a.z};

  // Parameter interval (t_enter, t_exit) where the line is strictly inside.
  double t_enter = 0.0;
  double t_exit = 1.0;
  for (int axis = 0; axis < 3; ++axis) {
    if (d[axis] == 0.0) {
      if (!(o[axis] > lo[axis] && o[axis] < hi[axis])) return false;
      continue;
    }
    double t1 = (lo[axis] - o[axis]) / d[axis];
    double t2 = (hi[axis] - o[axis]) / d[axis];
    if (t1 > t2) std::swap(t1, t2);
    t_enter = std::max(t_enter, t1);
    t_exit = std::min(t_exit, t2);
    if (!(t_enter < t_exit)) return false;
  }
  return t_enter < t_exit;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return distance(p, a);
  double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, Vec2{a.x + t * dx, a.y + t * dy});
}

}  // namespace ndt
