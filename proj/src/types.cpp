#include "pccseg/types.hpp"

#include <algorithm>
#include <cmath>

namespace pcc {

ImageBuffer::ImageBuffer(int w, int h)
    : width(w), height(h), data(3 * static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0) {}

LabelMap::LabelMap(int w, int h, Label fill)
    : width(w), height(h), labels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

int LabelMap::implied_classes() const {
  Label top = -1;
  for (Label l : labels) top = std::max(top, l);
  return static_cast<int>(top + 1);
}

namespace {

double cross(Point o, Point a, Point b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

int orientation(Point o, Point a, Point b) {
  const double c = cross(o, a, b);
  if (c > 0) return 1;
  if (c < 0) return -1;
  return 0;
}

bool on_segment(Point p, Point a, Point b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

// Closed-segment intersection, touching endpoints included.
bool segments_intersect(Point p1, Point p2, Point q1, Point q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(q1, p1, p2)) return true;
  if (o2 == 0 && on_segment(q2, p1, p2)) return true;
  if (o3 == 0 && on_segment(p1, q1, q2)) return true;
  if (o4 == 0 && on_segment(p2, q1, q2)) return true;
  return false;
}

}  // namespace

void CutPolygon::validate() const {
  const std::size_t m = vertices.size();
  if (m < 3) throw InputError("polygon needs >= 3 vertices");
  for (const Point& v : vertices) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y))
      throw InputError("polygon vertex is not finite");
  }
  for (std::size_t i = 0; i < m; ++i) {
    const Point a = vertices[i];
    const Point b = vertices[(i + 1) % m];
    if (a == b) throw InputError("polygon has a repeated vertex");
  }
  for (std::size_t i = 0; i < m; ++i) {
    const Point a1 = vertices[i];
    const Point a2 = vertices[(i + 1) % m];
    for (std::size_t j = i + 1; j < m; ++j) {
      const Point b1 = vertices[j];
      const Point b2 = vertices[(j + 1) % m];
      const bool adjacent = (j == i + 1) || (i == 0 && j == m - 1);
      if (adjacent) {
        // Adjacent edges share one vertex; they may only meet there, so a
        // collinear fold-back is a self-intersection.
        const Point shared = (j == i + 1) ? a2 : a1;
        const Point pa = (j == i + 1) ? a1 : a2;
        const Point pb = (j == i + 1) ? b2 : b1;
        if (orientation(shared, pa, pb) == 0) {
          const double dot = (pa.x - shared.x) * (pb.x - shared.x) +
                             (pa.y - shared.y) * (pb.y - shared.y);
          if (dot > 0) throw InputError("polygon is self-intersecting");
        }
        continue;
      }
      if (segments_intersect(a1, a2, b1, b2))
        throw InputError("polygon is self-intersecting");
    }
  }
}

bool CutPolygon::contains(Point p) const {
  bool inside = false;
  const std::size_t m = vertices.size();
  for (std::size_t i = 0, j = m - 1; i < m; j = i++) {
    const Point a = vertices[i];
    const Point b = vertices[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

}  // namespace pcc
