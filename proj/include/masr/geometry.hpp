#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "masr/se2.hpp"

namespace masr {

struct BoundingBox {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;

  bool overlaps_segment(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                        double pad = 0.0) const {
    const double lo_x = std::min(a.x(), b.x()), hi_x = std::max(a.x(), b.x());
    const double lo_y = std::min(a.y(), b.y()), hi_y = std::max(a.y(), b.y());
    return lo_x <= max_x + pad && hi_x >= min_x - pad && lo_y <= max_y + pad &&
           hi_y >= min_y - pad;
  }
};

inline double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

/// Sign of the turn a->b->c: +1 left, -1 right, 0 collinear.
inline int orientation(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                       const Eigen::Vector2d& c) {
  const double v = cross2(b - a, c - a);
  if (v > 0.0) return 1;
  if (v < 0.0) return -1;
  return 0;
}

inline bool on_segment(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                       const Eigen::Vector2d& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

/// Closed segment intersection, including touching and collinear overlap.
inline bool segments_intersect(const Eigen::Vector2d& a1, const Eigen::Vector2d& a2,
                               const Eigen::Vector2d& b1, const Eigen::Vector2d& b2) {
  const int o1 = orientation(a1, a2, b1);
  const int o2 = orientation(a1, a2, b2);
  const int o3 = orientation(b1, b2, a1);
  const int o4 = orientation(b1, b2, a2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a1, a2, b1)) return true;
  if (o2 == 0 && on_segment(a1, a2, b2)) return true;
  if (o3 == 0 && on_segment(b1, b2, a1)) return true;
  if (o4 == 0 && on_segment(b1, b2, a2)) return true;
  return false;
}

inline double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                                     const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

/// Simple polygon with counterclockwise vertices. Clockwise input is
/// reversed on construction; degenerate or self-intersecting input is
/// rejected.
class Polygon {
public:
  explicit Polygon(std::vector<Eigen::Vector2d> vertices) : verts_(std::move(vertices)) {
    if (verts_.size() < 3) throw std::invalid_argument("polygon needs at least 3 vertices");
    const double signed_area = shoelace(verts_);
    if (std::abs(signed_area) < 1e-15) throw std::invalid_argument("polygon is degenerate");
    if (signed_area < 0.0) std::reverse(verts_.begin(), verts_.end());
    area_ = std::abs(signed_area);
    require_simple();
    bbox_.min_x = bbox_.max_x = verts_[0].x();
    bbox_.min_y = bbox_.max_y = verts_[0].y();
    for (const auto& v : verts_) {
      bbox_.min_x = std::min(bbox_.min_x, v.x());
      bbox_.max_x = std::max(bbox_.max_x, v.x());
      bbox_.min_y = std::min(bbox_.min_y, v.y());
      bbox_.max_y = std::max(bbox_.max_y, v.y());
    }
  }

  const std::vector<Eigen::Vector2d>& vertices() const { return verts_; }
  std::size_t size() const { return verts_.size(); }
  double area() const { return area_; }
  const BoundingBox& bbox() const { return bbox_; }

  /// Even-odd containment (points on the boundary may land either way).
  bool contains(const Eigen::Vector2d& p) const {
    if (p.x() < bbox_.min_x || p.x() > bbox_.max_x || p.y() < bbox_.min_y ||
        p.y() > bbox_.max_y)
      return false;
    bool inside = false;
    for (std::size_t i = 0, j = verts_.size() - 1; i < verts_.size(); j = i++) {
      const auto& vi = verts_[i];
      const auto& vj = verts_[j];
      if ((vi.y() > p.y()) != (vj.y() > p.y()) &&
          p.x() < (vj.x() - vi.x()) * (p.y() - vi.y()) / (vj.y() - vi.y()) + vi.x())
        inside = !inside;
    }
    return inside;
  }

  /// Distance from a point to the polygon; zero inside.
  double distance(const Eigen::Vector2d& p) const {
    if (contains(p)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0, j = verts_.size() - 1; i < verts_.size(); j = i++)
      best = std::min(best, point_segment_distance(p, verts_[j], verts_[i]));
    return best;
  }

  bool intersects_segment(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const {
    if (!bbox_.overlaps_segment(a, b)) return false;
    if (contains(a) || contains(b)) return true;
    for (std::size_t i = 0, j = verts_.size() - 1; i < verts_.size(); j = i++)
      if (segments_intersect(a, b, verts_[j], verts_[i])) return true;
    return false;
  }

private:
  static double shoelace(const std::vector<Eigen::Vector2d>& v) {
    double s = 0.0;
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++)
      s += cross2(v[j], v[i]);
    return 0.5 * s;
  }

  void require_simple() const {
    const std::size_t n = verts_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& a1 = verts_[i];
      const auto& a2 = verts_[(i + 1) % n];
      if ((a2 - a1).squaredNorm() < 1e-24)
        throw std::invalid_argument("polygon has a repeated vertex");
      for (std::size_t j = i + 1; j < n; ++j) {
        // skip edges sharing a vertex
        if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
        const auto& b1 = verts_[j];
        const auto& b2 = verts_[(j + 1) % n];
        if (segments_intersect(a1, a2, b1, b2))
          throw std::invalid_argument("polygon is self-intersecting");
      }
    }
  }

  std::vector<Eigen::Vector2d> verts_;
  double area_ = 0.0;
  BoundingBox bbox_;
};

/// Minkowski sum of a polygon with a disc of the given radius, approximated
/// by offset edges with 8 arc vertices per convex corner; reflex corners are
/// mitered.
inline Polygon inflate_polygon(const Polygon& poly, double radius, int arc_vertices = 8) {
  if (radius < 0.0) throw std::invalid_argument("inflation radius must be non-negative");
  if (radius == 0.0) return poly;
  const auto& v = poly.vertices();
  const std::size_t n = v.size();
  std::vector<Eigen::Vector2d> out;
  out.reserve(n * static_cast<std::size_t>(arc_vertices));
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d& prev = v[(i + n - 1) % n];
    const Eigen::Vector2d& cur = v[i];
    const Eigen::Vector2d& next = v[(i + 1) % n];
    const Eigen::Vector2d t_in = (cur - prev).normalized();
    const Eigen::Vector2d t_out = (next - cur).normalized();
    // outward normals of a CCW polygon point to the right of the edge
    const Eigen::Vector2d n_in(t_in.y(), -t_in.x());
    const Eigen::Vector2d n_out(t_out.y(), -t_out.x());
    const double turn = cross2(t_in, t_out);
    if (turn > 1e-12) {
      // convex corner: arc from n_in to n_out
      const double a0 = std::atan2(n_in.y(), n_in.x());
      double sweep = normalize_angle(std::atan2(n_out.y(), n_out.x()) - a0);
      if (sweep < 0.0) sweep += 2.0 * kPi;
      for (int k = 0; k < arc_vertices; ++k) {
        const double a = a0 + sweep * k / (arc_vertices - 1);
        out.push_back(cur + radius * Eigen::Vector2d(std::cos(a), std::sin(a)));
      }
    } else if (turn < -1e-12) {
      // reflex corner: intersect the two offset edge lines
      const Eigen::Vector2d p1 = cur + radius * n_in;
      const Eigen::Vector2d p2 = cur + radius * n_out;
      const double denom = cross2(t_in, t_out);
      const double s = cross2(p2 - p1, t_out) / denom;
      out.push_back(p1 + s * t_in);
    } else {
      out.push_back(cur + radius * n_in);
    }
  }
  return Polygon(std::move(out));
}

}  // namespace masr
