#include "inkslt/geom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace inkslt {

void BBox::expand(const Point& p) {
  min_x = std::min(min_x, p.x);
  min_y = std::min(min_y, p.y);
  max_x = std::max(max_x, p.x);
  max_y = std::max(max_y, p.y);
}

void BBox::expand(const BBox& other) {
  min_x = std::min(min_x, other.min_x);
  min_y = std::min(min_y, other.min_y);
  max_x = std::max(max_x, other.max_x);
  max_y = std::max(max_y, other.max_y);
}

BBox bbox_of(const std::vector<Point>& pts) {
  BBox b{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
         std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  for (const Point& p : pts) b.expand(p);
  return b;
}

double dist(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double point_segment_distance(const Point& p, const Point& a, const Point& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 <= 0.0) return dist(p, a);
  double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

namespace {

double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace

std::vector<Point> convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Point& a, const Point& b) { return a.x == b.x && a.y == b.y; }),
            pts.end());
  const size_t n = pts.size();
  if (n <= 2) return pts;

  std::vector<Point> hull(2 * n);
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) {  // lower chain
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (size_t i = n - 1, t = k + 1; i-- > 0;) {  // upper chain
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() == 2 && hull[0].x == hull[1].x && hull[0].y == hull[1].y) hull.resize(1);
  return hull;
}

bool point_in_hull(const Point& p, const std::vector<Point>& hull, double eps) {
  if (hull.empty()) return false;
  if (hull.size() == 1) return dist(p, hull[0]) <= eps;
  if (hull.size() == 2) return point_segment_distance(p, hull[0], hull[1]) <= eps;
  for (size_t i = 0; i < hull.size(); ++i) {
    const Point& a = hull[i];
    const Point& b = hull[(i + 1) % hull.size()];
    if (cross(a, b, p) < -eps) return false;
  }
  return true;
}

namespace {

// Ray vs segment [a,b]; fills t (ray param) on hit.
bool ray_segment(const Point& o, const Point& d, const Point& a, const Point& b, double* t,
                 double eps) {
  const double rx = d.x, ry = d.y;
  const double sx = b.x - a.x, sy = b.y - a.y;
  const double denom = rx * sy - ry * sx;
  const double qpx = a.x - o.x, qpy = a.y - o.y;
  if (std::abs(denom) < eps) {
    // Parallel: accept only if collinear, then take the nearest endpoint ahead.
    if (std::abs(qpx * ry - qpy * rx) > eps) return false;
    const double rr = rx * rx + ry * ry;
    if (rr <= 0.0) return false;
    const double ta = (qpx * rx + qpy * ry) / rr;
    const double tb = ((b.x - o.x) * rx + (b.y - o.y) * ry) / rr;
    const double tmin = std::min(ta, tb), tmax = std::max(ta, tb);
    if (tmax < 0.0) return false;
    *t = std::max(tmin, 0.0);
    return true;
  }
  const double tt = (qpx * sy - qpy * sx) / denom;
  const double uu = (qpx * ry - qpy * rx) / denom;
  if (tt < -eps || uu < -eps || uu > 1.0 + eps) return false;
  *t = std::max(tt, 0.0);
  return true;
}

}  // namespace

bool ray_hull_entry(const Point& origin, const Point& dir, const std::vector<Point>& hull,
                    double* t_entry, double eps) {
  if (hull.empty()) return false;
  if (hull.size() == 1) {
    const double dx = hull[0].x - origin.x, dy = hull[0].y - origin.y;
    const double rr = dir.x * dir.x + dir.y * dir.y;
    if (rr <= 0.0) return false;
    const double t = (dx * dir.x + dy * dir.y) / rr;
    if (t < 0.0) return false;
    const double px = origin.x + t * dir.x - hull[0].x;
    const double py = origin.y + t * dir.y - hull[0].y;
    if (px * px + py * py > eps * eps) return false;
    *t_entry = t;
    return true;
  }
  if (hull.size() == 2) return ray_segment(origin, dir, hull[0], hull[1], t_entry, eps);

  if (point_in_hull(origin, hull, eps)) {
    *t_entry = 0.0;
    return true;
  }
  // Clip the ray against each CCW edge half-plane.
  double t_in = 0.0;
  double t_out = std::numeric_limits<double>::max();
  for (size_t i = 0; i < hull.size(); ++i) {
    const Point& a = hull[i];
    const Point& b = hull[(i + 1) % hull.size()];
    const double nx = -(b.y - a.y);  // inward normal for CCW polygon in y-down frame
    const double ny = b.x - a.x;
    const double denom = nx * dir.x + ny * dir.y;
    const double num = nx * (a.x - origin.x) + ny * (a.y - origin.y);
    if (std::abs(denom) < eps) {
      if (num < -eps) return false;  // parallel and outside
      continue;
    }
    const double t = num / denom;
    if (denom > 0.0) {
      t_in = std::max(t_in, t);
    } else {
      t_out = std::min(t_out, t);
    }
    if (t_in > t_out + eps) return false;
  }
  if (t_out < -eps) return false;
  *t_entry = std::max(t_in, 0.0);
  return true;
}

std::vector<Point> shrink_hull(const std::vector<Point>& hull, double rel_eps) {
  if (hull.empty()) return hull;
  Point c{0.0, 0.0};
  for (const Point& p : hull) {
    c.x += p.x;
    c.y += p.y;
  }
  c.x /= static_cast<double>(hull.size());
  c.y /= static_cast<double>(hull.size());
  std::vector<Point> out;
  out.reserve(hull.size());
  const double f = 1.0 - rel_eps;
  for (const Point& p : hull) out.push_back({c.x + (p.x - c.x) * f, c.y + (p.y - c.y) * f});
  return out;
}

}  // namespace inkslt
