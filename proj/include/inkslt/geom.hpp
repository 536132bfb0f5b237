#pragma once

#include <vector>

namespace inkslt {

// Ink coordinates follow the InkML screen convention: y grows downward,
// so "above" means smaller y throughout the code base.
struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct BBox {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  Point center() const { return {(min_x + max_x) * 0.5, (min_y + max_y) * 0.5}; }
  bool contains(const BBox& other) const {
    return other.min_x >= min_x && other.max_x <= max_x && other.min_y >= min_y &&
           other.max_y <= max_y;
  }
  void expand(const Point& p);
  void expand(const BBox& other);
};

BBox bbox_of(const std::vector<Point>& pts);

double dist(const Point& a, const Point& b);

// Perpendicular distance from p to segment [a,b]; endpoint distance when a == b.
double point_segment_distance(const Point& p, const Point& a, const Point& b);

// Andrew monotone chain, counter-clockwise in the y-down frame.
// Degenerate inputs yield 1-vertex (point) or 2-vertex (segment) hulls.
std::vector<Point> convex_hull(std::vector<Point> pts);

// True if p lies inside (or within eps of the boundary of) the convex hull.
bool point_in_hull(const Point& p, const std::vector<Point>& hull, double eps = 1e-12);

// Entry parameter t >= 0 of ray origin + t*dir into a convex hull; dir need not
// be normalized. Returns false on a miss. Handles 1- and 2-vertex hulls.
bool ray_hull_entry(const Point& origin, const Point& dir, const std::vector<Point>& hull,
                    double* t_entry, double eps = 1e-12);

// Shrink a hull toward its centroid by the given relative amount.
std::vector<Point> shrink_hull(const std::vector<Point>& hull, double rel_eps);

}  // namespace inkslt
