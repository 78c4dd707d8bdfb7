#pragma once

#include <vector>

namespace debris {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

// Axis-aligned pixel box, x right, y down.
struct BoxF {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
    Vec2 center() const { return {(x_min + x_max) * 0.5, (y_min + y_max) * 0.5}; }
    bool valid() const { return x_min < x_max && y_min < y_max; }
};

inline bool boxes_overlap(const BoxF& a, const BoxF& b) {
    return a.x_min < b.x_max && b.x_min < a.x_max && a.y_min < b.y_max && b.y_min < a.y_max;
}

using Polygon = std::vector<Vec2>;

double polygon_area(const Polygon& poly);

// Even-odd rule; points on an edge count as inside.
bool point_in_polygon(const Polygon& poly, const Vec2& p);

// True when no two non-adjacent edges intersect (simple polygon).
bool polygon_is_simple(const Polygon& poly);

// u-intervals of the polygon's interior along the horizontal line y = row,
// sorted and disjoint. Even-odd crossing rule.
std::vector<std::pair<double, double>> polygon_row_intervals(const Polygon& poly, double row);

// Union of intervals from several polygons, merged and sorted.
std::vector<std::pair<double, double>> merge_intervals(std::vector<std::pair<double, double>> spans);

} // namespace debris
