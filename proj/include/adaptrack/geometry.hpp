#pragma once

#include <cmath>

namespace adaptrack {

/// Axis-aligned box, (x, y) is the top-left corner in continuous pixels.
struct BBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double right() const noexcept { return x + w; }
    double bottom() const noexcept { return y + h; }
    double area() const noexcept { return w * h; }
    double center_x() const noexcept { return x + 0.5 * w; }
    double center_y() const noexcept { return y + 0.5 * h; }

    bool finite() const noexcept {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h);
    }
    bool valid() const noexcept { return finite() && w > 0.0 && h > 0.0; }

    bool operator==(const BBox&) const = default;
};

/// Intersection of two rectangles; zero width/height when they do not overlap.
BBox intersect(const BBox& a, const BBox& b) noexcept;

/// Intersection-over-union, 0 for disjoint boxes and exactly 1 for equal ones.
double iou(const BBox& a, const BBox& b) noexcept;

/// True when `inner` lies inside `outer` (edges may touch).
bool contains(const BBox& outer, const BBox& inner) noexcept;

}  // namespace adaptrack
