#include <adaptrack/geometry.hpp>

#include <algorithm>
#include <utility>

namespace adaptrack {

namespace {

// Overlap of [a0, a0 + aw) and [b0, b0 + bw). An interval lying inside the
// other is returned untouched so that nested boxes intersect exactly.
std::pair<double, double> overlap(double a0, double aw, double b0, double bw) noexcept {
    if (a0 >= b0 && a0 + aw <= b0 + bw) {
        return {a0, aw};
    }
    if (b0 >= a0 && b0 + bw <= a0 + aw) {
        return {b0, bw};
    }
    const double lo = std::max(a0, b0);
    const double hi = std::min(a0 + aw, b0 + bw);
    return {lo, std::max(0.0, hi - lo)};
}

}  // namespace

BBox intersect(const BBox& a, const BBox& b) noexcept {
    const auto [x, w] = overlap(a.x, a.w, b.x, b.w);
    const auto [y, h] = overlap(a.y, a.h, b.y, b.h);
    return {x, y, w, h};
}

double iou(const BBox& a, const BBox& b) noexcept {
    if (a == b) {
        return 1.0;
    }
    const double inter = intersect(a, b).area();
    if (inter <= 0.0) {
        return 0.0;
    }
    const double uni = a.area() + b.area() - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

bool contains(const BBox& outer, const BBox& inner) noexcept {
    return inner.x >= outer.x && inner.y >= outer.y && inner.right() <= outer.right() &&
           inner.bottom() <= outer.bottom();
}

}  // namespace adaptrack
