#include <adaptrack/kernels.hpp>

#include <cassert>

namespace adaptrack::kernels::serial {

void iou_matrix(std::span<const BBox> rows, std::span<const BBox> cols, Matrix& out) {
    out = Matrix(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            out(i, j) = iou(rows[i], cols[j]);
        }
    }
}

void accumulate(std::span<double> acc, std::span<const float> x) {
    assert(acc.size() == x.size());
    for (std::size_t i = 0; i < acc.size(); ++i) {
        acc[i] += static_cast<double>(x[i]);
    }
}

void scale(std::span<const double> acc, double factor, std::span<float> out) {
    assert(acc.size() == out.size());
    for (std::size_t i = 0; i < acc.size(); ++i) {
        out[i] = static_cast<float>(acc[i] * factor);
    }
}

void blend(std::span<const float> a, std::span<const float> b, double wa, std::span<float> out) {
    assert(a.size() == b.size() && a.size() == out.size());
    const double wb = 1.0 - wa;
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = static_cast<float>(wa * static_cast<double>(a[i]) + wb * static_cast<double>(b[i]));
    }
}

}  // namespace adaptrack::kernels::serial
