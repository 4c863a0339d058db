#include <adaptrack/kernels.hpp>

#include <omp.h>

#include <cassert>
#include <cstdint>

namespace adaptrack::kernels {
namespace omp {

void iou_matrix(std::span<const BBox> rows, std::span<const BBox> cols, Matrix& out) {
    out = Matrix(rows.size(), cols.size());
    const auto n = static_cast<std::int64_t>(rows.size());
    const std::size_t m = cols.size();
#pragma omp parallel for schedule(static) if (n * static_cast<std::int64_t>(m) > 4096)
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            out(static_cast<std::size_t>(i), j) = iou(rows[static_cast<std::size_t>(i)], cols[j]);
        }
    }
}

void accumulate(std::span<double> acc, std::span<const float> x) {
    assert(acc.size() == x.size());
    const auto n = static_cast<std::int64_t>(acc.size());
    double* a = acc.data();
    const float* v = x.data();
#pragma omp parallel for simd schedule(static) if (n > 32768)
    for (std::int64_t i = 0; i < n; ++i) {
        a[i] += static_cast<double>(v[i]);
    }
}

void scale(std::span<const double> acc, double factor, std::span<float> out) {
    assert(acc.size() == out.size());
    const auto n = static_cast<std::int64_t>(acc.size());
    const double* a = acc.data();
    float* o = out.data();
#pragma omp parallel for simd schedule(static) if (n > 32768)
    for (std::int64_t i = 0; i < n; ++i) {
        o[i] = static_cast<float>(a[i] * factor);
    }
}

void blend(std::span<const float> a, std::span<const float> b, double wa, std::span<float> out) {
    assert(a.size() == b.size() && a.size() == out.size());
    const auto n = static_cast<std::int64_t>(a.size());
    const double wb = 1.0 - wa;
    const float* pa = a.data();
    const float* pb = b.data();
    float* o = out.data();
#pragma omp parallel for simd schedule(static) if (n > 32768)
    for (std::int64_t i = 0; i < n; ++i) {
        o[i] = static_cast<float>(wa * static_cast<double>(pa[i]) + wb * static_cast<double>(pb[i]));
    }
}

}  // namespace omp

void set_worker_count(int jobs) {
    omp_set_num_threads(jobs < 1 ? omp_get_num_procs() : jobs);
}

int worker_count() {
    return omp_get_max_threads();
}

}  // namespace adaptrack::kernels
