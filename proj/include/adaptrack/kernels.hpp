#pragma once

#include <adaptrack/assignment.hpp>
#include <adaptrack/geometry.hpp>

#include <span>

// Data-parallel inner loops. Every kernel has a plain serial reference in
// `serial` and an OpenMP version in `omp` with identical results; tests
// compare the two and bench/ times them.
namespace adaptrack::kernels {

namespace serial {

/// out(i, j) = iou(rows[i], cols[j]); `out` is resized.
void iou_matrix(std::span<const BBox> rows, std::span<const BBox> cols, Matrix& out);

/// acc[i] += x[i]
void accumulate(std::span<double> acc, std::span<const float> x);

/// out[i] = float(acc[i] * factor)
void scale(std::span<const double> acc, double factor, std::span<float> out);

/// out[i] = float(wa * a[i] + (1 - wa) * b[i]), evaluated in double.
void blend(std::span<const float> a, std::span<const float> b, double wa, std::span<float> out);

}  // namespace serial

namespace omp {

void iou_matrix(std::span<const BBox> rows, std::span<const BBox> cols, Matrix& out);
void accumulate(std::span<double> acc, std::span<const float> x);
void scale(std::span<const double> acc, double factor, std::span<float> out);
void blend(std::span<const float> a, std::span<const float> b, double wa, std::span<float> out);

}  // namespace omp

/// Sets the OpenMP worker count used by the `omp` kernels and per-item loops.
/// Values < 1 select the number of available cores.
void set_worker_count(int jobs);
int worker_count();

}  // namespace adaptrack::kernels
