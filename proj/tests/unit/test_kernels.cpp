#include "synth.hpp"

#include <adaptrack/kernels.hpp>

#include <gtest/gtest.h>

using namespace adaptrack;

TEST(Kernels, IouMatrixSerialEqualsParallel) {
    Rng rng(1);
    for (std::size_t n : {0u, 1u, 7u, 300u}) {
        std::vector<BBox> a(n), b(n / 2 + 3);
        for (auto& x : a) {
            x = synth::random_box(rng, 200);
        }
        for (auto& x : b) {
            x = synth::random_box(rng, 200);
        }
        Matrix s, p;
        kernels::serial::iou_matrix(a, b, s);
        kernels::omp::iou_matrix(a, b, p);
        ASSERT_EQ(s.rows(), p.rows());
        ASSERT_EQ(s.cols(), p.cols());
        for (std::size_t i = 0; i < s.rows() * s.cols(); ++i) {
            EXPECT_EQ(s.data()[i], p.data()[i]);
        }
    }
}

TEST(Kernels, ElementwiseSerialEqualsParallel) {
    Rng rng(2);
    for (std::size_t n : {0u, 5u, 100000u}) {
        std::vector<float> x(n), y(n), out_s(n), out_p(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = static_cast<float>(rng.uniform());
            y[i] = static_cast<float>(rng.uniform());
        }
        std::vector<double> acc_s(n, 0.5), acc_p(n, 0.5);
        kernels::serial::accumulate(acc_s, x);
        kernels::omp::accumulate(acc_p, x);
        EXPECT_EQ(acc_s, acc_p);
        kernels::serial::scale(acc_s, 1.0 / 3.0, out_s);
        kernels::omp::scale(acc_p, 1.0 / 3.0, out_p);
        EXPECT_EQ(out_s, out_p);
        kernels::serial::blend(x, y, 0.3, out_s);
        kernels::omp::blend(x, y, 0.3, out_p);
        EXPECT_EQ(out_s, out_p);
    }
}

TEST(Kernels, WorkerCount) {
    kernels::set_worker_count(2);
    EXPECT_EQ(kernels::worker_count(), 2);
    kernels::set_worker_count(0);
    EXPECT_GE(kernels::worker_count(), 1);
}
