// Serial reference vs OpenMP kernels on the same inputs.

#include <adaptrack/kernels.hpp>
#include <adaptrack/rng.hpp>

#include <benchmark/benchmark.h>

#include <vector>

using namespace adaptrack;

namespace {

std::vector<BBox> boxes(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<BBox> out(n);
    for (auto& b : out) {
        b = {rng.uniform() * 1800, rng.uniform() * 1000, 8 + rng.uniform() * 120, 16 + rng.uniform() * 240};
    }
    return out;
}

std::vector<float> values(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> out(n);
    for (auto& v : out) {
        v = static_cast<float>(rng.uniform() - 0.5);
    }
    return out;
}

template <auto Kernel>
void iou(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = boxes(n, 1), b = boxes(n, 2);
    Matrix out;
    for (auto _ : state) {
        Kernel(a, b, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

template <auto Kernel>
void accumulate(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto x = values(n, 3);
    std::vector<double> acc(n, 0.0);
    for (auto _ : state) {
        Kernel(acc, x);
        benchmark::ClobberMemory();
    }
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(n * sizeof(float)));
}

template <auto Kernel>
void scale(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const std::vector<double> acc(n, 3.0);
    std::vector<float> out(n);
    for (auto _ : state) {
        Kernel(acc, 0.25, out);
        benchmark::ClobberMemory();
    }
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(n * sizeof(double)));
}

template <auto Kernel>
void blend(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = values(n, 4), b = values(n, 5);
    std::vector<float> out(n);
    for (auto _ : state) {
        Kernel(a, b, 0.999, out);
        benchmark::ClobberMemory();
    }
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * sizeof(float)));
}

}  // namespace

BENCHMARK(iou<kernels::serial::iou_matrix>)->Name("iou_matrix/serial")->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(iou<kernels::omp::iou_matrix>)->Name("iou_matrix/omp")->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(accumulate<kernels::serial::accumulate>)->Name("accumulate/serial")->Arg(1 << 16)->Arg(1 << 22);
BENCHMARK(accumulate<kernels::omp::accumulate>)->Name("accumulate/omp")->Arg(1 << 16)->Arg(1 << 22);
BENCHMARK(scale<kernels::serial::scale>)->Name("scale/serial")->Arg(1 << 16)->Arg(1 << 22);
BENCHMARK(scale<kernels::omp::scale>)->Name("scale/omp")->Arg(1 << 16)->Arg(1 << 22);
BENCHMARK(blend<kernels::serial::blend>)->Name("blend/serial")->Arg(1 << 16)->Arg(1 << 22);
BENCHMARK(blend<kernels::omp::blend>)->Name("blend/omp")->Arg(1 << 16)->Arg(1 << 22);
BENCHMARK_MAIN();
