// Schur complement assembly: OpenMP batched kernel against the serial reference.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "delaycert/sdp.hpp"

namespace {

using namespace delaycert::sdp;

struct Fixture {
    Eigen::MatrixXd A;
    std::vector<Eigen::MatrixXd> W;
    ConeLayout layout;

    Fixture(int m, std::vector<int> sizes) : layout(sizes) {
        std::mt19937_64 rng(7);
        std::normal_distribution<double> nd;
        A = Eigen::MatrixXd::Zero(m, layout.dim);
        // Sparse-ish rows, like coefficient-matching constraints.
        std::uniform_int_distribution<int> col(0, layout.dim - 1);
        for (int i = 0; i < m; ++i)
            for (int k = 0; k < 12; ++k) A(i, col(rng)) = nd(rng);
        for (int s : sizes) {
            Eigen::MatrixXd G = Eigen::MatrixXd::NullaryExpr(s, s, [&]() { return nd(rng); });
            W.push_back(G * G.transpose() + Eigen::MatrixXd::Identity(s, s));
        }
    }
};

void args(benchmark::internal::Benchmark* b) {
    b->Args({200, 20})->Args({600, 40})->Args({1500, 60})->Unit(benchmark::kMillisecond);
}

void BM_SchurParallel(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0)), s = static_cast<int>(state.range(1));
    Fixture f(m, {s, s, s / 2, 1, 1});
    for (auto _ : state) benchmark::DoNotOptimize(schur_complement(f.A, f.W, f.layout));
}

void BM_SchurSerial(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0)), s = static_cast<int>(state.range(1));
    Fixture f(m, {s, s, s / 2, 1, 1});
    for (auto _ : state) benchmark::DoNotOptimize(schur_complement_serial(f.A, f.W, f.layout));
}

BENCHMARK(BM_SchurParallel)->Apply(args);
BENCHMARK(BM_SchurSerial)->Apply(args);

}  // namespace

BENCHMARK_MAIN();
