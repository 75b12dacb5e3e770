// Microbenchmarks for the compute kernels. Inputs are built once per process;
// every timed body works on the same deterministic instances.
#include "groupreduce/baselines.hpp"
#include "groupreduce/compressor.hpp"
#include "groupreduce/linalg.hpp"
#include "groupreduce/metrics.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace groupreduce;

namespace {

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix A(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            A(i, j) = gauss(rng);
        }
    }
    return A;
}

const ZipfInstance& corpus() {
    static const ZipfInstance inst = gen_zipf_embedding(2000, 64, 5, 0.05, 7);
    return inst;
}

}  // namespace

static void BM_svd_truncated(benchmark::State& state) {
    const Matrix A = random_matrix(state.range(0), 64, 42);
    for (auto _ : state) {
        benchmark::DoNotOptimize(svd_truncated(A, 16));
    }
}
BENCHMARK(BM_svd_truncated)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

static void BM_weighted_lowrank(benchmark::State& state) {
    const Matrix A = random_matrix(state.range(0), 64, 43);
    Vector w(state.range(0));
    for (Index i = 0; i < w.size(); ++i) {
        w(i) = static_cast<double>(w.size()) / static_cast<double>(i + 1);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(weighted_lowrank(A, w, 16));
    }
}
BENCHMARK(BM_weighted_lowrank)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

static void BM_project_residual(benchmark::State& state) {
    const Matrix basis = svd_truncated(random_matrix(256, 64, 44), 16).V;
    const Vector a = random_matrix(64, 1, 45).col(0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(project_residual(a, basis));
    }
}
BENCHMARK(BM_project_residual);

static void BM_fit_blocks(benchmark::State& state) {
    const ZipfInstance& inst = corpus();
    BlockPartition part = init_partition_by_frequency(inst.frequencies, 5);
    const int base = rank_budget_solve(part, inst.frequencies, 64, 19200);
    assign_ranks(part, inst.frequencies, base, 64);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_blocks(inst.matrix, part, inst.frequencies));
    }
}
BENCHMARK(BM_fit_blocks)->Unit(benchmark::kMillisecond);

static void BM_group_reduce(benchmark::State& state) {
    const ZipfInstance& inst = corpus();
    const RefineConfig cfg = RefineConfig::defaults_for(inst.matrix.rows());
    for (auto _ : state) {
        benchmark::DoNotOptimize(group_reduce(inst.matrix, inst.frequencies, 5,
                                              Budget::parameter_count(19200), cfg));
    }
}
BENCHMARK(BM_group_reduce)->Unit(benchmark::kMillisecond);

static void BM_refine_pass(benchmark::State& state) {
    const ZipfInstance& inst = corpus();
    BlockPartition part = init_partition_by_frequency(inst.frequencies, 5);
    const int base = rank_budget_solve(part, inst.frequencies, 64, 19200);
    assign_ranks(part, inst.frequencies, base, 64);
    const BlockLowRankModel model = fit_blocks(inst.matrix, part, inst.frequencies);
    RefineConfig cfg = RefineConfig::defaults_for(inst.matrix.rows());
    cfg.max_iterations = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(refine(inst.matrix, inst.frequencies, model, cfg));
    }
}
BENCHMARK(BM_refine_pass)->Unit(benchmark::kMillisecond);

static void BM_quantize_uniform(benchmark::State& state) {
    const Matrix A = random_matrix(1024, 64, 46);
    for (auto _ : state) {
        benchmark::DoNotOptimize(quantize_uniform(A, static_cast<int>(state.range(0))));
    }
}
BENCHMARK(BM_quantize_uniform)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_reconstruct_full(benchmark::State& state) {
    const ZipfInstance& inst = corpus();
    const RefineConfig cfg = RefineConfig::defaults_for(inst.matrix.rows());
    const BlockLowRankModel model =
        group_reduce(inst.matrix, inst.frequencies, 5, Budget::parameter_count(19200), cfg);
    for (auto _ : state) {
        benchmark::DoNotOptimize(reconstruct_full(model));
    }
}
BENCHMARK(BM_reconstruct_full)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
