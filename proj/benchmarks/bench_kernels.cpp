#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "transferda/dynamics.hpp"
#include "transferda/kernels.hpp"
#include "transferda/rng.hpp"

namespace {

Eigen::MatrixXd l63_cloud(long long n) {
    tda::Rng rng(0xbeef);
    Eigen::Vector3d x0(1.0 + 0.1 * rng.normal(), 3.0 + 0.1 * rng.normal(),
                       15.0 + 0.1 * rng.normal());
    const tda::Trajectory traj = tda::integrate_l63(tda::L63Params{}, x0, 0.025, n + 200);
    return traj.states.bottomRows(n);
}

void BM_median_bandwidth(benchmark::State& state) {
    const Eigen::MatrixXd X = l63_cloud(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(tda::median_bandwidth(X));
    state.SetComplexityN(state.range(0));
}

void BM_rbf_gram(benchmark::State& state) {
    const Eigen::MatrixXd X = l63_cloud(state.range(0));
    const double sigma = tda::median_bandwidth(X);
    for (auto _ : state) benchmark::DoNotOptimize(tda::rbf_gram(X, X, sigma));
    state.SetComplexityN(state.range(0));
}

void BM_vb_sparse_kernel(benchmark::State& state) {
    const long long n = state.range(0);
    const Eigen::MatrixXd X = l63_cloud(n);
    const Eigen::VectorXd bw = tda::vb_bandwidths(X);
    const int r = static_cast<int>(n / 10);
    for (auto _ : state) benchmark::DoNotOptimize(tda::vb_sparse_kernel(X, bw, r, 1.0));
    state.SetComplexityN(n);
}

void BM_sinkhorn(benchmark::State& state) {
    const long long n = state.range(0);
    const Eigen::MatrixXd X = l63_cloud(n);
    const Eigen::VectorXd bw = tda::vb_bandwidths(X);
    const tda::SparseKernel kernel = tda::vb_sparse_kernel(X, bw, static_cast<int>(n / 10), 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(tda::sinkhorn_normalize(kernel));
    state.SetComplexityN(n);
}

}  // namespace

BENCHMARK(BM_median_bandwidth)->RangeMultiplier(2)->Range(256, 1024);
BENCHMARK(BM_rbf_gram)->RangeMultiplier(2)->Range(256, 2048)->Complexity(benchmark::oNSquared);
BENCHMARK(BM_vb_sparse_kernel)->RangeMultiplier(2)->Range(256, 2048)->Complexity(benchmark::oNSquared);
BENCHMARK(BM_sinkhorn)->RangeMultiplier(2)->Range(256, 2048);

BENCHMARK_MAIN();
