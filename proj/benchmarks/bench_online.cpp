#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <cmath>

#include "transferda/dato.hpp"
#include "transferda/dynamics.hpp"
#include "transferda/kernels.hpp"
#include "transferda/qmda.hpp"
#include "transferda/rng.hpp"

namespace {

const tda::DatoModel& dato_model() {
    static const tda::DatoModel model = [] {
        tda::Rng rng(0xda70);
        Eigen::Vector3d x0(1.0 + 0.1 * rng.normal(), 3.0 + 0.1 * rng.normal(),
                           15.0 + 0.1 * rng.normal());
        const tda::Trajectory traj = tda::integrate_l63(tda::L63Params{}, x0, 0.025, 600);
        auto [X, Y] = tda::make_training_set(traj, 1.0 / 3.0);  // m = 400
        tda::ObservationModel obs;
        obs.selector = {1, 2};
        obs.R = 0.25 * Eigen::MatrixXd::Identity(2, 2);
        return tda::dato_fit(X, Y, tda::median_bandwidth(X), 1e-5, 200, 6, obs);
    }();
    return model;
}

void BM_dato_predict(benchmark::State& state) {
    const tda::DatoModel& model = dato_model();
    const tda::DatoState s0 = tda::dato_init_state(model);
    for (auto _ : state) benchmark::DoNotOptimize(tda::dato_predict(model, s0, 6));
}

void BM_dato_likelihood(benchmark::State& state) {
    const tda::DatoModel& model = dato_model();
    const Eigen::VectorXd y = (Eigen::VectorXd(2) << 2.0, 18.0).finished();
    for (auto _ : state) benchmark::DoNotOptimize(tda::dato_likelihood(model, y));
}

void BM_dato_analyze(benchmark::State& state) {
    const tda::DatoModel& model = dato_model();
    const tda::DatoState prior = tda::dato_predict(model, tda::dato_init_state(model), 6);
    Eigen::VectorXd y = tda::observe_clean(model.obs, model.X.row(25).transpose());
    y[0] += 0.2;
    for (auto _ : state) benchmark::DoNotOptimize(tda::dato_analyze(model, prior, y));
}

void BM_dato_forecast(benchmark::State& state) {
    const tda::DatoModel& model = dato_model();
    const Eigen::VectorXd x = model.X.row(25).transpose();
    for (auto _ : state) benchmark::DoNotOptimize(tda::dato_koopman_forecast(model, x, 1));
}

tda::QmdaModel synthetic_qmda(int L, long long N, int S) {
    tda::Rng rng(0x91da);
    Eigen::MatrixXd G(N, L);
    for (long long i = 0; i < N; ++i)
        for (int j = 0; j < L; ++j) G(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    tda::QmdaModel model;
    model.basis = std::sqrt(static_cast<double>(N)) *
                  (qr.householderQ() * Eigen::MatrixXd::Identity(N, L));
    model.q = 1;
    model.U_q = tda::build_koopman(model.basis, 1);
    model.partition.S = S;
    model.partition.edges = Eigen::VectorXd::LinSpaced(S + 1, 0.0, static_cast<double>(S));
    model.partition.cell_averages = Eigen::VectorXd::Zero(S);
    model.partition.membership.resize(N);
    for (long long i = 0; i < N; ++i) model.partition.membership[i] = static_cast<int>(i % S);
    model.projectors = tda::build_projectors(model.basis, model.partition);
    return model;
}

void BM_qmda_evolve(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0));
    const tda::QmdaModel model = synthetic_qmda(L, 4 * L, 8);
    const tda::DensityOperator rho = tda::qmda_init_state(L);
    for (auto _ : state) benchmark::DoNotOptimize(tda::qmda_evolve(model, rho));
    state.SetComplexityN(L);
}

void BM_qmda_measure(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0));
    const tda::QmdaModel model = synthetic_qmda(L, 4 * L, 8);
    const tda::DensityOperator rho = tda::qmda_init_state(L);
    for (auto _ : state) benchmark::DoNotOptimize(tda::qmda_probabilities(model, rho));
    state.SetComplexityN(L);
}

void BM_qmda_update(benchmark::State& state) {
    const int L = static_cast<int>(state.range(0));
    const tda::QmdaModel model = synthetic_qmda(L, 4 * L, 8);
    const tda::DensityOperator rho = tda::qmda_init_state(L);
    for (auto _ : state) benchmark::DoNotOptimize(tda::qmda_update(model, rho, 0));
    state.SetComplexityN(L);
}

}  // namespace

BENCHMARK(BM_dato_predict);
BENCHMARK(BM_dato_likelihood);
BENCHMARK(BM_dato_analyze);
BENCHMARK(BM_dato_forecast);
BENCHMARK(BM_qmda_evolve)->RangeMultiplier(2)->Range(32, 256)->Complexity(benchmark::oNCubed);
BENCHMARK(BM_qmda_measure)->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_qmda_update)->RangeMultiplier(2)->Range(32, 256)->Complexity(benchmark::oNCubed);

BENCHMARK_MAIN();
