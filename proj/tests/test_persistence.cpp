#include "transferda/persistence.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "transferda/dynamics.hpp"
#include "transferda/errors.hpp"
#include "transferda/io.hpp"
#include "transferda/kernels.hpp"
#include "transferda/qmda.hpp"
#include "transferda/rng.hpp"

using namespace tda;

namespace {

std::string temp_path(const std::string& tag) {
    return (std::filesystem::temp_directory_path() / ("tda_persist_" + tag + ".bin")).string();
}

std::string slurp(const std::string& path) { return read_text_file(path); }

void corrupt_byte(const std::string& path, std::size_t offset, char value) {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    REQUIRE(f.good());
    f.seekp(static_cast<std::streamoff>(offset));
    f.write(&value, 1);
}

void truncate_file(const std::string& path, std::size_t keep) {
    std::string data = slurp(path);
    REQUIRE(data.size() > keep);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(data.data(), static_cast<std::streamsize>(keep));
}

DatoModel fit_small_dato() {
    L63Params p;
    const Trajectory traj = integrate_l63(p, Eigen::Vector3d(1, 1, 1), 0.025, 120);
    auto [X, Y] = make_training_set(traj, 0.5);
    ObservationModel obs;
    obs.selector = {1, 2};
    obs.R = 0.25 * Eigen::MatrixXd::Identity(2, 2);
    return dato_fit(X, Y, median_bandwidth(X), 1e-5, 20, 3, obs);
}

QmdaModel fit_small_qmda(bool multi = false) {
    L63Params p;
    const Trajectory traj = integrate_l63(p, Eigen::Vector3d(1, 1, 1), 0.025, 400);
    DelayConfig dc;
    dc.Q = 5;
    const Eigen::VectorXd series = traj.states.col(0).tail(204);
    const Eigen::MatrixXd data = delay_embed(series, dc);
    QmdaParams params;
    params.L = 10;
    params.r = 25;
    params.S = 5;
    params.q = 2;
    params.k_bw = 6;
    params.multi_horizon = multi;
    return qmda_fit(data, data.col(0), params);
}

}  // namespace

TEST_CASE("dato model round-trips byte-identically") {
    const DatoModel model = fit_small_dato();
    const std::string p1 = temp_path("d1"), p2 = temp_path("d2");
    save_model(model, p1);
    const DatoModel loaded = load_dato_model(p1);
    save_model(loaded, p2);
    CHECK(slurp(p1) == slurp(p2));

    // loaded model reproduces an analysis cycle bit for bit
    DatoState s0 = dato_init_state(model);
    DatoState l0 = dato_init_state(loaded);
    CHECK((s0.xi - l0.xi).cwiseAbs().maxCoeff() == 0.0);
    const DatoState s1 = dato_predict(model, s0, model.q);
    const DatoState l1 = dato_predict(loaded, l0, loaded.q);
    CHECK((s1.rho - l1.rho).cwiseAbs().maxCoeff() == 0.0);

    Eigen::VectorXd y(2);
    y << 1.0, 20.0;
    const AnalysisOutput sa = dato_analyze(model, s1, y);
    const AnalysisOutput la = dato_analyze(loaded, l1, y);
    CHECK((sa.x_a - la.x_a).cwiseAbs().maxCoeff() == 0.0);
    CHECK((sa.rho_a - la.rho_a).cwiseAbs().maxCoeff() == 0.0);

    const Eigen::VectorXd sf = dato_koopman_forecast(model, sa.x_a, 2);
    const Eigen::VectorXd lf = dato_koopman_forecast(loaded, la.x_a, 2);
    CHECK((sf - lf).cwiseAbs().maxCoeff() == 0.0);

    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("qmda model round-trips byte-identically") {
    for (const bool multi : {false, true}) {
        const QmdaModel model = fit_small_qmda(multi);
        const std::string p1 = temp_path("q1"), p2 = temp_path("q2");
        save_model(model, p1);
        const QmdaModel loaded = load_qmda_model(p1);
        save_model(loaded, p2);
        CHECK(slurp(p1) == slurp(p2));
        CHECK(loaded.multi_horizon == multi);
        CHECK(loaded.U_multi.size() == model.U_multi.size());

        DensityOperator rho_a = qmda_evolve(model, qmda_init_state(model.L()));
        DensityOperator rho_b = qmda_evolve(loaded, qmda_init_state(loaded.L()));
        CHECK((rho_a - rho_b).cwiseAbs().maxCoeff() == 0.0);
        const Eigen::VectorXd pa = qmda_probabilities(model, rho_a);
        const Eigen::VectorXd pb = qmda_probabilities(loaded, rho_b);
        CHECK((pa - pb).cwiseAbs().maxCoeff() == 0.0);
        Eigen::Index best;
        pa.maxCoeff(&best);
        const DensityOperator ua = qmda_update(model, rho_a, static_cast<int>(best));
        const DensityOperator ub = qmda_update(loaded, rho_b, static_cast<int>(best));
        CHECK((ua - ub).cwiseAbs().maxCoeff() == 0.0);

        std::remove(p1.c_str());
        std::remove(p2.c_str());
    }
}

TEST_CASE("corrupt magic is rejected") {
    const DatoModel model = fit_small_dato();
    const std::string p = temp_path("magic");
    save_model(model, p);
    corrupt_byte(p, 0, 'X');
    CHECK_THROWS_AS(load_dato_model(p), BadMagicError);
    std::remove(p.c_str());

    const QmdaModel qm = fit_small_qmda();
    const std::string pq = temp_path("magicq");
    save_model(qm, pq);
    corrupt_byte(pq, 2, '?');
    CHECK_THROWS_AS(load_qmda_model(pq), BadMagicError);
    std::remove(pq.c_str());
}

TEST_CASE("loading a dato container as qmda fails on the magic") {
    const DatoModel model = fit_small_dato();
    const std::string p = temp_path("cross");
    save_model(model, p);
    CHECK_THROWS_AS(load_qmda_model(p), BadMagicError);
    std::remove(p.c_str());
}

TEST_CASE("unknown version is rejected") {
    const DatoModel model = fit_small_dato();
    const std::string p = temp_path("ver");
    save_model(model, p);
    corrupt_byte(p, 8, 99);  // version field follows the 8-byte magic
    CHECK_THROWS_AS(load_dato_model(p), BadVersionError);
    std::remove(p.c_str());
}

TEST_CASE("truncated files are rejected") {
    const DatoModel model = fit_small_dato();
    const std::string p = temp_path("trunc");
    save_model(model, p);
    const std::size_t full = slurp(p).size();
    for (const std::size_t keep : {full / 2, full - 1, std::size_t{20}}) {
        save_model(model, p);
        truncate_file(p, keep);
        CHECK_THROWS_AS(load_dato_model(p), TruncatedFileError);
    }
    std::remove(p.c_str());
}

TEST_CASE("missing file raises a persistence error") {
    CHECK_THROWS_AS(load_dato_model("/nonexistent/definitely/not/here.bin"), PersistenceError);
}
