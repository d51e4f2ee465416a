#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "transferda/dato.hpp"
#include "transferda/errors.hpp"
#include "transferda/harness.hpp"
#include "transferda/kernels.hpp"
#include "transferda/qmda.hpp"
#include "transferda/rng.hpp"

namespace tda {

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

Eigen::MatrixXd gaussian_matrix(long long rows, long long cols, Rng& rng) {
    Eigen::MatrixXd M(rows, cols);
    for (long long i = 0; i < rows; ++i)
        for (long long j = 0; j < cols; ++j) M(i, j) = rng.normal();
    return M;
}

// cycle-stage harness model; the constant leading basis column keeps the
// synthesized density nonnegative under lambda = 1
DatoModel synthetic_dato(long long m, int S, Rng& rng) {
    DatoModel model;
    model.X = gaussian_matrix(m, 3, rng);
    model.sigma = 1.5;
    model.eps = 1e-5;
    model.S = S;
    model.q = 1;
    model.obs.selector = {0, 1};
    model.obs.R = Eigen::MatrixXd::Identity(2, 2);
    model.obs.noise_seed = 0;
    model.R_inv = Eigen::MatrixXd::Identity(2, 2);
    model.lambdas = Eigen::VectorXcd::Ones(S);
    model.lambda_pow_q = model.lambdas;
    Eigen::MatrixXd phi = 0.05 * gaussian_matrix(m, S, rng);
    phi.col(0).setOnes();
    model.Phi = phi.cast<std::complex<double>>();
    model.lambdas_K = Eigen::VectorXcd::Ones(S);
    model.V_K = (gaussian_matrix(S, m, rng) / std::sqrt(static_cast<double>(m)))
                    .cast<std::complex<double>>();
    model.B = gaussian_matrix(S, 3, rng).cast<std::complex<double>>();
    model.normal = model.Phi.adjoint() * model.Phi;
    model.normal += (1e-10 * model.normal.real().trace() / static_cast<double>(S)) *
                    Eigen::MatrixXcd::Identity(S, S);
    model.refresh_factor();
    return model;
}

DatoState synthetic_state(const DatoModel& model) {
    DatoState st;
    st.xi = Eigen::VectorXcd::Zero(model.S);
    st.xi[0] = 1.0;
    st.rho = Eigen::VectorXd::Constant(model.m(), 1.0 / static_cast<double>(model.m()));
    return st;
}

SparseKernel banded_kernel(long long N) {
    SparseKernel kernel;
    kernel.r = 8;
    kernel.epsilon = 1.0;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(9 * N));
    for (long long i = 0; i < N; ++i)
        for (long long j = std::max<long long>(0, i - 4); j <= std::min(N - 1, i + 4); ++j)
            trips.emplace_back(static_cast<int>(i), static_cast<int>(j),
                               std::exp(-0.5 * static_cast<double>(std::abs(i - j))));
    kernel.K.resize(N, N);
    kernel.K.setFromTriplets(trips.begin(), trips.end());
    return kernel;
}

struct Timer {
    double start = now_seconds();
    double stop() const { return now_seconds() - start; }
};

}  // namespace

std::vector<std::string> scaling_probe_names() {
    return {"gram",       "vb_kernel",     "predict", "likelihood", "project",
            "reconstruct", "forecast",      "sinkhorn", "koopman_build",
            "projector_build", "evolve",    "measure", "update"};
}

ProbeSample run_scaling_probe(const std::string& probe, long long size) {
    if (size < 1) throw ConfigError("run_scaling_probe: size must be >= 1");
    Rng rng(0x70726f62ull ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(size)));
    OpCounters counters;
    ProbeSample out;

    if (probe == "gram") {
        const Eigen::MatrixXd X = gaussian_matrix(size, 3, rng);
        DatoCostConfig cc;
        cc.m = size;
        cc.S = 1;
        out.expected = dato_counter_model("gram", cc);
        Timer t;
        rbf_gram(X, X, 1.0, &counters);
        out.seconds = t.stop();
        out.count = counters.gram.load();
        return out;
    }
    if (probe == "vb_kernel") {
        if (size < 10) throw ConfigError("run_scaling_probe: vb_kernel needs size >= 10");
        const Eigen::MatrixXd Y = gaussian_matrix(size, 3, rng);
        const Eigen::VectorXd bw = vb_bandwidths(Y, 4);
        QmdaCostConfig qc;
        qc.N = size;
        qc.d = 3;
        qc.r = 8;
        out.expected = qmda_counter_model("kernel", qc);
        Timer t;
        vb_sparse_kernel(Y, bw, 8, 1.0, &counters);
        out.seconds = t.stop();
        out.count = counters.gram.load();
        if (counters.kernel_evals.load() != qmda_counter_model("kernel_evals", qc))
            throw Error("run_scaling_probe: vb_kernel kernel_evals off the N^2 model");
        return out;
    }
    if (probe == "predict") {
        const DatoModel model = synthetic_dato(size, 16, rng);
        const DatoState st = synthetic_state(model);
        DatoCostConfig cc;
        cc.m = size;
        cc.S = 16;
        out.expected = dato_counter_model("predict", cc);
        Timer t;
        dato_predict(model, st, 1, &counters);
        out.seconds = t.stop();
        out.count = counters.predict.load();
        return out;
    }
    if (probe == "likelihood") {
        const DatoModel model = synthetic_dato(size, 4, rng);
        Eigen::VectorXd y(2);
        y << 0.1, -0.2;
        DatoCostConfig cc;
        cc.m = size;
        cc.p = 2;
        out.expected = dato_counter_model("likelihood", cc);
        Timer t;
        dato_likelihood(model, y, &counters);
        out.seconds = t.stop();
        out.count = counters.likelihood.load();
        return out;
    }
    if (probe == "project" || probe == "reconstruct") {
        const long long m = probe == "project" ? 800 : size;
        const int S = probe == "project" ? static_cast<int>(size) : 16;
        const DatoModel model = synthetic_dato(m, S, rng);
        const DatoState st = synthetic_state(model);
        Eigen::VectorXd y(2);
        y << 0.1, -0.2;
        DatoCostConfig cc;
        cc.m = m;
        cc.S = S;
        out.expected = dato_counter_model(probe, cc);
        Timer t;
        dato_analyze(model, st, y, &counters);
        out.seconds = t.stop();
        out.count = probe == "project" ? counters.project.load() : counters.reconstruct.load();
        return out;
    }
    if (probe == "forecast") {
        const DatoModel model = synthetic_dato(size, 16, rng);
        const Eigen::Vector3d x(0.3, -0.1, 0.2);
        DatoCostConfig cc;
        cc.m = size;
        cc.S = 16;
        out.expected = dato_counter_model("forecast", cc);
        Timer t;
        dato_koopman_forecast(model, x, 1, &counters);
        out.seconds = t.stop();
        out.count = counters.forecast.load();
        return out;
    }
    if (probe == "sinkhorn") {
        if (size < 16) throw ConfigError("run_scaling_probe: sinkhorn needs size >= 16");
        const SparseKernel kernel = banded_kernel(size);
        Timer t;
        const SinkhornResult res = sinkhorn_normalize(kernel, 1e-8, 1000, &counters);
        out.seconds = t.stop();
        QmdaCostConfig qc;
        qc.N = size;
        qc.r = kernel.r;
        out.expected = static_cast<std::uint64_t>(res.iterations) * qmda_counter_model("sinkhorn", qc);
        out.count = counters.sinkhorn.load();
        return out;
    }
    if (probe == "koopman_build") {
        const Eigen::MatrixXd basis = gaussian_matrix(size, 32, rng);
        QmdaCostConfig qc;
        qc.N = size;
        qc.L = 32;
        out.expected = qmda_counter_model("koopman_build", qc);
        Timer t;
        build_koopman(basis, 1, &counters);
        out.seconds = t.stop();
        out.count = counters.koopman_build.load();
        return out;
    }
    if (probe == "projector_build") {
        if (size < 8) throw ConfigError("run_scaling_probe: projector_build needs size >= 8");
        const Eigen::MatrixXd basis = gaussian_matrix(size, 32, rng);
        Partition part;
        part.S = 8;
        part.edges = Eigen::VectorXd::LinSpaced(9, 0.0, 8.0);
        part.cell_averages = Eigen::VectorXd::Zero(8);
        part.membership.resize(size);
        for (long long i = 0; i < size; ++i) part.membership[i] = static_cast<int>(i % 8);
        QmdaCostConfig qc;
        qc.N = size;
        qc.L = 32;
        out.expected = qmda_counter_model("projector_build", qc);
        Timer t;
        build_projectors(basis, part, &counters);
        out.seconds = t.stop();
        out.count = counters.projector_build.load();
        return out;
    }
    if (probe == "evolve" || probe == "update" || probe == "measure") {
        const auto L = static_cast<int>(size);
        QmdaModel model;
        model.basis = Eigen::MatrixXd::Zero(1, L);  // only the column count matters here
        model.q = 1;
        model.partition.S = probe == "measure" ? 8 : 1;
        model.partition.edges = Eigen::VectorXd::LinSpaced(model.partition.S + 1, 0.0, 1.0);
        model.partition.cell_averages = Eigen::VectorXd::Zero(model.partition.S);
        if (probe == "evolve") {
            model.U_q = Eigen::MatrixXd::Identity(L, L);
        } else if (probe == "update") {
            model.projectors = {Eigen::MatrixXd::Identity(L, L)};
        } else {
            model.projectors.assign(
                8, Eigen::MatrixXd::Identity(L, L) / 8.0);
        }
        const DensityOperator rho = qmda_init_state(L);
        QmdaCostConfig qc;
        qc.L = L;
        qc.S_qmda = model.partition.S;
        out.expected = qmda_counter_model(probe, qc);
        Timer t;
        if (probe == "evolve")
            qmda_evolve(model, rho, &counters);
        else if (probe == "update")
            qmda_update(model, rho, 0, &counters);
        else
            qmda_probabilities(model, rho, &counters);
        out.seconds = t.stop();
        out.count = probe == "evolve"   ? counters.evolve.load()
                    : probe == "update" ? counters.update.load()
                                        : counters.measure.load();
        return out;
    }
    throw ConfigError("run_scaling_probe: unknown probe '" + probe + "'");
}

namespace {

double loglog_slope(const std::vector<long long>& sizes, const std::vector<std::uint64_t>& ys) {
    const double count = static_cast<double>(sizes.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const double x = std::log10(static_cast<double>(sizes[i]));
        const double y = std::log10(static_cast<double>(ys[i]));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (sxy - sx * sy / count) / (sxx - sx * sx / count);
}

}  // namespace

ProbeScalingReport run_probe_scaling(const std::string& probe,
                                     const std::vector<long long>& sizes) {
    ProbeScalingReport report;
    report.expected.reserve(sizes.size());
    bool all_match = true;
    report.scaling = verify_scaling(probe, sizes, [&](long long size) {
        const ProbeSample sample = run_scaling_probe(probe, size);
        report.expected.push_back(sample.expected);
        if (sample.count != sample.expected) all_match = false;
        return ScalingSample{size, sample.count, sample.seconds};
    });
    report.counts_match_model = all_match;
    report.model_exponent = loglog_slope(sizes, report.expected);
    return report;
}

}  // namespace tda
