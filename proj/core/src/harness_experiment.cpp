#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "transferda/dato.hpp"
#include "transferda/errors.hpp"
#include "transferda/harness.hpp"
#include "transferda/io.hpp"
#include "transferda/kernels.hpp"
#include "transferda/persistence.hpp"
#include "transferda/qmda.hpp"

namespace tda {

namespace {

namespace fs = std::filesystem;

// scalar-observation stream stays distinct from the vector one in "both" runs
constexpr std::uint64_t kQmdaNoiseTag = 0x514d4441ull;
constexpr double kSkipThreshold = 1e-12;
constexpr double kScoreFloor = 1e-12;  // per-record readability floor only

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

Eigen::Vector3d perturbed_x0(const DynamicsBlock& dyn, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::Vector3d x = dyn.x0;
    for (int i = 0; i < 3; ++i) x[i] += 0.1 * rng.normal();
    return x;
}

ObservationModel make_observation_model(const ObservationBlock& ob) {
    ObservationModel m;
    m.selector = ob.selector;
    const auto p = static_cast<Eigen::Index>(ob.selector.size());
    m.R = (ob.sigma_obs * ob.sigma_obs) * Eigen::MatrixXd::Identity(p, p);
    m.noise_seed = ob.seed_noise;
    return m;
}

double rmse3(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    return std::sqrt((a - b).squaredNorm() / 3.0);
}

Trajectory training_run(const DynamicsBlock& dyn) {
    return integrate_l63(dyn.params, perturbed_x0(dyn, dyn.seed_train), dyn.dt, dyn.train_steps);
}

std::string join(const fs::path& dir, const char* name) { return (dir / name).string(); }

struct Timings {
    double dato_fit = 0.0, dato_cycles = 0.0;
    double qmda_fit = 0.0, qmda_cycles = 0.0;
};

DatoRunSummary run_dato(const ExperimentConfig& cfg, const fs::path& out, const RunOptions& opt,
                        const Trajectory& truth, std::vector<std::string>& artifacts,
                        Timings& timings) {
    const ObservationBlock& ob = cfg.observation;
    const int K = ob.cycles;
    OpCounters counters;

    double t_start = now_seconds();
    DatoModel model;
    if (!opt.dato_model_path.empty()) {
        model = load_dato_model(opt.dato_model_path);
        const ObservationModel want = make_observation_model(ob);
        bool ok = model.q == ob.q && model.obs.selector == want.selector &&
                  model.obs.R.rows() == want.R.rows();
        if (ok) ok = (model.obs.R - want.R).cwiseAbs().maxCoeff() <= 1e-12 * want.R.norm();
        if (!ok)
            throw ConfigError(
                "assimilate: loaded transfer model was fitted for a different observation setup");
    } else {
        const Trajectory train = training_run(cfg.dynamics);
        auto [X, Y] = make_training_set(train, cfg.dynamics.discard_fraction);
        const double sigma = cfg.dato.use_median_sigma ? median_bandwidth(X) : cfg.dato.sigma;
        model = dato_fit(X, Y, sigma, cfg.dato.eps, cfg.dato.S, ob.q, make_observation_model(ob),
                         &counters);
    }
    timings.dato_fit = now_seconds() - t_start;

    save_model(model, join(out, "dato_model.bin"));
    artifacts.push_back("dato_model.bin");

    DatoRunSummary sum;
    sum.m = model.m();
    sum.S = model.S;
    sum.sigma = model.sigma;
    sum.cycles = K;

    t_start = now_seconds();
    DatoState state = dato_init_state(model, &counters);
    DatoState free_state = state;
    Rng obs_rng(ob.seed_noise);

    double min_rho = std::numeric_limits<double>::infinity();
    sum.records.reserve(K);
    for (int k = 1; k <= K; ++k) {
        const CounterSnapshot before = snapshot(counters);
        state = dato_predict(model, state, ob.q, &counters);
        free_state = dato_predict(model, free_state, ob.q, nullptr);

        const long long row = cfg.dynamics.truth_spinup_steps + static_cast<long long>(k) * ob.q;
        const Eigen::Vector3d x_t = truth.states.row(row).transpose();
        const Eigen::VectorXd y = observe(model.obs, x_t, obs_rng);

        const AnalysisOutput analysis = dato_analyze(model, state, y, &counters);
        DatoCycleRecord rec;
        if (cfg.dato.koopman_forecast)
            rec.x_forecast =
                dato_koopman_forecast(model, analysis.x_a, cfg.dato.forecast_delta, &counters);
        state.xi = analysis.xi_a;
        state.rho = analysis.rho_a;

        rec.k = k;
        rec.t = truth.t0 + static_cast<double>(row) * truth.dt;
        rec.truth = x_t;
        rec.y = y;
        rec.x_a = analysis.x_a;
        rec.x_free = model.X.transpose() * free_state.rho;
        rec.rmse = rmse3(rec.x_a, x_t);
        rec.rmse_free = rmse3(rec.x_free, x_t);
        rec.clip_mass = state.clip_mass;
        rec.delta = counter_delta(snapshot(counters), before);

        sum.rmse_analysis_mean += rec.rmse;
        sum.rmse_freerun_mean += rec.rmse_free;
        min_rho = std::min(min_rho, analysis.rho_a.minCoeff());
        sum.max_sum_dev = std::max(sum.max_sum_dev, std::abs(analysis.rho_a.sum() - 1.0));
        sum.max_clip_mass = std::max(sum.max_clip_mass, rec.clip_mass);
        sum.cycle_counters = counter_sum(sum.cycle_counters, rec.delta);
        sum.records.push_back(std::move(rec));
    }
    timings.dato_cycles = now_seconds() - t_start;

    if (K > 0) {
        sum.rmse_analysis_mean /= K;
        sum.rmse_freerun_mean /= K;
        sum.min_rho = min_rho;
    }

    DatoCostConfig cc;
    cc.n = model.n();
    cc.m = model.m();
    cc.S = model.S;
    cc.p = static_cast<long long>(model.obs.selector.size());
    cc.q = ob.q;
    cc.K = K;
    const auto cycles = static_cast<std::uint64_t>(K);
    sum.counters_match_model =
        sum.cycle_counters.predict == cycles * dato_counter_model("predict", cc) &&
        sum.cycle_counters.likelihood == cycles * dato_counter_model("likelihood", cc) &&
        sum.cycle_counters.project == cycles * dato_counter_model("project", cc) &&
        sum.cycle_counters.reconstruct == cycles * dato_counter_model("reconstruct", cc) &&
        sum.cycle_counters.forecast ==
            (cfg.dato.koopman_forecast ? cycles * dato_counter_model("forecast", cc) : 0);
    if (opt.dato_model_path.empty()) {
        const CounterSnapshot total = snapshot(counters);
        // the two pencil solves count the requested truncation, everything
        // downstream the kept one (a conjugate pair can extend it by 1)
        DatoCostConfig cc_req = cc;
        cc_req.S = cfg.dato.S;
        sum.counters_match_model =
            sum.counters_match_model &&
            total.gram == 2 * dato_counter_model("gram", cc) &&
            total.cholesky == dato_counter_model("cholesky", cc) &&
            total.eigen == 2 * dato_counter_model("eigen", cc_req) &&
            total.phi == 2 * dato_counter_model("phi", cc);
    }
    sum.counters = snapshot(counters);

    emit_report(sum.records, join(out, "dato_cycles.csv"), ReportFormat::Csv);
    emit_report(sum.records, join(out, "dato_cycles.json"), ReportFormat::Json);
    artifacts.push_back("dato_cycles.csv");
    artifacts.push_back("dato_cycles.json");
    return sum;
}

QmdaRunSummary run_qmda(const ExperimentConfig& cfg, const fs::path& out, const RunOptions& opt,
                        const Trajectory& truth, std::vector<std::string>& artifacts,
                        Timings& timings) {
    const ObservationBlock& ob = cfg.observation;
    const QmdaBlock& qb = cfg.qmda;
    const int K = ob.cycles;
    OpCounters counters;

    double t_start = now_seconds();
    QmdaModel model;
    long long d_embed = qb.delays;
    if (!opt.qmda_model_path.empty()) {
        model = load_qmda_model(opt.qmda_model_path);
        if (model.q != ob.q || model.partition.S != qb.S || model.L() != qb.L)
            throw ConfigError(
                "assimilate: loaded density model was fitted for a different cycle setup");
    } else {
        const Trajectory train = training_run(cfg.dynamics);
        const Eigen::VectorXd h = train.states.col(qb.observable);
        const long long T = h.size();
        const auto drop =
            static_cast<long long>(std::floor(cfg.dynamics.discard_fraction * static_cast<double>(T)));
        if (T - drop < qb.delays + 1)
            throw ConfigError("qmda: too few retained samples for the delay window");
        const Eigen::VectorXd kept = h.tail(T - drop);
        DelayConfig dc;
        dc.Q = qb.delays;
        dc.dt = cfg.dynamics.dt;
        const Eigen::MatrixXd data = delay_embed(kept, dc);
        const Eigen::VectorXd h_vals = data.col(0);  // newest entry of each window

        QmdaParams params;
        params.L = qb.L;
        params.r = qb.r;
        params.S = qb.S;
        params.q = ob.q;
        params.k_bw = qb.k_bw;
        params.epsilon = qb.epsilon;
        params.sinkhorn_tol = qb.sinkhorn_tol;
        params.sinkhorn_max_iter = qb.sinkhorn_max_iter;
        params.multi_horizon = qb.multi_horizon;
        model = qmda_fit(data, h_vals, params, &counters);
    }
    timings.qmda_fit = now_seconds() - t_start;

    save_model(model, join(out, "qmda_model.bin"));
    artifacts.push_back("qmda_model.bin");

    QmdaRunSummary sum;
    sum.N = model.N();
    sum.L = model.L();
    sum.S = model.partition.S;
    sum.cycles = K;
    sum.sinkhorn_iterations = model.sinkhorn_iterations;
    sum.climatology_log_score = -std::log(static_cast<double>(model.partition.S));

    t_start = now_seconds();
    DensityOperator rho = qmda_init_state(model.L());
    Rng obs_rng(ob.seed_noise ^ kQmdaNoiseTag);

    double min_prob = std::numeric_limits<double>::infinity();
    double min_eig = std::numeric_limits<double>::infinity();
    double score_sum = 0.0;
    int hits = 0;
    int updated_count = 0;
    sum.records.reserve(K);
    for (int k = 1; k <= K; ++k) {
        const CounterSnapshot before = snapshot(counters);
        rho = qmda_evolve(model, rho, &counters);
        const Eigen::VectorXd probs = qmda_probabilities(model, rho, &counters);

        const long long row = cfg.dynamics.truth_spinup_steps + static_cast<long long>(k) * ob.q;
        const double h_truth = truth.states(row, qb.observable);
        const double y = h_truth + ob.sigma_obs * obs_rng.normal();

        QmdaCycleRecord rec;
        rec.k = k;
        rec.t = truth.t0 + static_cast<double>(row) * truth.dt;
        rec.truth_bin = assign_bin(model.partition, h_truth);
        rec.obs_bin = assign_bin(model.partition, y);
        rec.probs = probs;
        Eigen::Index map_idx = 0;
        probs.maxCoeff(&map_idx);
        rec.map_bin = static_cast<int>(map_idx);

        const double p_truth = probs[rec.truth_bin];
        rec.log_score = std::log(std::max(p_truth, kScoreFloor));
        score_sum += std::log(std::max(p_truth, std::numeric_limits<double>::denorm_min()));

        if (probs[rec.obs_bin] >= kSkipThreshold) {
            try {
                rho = qmda_update(model, rho, rec.obs_bin, &counters);
                rec.updated = true;
            } catch (const MeasurementConflictError&) {
                rec.updated = false;
            }
        }
        if (rec.updated)
            ++updated_count;
        else
            ++sum.skipped_updates;

        rec.trace_dev = std::abs(rho.trace() - 1.0);
        rec.sym_dev = (rho - rho.transpose()).cwiseAbs().maxCoeff();
        rec.min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                          0.5 * (rho + rho.transpose()), Eigen::EigenvaluesOnly)
                          .eigenvalues()
                          .minCoeff();
        rec.delta = counter_delta(snapshot(counters), before);

        if (rec.map_bin == rec.truth_bin) ++hits;
        min_prob = std::min(min_prob, probs.minCoeff());
        min_eig = std::min(min_eig, rec.min_eig);
        sum.max_prob_sum_dev = std::max(sum.max_prob_sum_dev, std::abs(probs.sum() - 1.0));
        sum.max_trace_dev = std::max(sum.max_trace_dev, rec.trace_dev);
        sum.max_sym_dev = std::max(sum.max_sym_dev, rec.sym_dev);
        sum.cycle_counters = counter_sum(sum.cycle_counters, rec.delta);
        sum.records.push_back(std::move(rec));
    }
    timings.qmda_cycles = now_seconds() - t_start;

    if (K > 0) {
        sum.mean_log_score = score_sum / K;
        sum.hit_rate = static_cast<double>(hits) / K;
        sum.min_prob = min_prob;
        sum.min_rho_eig = min_eig;
    }

    QmdaCostConfig qc;
    qc.N = model.N();
    qc.L = model.L();
    qc.d = d_embed;
    qc.r = model.r;
    qc.S_qmda = model.partition.S;
    qc.q = model.q;
    qc.K = K;
    qc.k_iter = std::max(model.sinkhorn_iterations, 1);
    qc.multi_horizon = model.multi_horizon;
    const auto cycles = static_cast<std::uint64_t>(K);
    sum.counters_match_model =
        sum.cycle_counters.evolve == cycles * qmda_counter_model("evolve", qc) &&
        sum.cycle_counters.measure == cycles * qmda_counter_model("measure", qc) &&
        sum.cycle_counters.update ==
            static_cast<std::uint64_t>(updated_count) * qmda_counter_model("update", qc);
    if (opt.qmda_model_path.empty()) {
        const CounterSnapshot total = snapshot(counters);
        const std::uint64_t horizons = model.multi_horizon ? static_cast<std::uint64_t>(model.q) + 1 : 1;
        sum.counters_match_model =
            sum.counters_match_model &&
            total.gram == qmda_counter_model("kernel", qc) &&
            total.kernel_evals == qmda_counter_model("kernel_evals", qc) &&
            total.sinkhorn == static_cast<std::uint64_t>(model.sinkhorn_iterations) *
                                  qmda_counter_model("sinkhorn", qc) &&
            total.eigen == qmda_counter_model("eigen", qc) &&
            total.koopman_build == horizons * qmda_counter_model("koopman_build", qc) &&
            total.projector_build == qmda_counter_model("projector_build", qc);
    }
    sum.counters = snapshot(counters);

    emit_report(sum.records, join(out, "qmda_cycles.csv"), ReportFormat::Csv);
    emit_report(sum.records, join(out, "qmda_cycles.json"), ReportFormat::Json);
    artifacts.push_back("qmda_cycles.csv");
    artifacts.push_back("qmda_cycles.json");
    return sum;
}

std::string finite_g17(double v) {
    if (!std::isfinite(v)) return fmt_g17(v < 0 ? -1e308 : 1e308);
    return fmt_g17(v);
}

std::string dato_summary_json(const DatoRunSummary& s) {
    std::string j = "{";
    j += "\"m\":" + std::to_string(s.m) + ",";
    j += "\"S\":" + std::to_string(s.S) + ",";
    j += "\"sigma\":" + fmt_g17(s.sigma) + ",";
    j += "\"cycles\":" + std::to_string(s.cycles) + ",";
    j += "\"rmse_analysis_mean\":" + finite_g17(s.rmse_analysis_mean) + ",";
    j += "\"rmse_freerun_mean\":" + finite_g17(s.rmse_freerun_mean) + ",";
    j += "\"min_rho\":" + finite_g17(s.min_rho) + ",";
    j += "\"max_sum_dev\":" + finite_g17(s.max_sum_dev) + ",";
    j += "\"max_clip_mass\":" + finite_g17(s.max_clip_mass) + ",";
    j += "\"counters\":" + counters_to_json(s.counters) + ",";
    j += "\"cycle_counters\":" + counters_to_json(s.cycle_counters) + ",";
    j += std::string("\"counters_match_model\":") + (s.counters_match_model ? "true" : "false");
    j += "}";
    return j;
}

std::string qmda_summary_json(const QmdaRunSummary& s) {
    std::string j = "{";
    j += "\"N\":" + std::to_string(s.N) + ",";
    j += "\"L\":" + std::to_string(s.L) + ",";
    j += "\"S\":" + std::to_string(s.S) + ",";
    j += "\"cycles\":" + std::to_string(s.cycles) + ",";
    j += "\"mean_log_score\":" + finite_g17(s.mean_log_score) + ",";
    j += "\"climatology_log_score\":" + finite_g17(s.climatology_log_score) + ",";
    j += "\"hit_rate\":" + finite_g17(s.hit_rate) + ",";
    j += "\"skipped_updates\":" + std::to_string(s.skipped_updates) + ",";
    j += "\"sinkhorn_iterations\":" + std::to_string(s.sinkhorn_iterations) + ",";
    j += "\"max_trace_dev\":" + finite_g17(s.max_trace_dev) + ",";
    j += "\"max_sym_dev\":" + finite_g17(s.max_sym_dev) + ",";
    j += "\"min_prob\":" + finite_g17(s.min_prob) + ",";
    j += "\"min_rho_eig\":" + finite_g17(s.min_rho_eig) + ",";
    j += "\"max_prob_sum_dev\":" + finite_g17(s.max_prob_sum_dev) + ",";
    j += "\"counters\":" + counters_to_json(s.counters) + ",";
    j += "\"cycle_counters\":" + counters_to_json(s.cycle_counters) + ",";
    j += std::string("\"counters_match_model\":") + (s.counters_match_model ? "true" : "false");
    j += "}";
    return j;
}

void write_manifest(const fs::path& out, const std::string& hash,
                    std::vector<std::string> artifacts) {
    std::sort(artifacts.begin(), artifacts.end());
    std::string j = "{\"config_hash\":\"" + hash + "\",\"artifacts\":[";
    for (std::size_t i = 0; i < artifacts.size(); ++i) {
        if (i) j += ",";
        j += "\"" + artifacts[i] + "\"";
    }
    j += "]}\n";
    write_text_file(join(out, "manifest.json"), j);
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    std::string out = "t,x_0,x_1,x_2\n";
    for (Eigen::Index k = 0; k < traj.states.rows(); ++k) {
        out += fmt_g17(traj.t0 + static_cast<double>(k) * traj.dt);
        for (int j = 0; j < 3; ++j) out += "," + fmt_g17(traj.states(k, j));
        out += "\n";
    }
    write_text_file(path, out);
}

}  // namespace

TwinResult run_twin_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                               const RunOptions& options) {
    const fs::path out(out_dir);
    fs::create_directories(out);

    TwinResult result;
    result.has_dato = cfg.framework == "dato" || cfg.framework == "both";
    result.has_qmda = cfg.framework == "qmda" || cfg.framework == "both";

    const long long truth_steps =
        cfg.dynamics.truth_spinup_steps +
        static_cast<long long>(cfg.observation.cycles) * cfg.observation.q;
    const Trajectory truth =
        integrate_l63(cfg.dynamics.params, perturbed_x0(cfg.dynamics, cfg.dynamics.seed_truth),
                      cfg.dynamics.dt, std::max(truth_steps, 1ll));

    const std::string hash = config_hash(cfg);
    write_text_file(join(out, "config.json"), canonical_config_json(cfg) + "\n");
    result.artifacts.push_back("config.json");

    Timings timings;
    if (result.has_dato)
        result.dato = run_dato(cfg, out, options, truth, result.artifacts, timings);
    if (result.has_qmda)
        result.qmda = run_qmda(cfg, out, options, truth, result.artifacts, timings);

    std::string summary = "{\"framework\":\"" + cfg.framework + "\",";
    summary += "\"config_hash\":\"" + hash + "\"";
    if (result.has_dato) summary += ",\"dato\":" + dato_summary_json(result.dato);
    if (result.has_qmda) summary += ",\"qmda\":" + qmda_summary_json(result.qmda);
    summary += "}\n";
    write_text_file(join(out, "summary.json"), summary);
    result.artifacts.push_back("summary.json");

    write_manifest(out, hash, result.artifacts);

    // wall-clock lives outside the manifest so reruns stay byte-comparable
    std::string tj = "{";
    tj += "\"dato_fit_seconds\":" + fmt_g17(timings.dato_fit) + ",";
    tj += "\"dato_cycle_seconds\":" + fmt_g17(timings.dato_cycles) + ",";
    tj += "\"qmda_fit_seconds\":" + fmt_g17(timings.qmda_fit) + ",";
    tj += "\"qmda_cycle_seconds\":" + fmt_g17(timings.qmda_cycles) + "}\n";
    write_text_file(join(out, "timings.json"), tj);

    std::sort(result.artifacts.begin(), result.artifacts.end());
    return result;
}

std::vector<std::string> generate_data(const ExperimentConfig& cfg, const std::string& out_dir) {
    const fs::path out(out_dir);
    fs::create_directories(out);
    std::vector<std::string> artifacts;

    const Trajectory train = training_run(cfg.dynamics);
    write_trajectory_csv(join(out, "trajectory_train.csv"), train);
    artifacts.push_back("trajectory_train.csv");

    const long long truth_steps =
        cfg.dynamics.truth_spinup_steps +
        static_cast<long long>(cfg.observation.cycles) * cfg.observation.q;
    const Trajectory truth =
        integrate_l63(cfg.dynamics.params, perturbed_x0(cfg.dynamics, cfg.dynamics.seed_truth),
                      cfg.dynamics.dt, std::max(truth_steps, 1ll));
    write_trajectory_csv(join(out, "trajectory_truth.csv"), truth);
    artifacts.push_back("trajectory_truth.csv");

    const ObservationBlock& ob = cfg.observation;
    if (cfg.framework != "qmda") {
        const ObservationModel obs = make_observation_model(ob);
        Rng rng(ob.seed_noise);
        std::string csv = "k,t";
        for (std::size_t j = 0; j < ob.selector.size(); ++j) csv += ",y_" + std::to_string(j);
        csv += "\n";
        for (int k = 1; k <= ob.cycles; ++k) {
            const long long row = cfg.dynamics.truth_spinup_steps + static_cast<long long>(k) * ob.q;
            const Eigen::VectorXd y = observe(obs, truth.states.row(row).transpose(), rng);
            csv += std::to_string(k) + "," + fmt_g17(truth.t0 + static_cast<double>(row) * truth.dt);
            for (Eigen::Index j = 0; j < y.size(); ++j) csv += "," + fmt_g17(y[j]);
            csv += "\n";
        }
        write_text_file(join(out, "observations_dato.csv"), csv);
        artifacts.push_back("observations_dato.csv");
    }
    if (cfg.framework != "dato") {
        Rng rng(ob.seed_noise ^ kQmdaNoiseTag);
        std::string csv = "k,t,y\n";
        for (int k = 1; k <= ob.cycles; ++k) {
            const long long row = cfg.dynamics.truth_spinup_steps + static_cast<long long>(k) * ob.q;
            const double y = truth.states(row, cfg.qmda.observable) + ob.sigma_obs * rng.normal();
            csv += std::to_string(k) + "," + fmt_g17(truth.t0 + static_cast<double>(row) * truth.dt) +
                   "," + fmt_g17(y) + "\n";
        }
        write_text_file(join(out, "observations_qmda.csv"), csv);
        artifacts.push_back("observations_qmda.csv");
    }

    write_text_file(join(out, "config.json"), canonical_config_json(cfg) + "\n");
    artifacts.push_back("config.json");
    write_manifest(out, config_hash(cfg), artifacts);
    std::sort(artifacts.begin(), artifacts.end());
    return artifacts;
}

}  // namespace tda
