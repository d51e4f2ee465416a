#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "transferda/complexity.hpp"
#include "transferda/counters.hpp"
#include "transferda/dynamics.hpp"

namespace tda {

// ---- experiment configuration (strict JSON schema, unknown keys rejected) --

struct DynamicsBlock {
    L63Params params;
    double dt = 0.025;
    long long train_steps = 1000;     // RK4 updates for the training run
    double discard_fraction = 0.3;    // transient fraction dropped from the front
    Eigen::Vector3d x0{1.0, 1.0, 1.0};
    std::uint64_t seed_train = 1;     // perturbs x0 for the training run
    std::uint64_t seed_truth = 2;     // perturbs x0 for the assimilation truth
    long long truth_spinup_steps = 800;  // truth steps discarded before cycle 1
};

struct ObservationBlock {
    std::vector<int> selector{1, 2};
    double sigma_obs = 0.5;
    int q = 6;        // model steps between observations
    std::uint64_t seed_noise = 3;
    int cycles = 100;
};

struct DatoBlock {
    bool use_median_sigma = false;  // config value "median" selects this
    double sigma = 2.0;
    double eps = 1e-5;
    int S = 300;
    bool koopman_forecast = false;
    int forecast_delta = 1;
};

struct QmdaBlock {
    int L = 100;
    int r = 400;
    int S = 16;
    int k_bw = 8;
    int delays = 20;        // delay-embedding window Q
    double epsilon = 1.0;
    int observable = 0;     // state component fed to the scalar observable
    double sinkhorn_tol = 1e-8;
    int sinkhorn_max_iter = 500;
    bool multi_horizon = false;
};

struct ExperimentConfig {
    std::string framework = "dato";  // dato | qmda | both
    DynamicsBlock dynamics;
    ObservationBlock observation;
    DatoBlock dato;
    QmdaBlock qmda;
};

ExperimentConfig parse_config_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// stable field order + %.17g doubles; the determinism anchor for manifests
std::string canonical_config_json(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

// ---- per-cycle records ------------------------------------------------------

struct DatoCycleRecord {
    int k = 0;
    double t = 0.0;
    Eigen::Vector3d truth = Eigen::Vector3d::Zero();
    Eigen::VectorXd y;
    Eigen::Vector3d x_a = Eigen::Vector3d::Zero();
    Eigen::Vector3d x_free = Eigen::Vector3d::Zero();
    Eigen::VectorXd x_forecast;  // only when the Koopman forecast is enabled
    double rmse = 0.0;
    double rmse_free = 0.0;
    double clip_mass = 0.0;
    CounterSnapshot delta;
};

struct QmdaCycleRecord {
    int k = 0;
    double t = 0.0;
    int truth_bin = -1;
    int obs_bin = -1;
    int map_bin = -1;
    Eigen::VectorXd probs;
    double log_score = 0.0;
    bool updated = false;
    double trace_dev = 0.0;
    double sym_dev = 0.0;
    double min_eig = 0.0;  // smallest eigenvalue of the post-cycle state
    CounterSnapshot delta;
};

enum class ReportFormat { Csv, Json };

// stable key order, integer values; shared by every JSON emitter
std::string counters_to_json(const CounterSnapshot& s);

void emit_report(const std::vector<DatoCycleRecord>& records, const std::string& path,
                 ReportFormat format);
void emit_report(const std::vector<QmdaCycleRecord>& records, const std::string& path,
                 ReportFormat format);
std::vector<DatoCycleRecord> parse_dato_records_json(const std::string& text);
std::vector<QmdaCycleRecord> parse_qmda_records_json(const std::string& text);
bool records_equal(const std::vector<DatoCycleRecord>& a, const std::vector<DatoCycleRecord>& b);
bool records_equal(const std::vector<QmdaCycleRecord>& a, const std::vector<QmdaCycleRecord>& b);

// ---- twin experiments -------------------------------------------------------

struct DatoRunSummary {
    long long m = 0;
    int S = 0;
    double sigma = 0.0;
    int cycles = 0;
    double rmse_analysis_mean = 0.0;
    double rmse_freerun_mean = 0.0;
    double min_rho = 0.0;          // most negative density weight seen
    double max_sum_dev = 0.0;      // worst |sum rho - 1|
    double max_clip_mass = 0.0;
    CounterSnapshot counters;        // everything this framework touched
    CounterSnapshot cycle_counters;  // sum of the per-cycle deltas
    bool counters_match_model = false;
    std::vector<DatoCycleRecord> records;
};

struct QmdaRunSummary {
    long long N = 0;
    int L = 0;
    int S = 0;
    int cycles = 0;
    double mean_log_score = 0.0;
    double climatology_log_score = 0.0;
    double hit_rate = 0.0;
    int skipped_updates = 0;
    int sinkhorn_iterations = 0;
    double max_trace_dev = 0.0;
    double max_sym_dev = 0.0;
    double max_prob_sum_dev = 0.0;
    double min_prob = 0.0;
    double min_rho_eig = 0.0;  // most negative state eigenvalue over all cycles
    CounterSnapshot counters;
    CounterSnapshot cycle_counters;
    bool counters_match_model = false;
    std::vector<QmdaCycleRecord> records;
};

struct TwinResult {
    bool has_dato = false;
    bool has_qmda = false;
    DatoRunSummary dato;
    QmdaRunSummary qmda;
    std::vector<std::string> artifacts;  // files written under out_dir
};

struct RunOptions {
    std::string dato_model_path;  // load instead of fitting when non-empty
    std::string qmda_model_path;
};

// Runs the configured twin experiment(s), writing cycle CSV/JSON, model
// binaries, summary.json and manifest.json under out_dir.
TwinResult run_twin_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                               const RunOptions& options = {});

// Writes trajectory and observation CSVs for the configured run.
std::vector<std::string> generate_data(const ExperimentConfig& cfg, const std::string& out_dir);

// ---- scaling probes ---------------------------------------------------------

struct ProbeSample {
    std::uint64_t count = 0;     // stage counter delta for one call
    std::uint64_t expected = 0;  // closed-form model count
    double seconds = 0.0;
};

std::vector<std::string> scaling_probe_names();
ProbeSample run_scaling_probe(const std::string& probe, long long size);

struct ProbeScalingReport {
    ScalingResult scaling;
    std::vector<std::uint64_t> expected;
    double model_exponent = 0.0;  // fit of the closed-form counts
    bool counts_match_model = false;
};

ProbeScalingReport run_probe_scaling(const std::string& probe, const std::vector<long long>& sizes);

}  // namespace tda
