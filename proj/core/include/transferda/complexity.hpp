#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace tda {

struct DatoCostConfig {
    long long n = 3;     // state dimension
    long long m = 0;     // training pairs
    long long S = 0;     // spectral truncation
    long long p = 1;     // observed components
    long long q = 1;     // steps between observations
    long long K = 1;     // assimilation cycles
};

struct QmdaCostConfig {
    long long N = 0;       // training samples
    long long L = 0;       // basis size
    long long d = 3;       // embedded point dimension
    long long r = 0;       // kNN sparsity
    long long S_qmda = 0;  // partition cells
    long long q = 1;       // shift / steps between observations
    long long K = 1;       // assimilation cycles
    long long k_iter = 50; // Sinkhorn sweeps assumed by the model
    bool multi_horizon = false;   // build U^(0..q) instead of U^(q) alone
    bool measure_diag_opt = false;  // diagonal-readout counting for the measure row
};

// One cost-table row carrying both conventions side by side: model_ops is the
// exact integer count the runtime counters implement; table_estimate is the
// leading-term figure used in headline tables (these differ for likelihood,
// the multi-horizon Koopman family, evolve/update and measure).
struct CostItem {
    std::string stage;
    std::string phase;     // "offline" or "per-cycle"
    std::string formula;   // model-count formula, human readable
    long long model_ops = 0;
    double table_estimate = 0.0;
};

struct CostReport {
    std::string framework;
    std::vector<CostItem> items;
    long long offline_model_total = 0;
    long long cycle_model_total = 0;
    double offline_table_total = 0.0;
    double cycle_table_total = 0.0;
    std::string dominant_offline;
    std::string dominant_cycle;
};

CostReport dato_costs(const DatoCostConfig& cfg);
CostReport qmda_costs(const QmdaCostConfig& cfg);

// Expected runtime-counter increment for a single call of an instrumented
// stage at this configuration (what the OpCounters actually accumulate).
std::uint64_t dato_counter_model(const std::string& stage, const DatoCostConfig& cfg);
std::uint64_t qmda_counter_model(const std::string& stage, const QmdaCostConfig& cfg);

// n* = L^3 / (m p): training-set size at which the per-cycle table costs of
// the two pipelines cross (p = 1 when only the state dimension enters).
double breakeven(long long L, long long m, long long p = 1);

// L^2 / m: per-cycle prediction-step overload of the density pipeline.
double prediction_overload(long long L, long long m);

// N^2 / m^2: offline kernel-evaluation ratio.
double kernel_ratio(long long N, long long m);

struct RatioPoint {
    long long n = 0;
    double ratio = 0.0;  // T_dato(n) / T_qmda
};

// Per-cycle table-convention cost ratio as a function of the ambient
// dimension n: T_dato(n) = mS + m p n + (mS + S^2) + m n against
// T_qmda = L^3 + S_qmda L (leading-term totals).
std::vector<RatioPoint> ratio_curve(const DatoCostConfig& dato, const QmdaCostConfig& qmda,
                                    const std::vector<long long>& n_values);

// round(10^(k/per_decade)) grid covering [lo, hi], deduplicated
std::vector<long long> log_grid(long long lo, long long hi, int per_decade);

struct ScalingSample {
    long long size = 0;
    std::uint64_t count = 0;
    double seconds = 0.0;
};

struct ScalingResult {
    std::string probe;
    std::vector<ScalingSample> samples;
    double exponent = 0.0;   // log-log slope fitted to the counter values
    double residual = 0.0;   // RMS deviation of the fit, log10 units
    double time_exponent = 0.0;  // same fit on wall-clock, reported only
};

// Runs `runner` at each size and fits log10(count) against log10(size).
// The runner returns the counter delta (and optionally seconds) for one
// invocation of the probed stage.
ScalingResult verify_scaling(const std::string& probe, const std::vector<long long>& sizes,
                             const std::function<ScalingSample(long long)>& runner);

}  // namespace tda
