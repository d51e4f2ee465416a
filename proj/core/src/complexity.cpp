#include "transferda/complexity.hpp"

#include <algorithm>
#include <cmath>

#include "transferda/errors.hpp"

namespace tda {

namespace {

void require_positive(long long v, const char* name) {
    if (v < 1) throw ConfigError(std::string("cost config: ") + name + " must be >= 1");
}

void finalize(CostReport& rep) {
    double best_off = -1.0, best_cyc = -1.0;
    for (const auto& it : rep.items) {
        if (it.phase == "offline") {
            rep.offline_model_total += it.model_ops;
            rep.offline_table_total += it.table_estimate;
            if (it.table_estimate > best_off) {
                best_off = it.table_estimate;
                rep.dominant_offline = it.stage;
            }
        } else {
            rep.cycle_model_total += it.model_ops;
            rep.cycle_table_total += it.table_estimate;
            if (it.table_estimate > best_cyc) {
                best_cyc = it.table_estimate;
                rep.dominant_cycle = it.stage;
            }
        }
    }
}

}  // namespace

CostReport dato_costs(const DatoCostConfig& c) {
    require_positive(c.n, "n");
    require_positive(c.m, "m");
    require_positive(c.S, "S");
    require_positive(c.p, "p");
    require_positive(c.q, "q");
    require_positive(c.K, "K");

    const double n = static_cast<double>(c.n), m = static_cast<double>(c.m),
                 S = static_cast<double>(c.S), p = static_cast<double>(c.p);
    CostReport rep;
    rep.framework = "dato";
    rep.items = {
        {"gram", "offline", "n m^2", c.n * c.m * c.m, n * m * m},
        {"cholesky", "offline", "m^3/3", c.m * c.m * c.m / 3, m * m * m / 3.0},
        {"eigen", "offline", "m^2 S", c.m * c.m * c.S, m * m * S},
        {"phi", "offline", "m^2 S", c.m * c.m * c.S, m * m * S},
        {"predict", "per-cycle", "m S", c.m * c.S, m * S},
        // table convention keeps only the innovation term
        {"likelihood", "per-cycle", "m (p n + p^2)", c.m * (c.p * c.n + c.p * c.p), m * p * n},
        {"project", "per-cycle", "m S + S^2", c.m * c.S + c.S * c.S, m * S + S * S},
        {"reconstruct", "per-cycle", "m n", c.m * c.n, m * n},
    };
    finalize(rep);
    return rep;
}

CostReport qmda_costs(const QmdaCostConfig& c) {
    require_positive(c.N, "N");
    require_positive(c.L, "L");
    require_positive(c.d, "d");
    require_positive(c.r, "r");
    require_positive(c.S_qmda, "S_qmda");
    require_positive(c.q, "q");
    require_positive(c.K, "K");
    require_positive(c.k_iter, "k_iter");

    const double N = static_cast<double>(c.N), L = static_cast<double>(c.L),
                 d = static_cast<double>(c.d), r = static_cast<double>(c.r),
                 S = static_cast<double>(c.S_qmda), q = static_cast<double>(c.q);
    const long long horizons = c.multi_horizon ? c.q + 1 : 1;
    const double horizons_table = c.multi_horizon ? q : 1.0;

    CostReport rep;
    rep.framework = "qmda";
    rep.items = {
        {"kernel", "offline", "d N^2", c.d * c.N * c.N, d * N * N},
        {"sinkhorn", "offline", "r N k_iter", c.r * c.N * c.k_iter, r * N * static_cast<double>(c.k_iter)},
        {"eigen", "offline", "L r N", c.L * c.r * c.N, L * r * N},
        {"koopman", "offline", c.multi_horizon ? "(q+1) N L^2" : "N L^2",
         horizons * c.N * c.L * c.L, horizons_table * N * L * L},
        {"projectors", "offline", "N L^2", c.N * c.L * c.L, N * L * L},
        {"evolve", "per-cycle", "L^3", c.L * c.L * c.L, L * L * L},
        // table convention assumes the diagonal readout
        {"measure", "per-cycle", c.measure_diag_opt ? "S_qmda L" : "S_qmda L^2",
         c.measure_diag_opt ? c.S_qmda * c.L : c.S_qmda * c.L * c.L, S * L},
        {"update", "per-cycle", "L^3", c.L * c.L * c.L, L * L * L},
    };
    finalize(rep);
    return rep;
}

std::uint64_t dato_counter_model(const std::string& stage, const DatoCostConfig& c) {
    const auto n = static_cast<std::uint64_t>(c.n), m = static_cast<std::uint64_t>(c.m),
               S = static_cast<std::uint64_t>(c.S), p = static_cast<std::uint64_t>(c.p);
    if (stage == "gram") return n * m * m;
    if (stage == "cholesky") return m * m * m / 3;
    if (stage == "eigen") return 2 * m * m * S;
    if (stage == "phi") return m * m * S;
    if (stage == "predict") return m * S;
    if (stage == "likelihood") return m * (p * n + p * p);
    if (stage == "project") return m * S + S * S;
    if (stage == "reconstruct") return m * n;
    if (stage == "forecast") return m * n + m * S + S + S * n;
    throw ConfigError("dato_counter_model: unknown stage " + stage);
}

std::uint64_t qmda_counter_model(const std::string& stage, const QmdaCostConfig& c) {
    const auto N = static_cast<std::uint64_t>(c.N), L = static_cast<std::uint64_t>(c.L),
               d = static_cast<std::uint64_t>(c.d), r = static_cast<std::uint64_t>(c.r),
               S = static_cast<std::uint64_t>(c.S_qmda);
    if (stage == "kernel") return d * N * N;
    if (stage == "kernel_evals") return N * N;
    if (stage == "sinkhorn") return r * N;  // per sweep
    if (stage == "eigen") return L * r * N;
    if (stage == "koopman_build") return N * L * L;  // per horizon
    if (stage == "projector_build") return N * L * L;
    if (stage == "evolve") return 2 * L * L * L;
    if (stage == "measure") return S * L * L;
    if (stage == "update") return 2 * L * L * L;
    throw ConfigError("qmda_counter_model: unknown stage " + stage);
}

double breakeven(long long L, long long m, long long p) {
    require_positive(L, "L");
    require_positive(m, "m");
    require_positive(p, "p");
    return static_cast<double>(L) * static_cast<double>(L) * static_cast<double>(L) /
           (static_cast<double>(m) * static_cast<double>(p));
}

double prediction_overload(long long L, long long m) {
    require_positive(L, "L");
    require_positive(m, "m");
    return static_cast<double>(L) * static_cast<double>(L) / static_cast<double>(m);
}

double kernel_ratio(long long N, long long m) {
    require_positive(N, "N");
    require_positive(m, "m");
    const double f = static_cast<double>(N) / static_cast<double>(m);
    return f * f;
}

std::vector<RatioPoint> ratio_curve(const DatoCostConfig& dato, const QmdaCostConfig& qmda,
                                    const std::vector<long long>& n_values) {
    require_positive(dato.m, "m");
    require_positive(dato.S, "S");
    require_positive(dato.p, "p");
    require_positive(qmda.L, "L");
    require_positive(qmda.S_qmda, "S_qmda");
    const double m = static_cast<double>(dato.m), S = static_cast<double>(dato.S),
                 p = static_cast<double>(dato.p), L = static_cast<double>(qmda.L),
                 Sq = static_cast<double>(qmda.S_qmda);
    const double t_qmda = L * L * L + Sq * L;
    std::vector<RatioPoint> out;
    out.reserve(n_values.size());
    for (const long long nv : n_values) {
        require_positive(nv, "n");
        const double n = static_cast<double>(nv);
        const double t_dato = m * S + m * p * n + (m * S + S * S) + m * n;
        out.push_back({nv, t_dato / t_qmda});
    }
    return out;
}

std::vector<long long> log_grid(long long lo, long long hi, int per_decade) {
    if (lo < 1 || hi < lo) throw ConfigError("log_grid: need 1 <= lo <= hi");
    if (per_decade < 1) throw ConfigError("log_grid: per_decade must be >= 1");
    std::vector<long long> out;
    const long long k_lo = static_cast<long long>(std::ceil(per_decade * std::log10(static_cast<double>(lo)) - 1e-9));
    const long long k_hi = static_cast<long long>(std::floor(per_decade * std::log10(static_cast<double>(hi)) + 1e-9));
    for (long long k = k_lo; k <= k_hi; ++k) {
        const long long v = std::llround(std::pow(10.0, static_cast<double>(k) / per_decade));
        if (v < lo || v > hi) continue;
        if (out.empty() || out.back() != v) out.push_back(v);
    }
    return out;
}

ScalingResult verify_scaling(const std::string& probe, const std::vector<long long>& sizes,
                             const std::function<ScalingSample(long long)>& runner) {
    if (sizes.size() < 2) throw ConfigError("verify_scaling: need at least two sizes");
    ScalingResult res;
    res.probe = probe;
    for (const long long s : sizes) {
        ScalingSample sample = runner(s);
        sample.size = s;
        if (sample.count == 0)
            throw Error("verify_scaling: stage counter not incremented for probe '" + probe +
                        "' at size " + std::to_string(s));
        res.samples.push_back(sample);
    }

    const auto fit = [&](const std::function<double(const ScalingSample&)>& metric, double& slope,
                         double* rms) {
        const double count = static_cast<double>(res.samples.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& s : res.samples) {
            const double x = std::log10(static_cast<double>(s.size));
            const double y = std::log10(metric(s));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double denom = sxx - sx * sx / count;
        if (denom <= 0.0) throw ConfigError("verify_scaling: sizes must be distinct");
        slope = (sxy - sx * sy / count) / denom;
        const double intercept = (sy - slope * sx) / count;
        if (rms) {
            double acc = 0;
            for (const auto& s : res.samples) {
                const double x = std::log10(static_cast<double>(s.size));
                const double y = std::log10(metric(s));
                const double e = y - (intercept + slope * x);
                acc += e * e;
            }
            *rms = std::sqrt(acc / count);
        }
    };

    fit([](const ScalingSample& s) { return static_cast<double>(s.count); }, res.exponent,
        &res.residual);
    bool timed = true;
    for (const auto& s : res.samples)
        if (!(s.seconds > 0.0)) timed = false;
    if (timed) fit([](const ScalingSample& s) { return s.seconds; }, res.time_exponent, nullptr);
    return res;
}

}  // namespace tda
