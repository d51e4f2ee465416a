#include <string>
#include <vector>

#include "json.hpp"
#include "transferda/errors.hpp"
#include "transferda/harness.hpp"
#include "transferda/io.hpp"

namespace tda {

namespace {

using nlohmann::json;

struct CsField {
    const char* name;
    std::uint64_t CounterSnapshot::*member;
};

// one entry per counter; keep in sync with CounterSnapshot
const CsField kCsFields[] = {
    {"kernel_evals", &CounterSnapshot::kernel_evals},
    {"flops_model", &CounterSnapshot::flops_model},
    {"gram", &CounterSnapshot::gram},
    {"cholesky", &CounterSnapshot::cholesky},
    {"eigen", &CounterSnapshot::eigen},
    {"phi", &CounterSnapshot::phi},
    {"predict", &CounterSnapshot::predict},
    {"likelihood", &CounterSnapshot::likelihood},
    {"project", &CounterSnapshot::project},
    {"reconstruct", &CounterSnapshot::reconstruct},
    {"forecast", &CounterSnapshot::forecast},
    {"sinkhorn", &CounterSnapshot::sinkhorn},
    {"koopman_build", &CounterSnapshot::koopman_build},
    {"projector_build", &CounterSnapshot::projector_build},
    {"evolve", &CounterSnapshot::evolve},
    {"measure", &CounterSnapshot::measure},
    {"update", &CounterSnapshot::update},
};

CounterSnapshot counters_from_json(const json& obj) {
    CounterSnapshot s;
    for (const auto& f : kCsFields) {
        auto it = obj.find(f.name);
        if (it != obj.end()) s.*f.member = it->get<std::uint64_t>();
    }
    return s;
}

std::string vec_json(const Eigen::VectorXd& v) {
    std::string out = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += fmt_g17(v[i]);
    }
    out += "]";
    return out;
}

Eigen::VectorXd vec_from_json(const json& arr) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = arr[static_cast<std::size_t>(i)].get<double>();
    return v;
}

const json& need(const json& obj, const char* key, const char* what) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw PersistenceError(std::string("record JSON: missing '") + key + "' in " + what);
    return *it;
}

}  // namespace

std::string counters_to_json(const CounterSnapshot& s) {
    std::string out = "{";
    bool first = true;
    for (const auto& f : kCsFields) {
        if (!first) out += ",";
        first = false;
        out += std::string("\"") + f.name + "\":" + std::to_string(s.*f.member);
    }
    out += "}";
    return out;
}

void emit_report(const std::vector<DatoCycleRecord>& records, const std::string& path,
                 ReportFormat format) {
    std::string out;
    if (format == ReportFormat::Csv) {
        const Eigen::Index p = records.empty() ? 0 : records.front().y.size();
        const Eigen::Index f = records.empty() ? 0 : records.front().x_forecast.size();
        out = "k,t,x_truth_0,x_truth_1,x_truth_2";
        for (Eigen::Index j = 0; j < p; ++j) out += ",y_" + std::to_string(j);
        out += ",x_a_0,x_a_1,x_a_2,x_free_0,x_free_1,x_free_2";
        for (Eigen::Index j = 0; j < f; ++j) out += ",x_fcst_" + std::to_string(j);
        out += ",rmse,rmse_free,clip_mass\n";
        for (const auto& r : records) {
            out += std::to_string(r.k) + "," + fmt_g17(r.t);
            for (int j = 0; j < 3; ++j) out += "," + fmt_g17(r.truth[j]);
            for (Eigen::Index j = 0; j < p; ++j) out += "," + fmt_g17(r.y[j]);
            for (int j = 0; j < 3; ++j) out += "," + fmt_g17(r.x_a[j]);
            for (int j = 0; j < 3; ++j) out += "," + fmt_g17(r.x_free[j]);
            for (Eigen::Index j = 0; j < f; ++j) out += "," + fmt_g17(r.x_forecast[j]);
            out += "," + fmt_g17(r.rmse) + "," + fmt_g17(r.rmse_free) + "," +
                   fmt_g17(r.clip_mass) + "\n";
        }
    } else {
        out = "{\"framework\":\"dato\",\"records\":[";
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            if (i) out += ",";
            out += "{\"k\":" + std::to_string(r.k) + ",\"t\":" + fmt_g17(r.t);
            out += ",\"truth\":" + vec_json(r.truth) + ",\"y\":" + vec_json(r.y);
            out += ",\"x_a\":" + vec_json(r.x_a) + ",\"x_free\":" + vec_json(r.x_free);
            if (r.x_forecast.size() > 0) out += ",\"x_forecast\":" + vec_json(r.x_forecast);
            out += ",\"rmse\":" + fmt_g17(r.rmse) + ",\"rmse_free\":" + fmt_g17(r.rmse_free);
            out += ",\"clip_mass\":" + fmt_g17(r.clip_mass);
            out += ",\"counters\":" + counters_to_json(r.delta) + "}";
        }
        out += "]}\n";
    }
    write_text_file(path, out);
}

void emit_report(const std::vector<QmdaCycleRecord>& records, const std::string& path,
                 ReportFormat format) {
    std::string out;
    if (format == ReportFormat::Csv) {
        const Eigen::Index S = records.empty() ? 0 : records.front().probs.size();
        out = "k,t,truth_bin,obs_bin,map_bin,log_score,updated";
        for (Eigen::Index j = 0; j < S; ++j) out += ",P_" + std::to_string(j);
        out += "\n";
        for (const auto& r : records) {
            out += std::to_string(r.k) + "," + fmt_g17(r.t);
            out += "," + std::to_string(r.truth_bin) + "," + std::to_string(r.obs_bin) + "," +
                   std::to_string(r.map_bin);
            out += "," + fmt_g17(r.log_score) + "," + std::string(r.updated ? "1" : "0");
            for (Eigen::Index j = 0; j < S; ++j) out += "," + fmt_g17(r.probs[j]);
            out += "\n";
        }
    } else {
        out = "{\"framework\":\"qmda\",\"records\":[";
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            if (i) out += ",";
            out += "{\"k\":" + std::to_string(r.k) + ",\"t\":" + fmt_g17(r.t);
            out += ",\"truth_bin\":" + std::to_string(r.truth_bin);
            out += ",\"obs_bin\":" + std::to_string(r.obs_bin);
            out += ",\"map_bin\":" + std::to_string(r.map_bin);
            out += ",\"probs\":" + vec_json(r.probs);
            out += ",\"log_score\":" + fmt_g17(r.log_score);
            out += std::string(",\"updated\":") + (r.updated ? "true" : "false");
            out += ",\"trace_dev\":" + fmt_g17(r.trace_dev);
            out += ",\"sym_dev\":" + fmt_g17(r.sym_dev);
            out += ",\"min_eig\":" + fmt_g17(r.min_eig);
            out += ",\"counters\":" + counters_to_json(r.delta) + "}";
        }
        out += "]}\n";
    }
    write_text_file(path, out);
}

std::vector<DatoCycleRecord> parse_dato_records_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw PersistenceError(std::string("record JSON: invalid JSON: ") + e.what());
    }
    const json& arr = need(root, "records", "document");
    std::vector<DatoCycleRecord> out;
    out.reserve(arr.size());
    for (const auto& o : arr) {
        DatoCycleRecord r;
        r.k = need(o, "k", "dato record").get<int>();
        r.t = need(o, "t", "dato record").get<double>();
        const Eigen::VectorXd truth = vec_from_json(need(o, "truth", "dato record"));
        if (truth.size() != 3) throw PersistenceError("record JSON: truth must have 3 entries");
        r.truth = truth;
        r.y = vec_from_json(need(o, "y", "dato record"));
        const Eigen::VectorXd xa = vec_from_json(need(o, "x_a", "dato record"));
        const Eigen::VectorXd xf = vec_from_json(need(o, "x_free", "dato record"));
        if (xa.size() != 3 || xf.size() != 3)
            throw PersistenceError("record JSON: x_a / x_free must have 3 entries");
        r.x_a = xa;
        r.x_free = xf;
        if (auto it = o.find("x_forecast"); it != o.end()) r.x_forecast = vec_from_json(*it);
        r.rmse = need(o, "rmse", "dato record").get<double>();
        r.rmse_free = need(o, "rmse_free", "dato record").get<double>();
        r.clip_mass = need(o, "clip_mass", "dato record").get<double>();
        r.delta = counters_from_json(need(o, "counters", "dato record"));
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<QmdaCycleRecord> parse_qmda_records_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw PersistenceError(std::string("record JSON: invalid JSON: ") + e.what());
    }
    const json& arr = need(root, "records", "document");
    std::vector<QmdaCycleRecord> out;
    out.reserve(arr.size());
    for (const auto& o : arr) {
        QmdaCycleRecord r;
        r.k = need(o, "k", "qmda record").get<int>();
        r.t = need(o, "t", "qmda record").get<double>();
        r.truth_bin = need(o, "truth_bin", "qmda record").get<int>();
        r.obs_bin = need(o, "obs_bin", "qmda record").get<int>();
        r.map_bin = need(o, "map_bin", "qmda record").get<int>();
        r.probs = vec_from_json(need(o, "probs", "qmda record"));
        r.log_score = need(o, "log_score", "qmda record").get<double>();
        r.updated = need(o, "updated", "qmda record").get<bool>();
        r.trace_dev = need(o, "trace_dev", "qmda record").get<double>();
        r.sym_dev = need(o, "sym_dev", "qmda record").get<double>();
        r.min_eig = need(o, "min_eig", "qmda record").get<double>();
        r.delta = counters_from_json(need(o, "counters", "qmda record"));
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

bool same_vec(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) return false;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

}  // namespace

bool records_equal(const std::vector<DatoCycleRecord>& a, const std::vector<DatoCycleRecord>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& x = a[i];
        const auto& y = b[i];
        if (x.k != y.k || x.t != y.t) return false;
        if (!same_vec(x.truth, y.truth) || !same_vec(x.y, y.y)) return false;
        if (!same_vec(x.x_a, y.x_a) || !same_vec(x.x_free, y.x_free)) return false;
        if (!same_vec(x.x_forecast, y.x_forecast)) return false;
        if (x.rmse != y.rmse || x.rmse_free != y.rmse_free || x.clip_mass != y.clip_mass)
            return false;
        if (!(x.delta == y.delta)) return false;
    }
    return true;
}

bool records_equal(const std::vector<QmdaCycleRecord>& a, const std::vector<QmdaCycleRecord>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& x = a[i];
        const auto& y = b[i];
        if (x.k != y.k || x.t != y.t) return false;
        if (x.truth_bin != y.truth_bin || x.obs_bin != y.obs_bin || x.map_bin != y.map_bin)
            return false;
        if (!same_vec(x.probs, y.probs)) return false;
        if (x.log_score != y.log_score || x.updated != y.updated) return false;
        if (x.trace_dev != y.trace_dev || x.sym_dev != y.sym_dev) return false;
        if (x.min_eig != y.min_eig) return false;
        if (!(x.delta == y.delta)) return false;
    }
    return true;
}

}  // namespace tda
