#include "transferda/harness.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "transferda/errors.hpp"
#include "transferda/io.hpp"

using namespace tda;

namespace {

namespace fs = std::filesystem;

std::string small_both_config() {
    return R"({
  "framework": "both",
  "dynamics": {"train_steps": 500, "discard_fraction": 0.3, "seed_train": 41, "seed_truth": 42},
  "observation": {"selector": [1, 2], "sigma_obs": 0.5, "q": 4, "seed_noise": 43, "cycles": 5},
  "dato": {"sigma": "median", "eps": 1e-5, "S": 60},
  "qmda": {"L": 24, "r": 90, "S": 6, "delays": 8, "epsilon": 1.0, "observable": 0}
})";
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("tda_harness_" + tag);
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("config defaults and rejection of unknown keys") {
    const ExperimentConfig cfg = parse_config_json("{}");
    CHECK(cfg.framework == "dato");
    CHECK(cfg.dynamics.dt == 0.025);
    CHECK(cfg.dynamics.train_steps == 1000);
    CHECK(cfg.observation.selector == std::vector<int>{1, 2});
    CHECK(cfg.observation.q == 6);
    CHECK(cfg.dato.S == 300);
    CHECK(cfg.qmda.L == 100);

    CHECK_THROWS_AS(parse_config_json(R"({"bogus": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"dynamics": {"dtt": 0.1}})"), ConfigError);
    try {
        parse_config_json(R"({"dato": {"sigma": 1.0, "epz": 2}})");
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("epz") != std::string::npos);
    }
}

TEST_CASE("config validation catches bad values") {
    CHECK_THROWS_AS(parse_config_json(R"({"framework": "other"})"), ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"dynamics": {"dt": 0}})"), ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"dynamics": {"discard_fraction": 1.0}})"), ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"observation": {"selector": [0, 0]}})"), ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"observation": {"selector": [3]}})"), ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"observation": {"sigma_obs": -1}})"), ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"dato": {"sigma": "nonsense"}})"), ConfigError);
    CHECK_THROWS_AS(parse_config_json(R"({"qmda": {"S": 1}})"), ConfigError);
    CHECK(parse_config_json(R"({"dato": {"sigma": "median"}})").dato.use_median_sigma);
}

TEST_CASE("canonical config json is a fixed point") {
    const ExperimentConfig cfg = parse_config_json(small_both_config());
    const std::string canon = canonical_config_json(cfg);
    const ExperimentConfig cfg2 = parse_config_json(canon);
    CHECK(canonical_config_json(cfg2) == canon);
    CHECK(config_hash(cfg) == config_hash(cfg2));

    ExperimentConfig other = cfg;
    other.observation.cycles += 1;
    CHECK(config_hash(other) != config_hash(cfg));
}

TEST_CASE("counter json holds every stage in declaration order") {
    CounterSnapshot s;
    s.gram = 42;
    s.update = 7;
    const std::string j = counters_to_json(s);
    CHECK(j.find("\"gram\":42") != std::string::npos);
    CHECK(j.find("\"update\":7") != std::string::npos);
    CHECK(j.find("\"kernel_evals\":0") < j.find("\"gram\""));
    CHECK(j.find("\"evolve\"") < j.find("\"measure\""));
}

TEST_CASE("dato records survive a json round trip") {
    std::vector<DatoCycleRecord> records(3);
    for (int k = 0; k < 3; ++k) {
        auto& r = records[k];
        r.k = k + 1;
        r.t = 0.15 * (k + 1);
        r.truth = Eigen::Vector3d(1.0 / 3.0 + k, -2.5, 3e-17);
        r.y = (Eigen::VectorXd(2) << 0.1 * k, -0.2).finished();
        r.x_a = Eigen::Vector3d(0.9, 2.0, 3.0);
        r.x_free = Eigen::Vector3d(0.1, 0.2, 0.3);
        r.rmse = 0.25 * k;
        r.rmse_free = 0.5;
        r.clip_mass = 1e-3;
        r.delta.predict = 100 + k;
    }
    records[1].x_forecast = (Eigen::VectorXd(3) << 7.0, 8.0, 9.0).finished();

    const std::string path = (fs::temp_directory_path() / "tda_rt_dato.json").string();
    emit_report(records, path, ReportFormat::Json);
    const auto back = parse_dato_records_json(read_text_file(path));
    CHECK(records_equal(records, back));

    auto tweaked = back;
    tweaked[2].rmse += 1e-16;
    CHECK(!records_equal(records, tweaked));
    std::remove(path.c_str());
}

TEST_CASE("qmda records survive a json round trip") {
    std::vector<QmdaCycleRecord> records(2);
    for (int k = 0; k < 2; ++k) {
        auto& r = records[k];
        r.k = k + 1;
        r.t = 1.5 + k;
        r.truth_bin = k;
        r.obs_bin = 1 - k;
        r.map_bin = k;
        r.probs = (Eigen::VectorXd(4) << 0.25, 0.5, 0.125, 0.125).finished();
        r.log_score = -std::log(4.0) + 1e-17 * k;
        r.updated = (k == 0);
        r.trace_dev = 1e-15;
        r.sym_dev = 0.0;
        r.min_eig = -2e-14;
        r.delta.evolve = 54 + k;
    }
    const std::string path = (fs::temp_directory_path() / "tda_rt_qmda.json").string();
    emit_report(records, path, ReportFormat::Json);
    const auto back = parse_qmda_records_json(read_text_file(path));
    CHECK(records_equal(records, back));
    std::remove(path.c_str());
}

TEST_CASE("empty record lists emit bare csv headers") {
    const std::string path = (fs::temp_directory_path() / "tda_empty.csv").string();
    emit_report(std::vector<DatoCycleRecord>{}, path, ReportFormat::Csv);
    auto rows = read_csv(path);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0][0] == "k");
    emit_report(std::vector<QmdaCycleRecord>{}, path, ReportFormat::Csv);
    rows = read_csv(path);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].back() == "updated");
    std::remove(path.c_str());
}

TEST_CASE("twin experiment writes a consistent bundle") {
    TempDir dir("bundle");
    const ExperimentConfig cfg = parse_config_json(small_both_config());
    const TwinResult res = run_twin_experiment(cfg, dir.path.string());

    REQUIRE(res.has_dato);
    REQUIRE(res.has_qmda);
    CHECK(res.dato.cycles == 5);
    CHECK(res.qmda.cycles == 5);
    CHECK(res.dato.counters_match_model);
    CHECK(res.qmda.counters_match_model);
    CHECK(res.dato.min_rho >= 0.0);
    CHECK(res.dato.max_sum_dev <= 1e-12);
    CHECK(res.qmda.max_trace_dev <= 1e-12);
    CHECK(res.qmda.max_sym_dev <= 1e-12);
    CHECK(res.qmda.min_rho_eig >= -1e-8);
    CHECK(res.qmda.max_prob_sum_dev <= 1e-8);

    for (const std::string name :
         {"config.json", "summary.json", "manifest.json", "dato_cycles.csv", "dato_cycles.json",
          "qmda_cycles.csv", "qmda_cycles.json", "dato_model.bin", "qmda_model.bin"}) {
        CHECK(fs::exists(dir.path / name));
    }

    // the canonical config echo reparses to the same hash
    const ExperimentConfig echo = load_config((dir.path / "config.json").string());
    CHECK(config_hash(echo) == config_hash(cfg));

    // cycle csv recomputes its own rmse columns
    const auto rows = read_csv((dir.path / "dato_cycles.csv").string());
    REQUIRE(rows.size() == 6);
    const auto& header = rows[0];
    int i_truth = -1, i_xa = -1, i_rmse = -1;
    for (size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "x_truth_0") i_truth = static_cast<int>(i);
        if (header[i] == "x_a_0") i_xa = static_cast<int>(i);
        if (header[i] == "rmse") i_rmse = static_cast<int>(i);
    }
    REQUIRE(i_truth >= 0);
    REQUIRE(i_xa >= 0);
    REQUIRE(i_rmse >= 0);
    for (size_t rix = 1; rix < rows.size(); ++rix) {
        const auto& r = rows[rix];
        double acc = 0.0;
        for (int j = 0; j < 3; ++j) {
            const double d = std::stod(r[i_xa + j]) - std::stod(r[i_truth + j]);
            acc += d * d;
        }
        CHECK(std::abs(std::sqrt(acc / 3.0) - std::stod(r[i_rmse])) < 1e-12);
    }

    // parsed records agree with the in-memory ones
    const auto disk = parse_dato_records_json(read_text_file((dir.path / "dato_cycles.json").string()));
    CHECK(records_equal(disk, res.dato.records));
}

TEST_CASE("twin experiments are deterministic") {
    TempDir a("det_a"), b("det_b");
    const ExperimentConfig cfg = parse_config_json(small_both_config());
    const TwinResult ra = run_twin_experiment(cfg, a.path.string());
    run_twin_experiment(cfg, b.path.string());

    for (const std::string& name : ra.artifacts) {
        const std::string fa = read_text_file((a.path / name).string());
        const std::string fb = read_text_file((b.path / name).string());
        CHECK(fa == fb);
    }
    // timings stay out of the comparable artifact set
    for (const std::string& name : ra.artifacts) CHECK(name != "timings.json");
}

TEST_CASE("model reload reproduces the fitted run") {
    TempDir a("reload_a"), b("reload_b");
    const ExperimentConfig cfg = parse_config_json(small_both_config());
    run_twin_experiment(cfg, a.path.string());

    RunOptions opt;
    opt.dato_model_path = (a.path / "dato_model.bin").string();
    opt.qmda_model_path = (a.path / "qmda_model.bin").string();
    run_twin_experiment(cfg, b.path.string(), opt);

    for (const std::string name : {"dato_cycles.csv", "dato_cycles.json", "qmda_cycles.csv",
                                   "qmda_cycles.json", "dato_model.bin", "qmda_model.bin"}) {
        CHECK(read_text_file((a.path / name).string()) ==
              read_text_file((b.path / name).string()));
    }
}

TEST_CASE("loaded model must match the configured observation setup") {
    TempDir a("mismatch");
    const ExperimentConfig cfg = parse_config_json(small_both_config());
    run_twin_experiment(cfg, a.path.string());

    ExperimentConfig other = cfg;
    other.observation.q = 5;  // different stride than the fitted model
    RunOptions opt;
    opt.dato_model_path = (a.path / "dato_model.bin").string();
    TempDir out("mismatch_out");
    CHECK_THROWS_AS(run_twin_experiment(other, out.path.string(), opt), ConfigError);
}

TEST_CASE("generate_data writes the training bundle") {
    TempDir dir("gen");
    ExperimentConfig cfg = parse_config_json(small_both_config());
    cfg.dynamics.train_steps = 80;
    cfg.observation.cycles = 7;
    const auto artifacts = generate_data(cfg, dir.path.string());

    CHECK(fs::exists(dir.path / "trajectory_train.csv"));
    CHECK(fs::exists(dir.path / "trajectory_truth.csv"));
    CHECK(fs::exists(dir.path / "observations_dato.csv"));
    CHECK(fs::exists(dir.path / "observations_qmda.csv"));
    CHECK(fs::exists(dir.path / "manifest.json"));

    const auto train = read_csv((dir.path / "trajectory_train.csv").string());
    REQUIRE(train.size() == 82);  // header + steps + 1
    CHECK(train[0] == std::vector<std::string>{"t", "x_0", "x_1", "x_2"});

    const auto obs = read_csv((dir.path / "observations_dato.csv").string());
    REQUIRE(obs.size() == 8);
    CHECK(obs[0] == std::vector<std::string>{"k", "t", "y_0", "y_1"});

    for (const auto& name : artifacts) CHECK(fs::exists(dir.path / name));
}

TEST_CASE("scaling probes return exact model counts") {
    const auto names = scaling_probe_names();
    CHECK(names.size() >= 13);
    // a cheap representative subset; the acceptance binary covers the full list
    for (const std::string name : {"gram", "predict", "likelihood", "project", "reconstruct",
                                   "evolve", "measure", "update", "koopman_build"}) {
        CHECK(std::find(names.begin(), names.end(), name) != names.end());
        const ProbeSample s = run_scaling_probe(name, 64);
        CHECK(s.count == s.expected);
        CHECK(s.count > 0);
    }
    CHECK_THROWS_AS(run_scaling_probe("not_a_probe", 10), ConfigError);
}

TEST_CASE("probe scaling fits the expected exponents") {
    const ProbeScalingReport g = run_probe_scaling("gram", {64, 128, 256});
    CHECK(g.counts_match_model);
    CHECK(g.scaling.exponent == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(g.model_exponent == doctest::Approx(2.0).epsilon(1e-9));

    const ProbeScalingReport e = run_probe_scaling("evolve", {16, 32, 64});
    CHECK(e.counts_match_model);
    CHECK(e.scaling.exponent == doctest::Approx(3.0).epsilon(1e-9));
}
