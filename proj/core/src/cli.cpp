#include "transferda/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "transferda/complexity.hpp"
#include "transferda/errors.hpp"
#include "transferda/harness.hpp"
#include "transferda/io.hpp"

namespace tda {

namespace {

void apply_seed_override(ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.dynamics.seed_train = seed;
    cfg.dynamics.seed_truth = seed + 1;
    cfg.observation.seed_noise = seed + 2;
}

std::string cost_report_json(const CostReport& rep) {
    std::string j = "{\"framework\":\"" + rep.framework + "\",\"items\":[";
    for (std::size_t i = 0; i < rep.items.size(); ++i) {
        const CostItem& it = rep.items[i];
        if (i) j += ",";
        j += "{\"stage\":\"" + it.stage + "\",\"phase\":\"" + it.phase + "\",";
        j += "\"formula\":\"" + it.formula + "\",";
        j += "\"model_ops\":" + std::to_string(it.model_ops) + ",";
        j += "\"table_estimate\":" + fmt_g17(it.table_estimate) + ",";
        j += "\"table_2sig\":\"" + fmt_2sig(it.table_estimate) + "\"}";
    }
    j += "],\"offline_model_total\":" + std::to_string(rep.offline_model_total);
    j += ",\"cycle_model_total\":" + std::to_string(rep.cycle_model_total);
    j += ",\"offline_table_total\":" + fmt_g17(rep.offline_table_total);
    j += ",\"cycle_table_total\":" + fmt_g17(rep.cycle_table_total);
    j += ",\"dominant_offline\":\"" + rep.dominant_offline + "\"";
    j += ",\"dominant_cycle\":\"" + rep.dominant_cycle + "\"}";
    return j;
}

void print_cost_report(const CostReport& rep) {
    std::printf("framework %s\n", rep.framework.c_str());
    std::printf("%-12s %-10s %-18s %18s %12s\n", "stage", "phase", "formula", "model_ops",
                "table");
    for (const CostItem& it : rep.items)
        std::printf("%-12s %-10s %-18s %18lld %12s\n", it.stage.c_str(), it.phase.c_str(),
                    it.formula.c_str(), it.model_ops, fmt_2sig(it.table_estimate).c_str());
    std::printf("offline   model_ops %lld  table %s  dominant %s\n", rep.offline_model_total,
                fmt_2sig(rep.offline_table_total).c_str(), rep.dominant_offline.c_str());
    std::printf("per-cycle model_ops %lld  table %s  dominant %s\n", rep.cycle_model_total,
                fmt_2sig(rep.cycle_table_total).c_str(), rep.dominant_cycle.c_str());
}

void deliver(const std::string& text, const std::string& out_file) {
    if (out_file.empty())
        std::fputs(text.c_str(), stdout);
    else
        write_text_file(out_file, text);
}

std::string probe_report_json(const ProbeScalingReport& rep) {
    std::string j = "{\"probe\":\"" + rep.scaling.probe + "\",\"samples\":[";
    for (std::size_t i = 0; i < rep.scaling.samples.size(); ++i) {
        const ScalingSample& s = rep.scaling.samples[i];
        if (i) j += ",";
        j += "{\"size\":" + std::to_string(s.size) + ",\"count\":" + std::to_string(s.count);
        j += ",\"expected\":" + std::to_string(rep.expected[i]);
        j += ",\"seconds\":" + fmt_g17(s.seconds) + "}";
    }
    j += "],\"exponent\":" + fmt_g17(rep.scaling.exponent);
    j += ",\"model_exponent\":" + fmt_g17(rep.model_exponent);
    j += ",\"residual\":" + fmt_g17(rep.scaling.residual);
    j += ",\"time_exponent\":" + fmt_g17(rep.scaling.time_exponent);
    j += std::string(",\"counts_match_model\":") + (rep.counts_match_model ? "true" : "false") +
         "}";
    return j;
}

int run_experiment_command(const std::string& config_path, const std::string& out_dir,
                           bool seed_given, std::uint64_t seed, const RunOptions& options,
                           const std::string& force_framework, bool zero_cycles) {
    ExperimentConfig cfg = load_config(config_path);
    if (seed_given) apply_seed_override(cfg, seed);
    if (!force_framework.empty()) cfg.framework = force_framework;
    if (zero_cycles) cfg.observation.cycles = 0;

    const TwinResult res = run_twin_experiment(cfg, out_dir, options);
    std::printf("wrote %s (config %s)\n", out_dir.c_str(), config_hash(cfg).c_str());
    if (res.has_dato) {
        std::printf("dato  m=%lld S=%d cycles=%d rmse=%.6f free=%.6f counters_ok=%s\n",
                    res.dato.m, res.dato.S, res.dato.cycles, res.dato.rmse_analysis_mean,
                    res.dato.rmse_freerun_mean, res.dato.counters_match_model ? "yes" : "no");
    }
    if (res.has_qmda) {
        std::printf(
            "qmda  N=%lld L=%d cycles=%d log_score=%.6f climatology=%.6f hit=%.3f "
            "skipped=%d counters_ok=%s\n",
            res.qmda.N, res.qmda.L, res.qmda.cycles, res.qmda.mean_log_score,
            res.qmda.climatology_log_score, res.qmda.hit_rate, res.qmda.skipped_updates,
            res.qmda.counters_match_model ? "yes" : "no");
    }
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"transfer-operator and density-operator assimilation toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", out_file;
    std::uint64_t seed = 0;
    bool json_out = false;

    // generate / fit / assimilate
    auto add_run_opts = [&](CLI::App* sub, bool need_config) {
        auto* c = sub->add_option("--config", config_path, "experiment config JSON");
        if (need_config) c->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "override seeds: train=s truth=s+1 noise=s+2");
    };

    CLI::App* cmd_generate = app.add_subcommand("generate", "write trajectory and observation CSVs");
    add_run_opts(cmd_generate, true);

    CLI::App* cmd_fit_dato = app.add_subcommand("fit-dato", "fit and persist the transfer model");
    add_run_opts(cmd_fit_dato, true);

    CLI::App* cmd_fit_qmda = app.add_subcommand("fit-qmda", "fit and persist the density model");
    add_run_opts(cmd_fit_qmda, true);

    std::string dato_model_path, qmda_model_path;
    CLI::App* cmd_assim = app.add_subcommand("assimilate", "run the configured twin experiment");
    add_run_opts(cmd_assim, true);
    cmd_assim->add_option("--dato-model", dato_model_path, "reuse a fitted transfer model");
    cmd_assim->add_option("--qmda-model", qmda_model_path, "reuse a fitted density model");

    // costs
    std::string framework = "both";
    DatoCostConfig dc;
    dc.n = 3;
    dc.m = 2800;
    dc.S = 2000;
    dc.p = 2;
    dc.q = 100;
    dc.K = 1;
    QmdaCostConfig qc;
    qc.N = 64000;
    qc.L = 1000;
    qc.d = 3;
    qc.r = 5000;
    qc.S_qmda = 32;
    qc.q = 100;
    qc.K = 1;
    qc.k_iter = 50;
    qc.multi_horizon = true;
    CLI::App* cmd_costs = app.add_subcommand("costs", "dual-convention cost tables");
    cmd_costs->add_option("--framework", framework, "dato | qmda | both")
        ->check(CLI::IsMember({"dato", "qmda", "both"}));
    cmd_costs->add_option("--n", dc.n, "state dimension");
    cmd_costs->add_option("--m", dc.m, "training pairs");
    cmd_costs->add_option("--S", dc.S, "spectral truncation");
    cmd_costs->add_option("--p", dc.p, "observed components");
    cmd_costs->add_option("--q", dc.q, "steps between observations");
    cmd_costs->add_option("--K", dc.K, "assimilation cycles");
    cmd_costs->add_option("--N", qc.N, "density training samples");
    cmd_costs->add_option("--L", qc.L, "basis size");
    cmd_costs->add_option("--d", qc.d, "embedded point dimension");
    cmd_costs->add_option("--r", qc.r, "kNN sparsity");
    cmd_costs->add_option("--Sq", qc.S_qmda, "partition cells");
    cmd_costs->add_option("--k-iter", qc.k_iter, "assumed Sinkhorn sweeps");
    cmd_costs->add_flag("--multi", qc.multi_horizon, "build the full horizon family");
    cmd_costs->add_flag("--measure-diag", qc.measure_diag_opt,
                        "diagonal-readout counting for the measure row");
    cmd_costs->add_flag("--json", json_out, "machine-readable output");
    cmd_costs->add_option("--out-file", out_file, "write the report here instead of stdout");

    // breakeven
    long long be_L = 1000, be_m = 2800, be_p = 1, be_N = 0;
    CLI::App* cmd_break = app.add_subcommand("breakeven", "n* = L^3/(m p) and companions");
    cmd_break->add_option("--L", be_L, "basis size");
    cmd_break->add_option("--m", be_m, "training pairs");
    cmd_break->add_option("--p", be_p, "observed components");
    cmd_break->add_option("--N", be_N, "density training samples (adds the kernel ratio)");

    // ratio-curve
    DatoCostConfig rc_d;
    rc_d.n = 3;
    rc_d.m = 2800;
    rc_d.S = 1000;
    rc_d.p = 2;
    QmdaCostConfig rc_q;
    rc_q.L = 1000;
    rc_q.S_qmda = 32;
    long long n_min = 10, n_max = 10000000;
    int per_decade = 5;
    CLI::App* cmd_ratio = app.add_subcommand("ratio-curve", "per-cycle cost ratio over ambient n");
    cmd_ratio->add_option("--m", rc_d.m, "training pairs");
    cmd_ratio->add_option("--S", rc_d.S, "spectral truncation");
    cmd_ratio->add_option("--p", rc_d.p, "observed components");
    cmd_ratio->add_option("--L", rc_q.L, "basis size");
    cmd_ratio->add_option("--Sq", rc_q.S_qmda, "partition cells");
    cmd_ratio->add_option("--n-min", n_min, "grid start");
    cmd_ratio->add_option("--n-max", n_max, "grid end");
    cmd_ratio->add_option("--per-decade", per_decade, "grid points per decade");
    cmd_ratio->add_option("--out", out_dir, "output directory");

    // verify-scaling / bench
    std::string probe;
    std::vector<long long> sizes;
    CLI::App* cmd_verify = app.add_subcommand("verify-scaling",
                                              "check a stage counter against its cost model");
    cmd_verify->add_option("--probe", probe, "stage probe name")->required();
    cmd_verify->add_option("--sizes", sizes, "comma-separated problem sizes")
        ->required()
        ->delimiter(',');
    cmd_verify->add_flag("--json", json_out, "machine-readable output");
    CLI::App* cmd_bench = app.add_subcommand("bench", "time a stage probe across sizes");
    cmd_bench->add_option("--probe", probe, "stage probe name")->required();
    cmd_bench->add_option("--sizes", sizes, "comma-separated problem sizes")
        ->required()
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (cmd_generate->parsed()) {
            ExperimentConfig cfg = load_config(config_path);
            if (cmd_generate->count("--seed")) apply_seed_override(cfg, seed);
            const auto artifacts = generate_data(cfg, out_dir);
            std::printf("wrote %zu artifacts to %s\n", artifacts.size(), out_dir.c_str());
            return 0;
        }
        if (cmd_fit_dato->parsed())
            return run_experiment_command(config_path, out_dir, cmd_fit_dato->count("--seed") > 0,
                                          seed, {}, "dato", true);
        if (cmd_fit_qmda->parsed())
            return run_experiment_command(config_path, out_dir, cmd_fit_qmda->count("--seed") > 0,
                                          seed, {}, "qmda", true);
        if (cmd_assim->parsed()) {
            RunOptions options;
            options.dato_model_path = dato_model_path;
            options.qmda_model_path = qmda_model_path;
            return run_experiment_command(config_path, out_dir, cmd_assim->count("--seed") > 0,
                                          seed, options, "", false);
        }
        if (cmd_costs->parsed()) {
            qc.q = dc.q;
            qc.K = dc.K;
            std::string doc;
            if (json_out) {
                doc = "{";
                if (framework != "qmda") doc += "\"dato\":" + cost_report_json(dato_costs(dc));
                if (framework == "both") doc += ",";
                if (framework != "dato") doc += "\"qmda\":" + cost_report_json(qmda_costs(qc));
                if (framework == "both") {
                    doc += ",\"comparison\":{";
                    const double ns = breakeven(qc.L, dc.m);
                    const double po = prediction_overload(qc.L, dc.m);
                    const double kr = kernel_ratio(qc.N, dc.m);
                    doc += "\"breakeven_n_star\":" + fmt_g17(ns);
                    doc += ",\"breakeven_2sig\":\"" + fmt_2sig(ns) + "\"";
                    doc += ",\"prediction_overload\":" + fmt_g17(po);
                    doc += ",\"prediction_overload_2sig\":\"" + fmt_2sig(po) + "\"";
                    doc += ",\"kernel_ratio\":" + fmt_g17(kr);
                    doc += ",\"kernel_ratio_2sig\":\"" + fmt_2sig(kr) + "\"}";
                }
                doc += "}\n";
                deliver(doc, out_file);
            } else {
                if (framework != "qmda") print_cost_report(dato_costs(dc));
                if (framework == "both") std::printf("\n");
                if (framework != "dato") print_cost_report(qmda_costs(qc));
                if (framework == "both") {
                    const double ns = breakeven(qc.L, dc.m);
                    std::printf("\nbreakeven n* = %s (%s)\n", fmt_g17(ns).c_str(),
                                fmt_2sig(ns).c_str());
                    std::printf("prediction overload L^2/m = %s (%s)\n",
                                fmt_g17(prediction_overload(qc.L, dc.m)).c_str(),
                                fmt_2sig(prediction_overload(qc.L, dc.m)).c_str());
                    std::printf("kernel ratio N^2/m^2 = %s (%s)\n",
                                fmt_g17(kernel_ratio(qc.N, dc.m)).c_str(),
                                fmt_2sig(kernel_ratio(qc.N, dc.m)).c_str());
                }
            }
            return 0;
        }
        if (cmd_break->parsed()) {
            const double ns = breakeven(be_L, be_m, be_p);
            std::printf("n_star = %s (%s)\n", fmt_g17(ns).c_str(), fmt_2sig(ns).c_str());
            const double po = prediction_overload(be_L, be_m);
            std::printf("prediction_overload = %s (%s)\n", fmt_g17(po).c_str(),
                        fmt_2sig(po).c_str());
            if (be_N > 0) {
                const double kr = kernel_ratio(be_N, be_m);
                std::printf("kernel_ratio = %s (%s)\n", fmt_g17(kr).c_str(), fmt_2sig(kr).c_str());
            }
            return 0;
        }
        if (cmd_ratio->parsed()) {
            const std::vector<long long> grid = log_grid(n_min, n_max, per_decade);
            const std::vector<RatioPoint> curve = ratio_curve(rc_d, rc_q, grid);
            std::filesystem::create_directories(out_dir);

            std::string csv = "n,ratio\n";
            long long cross_grid = -1;
            for (const RatioPoint& pt : curve) {
                csv += std::to_string(pt.n) + "," + fmt_g17(pt.ratio) + "\n";
                if (cross_grid < 0 && pt.ratio >= 1.0) cross_grid = pt.n;
            }
            write_text_file((std::filesystem::path(out_dir) / "ratio.csv").string(), csv);

            const double m = static_cast<double>(rc_d.m), S = static_cast<double>(rc_d.S),
                         p = static_cast<double>(rc_d.p), L = static_cast<double>(rc_q.L),
                         Sq = static_cast<double>(rc_q.S_qmda);
            const double n_star = breakeven(rc_q.L, rc_d.m, rc_d.p);
            const double cross_model = (L * L * L + Sq * L - 2.0 * m * S - S * S) / (m * (p + 1.0));
            std::string th = "m,S,p,L,S_qmda,n_star,n_cross_model,n_cross_grid\n";
            th += std::to_string(rc_d.m) + "," + std::to_string(rc_d.S) + "," +
                  std::to_string(rc_d.p) + "," + std::to_string(rc_q.L) + "," +
                  std::to_string(rc_q.S_qmda) + "," + fmt_g17(n_star) + "," +
                  fmt_g17(cross_model) + "," + std::to_string(cross_grid) + "\n";
            write_text_file((std::filesystem::path(out_dir) / "threshold.csv").string(), th);

            std::printf("n_star = %s (%s)\n", fmt_g17(n_star).c_str(), fmt_2sig(n_star).c_str());
            std::printf("model crossing = %s, first grid crossing = %lld\n",
                        fmt_g17(cross_model).c_str(), cross_grid);
            return 0;
        }
        if (cmd_verify->parsed()) {
            const ProbeScalingReport rep = run_probe_scaling(probe, sizes);
            if (json_out) {
                std::fputs((probe_report_json(rep) + "\n").c_str(), stdout);
            } else {
                std::printf("probe %s\n", probe.c_str());
                std::printf("%10s %16s %16s %12s\n", "size", "count", "expected", "seconds");
                for (std::size_t i = 0; i < rep.scaling.samples.size(); ++i) {
                    const ScalingSample& s = rep.scaling.samples[i];
                    std::printf("%10lld %16llu %16llu %12.3e\n", s.size,
                                static_cast<unsigned long long>(s.count),
                                static_cast<unsigned long long>(rep.expected[i]), s.seconds);
                }
                std::printf("exponent %.6f (model %.6f), residual %.2e, time exponent %.3f\n",
                            rep.scaling.exponent, rep.model_exponent, rep.scaling.residual,
                            rep.scaling.time_exponent);
                std::printf("counts match model: %s\n", rep.counts_match_model ? "yes" : "no");
            }
            return rep.counts_match_model ? 0 : 1;
        }
        if (cmd_bench->parsed()) {
            const ProbeScalingReport rep = run_probe_scaling(probe, sizes);
            std::printf("probe %s\n", probe.c_str());
            std::printf("%10s %12s %16s\n", "size", "seconds", "count");
            for (const ScalingSample& s : rep.scaling.samples)
                std::printf("%10lld %12.3e %16llu\n", s.size, s.seconds,
                            static_cast<unsigned long long>(s.count));
            std::printf("time exponent %.3f (count exponent %.3f)\n", rep.scaling.time_exponent,
                        rep.scaling.exponent);
            return 0;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}

}  // namespace tda
