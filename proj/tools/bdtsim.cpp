// bdtsim: train tree models, map them onto analog CAM arrays, and run the
// behavioral simulations (inference, robustness sweeps, cost estimates).
//
// Subcommands: train | map | infer | sweep | cost | grng-test | report |
// calibrate-iv. Every option can come from an INI config (--config) and be
// overridden on the command line; all randomness flows from --seed, so a
// rerun with the same config and seed reproduces output files byte for byte.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bdtsim/acam.hpp"
#include "bdtsim/acam_sim.hpp"
#include "bdtsim/config.hpp"
#include "bdtsim/cost.hpp"
#include "bdtsim/dataset.hpp"
#include "bdtsim/grng.hpp"
#include "bdtsim/inference.hpp"
#include "bdtsim/sweep.hpp"
#include "bdtsim/train.hpp"
#include "bdtsim/tree.hpp"

namespace {

using namespace bdtsim;

struct DatasetOptions {
    std::string kind;  // "wdbc" or "mnist"
    std::string wdbc_path;
    std::string mnist_images, mnist_labels;
    std::string mnist_test_images, mnist_test_labels;
    long long limit = -1, test_limit = -1;
    double test_fraction = 0.2;
    std::uint64_t split_seed = 42;

    void add_flags(CLI::App* cmd, const Config& cfg) {
        kind = cfg.get_string("dataset", "kind", kind);
        wdbc_path = cfg.get_string("dataset", "wdbc", wdbc_path);
        mnist_images = cfg.get_string("dataset", "mnist_images", mnist_images);
        mnist_labels = cfg.get_string("dataset", "mnist_labels", mnist_labels);
        mnist_test_images = cfg.get_string("dataset", "mnist_test_images", mnist_test_images);
        mnist_test_labels = cfg.get_string("dataset", "mnist_test_labels", mnist_test_labels);
        limit = cfg.get_int("dataset", "limit", limit);
        test_limit = cfg.get_int("dataset", "test_limit", test_limit);
        test_fraction = cfg.get_double("dataset", "test_fraction", test_fraction);
        split_seed = static_cast<std::uint64_t>(cfg.get_int("dataset", "split_seed",
                                                            static_cast<long long>(split_seed)));
        cmd->add_option("--dataset", kind, "Dataset kind: wdbc or mnist");
        cmd->add_option("--wdbc", wdbc_path, "WDBC csv path");
        cmd->add_option("--mnist-images", mnist_images, "MNIST IDX image file (train)");
        cmd->add_option("--mnist-labels", mnist_labels, "MNIST IDX label file (train)");
        cmd->add_option("--mnist-test-images", mnist_test_images, "MNIST IDX image file (test)");
        cmd->add_option("--mnist-test-labels", mnist_test_labels, "MNIST IDX label file (test)");
        cmd->add_option("--limit", limit, "Cap on training samples (-1 = all)");
        cmd->add_option("--test-limit", test_limit, "Cap on test samples (-1 = all)");
        cmd->add_option("--test-fraction", test_fraction, "Held-out fraction when splitting");
        cmd->add_option("--split-seed", split_seed, "Seed for the train/test split");
    }

    std::pair<Dataset, Dataset> load() const {
        if (kind == "wdbc") {
            if (wdbc_path.empty()) throw std::runtime_error("dataset: --wdbc path required");
            Dataset all = load_wdbc(wdbc_path);
            return train_test_split(all, test_fraction, split_seed);
        }
        if (kind == "mnist") {
            if (mnist_images.empty() || mnist_labels.empty())
                throw std::runtime_error("dataset: --mnist-images/--mnist-labels required");
            Dataset train_d = load_mnist_idx(mnist_images, mnist_labels, limit);
            if (!mnist_test_images.empty()) {
                Dataset test_d = load_mnist_idx(mnist_test_images, mnist_test_labels, test_limit);
                return {std::move(train_d), std::move(test_d)};
            }
            return train_test_split(train_d, test_fraction, split_seed, false);
        }
        throw std::runtime_error("dataset: kind must be wdbc or mnist (got '" + kind + "')");
    }
};

struct NoiseOptions {
    NoiseSpec noise;
    int bits = 0;  // 0 = disabled

    void add_flags(CLI::App* cmd, const Config& cfg) {
        noise.input_sigma = cfg.get_double("noise", "input_sigma", 0.0);
        noise.read_sigma = cfg.get_double("noise", "read_sigma", 0.0);
        noise.write_sigma = cfg.get_double("noise", "write_sigma", 0.0);
        noise.drift = cfg.get_double("noise", "drift", 0.0);
        bits = static_cast<int>(cfg.get_int("noise", "bits", 0));
        cmd->add_option("--input-sigma", noise.input_sigma, "Dataset noise sigma");
        cmd->add_option("--read-sigma", noise.read_sigma, "Per-search threshold noise sigma");
        cmd->add_option("--write-sigma", noise.write_sigma, "Programming noise sigma");
        cmd->add_option("--bits", bits, "Threshold quantization bits (0 = analog)");
        cmd->add_option("--drift", noise.drift, "Entropy-source mean drift");
    }

    NoiseSpec resolve() const {
        NoiseSpec n = noise;
        if (bits > 0) n.bits = bits;
        n.validate();
        return n;
    }
};

GrngConfig grng_from(const Config& cfg, CLI::App* cmd, GrngConfig g = {}) {
    g.mu_p = cfg.get_double("grng", "mu_p", g.mu_p);
    g.sigma_p = cfg.get_double("grng", "sigma_p", g.sigma_p);
    g.drift = cfg.get_double("grng", "drift", g.drift);
    cmd->add_option("--mu-p", g.mu_p, "GRNG mean pulse width");
    cmd->add_option("--sigma-p", g.sigma_p, "GRNG pulse width spread");
    cmd->add_option("--grng-drift", g.drift, "GRNG pulse mean drift");
    return g;
}

CellIvModel iv_from(const Config& cfg) {
    CellIvModel iv;
    iv.on_conductance = cfg.get_double("iv_model", "on_conductance", iv.on_conductance);
    iv.subthreshold_slope = cfg.get_double("iv_model", "subthreshold_slope", iv.subthreshold_slope);
    iv.off_current = cfg.get_double("iv_model", "off_current", iv.off_current);
    iv.validate();
    return iv;
}

CostModel cost_from(const Config& cfg) {
    CostModel c;
    c.search_latency_ns = cfg.get_double("cost", "search_latency_ns", c.search_latency_ns);
    c.grng_latency_ns = cfg.get_double("cost", "grng_latency_ns", c.grng_latency_ns);
    c.program_latency_ns = cfg.get_double("cost", "program_latency_ns", c.program_latency_ns);
    c.search_energy_nj = cfg.get_double("cost", "search_energy_nj", c.search_energy_nj);
    c.grng_energy_nj = cfg.get_double("cost", "grng_energy_nj", c.grng_energy_nj);
    c.program_energy_nj = cfg.get_double("cost", "program_energy_nj", c.program_energy_nj);
    c.peripheral_latency_factor =
        cfg.get_double("cost", "peripheral_latency_factor", c.peripheral_latency_factor);
    c.peripheral_energy_factor =
        cfg.get_double("cost", "peripheral_energy_factor", c.peripheral_energy_factor);
    c.validate();
    return c;
}

std::vector<ModelSpec> parse_models(const std::vector<std::string>& specs) {
    std::vector<ModelSpec> out;
    for (const std::string& s : specs) {
        const std::size_t colon = s.find(':');
        if (colon == std::string::npos)
            throw std::runtime_error("model spec must look like KIND:DEPTH, got '" + s + "'");
        out.push_back({tree_kind_from_string(s.substr(0, colon)),
                       std::stoi(s.substr(colon + 1))});
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

// Find --config before CLI11 runs so config values can seed the defaults.
Config preload_config(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") return Config::load(argv[i + 1]);
    return Config{};
}

}  // namespace

int main(int argc, char** argv) {
    try {
        const Config cfg = preload_config(argc, argv);
        CLI::App app{"Bayesian decision trees on analog CAM: simulator and toolkit"};
        app.require_subcommand(1);
        std::string config_path;
        app.add_option("--config", config_path, "INI config file")->expected(1);

        std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("run", "seed", 1));
        unsigned threads = static_cast<unsigned>(cfg.get_int("run", "threads", 0));
        app.add_option("--seed", seed, "Master seed");
        app.add_option("--threads", threads, "Worker threads (0 = hardware)");

        // ---- train ----------------------------------------------------
        auto* cmd_train = app.add_subcommand("train", "Train a DT or BDT and write tree JSON");
        DatasetOptions train_data;
        train_data.add_flags(cmd_train, cfg);
        std::string train_kind = cfg.get_string("train", "kind", "BDT");
        TrainOptions train_opt;
        train_opt.max_depth = static_cast<int>(cfg.get_int("train", "max_depth", 8));
        train_opt.min_samples = static_cast<int>(cfg.get_int("train", "min_samples", 2));
        train_opt.sigma_max = cfg.get_double("train", "sigma_max", 0.2);
        std::string tree_out = cfg.get_string("train", "out", "tree.json");
        cmd_train->add_option("--kind", train_kind, "DT or BDT");
        cmd_train->add_option("--max-depth", train_opt.max_depth, "Maximum tree depth");
        cmd_train->add_option("--min-samples", train_opt.min_samples, "Minimum samples to split");
        cmd_train->add_option("--sigma-max", train_opt.sigma_max, "Clip on node sigma");
        cmd_train->add_option("--out", tree_out, "Output tree JSON");

        // ---- map ------------------------------------------------------
        auto* cmd_map = app.add_subcommand("map", "Map a tree JSON onto an ACAM array");
        std::string map_tree, map_strategy = "node_wise", map_out = "array.json";
        cmd_map->add_option("--tree", map_tree, "Tree JSON")->required();
        cmd_map->add_option("--strategy", map_strategy, "node_wise or feature_wise");
        cmd_map->add_option("--out", map_out, "Output array JSON");

        // ---- infer ----------------------------------------------------
        auto* cmd_infer = app.add_subcommand("infer", "Run inference over the test set");
        DatasetOptions infer_data;
        infer_data.add_flags(cmd_infer, cfg);
        NoiseOptions infer_noise;
        infer_noise.add_flags(cmd_infer, cfg);
        GrngConfig infer_grng = grng_from(cfg, cmd_infer);
        std::string infer_array, infer_tree;
        std::size_t infer_iters = static_cast<std::size_t>(cfg.get_int("infer", "n_iter", 100));
        std::string infer_out = cfg.get_string("infer", "out", "results.jsonl");
        std::string infer_summary = cfg.get_string("infer", "summary", "summary.json");
        cmd_infer->add_option("--array", infer_array, "Array JSON (device inference)");
        cmd_infer->add_option("--tree", infer_tree, "Tree JSON (software inference)");
        cmd_infer->add_option("--n-iter", infer_iters, "Sampling iterations per decision");
        cmd_infer->add_option("--out", infer_out, "Per-sample JSONL output");
        cmd_infer->add_option("--summary", infer_summary, "Summary JSON output");

        // ---- sweep ----------------------------------------------------
        auto* cmd_sweep = app.add_subcommand("sweep", "Robustness sweep over a noise axis");
        DatasetOptions sweep_data;
        sweep_data.add_flags(cmd_sweep, cfg);
        NoiseOptions sweep_noise;
        sweep_noise.add_flags(cmd_sweep, cfg);
        GrngConfig sweep_grng = grng_from(cfg, cmd_sweep);
        TrainOptions sweep_opt;
        sweep_opt.min_samples = static_cast<int>(cfg.get_int("train", "min_samples", 2));
        sweep_opt.sigma_max = cfg.get_double("train", "sigma_max", 0.2);
        std::string sweep_axis = cfg.get_string("sweep", "axis", "device_noise");
        std::vector<double> sweep_values =
            cfg.get_double_list("sweep", "values", {0.0, 0.05, 0.1, 0.15, 0.2, 0.3});
        std::vector<std::string> sweep_models =
            cfg.get_string_list("sweep", "models", {"DT:8", "BDT:8"});
        std::size_t sweep_trials = static_cast<std::size_t>(cfg.get_int("sweep", "trials", 5));
        std::size_t sweep_iters = static_cast<std::size_t>(cfg.get_int("sweep", "n_iter", 100));
        std::string sweep_out = cfg.get_string("sweep", "out", "sweep.json");
        std::string sweep_format = cfg.get_string("sweep", "format", "json");
        cmd_sweep->add_option("--axis", sweep_axis, "input_noise|device_noise|bits|depth");
        cmd_sweep->add_option("--values", sweep_values, "Axis points")->delimiter(',');
        cmd_sweep->add_option("--models", sweep_models, "Models as KIND:DEPTH")->delimiter(',');
        cmd_sweep->add_option("--trials", sweep_trials, "Repetitions per point");
        cmd_sweep->add_option("--n-iter", sweep_iters, "Sampling iterations (BDT)");
        cmd_sweep->add_option("--out", sweep_out, "Output path");
        cmd_sweep->add_option("--format", sweep_format, "json or csv");

        // ---- cost -----------------------------------------------------
        auto* cmd_cost = app.add_subcommand("cost", "Latency/energy estimate for an array");
        std::string cost_array, cost_kind = "BDT", cost_out = "cost.json", cost_baseline;
        std::size_t cost_iters = static_cast<std::size_t>(cfg.get_int("infer", "n_iter", 100));
        cmd_cost->add_option("--array", cost_array, "Array JSON")->required();
        cmd_cost->add_option("--kind", cost_kind, "DT or BDT");
        cmd_cost->add_option("--n-iter", cost_iters, "Sampling iterations");
        cmd_cost->add_option("--baseline", cost_baseline, "cpu_dt|cpu_bdt|gpu_bdt comparison");
        cmd_cost->add_option("--out", cost_out, "Output report JSON");

        // ---- grng-test ------------------------------------------------
        auto* cmd_grng = app.add_subcommand("grng-test", "Statistical checks on the GRNG model");
        GrngConfig grng_cfg = grng_from(cfg, cmd_grng);
        std::size_t grng_n = static_cast<std::size_t>(cfg.get_int("grng", "n", 100000));
        double grng_sigma = cfg.get_double("grng", "sigma_target", 0.1);
        double grng_alpha = cfg.get_double("grng", "alpha", 0.01);
        std::string grng_out = cfg.get_string("grng", "out", "grng_report.json");
        std::string grng_qq = cfg.get_string("grng", "qq", "");
        cmd_grng->add_option("--n", grng_n, "Sample count");
        cmd_grng->add_option("--sigma-target", grng_sigma, "Target output sigma");
        cmd_grng->add_option("--alpha", grng_alpha, "KS significance level");
        cmd_grng->add_option("--out", grng_out, "Report JSON");
        cmd_grng->add_option("--qq", grng_qq, "Two-column quantile CSV");

        // ---- report ---------------------------------------------------
        auto* cmd_report = app.add_subcommand("report", "Convert sweep results between formats");
        std::string report_in, report_format = "csv", report_out;
        cmd_report->add_option("--in", report_in, "Sweep JSON")->required();
        cmd_report->add_option("--format", report_format, "csv or json");
        cmd_report->add_option("--out", report_out, "Output path (stdout table if omitted)");

        // ---- calibrate-iv ----------------------------------------------
        auto* cmd_cal = app.add_subcommand("calibrate-iv", "Fit the cell I-V model to a CSV");
        std::string cal_csv, cal_out = "iv.json";
        cmd_cal->add_option("--csv", cal_csv, "Two-column (voltage, current) CSV")->required();
        cmd_cal->add_option("--out", cal_out, "Fitted model JSON");

        CLI11_PARSE(app, argc, argv);

        if (*cmd_train) {
            auto [train_set, test_set] = train_data.load();
            const TreeModel tree = train(train_set, tree_kind_from_string(train_kind), train_opt);
            save_tree(tree, tree_out);
            std::size_t internal = tree.internal_node_ids().size();
            std::printf("trained %s depth=%d: %zu internal nodes, %zu leaves (train n=%zu, test n=%zu)\n",
                        train_kind.c_str(), tree.depth, internal, tree.n_leaves(),
                        train_set.size(), test_set.size());
            std::printf("wrote %s\n", tree_out.c_str());
        } else if (*cmd_map) {
            const TreeModel tree = load_tree(map_tree);
            AcamArray array;
            if (map_strategy == "node_wise")
                array = map_node_wise(tree);
            else if (map_strategy == "feature_wise")
                array = map_feature_wise(tree);
            else
                throw std::runtime_error("map: strategy must be node_wise or feature_wise");
            save_array(array, map_out);
            std::printf("mapped %zu paths x %zu columns (%s)\n", array.rows, array.cols,
                        map_strategy.c_str());
            std::printf("wrote %s\n", map_out.c_str());
        } else if (*cmd_infer) {
            if (infer_array.empty() == infer_tree.empty())
                throw std::runtime_error("infer: give exactly one of --array or --tree");
            auto [train_set, test_set] = infer_data.load();
            const NoiseSpec noise = infer_noise.resolve();
            const CellIvModel iv = iv_from(cfg);
            BatchResult br;
            if (!infer_array.empty()) {
                const AcamArray array = load_array(infer_array);
                if (array.strategy == MappingStrategy::NODE_WISE) {
                    // Thresholds are written once; the sampling all happens
                    // on the query side.
                    const AcamArray programmed =
                        program(array, noise, derive_key(seed, 0xF1AEu));
                    const SearchEngine eng(programmed, iv);
                    br = predict_batch(eng, test_set, infer_iters, noise, infer_grng, seed,
                                       threads);
                } else {
                    // Feature-wise arrays rewrite their cells every
                    // iteration; programming effects apply inside.
                    br = predict_batch_feature_wise(array, test_set, infer_iters, noise,
                                                    infer_grng, iv, seed, threads);
                }
            } else {
                const TreeModel tree = load_tree(infer_tree);
                br = predict_batch_software(tree, test_set, infer_iters, noise, infer_grng, seed,
                                            threads);
            }
            std::string lines;
            for (std::size_t i = 0; i < br.per_sample.size(); ++i) {
                const InferenceResult& r = br.per_sample[i];
                nlohmann::json j{{"sample_id", i},
                                 {"predicted", r.predicted},
                                 {"confidence", r.confidence},
                                 {"visit_counts", r.visit_counts}};
                lines += j.dump();
                lines += '\n';
            }
            write_text(infer_out, lines);
            nlohmann::json summary{{"accuracy", br.accuracy},
                                   {"mean_confidence", br.mean_confidence},
                                   {"n_samples", br.per_sample.size()},
                                   {"n_iter", infer_iters},
                                   {"write_count", br.write_count}};
            write_text(infer_summary, summary.dump(2) + "\n");
            std::printf("accuracy %.4f  mean confidence %.4f  (n=%zu)\n", br.accuracy,
                        br.mean_confidence, br.per_sample.size());
        } else if (*cmd_sweep) {
            auto [train_set, test_set] = sweep_data.load();
            SweepSpec spec;
            spec.axis = axis_from_string(sweep_axis);
            spec.values = sweep_values;
            spec.models = parse_models(sweep_models);
            spec.trials = sweep_trials;
            spec.n_iter = sweep_iters;
            spec.seed = seed;
            const std::vector<SweepPoint> pts =
                run_sweep(spec, train_set, test_set, sweep_noise.resolve(), sweep_grng,
                          iv_from(cfg), sweep_opt, threads);
            emit_report(spec.axis, pts, sweep_format, sweep_out);
            for (const auto& p : pts)
                std::printf("%-12s %-10s acc %.4f +- %.4f\n", to_string(spec.axis).c_str(),
                            p.model.c_str(), p.mean_acc, p.std_acc);
            std::printf("wrote %s\n", sweep_out.c_str());
        } else if (*cmd_cost) {
            const AcamArray array = load_array(cost_array);
            const CostReport report =
                estimate_cost(array, tree_kind_from_string(cost_kind), cost_iters, cost_from(cfg));
            nlohmann::json j = to_json(report);
            if (!cost_baseline.empty())
                j["comparison"] = to_json(compare_reference(report,
                                                            baseline_from_string(cost_baseline)));
            write_text(cost_out, j.dump(2) + "\n");
            std::printf("latency %.6g ns/decision, energy %.6g nJ/decision\n",
                        report.latency_ns_per_decision, report.energy_nj_per_decision);
            if (!cost_baseline.empty())
                std::printf("vs %s: speedup %.3g, energy ratio %.3g\n", cost_baseline.c_str(),
                            j["comparison"]["speedup"].get<double>(),
                            j["comparison"]["energy_ratio"].get<double>());
        } else if (*cmd_grng) {
            GrngPipeline pipe = grng_cfg.pipeline(grng_sigma);
            RngStream rs = RngStream::from(seed, 0x62u);
            std::vector<double> samples(grng_n);
            for (double& s : samples) s = sample_epsilon(pipe, rs);
            const QualityReport qr = quality_report(samples, grng_alpha);
            nlohmann::json j = to_json(qr);
            j["pipeline"] = {{"mu_p", pipe.mu_p},
                             {"sigma_p", pipe.sigma_p},
                             {"sigma_target", pipe.sigma_target},
                             {"drift", pipe.drift},
                             {"scale", pipe.scale()},
                             {"v_comp", pipe.v_comp()}};
            write_text(grng_out, j.dump(2) + "\n");
            if (!grng_qq.empty()) {
                std::sort(samples.begin(), samples.end());
                std::string csv = "theoretical_quantile,sample_quantile\n";
                char buf[80];
                for (std::size_t i = 0; i < samples.size(); ++i) {
                    const double q = normal_quantile((static_cast<double>(i) + 0.5) /
                                                     static_cast<double>(samples.size()));
                    std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", q, samples[i]);
                    csv += buf;
                }
                write_text(grng_qq, csv);
            }
            std::printf("n=%zu mean %.3g stddev %.4g qq_corr %.5f ks %.4g (%s)\n", qr.n, qr.mean,
                        qr.stddev, qr.qq_correlation, qr.ks_statistic,
                        qr.ks_pass ? "pass" : "fail");
        } else if (*cmd_report) {
            std::ifstream in(report_in);
            if (!in) throw std::runtime_error("report: cannot open " + report_in);
            nlohmann::json j;
            in >> j;
            auto [axis, pts] = sweep_from_json(j);
            if (report_out.empty()) {
                std::printf("%-12s %-10s %9s %9s %6s\n", "axis", "model", "mean_acc", "std_acc",
                            "trials");
                for (const auto& p : pts)
                    std::printf("%-12g %-10s %9.4f %9.4f %6zu\n", p.value, p.model.c_str(),
                                p.mean_acc, p.std_acc, p.trials);
            } else {
                emit_report(axis, pts, report_format, report_out);
                std::printf("wrote %s\n", report_out.c_str());
            }
        } else if (*cmd_cal) {
            std::ifstream in(cal_csv);
            if (!in) throw std::runtime_error("calibrate-iv: cannot open " + cal_csv);
            std::vector<std::pair<double, double>> points;
            std::string line;
            while (std::getline(in, line)) {
                double v, i;
                if (std::sscanf(line.c_str(), "%lf,%lf", &v, &i) == 2) points.emplace_back(v, i);
            }
            const CellIvModel fit = fit_iv_model(points);
            write_text(cal_out, to_json(fit).dump(2) + "\n");
            std::printf("fit: on %.6g, slope %.6g dec/V, off %.6g (from %zu points)\n",
                        fit.on_conductance, fit.subthreshold_slope, fit.off_current,
                        points.size());
        }
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
