// Acceptance suite: end-to-end checks of the simulator against its
// contracted behaviors, one printed pass/fail line per criterion. The last
// criterion shells out to the CLI binary (path given as argv[1]) and
// compares produced files byte for byte across reruns.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "bdtsim/acam_sim.hpp"
#include "bdtsim/cost.hpp"
#include "bdtsim/grng.hpp"
#include "bdtsim/inference.hpp"
#include "bdtsim/sweep.hpp"
#include "bdtsim/train.hpp"
#include "support.hpp"

using namespace bdtsim;

namespace {

int g_failures = 0;

double now_s() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

void report(int num, const std::string& name, bool pass, const std::string& detail,
            double elapsed) {
    std::printf("[%s] criterion %2d %-22s %s (%.1fs)\n", pass ? "PASS" : "FAIL", num,
                name.c_str(), detail.c_str(), elapsed);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void soft(const std::string& detail) {
    std::printf("[soft]              %s\n", detail.c_str());
    std::fflush(stdout);
}

template <typename Fn>
void criterion(int num, const std::string& name, Fn&& fn) {
    const double t0 = now_s();
    try {
        auto [pass, detail] = fn();
        report(num, name, pass, detail, now_s() - t0);
    } catch (const std::exception& e) {
        report(num, name, false, std::string("exception: ") + e.what(), now_s() - t0);
    }
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// Low-discrepancy query points over [0,1]^F (Kronecker sequence on square
// roots of primes); continuous coordinates avoid landing exactly on stored
// thresholds.
std::vector<double> grid_point(std::size_t i, std::size_t f_count) {
    static const double primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
    std::vector<double> x(f_count);
    for (std::size_t f = 0; f < f_count; ++f) {
        const double a = std::sqrt(primes[f % 8]);
        const double v = 0.5 + static_cast<double>(i + 1) * a;
        x[f] = v - std::floor(v);
    }
    return x;
}

struct Wdbc {
    Dataset train_set, test_set;
    TreeModel bdt, dt;
};

Wdbc load_wdbc_fixture() {
    Wdbc w;
    const Dataset all = load_wdbc(testsup::data_dir() + "/wdbc.csv");
    auto split = train_test_split(all, 0.2, 42);
    w.train_set = std::move(split.first);
    w.test_set = std::move(split.second);
    TrainOptions opt;
    opt.max_depth = 2;
    w.bdt = train(w.train_set, TreeKind::BDT, opt);
    w.dt = train(w.train_set, TreeKind::DT, opt);
    return w;
}

bool run_cli(const std::string& cli, const std::string& args, const std::string& log) {
    const std::string cmd = cli + " " + args + " >>" + log + " 2>&1";
    return std::system(cmd.c_str()) == 0;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    const CellIvModel iv;
    const GrngConfig grng;

    // ---- 1 & 2: oracle equivalence and partition property --------------
    std::size_t c1_checked = 0, c1_bad = 0, c2_bad = 0;
    {
        const double t0 = now_s();
        RngStream rs(20260810);
        double t_partition = 0.0;
        for (int tree_i = 0; tree_i < 50; ++tree_i) {
            const int f_count = 2 + static_cast<int>(rs.next_u64() % 7);  // 2..8
            const int classes = 2 + static_cast<int>(rs.next_u64() % 3);
            const TreeModel t = testsup::random_tree(rs, 6, f_count, classes);
            const AcamArray a = map_node_wise(t);
            const SearchEngine eng(a, iv);
            std::vector<double> query(a.cols);
            for (std::size_t q = 0; q < 10000; ++q) {
                const std::vector<double> x = grid_point(q, static_cast<std::size_t>(f_count));
                for (std::size_t c = 0; c < a.cols; ++c)
                    query[c] = x[static_cast<std::size_t>(a.col_meta[c].feature)];
                const std::size_t want = traverse_software(t, x, {});
                const std::size_t got = eng.search(query, 0.0, 1).matched_row;
                if (got != want) ++c1_bad;
                const double tp = now_s();
                if (digital_match(a, query).size() != 1) ++c2_bad;
                t_partition += now_s() - tp;
                ++c1_checked;
            }
        }
        const double elapsed = now_s() - t0;
        report(1, "oracle-equivalence", c1_bad == 0 && elapsed < 60.0,
               fmt("%zu/%zu queries agree across 50 trees", c1_checked - c1_bad, c1_checked),
               elapsed - t_partition);
        report(2, "partition-property", c2_bad == 0,
               fmt("%zu violations in %zu queries", c2_bad, c1_checked), t_partition);
    }

    const Wdbc w = load_wdbc_fixture();

    // ---- 3: mapping equivalence ----------------------------------------
    criterion(3, "mapping-equivalence", [&]() -> std::pair<bool, std::string> {
        const AcamArray nw = map_node_wise(w.bdt);
        const AcamArray fw = map_feature_wise(w.bdt);
        const SearchEngine eng(nw, iv);
        const auto pipelines = make_column_pipelines(nw, grng);
        std::size_t mismatches = 0, iters = 0;
        for (std::size_t s = 0; s < 20; ++s) {
            const std::uint64_t seed = derive_key(77, seedtag::kSample, s);
            const InferenceResult a = infer_acam(eng, w.test_set.row(s), 1000, NoiseSpec{},
                                                 pipelines, seed, true);
            const InferenceResult b = infer_feature_wise(fw, w.test_set.row(s), 1000, NoiseSpec{},
                                                         grng, iv, seed, true);
            for (std::size_t i = 0; i < a.per_iter_rows.size(); ++i, ++iters)
                mismatches += a.per_iter_rows[i] != b.per_iter_rows[i];
        }
        return {mismatches == 0,
                fmt("%zu iterations x 20 samples, %zu row mismatches", iters / 20, mismatches)};
    });

    // ---- 4: training oracle --------------------------------------------
    criterion(4, "training-oracle", [&]() -> std::pair<bool, std::string> {
        RngStream rs(424242);
        std::size_t checked = 0;
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const int k = 2 + static_cast<int>(rs.next_u64() % 2);
            const std::size_t n = 2 + rs.next_u64() % 19;
            std::vector<double> xs;
            std::vector<int> ys;
            for (std::size_t i = 0; i < n; ++i) {
                xs.push_back(static_cast<double>(rs.next_u64() % 10) / 9.0);
                ys.push_back(static_cast<int>(rs.next_u64() % static_cast<std::uint64_t>(k)));
            }
            if (testsup::brute_candidates(xs).empty()) continue;
            const ThresholdDistribution got = threshold_distribution(xs, ys, k);
            const testsup::BruteResult want = testsup::brute_threshold_distribution(xs, ys, k);
            worst = std::max({worst, std::abs(got.mu - want.mu), std::abs(got.sigma - want.sigma)});
            ++checked;
        }
        return {worst <= 1e-12 && checked >= 80,
                fmt("%zu micro-datasets, worst |delta| = %.2e", checked, worst)};
    });

    // ---- 5: breast-cancer demo ------------------------------------------
    criterion(5, "breast-cancer-demo", [&]() -> std::pair<bool, std::string> {
        const AcamArray a = map_node_wise(w.bdt);
        if (a.rows != 4 || a.cols != 3)
            return {false, fmt("array is %zux%zu, want 4x3", a.rows, a.cols)};

        const SearchEngine eng(a, iv);
        const BatchResult bdt_batch =
            predict_batch(eng, w.test_set, 100, NoiseSpec{}, grng, 2024);
        const BatchResult dt_batch =
            predict_batch_software(w.dt, w.test_set, 1, NoiseSpec{}, grng, 2024);

        // The showcased datapoint: a truly malignant sample the model calls
        // malignant with split confidence.
        double best_conf = -1.0;
        std::size_t best_sample = 0;
        for (std::size_t s = 0; s < w.test_set.size(); ++s) {
            const InferenceResult& r = bdt_batch.per_sample[s];
            if (r.predicted != 1 || w.test_set.labels[s] != 1) continue;
            if (r.confidence <= 0.5 || r.confidence >= 1.0) continue;
            if (best_conf < 0 || std::abs(r.confidence - 0.88) < std::abs(best_conf - 0.88)) {
                best_conf = r.confidence;
                best_sample = s;
            }
        }
        std::string feats;
        for (int id : w.bdt.internal_node_ids())
            feats += (feats.empty() ? "" : ", ") +
                     w.bdt.feature_names[static_cast<std::size_t>(w.bdt.node(id).feature)];
        soft(fmt("demo node features: %s", feats.c_str()));
        if (best_conf > 0)
            soft(fmt("demo sample %zu confidence %.2f (soft target 0.88 +- 0.10: %s)",
                     best_sample, best_conf,
                     std::abs(best_conf - 0.88) <= 0.10 ? "inside" : "outside"));

        const bool pass = best_conf > 0.5 && best_conf < 1.0 && bdt_batch.accuracy >= 0.88 &&
                          bdt_batch.accuracy >= dt_batch.accuracy - 0.03;
        return {pass, fmt("BDT acc %.4f (DT %.4f), demo confidence %.2f", bdt_batch.accuracy,
                          dt_batch.accuracy, best_conf)};
    });

    // ---- 6: GRNG statistics ---------------------------------------------
    criterion(6, "grng-statistics", [&]() -> std::pair<bool, std::string> {
        const double sigma_t = 0.1;
        const GrngPipeline pipe = grng.pipeline(sigma_t);
        const std::size_t n = 100000;
        std::vector<double> samples(n);
        RngStream rs(606);
        for (double& s : samples) s = sample_epsilon(pipe, rs);
        const QualityReport qr = quality_report(samples, 0.01);

        const bool mean_ok = std::abs(qr.mean) < 0.01 * sigma_t;
        const bool std_ok = std::abs(qr.stddev - sigma_t) <= 0.02 * sigma_t;
        const bool qq_ok = qr.qq_correlation > 0.995;

        // Drift transfer, measured on an independent stream.
        const double drift = 0.06;
        GrngPipeline drifted = pipe;
        drifted.drift = drift;
        RngStream rs2(607);
        double mean_d = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean_d += sample_epsilon(drifted, rs2);
        mean_d /= static_cast<double>(n);
        const double want_shift = drift * pipe.scale();
        const double tol = 4.0 * sigma_t * std::sqrt(2.0 / static_cast<double>(n));
        const bool drift_ok = std::abs((mean_d - qr.mean) - want_shift) < tol;

        return {mean_ok && std_ok && qq_ok && drift_ok,
                fmt("mean %.2e, std %.5f, qq %.5f, drift shift %.5f (want %.5f)", qr.mean,
                    qr.stddev, qr.qq_correlation, mean_d - qr.mean, want_shift)};
    });

    // ---- 7 & 8: robustness on the MNIST subset ---------------------------
    Dataset mnist_train, mnist_test;
    bool have_mnist = true;
    try {
        mnist_train = load_mnist_idx(testsup::data_dir() + "/mnist/train-images-idx3-ubyte",
                                     testsup::data_dir() + "/mnist/train-labels-idx1-ubyte");
        mnist_test = load_mnist_idx(testsup::data_dir() + "/mnist/test-images-idx3-ubyte",
                                    testsup::data_dir() + "/mnist/test-labels-idx1-ubyte");
    } catch (const std::exception& e) {
        have_mnist = false;
        report(7, "robustness-trend", false, std::string("missing MNIST subset: ") + e.what(),
               0.0);
        report(8, "quantization", false, "missing MNIST subset", 0.0);
    }

    TreeModel mnist_bdt;
    if (have_mnist) {
        TrainOptions opt;
        opt.max_depth = 8;
        const TreeModel mnist_dt = train(mnist_train, TreeKind::DT, opt);
        mnist_bdt = train(mnist_train, TreeKind::BDT, opt);

        criterion(7, "robustness-trend", [&]() -> std::pair<bool, std::string> {
            NoiseSpec noise;
            noise.read_sigma = 0.1;
            const AcamArray dt_arr = map_node_wise(mnist_dt);
            const AcamArray bdt_arr = map_node_wise(mnist_bdt);
            const SearchEngine dt_eng(dt_arr, iv);
            const SearchEngine bdt_eng(bdt_arr, iv);
            double dt_acc = 0.0, bdt_acc = 0.0;
            for (std::size_t trial = 0; trial < 5; ++trial) {
                const std::uint64_t s = derive_key(7007, trial);
                dt_acc += predict_batch(dt_eng, mnist_test, 1, noise, grng, s).accuracy;
                bdt_acc += predict_batch(bdt_eng, mnist_test, 100, noise, grng, s).accuracy;
            }
            dt_acc /= 5;
            bdt_acc /= 5;
            return {bdt_acc - dt_acc >= 0.10,
                    fmt("read noise 0.1: BDT %.3f vs DT %.3f (gap %+.1f pts)", bdt_acc, dt_acc,
                        100 * (bdt_acc - dt_acc))};
        });

        criterion(8, "quantization", [&]() -> std::pair<bool, std::string> {
            const AcamArray bdt_arr = map_node_wise(mnist_bdt);
            NoiseSpec q2;
            q2.bits = 2;
            const AcamArray arr2 = program(bdt_arr, q2, 808);
            const SearchEngine eng_full(bdt_arr, iv);
            const SearchEngine eng_2bit(arr2, iv);
            double acc_full = 0.0, acc_2bit = 0.0;
            for (std::size_t trial = 0; trial < 5; ++trial) {
                const std::uint64_t s = derive_key(8008, trial);
                acc_full += predict_batch(eng_full, mnist_test, 100, NoiseSpec{}, grng, s).accuracy;
                acc_2bit += predict_batch(eng_2bit, mnist_test, 100, NoiseSpec{}, grng, s).accuracy;
            }
            acc_full /= 5;
            acc_2bit /= 5;
            return {std::abs(acc_full - acc_2bit) <= 0.02,
                    fmt("BDT 2-bit %.3f vs analog %.3f (delta %+.1f pts)", acc_2bit, acc_full,
                        100 * (acc_2bit - acc_full))};
        });
    }

    // ---- 9: cost calibration ---------------------------------------------
    criterion(9, "cost-calibration", [&]() -> std::pair<bool, std::string> {
        const CostModel c;
        const AcamArray a = map_node_wise(w.bdt);
        const CostReport dt = estimate_cost(a, TreeKind::DT, 100, c);
        const CostReport bdt = estimate_cost(a, TreeKind::BDT, 100, c);
        auto close3 = [](double x, double want) { return std::abs(x / want - 1.0) < 5e-4; };
        const CostComparison cc = compare_reference(bdt, Baseline::CPU_BDT);
        const bool ok = close3(dt.latency_ns_per_decision, 8.21) &&
                        close3(dt.energy_nj_per_decision, 7.24) &&
                        close3(bdt.latency_ns_per_decision, 1.24e3) &&
                        close3(bdt.energy_nj_per_decision, 9.21e2) &&
                        std::abs(cc.energy_ratio / 7.0e4 - 1.0) < 0.01 &&
                        cc.energy_ratio >= 1e4 && cc.energy_ratio < 1e5;
        return {ok, fmt("DT %.3g ns / %.3g nJ; BDT %.3g ns / %.3g nJ; cpu energy ratio %.3g",
                        dt.latency_ns_per_decision, dt.energy_nj_per_decision,
                        bdt.latency_ns_per_decision, bdt.energy_nj_per_decision,
                        cc.energy_ratio)};
    });

    // ---- 10: CLI determinism ----------------------------------------------
    criterion(10, "cli-determinism", [&]() -> std::pair<bool, std::string> {
        if (cli.empty()) return {false, "no CLI path given (argv[1])"};
        testsup::TempDir tmp;
        const std::string wdbc_csv = testsup::data_dir() + "/wdbc.csv";
        const std::string data_flags =
            " --dataset wdbc --wdbc " + wdbc_csv + " --test-fraction 0.2 --split-seed 42";
        const std::vector<std::string> outputs = {"tree.json",    "array.json", "array_fw.json",
                                                  "results.jsonl", "summary.json", "sweep.json",
                                                  "sweep.csv",    "grng.json",  "qq.csv",
                                                  "cost.json"};
        for (const std::string& run : {"a", "b"}) {
            const std::string dir = tmp.file(run);
            std::filesystem::create_directories(dir);
            const std::string log = dir + "/log.txt";
            auto path = [&](const std::string& f) { return dir + "/" + f; };
            if (!run_cli(cli, "--seed 7 train" + data_flags +
                                  " --kind BDT --max-depth 2 --out " + path("tree.json"),
                         log))
                return {false, "train failed (see " + log + ")"};
            if (!run_cli(cli, "map --tree " + path("tree.json") + " --strategy node_wise --out " +
                                  path("array.json"),
                         log))
                return {false, "map failed"};
            if (!run_cli(cli, "map --tree " + path("tree.json") +
                                  " --strategy feature_wise --out " + path("array_fw.json"),
                         log))
                return {false, "map feature_wise failed"};
            if (!run_cli(cli, "--seed 9 infer --array " + path("array.json") + data_flags +
                                  " --n-iter 25 --read-sigma 0.05 --bits 4 --write-sigma 0.01" +
                                  " --out " + path("results.jsonl") + " --summary " +
                                  path("summary.json"),
                         log))
                return {false, "infer failed"};
            if (!run_cli(cli, "--seed 3 sweep" + data_flags +
                                  " --axis device_noise --values 0,0.1 --models DT:2,BDT:2" +
                                  " --trials 2 --n-iter 10 --format json --out " +
                                  path("sweep.json"),
                         log))
                return {false, "sweep failed"};
            if (!run_cli(cli, "report --in " + path("sweep.json") + " --format csv --out " +
                                  path("sweep.csv"),
                         log))
                return {false, "report failed"};
            if (!run_cli(cli, "--seed 5 grng-test --n 20000 --sigma-target 0.1 --out " +
                                  path("grng.json") + " --qq " + path("qq.csv"),
                         log))
                return {false, "grng-test failed"};
            if (!run_cli(cli, "cost --array " + path("array.json") +
                                  " --kind BDT --n-iter 100 --baseline cpu_bdt --out " +
                                  path("cost.json"),
                         log))
                return {false, "cost failed"};
        }
        for (const std::string& f : outputs) {
            const std::string a = testsup::read_file(tmp.file("a/" + f));
            const std::string b = testsup::read_file(tmp.file("b/" + f));
            if (a.empty()) return {false, f + " missing or empty"};
            if (a != b) return {false, f + " differs between reruns"};
        }
        return {true, fmt("%zu output files byte-identical across reruns", outputs.size())};
    });

    std::printf("%s: %d criterion(s) failed\n", g_failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
                g_failures);
    return g_failures;
}
