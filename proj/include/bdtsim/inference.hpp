#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "bdtsim/acam_sim.hpp"
#include "bdtsim/dataset.hpp"
#include "bdtsim/grng.hpp"
#include "bdtsim/tree.hpp"

namespace bdtsim {

namespace seedtag {
// Stream tags; epsilon draws are keyed by node id so every execution path
// of the same model sees the same per-node perturbation sequence.
constexpr std::uint64_t kEpsilon = 0xE1235u;
constexpr std::uint64_t kRead = 0x5EADu;
constexpr std::uint64_t kWrite = 0xA17Eu;
constexpr std::uint64_t kInput = 0x1A01u;
constexpr std::uint64_t kSample = 0x5A3Bu;
}  // namespace seedtag

struct InferenceResult {
    std::vector<std::size_t> visit_counts;  // per array row / path
    int predicted = -1;
    double confidence = 0.0;  // winning-class visit frequency
    std::size_t n_iter = 0;
    std::size_t unmatched = 0;  // iterations with no selectable row
    std::vector<std::size_t> per_iter_rows;  // optional trace
    std::size_t write_count = 0;             // device writes incurred
};

// Source parameters shared by every per-column pipeline; the per-column
// sigma_target comes from the mapped node's sigma.
struct GrngConfig {
    double mu_p = 1.0;
    double sigma_p = 0.15;
    double drift = 0.0;

    GrngPipeline pipeline(double sigma_target) const {
        GrngPipeline p{mu_p, sigma_p, sigma_target, drift};
        p.validate();
        return p;
    }
};

inline std::vector<GrngPipeline> make_column_pipelines(const AcamArray& a, const GrngConfig& g) {
    std::vector<GrngPipeline> out;
    out.reserve(a.col_meta.size());
    for (const auto& c : a.col_meta) out.push_back(g.pipeline(c.sigma));
    return out;
}

namespace detail {

inline double epsilon_draw(const GrngPipeline& p, std::uint64_t seed, std::uint64_t iter,
                           std::uint64_t node_id) {
    RngStream rs = RngStream::from(seed, seedtag::kEpsilon, iter, node_id);
    return sample_epsilon(p, rs);
}

inline void aggregate(InferenceResult& r, std::span<const RowMeta> rows, int n_classes) {
    std::vector<std::size_t> class_votes(static_cast<std::size_t>(n_classes), 0);
    for (std::size_t i = 0; i < r.visit_counts.size(); ++i)
        class_votes[static_cast<std::size_t>(rows[i].leaf_label)] += r.visit_counts[i];
    std::size_t best = 0;
    for (std::size_t k = 1; k < class_votes.size(); ++k)
        if (class_votes[k] > class_votes[best]) best = k;  // ties: lowest class
    r.predicted = static_cast<int>(best);
    r.confidence = static_cast<double>(class_votes[best]) / static_cast<double>(r.n_iter);
}

}  // namespace detail

// Node-wise BDT/DT inference: n_iter searches against the fixed array,
// each with fresh per-column epsilon added to the query and fresh read
// noise; the class with the most visited rows wins.
inline InferenceResult infer_acam(const SearchEngine& eng, std::span<const double> x,
                                  std::size_t n_iter, const NoiseSpec& noise,
                                  std::span<const GrngPipeline> pipelines, std::uint64_t seed,
                                  bool keep_trace = false) {
    const AcamArray& a = eng.array();
    if (a.strategy != MappingStrategy::NODE_WISE)
        throw std::invalid_argument(
            "infer_acam: feature-wise array requires infer_feature_wise (reprogramming mode)");
    if (pipelines.size() != a.cols)
        throw std::invalid_argument("infer_acam: one pipeline per column required");
    if (n_iter < 1) throw std::domain_error("infer_acam: n_iter must be >= 1");
    noise.validate();

    InferenceResult r;
    r.n_iter = n_iter;
    r.visit_counts.assign(a.rows, 0);
    std::vector<double> query(a.cols);
    for (std::size_t it = 0; it < n_iter; ++it) {
        for (std::size_t c = 0; c < a.cols; ++c) {
            const double eps = detail::epsilon_draw(
                pipelines[c], seed, it, static_cast<std::uint64_t>(a.col_meta[c].node_id));
            query[c] = x[static_cast<std::size_t>(a.col_meta[c].feature)] + eps;
        }
        const std::uint64_t search_seed = derive_key(seed, seedtag::kRead, it);
        const SearchResult sr = eng.search(query, noise.read_sigma, search_seed);
        r.visit_counts[sr.matched_row]++;
        if (keep_trace) r.per_iter_rows.push_back(sr.matched_row);
    }
    detail::aggregate(r, a.row_meta, a.n_classes);
    return r;
}

inline InferenceResult infer_acam(const AcamArray& a, std::span<const double> x,
                                  std::size_t n_iter, const NoiseSpec& noise,
                                  std::span<const GrngPipeline> pipelines,
                                  const CellIvModel& iv, std::uint64_t seed) {
    return infer_acam(SearchEngine(a, iv), x, n_iter, noise, pipelines, seed);
}

// Feature-wise BDT inference: every iteration samples fresh node thresholds
// t = mu - eps (the same eps stream the node-wise path adds to its query,
// so the two layouts select identical rows when device noise is off),
// rewrites every programmable cell, then searches with the plain input.
inline InferenceResult infer_feature_wise(const AcamArray& a, std::span<const double> x,
                                          std::size_t n_iter, const NoiseSpec& noise,
                                          const GrngConfig& grng, const CellIvModel& iv,
                                          std::uint64_t seed, bool keep_trace = false) {
    if (a.strategy != MappingStrategy::FEATURE_WISE)
        throw std::invalid_argument("infer_feature_wise: needs a feature-wise array");
    if (n_iter < 1) throw std::domain_error("infer_feature_wise: n_iter must be >= 1");
    noise.validate();

    std::map<int, std::size_t> col_of;
    for (std::size_t c = 0; c < a.cols; ++c) col_of[a.col_meta[c].feature] = c;

    InferenceResult r;
    r.n_iter = n_iter;
    r.visit_counts.assign(a.rows, 0);
    std::vector<double> query(a.cols);
    for (std::size_t c = 0; c < a.cols; ++c)
        query[c] = x[static_cast<std::size_t>(a.col_meta[c].feature)];

    AcamArray iter_array = a;
    std::vector<char> valid(a.rows);
    for (std::size_t it = 0; it < n_iter; ++it) {
        // Re-derive every cell from sampled thresholds.
        std::fill(valid.begin(), valid.end(), 1);
        for (std::size_t row = 0; row < a.rows; ++row) {
            for (std::size_t c = 0; c < a.cols; ++c) iter_array.cell(row, c) = a.cell(row, c);
            for (std::size_t c = 0; c < a.cols; ++c)
                if (!a.cell(row, c).dont_care) iter_array.cell(row, c) = AcamCell{{}, {}, false};
            for (const PathConstraint& pc : a.path_constraints[row]) {
                const GrngPipeline p = grng.pipeline(pc.sigma);
                const double eps = detail::epsilon_draw(p, seed, it,
                                                        static_cast<std::uint64_t>(pc.node_id));
                const double t = pc.mu - eps;
                AcamCell& cell = iter_array.cell(row, col_of.at(pc.feature));
                if (pc.goes_left)
                    cell.hi = cell.hi ? std::min(*cell.hi, t) : t;
                else
                    cell.lo = cell.lo ? std::max(*cell.lo, t) : t;
            }
            for (std::size_t c = 0; c < a.cols; ++c) {
                const AcamCell& cell = iter_array.cell(row, c);
                if (!cell.dont_care && cell.lo && cell.hi && !(*cell.lo < *cell.hi)) {
                    valid[row] = 0;  // sampled interval collapsed; row sits out
                    break;
                }
            }
        }
        // Reprogram: quantization plus write noise on all programmable cells.
        NoiseSpec write_noise;
        write_noise.write_sigma = noise.write_sigma;
        write_noise.bits = noise.bits;
        iter_array = program(iter_array, write_noise, derive_key(seed, seedtag::kWrite, it));
        for (std::size_t row = 0; row < a.rows; ++row)
            for (std::size_t c = 0; c < a.cols; ++c)
                if (!a.cell(row, c).dont_care) r.write_count++;

        if (std::none_of(valid.begin(), valid.end(), [](char v) { return v != 0; })) {
            r.unmatched++;
            if (keep_trace) r.per_iter_rows.push_back(a.rows);
            continue;
        }
        SearchEngine eng(iter_array, iv);
        const std::uint64_t search_seed = derive_key(seed, seedtag::kRead, it);
        const SearchResult sr = eng.search(query, noise.read_sigma, search_seed, &valid);
        r.visit_counts[sr.matched_row]++;
        if (keep_trace) r.per_iter_rows.push_back(sr.matched_row);
    }
    detail::aggregate(r, a.row_meta, a.n_classes);
    // Unmatched iterations sit outside class voting; renormalize confidence
    // over the full iteration count (already the case: denominator n_iter).
    return r;
}

// Pure-software traversal oracle. At each internal node the query feature
// is compared against (mu - eps), which is the same predicate as adding
// eps to the input. Returns the reached path id.
inline std::size_t traverse_software(const TreeModel& t, std::span<const double> x,
                                     std::span<const double> epsilon_per_node) {
    int id = t.root;
    while (!t.node(id).leaf) {
        const TreeNode& n = t.node(id);
        const double eps =
            epsilon_per_node.empty() ? 0.0 : epsilon_per_node[static_cast<std::size_t>(n.id)];
        id = x[static_cast<std::size_t>(n.feature)] <= n.mu - eps ? n.left : n.right;
    }
    return static_cast<std::size_t>(t.path_of_leaf[static_cast<std::size_t>(id)]);
}

// Software batch counterpart of infer_acam: same epsilon streams, no
// device effects. Used as the reference model in experiments.
inline InferenceResult infer_software(const TreeModel& t, std::span<const double> x,
                                      std::size_t n_iter, const GrngConfig& grng,
                                      std::uint64_t seed) {
    if (n_iter < 1) throw std::domain_error("infer_software: n_iter must be >= 1");
    InferenceResult r;
    r.n_iter = n_iter;
    r.visit_counts.assign(t.paths.size(), 0);
    std::vector<double> eps(t.nodes.size(), 0.0);
    std::vector<RowMeta> rows;
    for (std::size_t p = 0; p < t.paths.size(); ++p)
        rows.push_back({static_cast<int>(p), t.paths[p].leaf_label});
    for (std::size_t it = 0; it < n_iter; ++it) {
        for (const TreeNode& n : t.nodes) {
            if (n.leaf) continue;
            if (n.sigma > 0.0) {
                const GrngPipeline p = grng.pipeline(n.sigma);
                eps[static_cast<std::size_t>(n.id)] =
                    detail::epsilon_draw(p, seed, it, static_cast<std::uint64_t>(n.id));
            } else {
                eps[static_cast<std::size_t>(n.id)] = 0.0;
            }
        }
        r.visit_counts[traverse_software(t, x, eps)]++;
    }
    detail::aggregate(r, rows, t.n_classes);
    return r;
}

struct BatchResult {
    double accuracy = 0.0;
    double mean_confidence = 0.0;
    std::vector<InferenceResult> per_sample;
    std::size_t write_count = 0;
};

namespace detail {

template <typename Fn>
void parallel_over_samples(std::size_t n, unsigned n_threads, Fn&& fn) {
    if (n == 0) return;
    unsigned hw = n_threads != 0 ? n_threads : std::max(1u, std::thread::hardware_concurrency());
    hw = static_cast<unsigned>(std::min<std::size_t>(hw, n));
    if (hw <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::future<void>> futs;
    for (unsigned t = 0; t < hw; ++t)
        futs.push_back(std::async(std::launch::async, [&, t] {
            for (std::size_t i = t; i < n; i += hw) fn(i);
        }));
    for (auto& f : futs) f.get();
}

template <typename PerSample>
BatchResult run_batch(const Dataset& test, double input_sigma, std::uint64_t seed,
                      unsigned n_threads, PerSample&& per_sample) {
    if (test.size() == 0) throw std::domain_error("predict_batch: empty test set");
    const Dataset noisy = input_sigma > 0.0
                              ? add_input_noise(test, input_sigma,
                                                derive_key(seed, seedtag::kInput))
                              : test;
    BatchResult out;
    out.per_sample.resize(test.size());
    parallel_over_samples(test.size(), n_threads, [&](std::size_t i) {
        out.per_sample[i] = per_sample(noisy.row(i), derive_key(seed, seedtag::kSample, i));
    });
    std::size_t correct = 0;
    double conf = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        if (out.per_sample[i].predicted == test.labels[i]) ++correct;
        conf += out.per_sample[i].confidence;
        out.write_count += out.per_sample[i].write_count;
    }
    out.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
    out.mean_confidence = conf / static_cast<double>(test.size());
    return out;
}

}  // namespace detail

// Batch over a node-wise array. Per-sample seeds derive from the master
// seed and sample index, so scheduling order cannot change results.
inline BatchResult predict_batch(const SearchEngine& eng, const Dataset& test, std::size_t n_iter,
                                 const NoiseSpec& noise, const GrngConfig& grng,
                                 std::uint64_t seed, unsigned n_threads = 0) {
    const std::vector<GrngPipeline> pipelines = make_column_pipelines(eng.array(), grng);
    return detail::run_batch(test, noise.input_sigma, seed, n_threads,
                             [&](std::span<const double> x, std::uint64_t s) {
                                 return infer_acam(eng, x, n_iter, noise, pipelines, s);
                             });
}

inline BatchResult predict_batch_feature_wise(const AcamArray& a, const Dataset& test,
                                              std::size_t n_iter, const NoiseSpec& noise,
                                              const GrngConfig& grng, const CellIvModel& iv,
                                              std::uint64_t seed, unsigned n_threads = 0) {
    return detail::run_batch(test, noise.input_sigma, seed, n_threads,
                             [&](std::span<const double> x, std::uint64_t s) {
                                 return infer_feature_wise(a, x, n_iter, noise, grng, iv, s);
                             });
}

inline BatchResult predict_batch_software(const TreeModel& t, const Dataset& test,
                                          std::size_t n_iter, const NoiseSpec& noise,
                                          const GrngConfig& grng, std::uint64_t seed,
                                          unsigned n_threads = 0) {
    return detail::run_batch(test, noise.input_sigma, seed, n_threads,
                             [&](std::span<const double> x, std::uint64_t s) {
                                 return infer_software(t, x, n_iter, grng, s);
                             });
}

}  // namespace bdtsim
