#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "bdtsim/dataset.hpp"
#include "bdtsim/tree.hpp"

namespace bdtsim {

// Gini impurity 1 - sum_k (count_k/N)^2.
inline double gini_from_counts(std::span<const std::size_t> counts) {
    std::size_t n = 0;
    double ssq = 0.0;
    for (std::size_t c : counts) {
        n += c;
        ssq += static_cast<double>(c) * static_cast<double>(c);
    }
    if (n == 0) throw std::domain_error("gini: empty label set");
    const double dn = static_cast<double>(n);
    return 1.0 - ssq / (dn * dn);
}

inline double gini(std::span<const int> labels, int n_classes) {
    if (labels.empty()) throw std::domain_error("gini: empty label set");
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
    for (int y : labels) counts[static_cast<std::size_t>(y)]++;
    return gini_from_counts(counts);
}

// Weighted impurity reduction of splitting at t (x <= t goes left). An
// empty side contributes zero weighted impurity.
inline double impurity_reduction(std::span<const double> values, std::span<const int> labels,
                                 double t, int n_classes) {
    if (values.size() != labels.size())
        throw std::invalid_argument("impurity_reduction: length mismatch");
    const std::size_t k = static_cast<std::size_t>(n_classes);
    std::vector<std::size_t> total(k, 0), left(k, 0);
    std::size_t n_left = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        total[static_cast<std::size_t>(labels[i])]++;
        if (values[i] <= t) {
            left[static_cast<std::size_t>(labels[i])]++;
            ++n_left;
        }
    }
    const std::size_t n = values.size();
    const std::size_t n_right = n - n_left;
    double out = gini_from_counts(total);
    if (n_left > 0)
        out -= static_cast<double>(n_left) / static_cast<double>(n) * gini_from_counts(left);
    if (n_right > 0) {
        std::vector<std::size_t> right(k);
        for (std::size_t c = 0; c < k; ++c) right[c] = total[c] - left[c];
        out -= static_cast<double>(n_right) / static_cast<double>(n) * gini_from_counts(right);
    }
    return out;
}

namespace detail {

// Enumerate candidate thresholds (midpoints between consecutive distinct
// sorted values) with their impurity reduction, in ascending t order.
// Expects values/labels pre-sorted by value.
template <typename Fn>
void scan_candidates(std::span<const double> values, std::span<const int> labels, int n_classes,
                     Fn&& fn) {
    const std::size_t n = values.size();
    const std::size_t k = static_cast<std::size_t>(n_classes);
    std::vector<std::size_t> total(k, 0), left(k, 0);
    for (std::size_t i = 0; i < n; ++i) total[static_cast<std::size_t>(labels[i])]++;
    const double g_parent = gini_from_counts(total);
    const double dn = static_cast<double>(n);

    auto side_gini = [&](const std::vector<std::size_t>& c, std::size_t cn) {
        double ssq = 0.0;
        for (std::size_t v : c) ssq += static_cast<double>(v) * static_cast<double>(v);
        const double d = static_cast<double>(cn);
        return 1.0 - ssq / (d * d);
    };

    std::size_t n_left = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        left[static_cast<std::size_t>(labels[i])]++;
        ++n_left;
        if (values[i + 1] <= values[i]) continue;  // not a distinct-value boundary
        const double t = 0.5 * (values[i] + values[i + 1]);
        const std::size_t n_right = n - n_left;
        std::vector<std::size_t> right(k);
        for (std::size_t c = 0; c < k; ++c) right[c] = total[c] - left[c];
        const double gain = g_parent -
                            static_cast<double>(n_left) / dn * side_gini(left, n_left) -
                            static_cast<double>(n_right) / dn * side_gini(right, n_right);
        fn(t, gain);
    }
}

}  // namespace detail

struct ThresholdDistribution {
    double mu = 0.0;
    double sigma = 0.0;
    bool flat_gain = false;  // all candidate weights were zero
};

// Threshold statistics over all candidates: weights w(t) = max(dG(t), 0)
// normalized to p(t); mu and sigma are the mean and std of p. With every
// weight zero, falls back to the best-gain midpoint with sigma 0 and the
// flat_gain flag set.
inline ThresholdDistribution threshold_distribution(std::span<const double> values,
                                                    std::span<const int> labels, int n_classes) {
    if (values.size() != labels.size())
        throw std::invalid_argument("threshold_distribution: length mismatch");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> sv(values.size());
    std::vector<int> sl(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        sv[i] = values[order[i]];
        sl[i] = labels[order[i]];
    }

    std::vector<double> ts, ws;
    detail::scan_candidates(sv, sl, n_classes, [&](double t, double gain) {
        ts.push_back(t);
        ws.push_back(std::max(gain, 0.0));
    });
    if (ts.empty())
        throw std::domain_error("threshold_distribution: needs at least two distinct values");

    const double wsum = std::accumulate(ws.begin(), ws.end(), 0.0);
    ThresholdDistribution out;
    if (wsum <= 0.0) {
        // No candidate reduces impurity; report the best (first, by the
        // lowest-t tie rule) midpoint as a point estimate.
        double best_gain = -std::numeric_limits<double>::infinity();
        std::size_t best = 0;
        std::vector<double> gains(ts.size());
        std::size_t i = 0;
        detail::scan_candidates(sv, sl, n_classes, [&](double, double gain) { gains[i++] = gain; });
        for (std::size_t c = 0; c < ts.size(); ++c)
            if (gains[c] > best_gain) {
                best_gain = gains[c];
                best = c;
            }
        out.mu = ts[best];
        out.sigma = 0.0;
        out.flat_gain = true;
        return out;
    }
    double mu = 0.0;
    for (std::size_t c = 0; c < ts.size(); ++c) mu += ws[c] / wsum * ts[c];
    double var = 0.0;
    for (std::size_t c = 0; c < ts.size(); ++c) var += ws[c] / wsum * (ts[c] - mu) * (ts[c] - mu);
    out.mu = mu;
    out.sigma = std::sqrt(std::max(var, 0.0));
    return out;
}

struct TrainOptions {
    int max_depth = 8;
    int min_samples = 2;
    double sigma_max = 0.2;  // clip on per-node sigma, normalized units
};

namespace detail {

struct FeatureScan {
    double best_gain = 0.0;
    double best_t = 0.0;
    bool any = false;
};

// Best candidate for one feature; ties on gain break toward the lowest t
// (the scan runs in ascending t, strict > keeps the first).
inline FeatureScan best_split_for_feature(std::span<const double> sorted_values,
                                          std::span<const int> sorted_labels, int n_classes) {
    FeatureScan s;
    scan_candidates(sorted_values, sorted_labels, n_classes, [&](double t, double gain) {
        if (!s.any || gain > s.best_gain) {
            s.any = true;
            s.best_gain = gain;
            s.best_t = t;
        }
    });
    return s;
}

class TreeBuilder {
public:
    TreeBuilder(const Dataset& d, TreeKind kind, const TrainOptions& opt)
        : d_(d), kind_(kind), opt_(opt) {
        // Presort row indices per feature once; node scans then walk each
        // feature's global order and filter by membership.
        sorted_by_feature_.resize(d.n_features);
        for (std::size_t f = 0; f < d.n_features; ++f) {
            auto& ord = sorted_by_feature_[f];
            ord.resize(d.size());
            std::iota(ord.begin(), ord.end(), 0);
            std::stable_sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
                return d.at(a, f) < d.at(b, f);
            });
        }
        in_node_.assign(d.size(), 0);
    }

    TreeModel build() {
        TreeModel t;
        t.kind = kind_;
        t.n_classes = d_.n_classes;
        t.feature_names = d_.feature_names;
        t.norm_min = d_.norm_min;
        t.norm_max = d_.norm_max;
        std::vector<std::size_t> all(d_.size());
        std::iota(all.begin(), all.end(), 0);
        grow(t, all, 0);
        t.depth = realized_depth_;
        t.build_paths();
        return t;
    }

private:
    int grow(TreeModel& t, const std::vector<std::size_t>& rows, int depth) {
        const int id = static_cast<int>(t.nodes.size());
        t.nodes.push_back({});
        t.nodes.back().id = id;
        realized_depth_ = std::max(realized_depth_, depth);

        std::vector<std::size_t> counts(static_cast<std::size_t>(d_.n_classes), 0);
        for (std::size_t r : rows) counts[static_cast<std::size_t>(d_.labels[r])]++;
        const int majority = static_cast<int>(
            std::max_element(counts.begin(), counts.end()) - counts.begin());

        const bool pure = gini_from_counts(counts) == 0.0;
        if (depth >= opt_.max_depth || rows.size() < static_cast<std::size_t>(opt_.min_samples) ||
            pure)
            return make_leaf(t, id, majority);

        for (std::size_t r : rows) in_node_[r] = 1;
        int best_feature = -1;
        FeatureScan best;
        std::vector<double> vals;
        std::vector<int> labs;
        std::vector<double> chosen_vals;
        std::vector<int> chosen_labs;
        for (std::size_t f = 0; f < d_.n_features; ++f) {
            vals.clear();
            labs.clear();
            for (std::size_t r : sorted_by_feature_[f]) {
                if (!in_node_[r]) continue;
                vals.push_back(d_.at(r, f));
                labs.push_back(d_.labels[r]);
            }
            const FeatureScan s = best_split_for_feature(vals, labs, d_.n_classes);
            if (s.any && (best_feature < 0 || s.best_gain > best.best_gain)) {
                best = s;
                best_feature = static_cast<int>(f);
                chosen_vals = vals;
                chosen_labs = labs;
            }
        }
        for (std::size_t r : rows) in_node_[r] = 0;

        if (best_feature < 0 || best.best_gain <= 0.0) return make_leaf(t, id, majority);

        double mu, sigma;
        if (kind_ == TreeKind::DT) {
            mu = best.best_t;
            sigma = 0.0;
        } else {
            const ThresholdDistribution td =
                threshold_distribution(chosen_vals, chosen_labs, d_.n_classes);
            mu = td.mu;
            sigma = std::min(td.sigma, opt_.sigma_max);
        }

        std::vector<std::size_t> lrows, rrows;
        for (std::size_t r : rows)
            (d_.at(r, static_cast<std::size_t>(best_feature)) <= mu ? lrows : rrows).push_back(r);
        if (lrows.empty() || rrows.empty()) return make_leaf(t, id, majority);

        t.nodes[static_cast<std::size_t>(id)].feature = best_feature;
        t.nodes[static_cast<std::size_t>(id)].mu = mu;
        t.nodes[static_cast<std::size_t>(id)].sigma = sigma;
        const int left = grow(t, lrows, depth + 1);
        const int right = grow(t, rrows, depth + 1);
        t.nodes[static_cast<std::size_t>(id)].left = left;
        t.nodes[static_cast<std::size_t>(id)].right = right;
        return id;
    }

    int make_leaf(TreeModel& t, int id, int label) {
        t.nodes[static_cast<std::size_t>(id)].leaf = true;
        t.nodes[static_cast<std::size_t>(id)].label = label;
        return id;
    }

    const Dataset& d_;
    TreeKind kind_;
    TrainOptions opt_;
    std::vector<std::vector<std::size_t>> sorted_by_feature_;
    std::vector<char> in_node_;
    int realized_depth_ = 0;
};

}  // namespace detail

// Greedy top-down CART growth. The splitting feature maximizes the best
// impurity reduction (ties: lowest feature index). DT nodes store the
// argmax-gain midpoint with sigma 0; BDT nodes store the threshold
// distribution's (mu, sigma) and partition the data at mu.
inline TreeModel train(const Dataset& d, TreeKind kind, const TrainOptions& opt = {}) {
    if (d.size() == 0) throw std::domain_error("train: empty dataset");
    if (opt.max_depth < 1) throw std::domain_error("train: max_depth must be >= 1");
    return detail::TreeBuilder(d, kind, opt).build();
}

}  // namespace bdtsim
