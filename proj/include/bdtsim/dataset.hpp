#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdtsim/rng.hpp"

namespace bdtsim {

// Tabular classification data. Features live in [0,1] after normalization;
// labels are dense integers 0..n_classes-1. Immutable after load by
// convention: every mutating helper returns a copy.
struct Dataset {
    std::vector<double> features;  // row-major, n_samples x n_features
    std::vector<int> labels;
    std::size_t n_features = 0;
    int n_classes = 0;
    std::vector<std::string> feature_names;
    // Per-feature min-max constants the normalization was computed with.
    std::vector<double> norm_min, norm_max;

    std::size_t size() const { return labels.size(); }

    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * n_features, n_features};
    }

    double at(std::size_t i, std::size_t f) const { return features[i * n_features + f]; }
};

// Min-max normalize in place over the dataset's own rows. Degenerate
// features (min == max) map to 0.
inline void normalize_minmax(Dataset& d) {
    d.norm_min.assign(d.n_features, 0.0);
    d.norm_max.assign(d.n_features, 0.0);
    if (d.size() == 0) return;
    for (std::size_t f = 0; f < d.n_features; ++f) {
        double lo = d.at(0, f), hi = d.at(0, f);
        for (std::size_t i = 1; i < d.size(); ++i) {
            lo = std::min(lo, d.at(i, f));
            hi = std::max(hi, d.at(i, f));
        }
        d.norm_min[f] = lo;
        d.norm_max[f] = hi;
        const double range = hi - lo;
        for (std::size_t i = 0; i < d.size(); ++i) {
            double& v = d.features[i * d.n_features + f];
            v = range > 0.0 ? (v - lo) / range : 0.0;
        }
    }
}

// Map rows through previously computed constants, clipping to [0,1].
// Used for test data so no statistics leak from it.
inline void apply_normalization(Dataset& d, const std::vector<double>& nmin,
                                const std::vector<double>& nmax) {
    if (nmin.size() != d.n_features || nmax.size() != d.n_features)
        throw std::invalid_argument("apply_normalization: constants do not match feature count");
    for (std::size_t f = 0; f < d.n_features; ++f) {
        const double range = nmax[f] - nmin[f];
        for (std::size_t i = 0; i < d.size(); ++i) {
            double& v = d.features[i * d.n_features + f];
            v = range > 0.0 ? (v - nmin[f]) / range : 0.0;
            v = std::clamp(v, 0.0, 1.0);
        }
    }
    d.norm_min = nmin;
    d.norm_max = nmax;
}

inline Dataset select_rows(const Dataset& d, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.n_features = d.n_features;
    out.n_classes = d.n_classes;
    out.feature_names = d.feature_names;
    out.norm_min = d.norm_min;
    out.norm_max = d.norm_max;
    out.features.reserve(idx.size() * d.n_features);
    out.labels.reserve(idx.size());
    for (std::size_t i : idx) {
        auto r = d.row(i);
        out.features.insert(out.features.end(), r.begin(), r.end());
        out.labels.push_back(d.labels[i]);
    }
    return out;
}

// Deterministic shuffled split: first n*test_fraction rows of the permuted
// order form the test set. Train-side min-max constants are recomputed in
// raw units and applied to both splits (test values clip).
inline std::pair<Dataset, Dataset> train_test_split(const Dataset& d, double test_fraction,
                                                    std::uint64_t seed,
                                                    bool renormalize_on_train = true) {
    if (test_fraction < 0.0 || test_fraction >= 1.0)
        throw std::domain_error("train_test_split: test_fraction must be in [0,1)");
    std::vector<std::size_t> perm(d.size());
    std::iota(perm.begin(), perm.end(), 0);
    RngStream rs = RngStream::from(seed, 0x5917u);
    for (std::size_t i = perm.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rs.next_u64() % i);
        std::swap(perm[i - 1], perm[j]);
    }
    const auto n_test = static_cast<std::size_t>(static_cast<double>(d.size()) * test_fraction);
    std::vector<std::size_t> test_idx(perm.begin(), perm.begin() + n_test);
    std::vector<std::size_t> train_idx(perm.begin() + n_test, perm.end());
    Dataset train = select_rows(d, train_idx);
    Dataset test = select_rows(d, test_idx);
    if (renormalize_on_train && !d.norm_min.empty()) {
        // Undo the load-time scaling so the constants come from train rows only.
        auto to_raw = [&](Dataset& s) {
            for (std::size_t f = 0; f < s.n_features; ++f) {
                const double range = d.norm_max[f] - d.norm_min[f];
                for (std::size_t i = 0; i < s.size(); ++i) {
                    double& v = s.features[i * s.n_features + f];
                    v = d.norm_min[f] + v * (range > 0.0 ? range : 0.0);
                }
            }
        };
        to_raw(train);
        to_raw(test);
        normalize_minmax(train);
        apply_normalization(test, train.norm_min, train.norm_max);
    }
    return {std::move(train), std::move(test)};
}

// Breast Cancer Wisconsin (Diagnostic) CSV: ID, diagnosis M/B, 30 features.
// Labels: 0 = benign, 1 = malignant. Features min-max normalized over the
// loaded rows; constants retained for inverse mapping.
inline Dataset load_wdbc(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_wdbc: cannot open " + path);
    Dataset d;
    d.n_features = 30;
    d.n_classes = 2;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t pos = line.find(',', start);
            cells.push_back(line.substr(start, pos - start));
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        if (cells.size() != 32)
            throw std::runtime_error("load_wdbc: row " + std::to_string(row) + " has " +
                                     std::to_string(cells.size()) + " columns, expected 32");
        const std::string& diag = cells[1];
        if (diag != "M" && diag != "B")
            throw std::runtime_error("load_wdbc: row " + std::to_string(row) +
                                     " column 2: diagnosis must be 'M' or 'B', got '" + diag + "'");
        d.labels.push_back(diag == "M" ? 1 : 0);
        for (std::size_t c = 2; c < 32; ++c) {
            try {
                std::size_t used = 0;
                const double v = std::stod(cells[c], &used);
                if (used != cells[c].size()) throw std::invalid_argument("trailing junk");
                d.features.push_back(v);
            } catch (const std::exception&) {
                throw std::runtime_error("load_wdbc: row " + std::to_string(row) + " column " +
                                         std::to_string(c + 1) + ": not a number: '" + cells[c] +
                                         "'");
            }
        }
    }
    if (d.labels.empty()) throw std::runtime_error("load_wdbc: no rows in " + path);
    static const char* kWdbcNames[30] = {
        "mean radius",      "mean texture",     "mean perimeter",  "mean area",
        "mean smoothness",  "mean compactness", "mean concavity",  "mean concave points",
        "mean symmetry",    "mean fractal dim", "radius error",    "texture error",
        "perimeter error",  "area error",       "smoothness error","compactness error",
        "concavity error",  "concave pts error","symmetry error",  "fractal dim error",
        "worst radius",     "worst texture",    "worst perimeter", "worst area",
        "worst smoothness", "worst compactness","worst concavity", "worst concave points",
        "worst symmetry",   "worst fractal dim"};
    d.feature_names.assign(kWdbcNames, kWdbcNames + 30);
    normalize_minmax(d);
    return d;
}

namespace detail {

inline std::uint32_t read_be32(std::istream& in, const std::string& path, std::size_t& offset) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4)
        throw std::runtime_error("load_mnist_idx: " + path + " truncated at byte offset " +
                                 std::to_string(offset + static_cast<std::size_t>(in.gcount())));
    offset += 4;
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

}  // namespace detail

// IDX-format image/label pair. Pixels scale by 1/255 into [0,1] and flatten
// to rows*cols features; labels must be 0..9.
inline Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                              std::int64_t limit = -1) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("load_mnist_idx: cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("load_mnist_idx: cannot open " + labels_path);

    std::size_t img_off = 0, lab_off = 0;
    const std::uint32_t img_magic = detail::read_be32(img, images_path, img_off);
    if (img_magic != 0x00000803u)
        throw std::runtime_error("load_mnist_idx: bad image magic in " + images_path);
    const std::uint32_t n_images = detail::read_be32(img, images_path, img_off);
    const std::uint32_t rows = detail::read_be32(img, images_path, img_off);
    const std::uint32_t cols = detail::read_be32(img, images_path, img_off);

    const std::uint32_t lab_magic = detail::read_be32(lab, labels_path, lab_off);
    if (lab_magic != 0x00000801u)
        throw std::runtime_error("load_mnist_idx: bad label magic in " + labels_path);
    const std::uint32_t n_labels = detail::read_be32(lab, labels_path, lab_off);
    if (n_images != n_labels)
        throw std::runtime_error("load_mnist_idx: image count " + std::to_string(n_images) +
                                 " != label count " + std::to_string(n_labels));

    std::size_t n = n_images;
    if (limit >= 0) n = std::min<std::size_t>(n, static_cast<std::size_t>(limit));

    Dataset d;
    d.n_features = static_cast<std::size_t>(rows) * cols;
    d.n_classes = 10;
    d.features.resize(n * d.n_features);
    d.labels.resize(n);
    d.norm_min.assign(d.n_features, 0.0);
    d.norm_max.assign(d.n_features, 255.0);

    std::vector<unsigned char> buf(d.n_features);
    for (std::size_t i = 0; i < n; ++i) {
        img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (img.gcount() != static_cast<std::streamsize>(buf.size()))
            throw std::runtime_error(
                "load_mnist_idx: " + images_path + " truncated at byte offset " +
                std::to_string(img_off + static_cast<std::size_t>(img.gcount())));
        img_off += buf.size();
        for (std::size_t p = 0; p < buf.size(); ++p)
            d.features[i * d.n_features + p] = static_cast<double>(buf[p]) / 255.0;
        char lb;
        if (!lab.read(&lb, 1))
            throw std::runtime_error("load_mnist_idx: " + labels_path +
                                     " truncated at byte offset " + std::to_string(lab_off));
        ++lab_off;
        d.labels[i] = static_cast<unsigned char>(lb);
        if (d.labels[i] < 0 || d.labels[i] > 9)
            throw std::runtime_error("load_mnist_idx: label out of range at sample " +
                                     std::to_string(i));
    }
    return d;
}

// Independent N(0, sigma^2) perturbation per value, clipped to [0,1].
// Draws are keyed per (sample, feature) so the output is identical no
// matter how the caller batches or parallelizes.
inline Dataset add_input_noise(const Dataset& d, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw std::domain_error("add_input_noise: sigma must be >= 0");
    Dataset out = d;
    if (sigma == 0.0) return out;
    for (std::size_t i = 0; i < d.size(); ++i) {
        RngStream rs = RngStream::from(seed, 0x1D5Eu, i);
        for (std::size_t f = 0; f < d.n_features; ++f) {
            double& v = out.features[i * d.n_features + f];
            v = std::clamp(v + sigma * rs.gaussian(), 0.0, 1.0);
        }
    }
    return out;
}

}  // namespace bdtsim
