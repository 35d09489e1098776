#pragma once

// Shared test helpers: an independent brute-force oracle for the threshold
// statistics, a random tree generator, IDX fixture writers, and temp-file
// utilities. The oracle deliberately recomputes everything from first
// principles (per-candidate partitions, direct probability fractions) so it
// shares no code path with the library implementation it checks.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "bdtsim/dataset.hpp"
#include "bdtsim/rng.hpp"
#include "bdtsim/tree.hpp"

namespace testsup {

inline std::string data_dir() {
#ifdef BDTSIM_DATA_DIR
    return BDTSIM_DATA_DIR;
#else
    return "data";
#endif
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        char tmpl[] = "/tmp/bdtsim_test_XXXXXX";
        path = ::mkdtemp(tmpl);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

// ---- brute-force threshold statistics ---------------------------------

struct BruteResult {
    double mu = 0.0;
    double sigma = 0.0;
    bool flat = false;
};

inline double brute_gini(const std::vector<int>& labels, int n_classes) {
    double g = 1.0;
    const double n = static_cast<double>(labels.size());
    for (int k = 0; k < n_classes; ++k) {
        double cnt = 0;
        for (int y : labels)
            if (y == k) cnt += 1;
        g -= (cnt / n) * (cnt / n);
    }
    return g;
}

inline double brute_gain(const std::vector<double>& xs, const std::vector<int>& ys, double t,
                         int n_classes) {
    std::vector<int> yl, yr;
    for (std::size_t i = 0; i < xs.size(); ++i) (xs[i] <= t ? yl : yr).push_back(ys[i]);
    const double n = static_cast<double>(xs.size());
    double out = brute_gini(ys, n_classes);
    if (!yl.empty()) out -= static_cast<double>(yl.size()) / n * brute_gini(yl, n_classes);
    if (!yr.empty()) out -= static_cast<double>(yr.size()) / n * brute_gini(yr, n_classes);
    return out;
}

inline std::vector<double> brute_candidates(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::vector<double> ts;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) ts.push_back(0.5 * (xs[i] + xs[i + 1]));
    return ts;
}

inline BruteResult brute_threshold_distribution(const std::vector<double>& xs,
                                                const std::vector<int>& ys, int n_classes) {
    const std::vector<double> ts = brute_candidates(xs);
    std::vector<double> w;
    double wsum = 0.0;
    for (double t : ts) {
        w.push_back(std::max(brute_gain(xs, ys, t, n_classes), 0.0));
        wsum += w.back();
    }
    BruteResult r;
    if (wsum <= 0.0) {
        r.flat = true;
        double best = -1e300;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const double g = brute_gain(xs, ys, ts[i], n_classes);
            if (g > best) {
                best = g;
                r.mu = ts[i];
            }
        }
        return r;
    }
    for (std::size_t i = 0; i < ts.size(); ++i) r.mu += w[i] / wsum * ts[i];
    double var = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i)
        var += w[i] / wsum * (ts[i] - r.mu) * (ts[i] - r.mu);
    r.sigma = std::sqrt(var);
    return r;
}

// ---- random trees -------------------------------------------------------

// Random full binary tree with continuous thresholds; used for shape and
// equivalence sweeps. Guaranteed to have at least one internal node.
inline bdtsim::TreeModel random_tree(bdtsim::RngStream& rs, int max_depth, int n_features,
                                     int n_classes) {
    using namespace bdtsim;
    TreeModel t;
    t.kind = TreeKind::BDT;
    t.n_classes = n_classes;

    // returns node id
    auto grow = [&](auto&& self, int depth) -> int {
        const int id = static_cast<int>(t.nodes.size());
        t.nodes.push_back({});
        t.nodes.back().id = id;
        const bool make_leaf =
            depth >= max_depth || (depth > 0 && rs.uniform() < 0.3);
        if (make_leaf) {
            t.nodes[static_cast<std::size_t>(id)].leaf = true;
            t.nodes[static_cast<std::size_t>(id)].label =
                static_cast<int>(rs.next_u64() % static_cast<std::uint64_t>(n_classes));
            return id;
        }
        t.nodes[static_cast<std::size_t>(id)].feature =
            static_cast<int>(rs.next_u64() % static_cast<std::uint64_t>(n_features));
        t.nodes[static_cast<std::size_t>(id)].mu = 0.05 + 0.9 * rs.uniform();
        t.nodes[static_cast<std::size_t>(id)].sigma = 0.1 * rs.uniform();
        const int left = self(self, depth + 1);
        const int right = self(self, depth + 1);
        t.nodes[static_cast<std::size_t>(id)].left = left;
        t.nodes[static_cast<std::size_t>(id)].right = right;
        return id;
    };
    grow(grow, 0);
    int guard = 0;
    while (t.nodes[0].leaf && ++guard < 100) {
        t.nodes.clear();
        grow(grow, 0);
    }
    t.depth = max_depth;
    t.build_paths();
    return t;
}

// ---- IDX fixtures -------------------------------------------------------

inline void write_be32(std::ofstream& f, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_idx_images(const std::string& path,
                             const std::vector<std::vector<unsigned char>>& images,
                             std::uint32_t rows, std::uint32_t cols,
                             std::uint32_t magic = 0x00000803u) {
    std::ofstream f(path, std::ios::binary);
    write_be32(f, magic);
    write_be32(f, static_cast<std::uint32_t>(images.size()));
    write_be32(f, rows);
    write_be32(f, cols);
    for (const auto& img : images)
        f.write(reinterpret_cast<const char*>(img.data()),
                static_cast<std::streamsize>(img.size()));
}

inline void write_idx_labels(const std::string& path, const std::vector<unsigned char>& labels,
                             std::uint32_t magic = 0x00000801u) {
    std::ofstream f(path, std::ios::binary);
    write_be32(f, magic);
    write_be32(f, static_cast<std::uint32_t>(labels.size()));
    f.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testsup
