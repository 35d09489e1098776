#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bdtsim/noise.hpp"
#include "bdtsim/rng.hpp"
#include "bdtsim/tree.hpp"

namespace bdtsim {

// One analog CAM cell. A tree split stores exactly one finite bound
// ("x <= t" -> hi = t, "x > t" -> lo = t); feature-wise mapping can close
// both. An open bound is vacuous. Matching is lo < v <= hi.
struct AcamCell {
    std::optional<double> lo, hi;
    bool dont_care = false;

    bool matches(double v) const {
        if (dont_care) return true;
        if (lo && !(v > *lo)) return false;
        if (hi && !(v <= *hi)) return false;
        return true;
    }
};

enum class MappingStrategy { FEATURE_WISE, NODE_WISE };

inline std::string to_string(MappingStrategy s) {
    return s == MappingStrategy::NODE_WISE ? "node_wise" : "feature_wise";
}

struct ColumnMeta {
    int node_id = -1;   // NODE_WISE only
    int feature = -1;   // feature feeding this column's query
    double mu = 0.0;    // NODE_WISE: the node's stored boundary
    double sigma = 0.0; // NODE_WISE: the node's threshold spread
};

struct RowMeta {
    int path_id = -1;
    int leaf_label = -1;
};

// A single split constraint, kept with feature-wise arrays so their cells
// can be re-derived from freshly sampled node thresholds.
struct PathConstraint {
    int node_id;
    int feature;
    bool goes_left;
    double mu;
    double sigma;
};

struct AcamArray {
    MappingStrategy strategy = MappingStrategy::NODE_WISE;
    std::size_t rows = 0, cols = 0;
    std::vector<AcamCell> cells;  // row-major
    std::vector<RowMeta> row_meta;
    std::vector<ColumnMeta> col_meta;
    // FEATURE_WISE: per row, the split constraints that formed its cells.
    std::vector<std::vector<PathConstraint>> path_constraints;
    int n_classes = 0;
    bool needs_reprogram = false;  // FEATURE_WISE arrays of a BDT

    AcamCell& cell(std::size_t r, std::size_t c) { return cells[r * cols + c]; }
    const AcamCell& cell(std::size_t r, std::size_t c) const { return cells[r * cols + c]; }
};

// Node-wise mapping: one column per internal node (ascending node id); one
// row per root-to-leaf path. A path's cell holds the node's mu on the side
// the path exits (left -> upper bound, right -> lower); nodes absent from
// the path are don't-care. Thresholds stay fixed at inference time: the
// stochastic component rides on the query instead.
inline AcamArray map_node_wise(const TreeModel& t) {
    const std::vector<int> internal = t.internal_node_ids();
    if (internal.empty()) throw std::invalid_argument("map_node_wise: tree has no internal node");
    AcamArray a;
    a.strategy = MappingStrategy::NODE_WISE;
    a.rows = t.paths.size();
    a.cols = internal.size();
    a.n_classes = t.n_classes;
    a.cells.assign(a.rows * a.cols, AcamCell{{}, {}, true});

    std::map<int, std::size_t> col_of;
    for (std::size_t c = 0; c < internal.size(); ++c) {
        const TreeNode& n = t.node(internal[c]);
        col_of[n.id] = c;
        a.col_meta.push_back({n.id, n.feature, n.mu, n.sigma});
    }
    for (std::size_t r = 0; r < t.paths.size(); ++r) {
        const TreePath& p = t.paths[r];
        a.row_meta.push_back({static_cast<int>(r), p.leaf_label});
        for (const PathStep& s : p.steps) {
            AcamCell& cell = a.cell(r, col_of.at(s.node_id));
            cell.dont_care = false;
            const double mu = t.node(s.node_id).mu;
            if (s.goes_left)
                cell.hi = mu;
            else
                cell.lo = mu;
        }
    }
    return a;
}

// Feature-wise mapping: one column per distinct feature used by the tree.
// Each row's cell is the interval intersection of that path's constraints
// on the feature. BDT inference on this layout must reprogram every
// iteration, which is what the node-wise layout exists to avoid.
inline AcamArray map_feature_wise(const TreeModel& t) {
    const std::vector<int> internal = t.internal_node_ids();
    if (internal.empty())
        throw std::invalid_argument("map_feature_wise: tree has no internal node");
    std::vector<int> feats;
    for (int id : internal) feats.push_back(t.node(id).feature);
    std::sort(feats.begin(), feats.end());
    feats.erase(std::unique(feats.begin(), feats.end()), feats.end());

    AcamArray a;
    a.strategy = MappingStrategy::FEATURE_WISE;
    a.rows = t.paths.size();
    a.cols = feats.size();
    a.n_classes = t.n_classes;
    a.cells.assign(a.rows * a.cols, AcamCell{{}, {}, true});
    std::map<int, std::size_t> col_of;
    for (std::size_t c = 0; c < feats.size(); ++c) {
        col_of[feats[c]] = c;
        a.col_meta.push_back({-1, feats[c], 0.0, 0.0});
    }

    bool any_sigma = false;
    a.path_constraints.resize(a.rows);
    for (std::size_t r = 0; r < t.paths.size(); ++r) {
        const TreePath& p = t.paths[r];
        a.row_meta.push_back({static_cast<int>(r), p.leaf_label});
        for (const PathStep& s : p.steps) {
            const TreeNode& n = t.node(s.node_id);
            a.path_constraints[r].push_back({n.id, n.feature, s.goes_left, n.mu, n.sigma});
            any_sigma = any_sigma || n.sigma > 0.0;
            AcamCell& cell = a.cell(r, col_of.at(n.feature));
            cell.dont_care = false;
            if (s.goes_left)
                cell.hi = cell.hi ? std::min(*cell.hi, n.mu) : n.mu;
            else
                cell.lo = cell.lo ? std::max(*cell.lo, n.mu) : n.mu;
            if (cell.lo && cell.hi && !(*cell.lo < *cell.hi))
                throw std::runtime_error("map_feature_wise: empty interval on path " +
                                         std::to_string(r) + ", feature " +
                                         std::to_string(n.feature));
        }
    }
    a.needs_reprogram = t.kind == TreeKind::BDT && any_sigma;
    return a;
}

// Uniform quantizer over [0,1]: 2^bits levels including both endpoints,
// round to nearest, ties up.
inline double quantize_level(double v, int bits) {
    const double levels = std::exp2(bits) - 1.0;
    return std::floor(v * levels + 0.5) / levels;
}

// Write the array: quantize each finite stored bound, then perturb it with
// write noise. Don't-care cells hold the high-threshold sentinel and are
// never perturbed into the active range. Pure: returns the programmed copy.
inline AcamArray program(const AcamArray& a, const NoiseSpec& noise, std::uint64_t seed) {
    noise.validate();
    AcamArray out = a;
    for (std::size_t r = 0; r < a.rows; ++r) {
        for (std::size_t c = 0; c < a.cols; ++c) {
            AcamCell& cell = out.cell(r, c);
            if (cell.dont_care) continue;
            RngStream rs = RngStream::from(seed, 0xACC1u, r, c);
            auto write = [&](std::optional<double>& b) {
                if (!b) return;
                if (noise.bits) b = quantize_level(*b, *noise.bits);
                if (noise.write_sigma > 0.0) b = *b + noise.write_sigma * rs.gaussian();
            };
            write(cell.lo);
            write(cell.hi);
        }
    }
    return out;
}

inline nlohmann::json to_json(const AcamArray& a) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : a.cells) {
        nlohmann::json jc;
        jc["dont_care"] = c.dont_care;
        jc["lo"] = c.lo ? nlohmann::json(*c.lo) : nlohmann::json();
        jc["hi"] = c.hi ? nlohmann::json(*c.hi) : nlohmann::json();
        cells.push_back(std::move(jc));
    }
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : a.row_meta)
        rows.push_back({{"path_id", r.path_id}, {"leaf_label", r.leaf_label}});
    nlohmann::json colj = nlohmann::json::array();
    for (const auto& c : a.col_meta)
        colj.push_back({{"node_id", c.node_id},
                        {"feature", c.feature},
                        {"mu", c.mu},
                        {"sigma", c.sigma}});
    nlohmann::json pc = nlohmann::json::array();
    for (const auto& row : a.path_constraints) {
        nlohmann::json jr = nlohmann::json::array();
        for (const auto& s : row)
            jr.push_back({{"node_id", s.node_id},
                          {"feature", s.feature},
                          {"goes_left", s.goes_left},
                          {"mu", s.mu},
                          {"sigma", s.sigma}});
        pc.push_back(std::move(jr));
    }
    return nlohmann::json{{"strategy", to_string(a.strategy)},
                          {"rows", a.rows},
                          {"cols", a.cols},
                          {"cells", std::move(cells)},
                          {"row_meta", std::move(rows)},
                          {"col_meta", std::move(colj)},
                          {"path_constraints", std::move(pc)},
                          {"n_classes", a.n_classes},
                          {"needs_reprogram", a.needs_reprogram}};
}

inline AcamArray array_from_json(const nlohmann::json& j) {
    AcamArray a;
    const std::string strat = j.at("strategy").get<std::string>();
    if (strat == "node_wise")
        a.strategy = MappingStrategy::NODE_WISE;
    else if (strat == "feature_wise")
        a.strategy = MappingStrategy::FEATURE_WISE;
    else
        throw std::runtime_error("array_from_json: unknown strategy " + strat);
    a.rows = j.at("rows").get<std::size_t>();
    a.cols = j.at("cols").get<std::size_t>();
    a.n_classes = j.at("n_classes").get<int>();
    a.needs_reprogram = j.value("needs_reprogram", false);
    for (const auto& jc : j.at("cells")) {
        AcamCell c;
        c.dont_care = jc.at("dont_care").get<bool>();
        if (!jc.at("lo").is_null()) c.lo = jc["lo"].get<double>();
        if (!jc.at("hi").is_null()) c.hi = jc["hi"].get<double>();
        a.cells.push_back(c);
    }
    if (a.cells.size() != a.rows * a.cols)
        throw std::runtime_error("array_from_json: cell count does not match dimensions");
    for (const auto& jr : j.at("row_meta"))
        a.row_meta.push_back({jr.at("path_id").get<int>(), jr.at("leaf_label").get<int>()});
    for (const auto& jc : j.at("col_meta"))
        a.col_meta.push_back({jc.at("node_id").get<int>(), jc.at("feature").get<int>(),
                              jc.at("mu").get<double>(), jc.at("sigma").get<double>()});
    if (j.contains("path_constraints")) {
        for (const auto& jr : j["path_constraints"]) {
            std::vector<PathConstraint> row;
            for (const auto& js : jr)
                row.push_back({js.at("node_id").get<int>(), js.at("feature").get<int>(),
                               js.at("goes_left").get<bool>(), js.at("mu").get<double>(),
                               js.at("sigma").get<double>()});
            a.path_constraints.push_back(std::move(row));
        }
    }
    return a;
}

inline void save_array(const AcamArray& a, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_array: cannot write " + path);
    out << to_json(a).dump(2) << '\n';
}

inline AcamArray load_array(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_array: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return array_from_json(j);
}

}  // namespace bdtsim
