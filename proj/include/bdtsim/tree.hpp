#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace bdtsim {

enum class TreeKind { DT, BDT };

inline std::string to_string(TreeKind k) { return k == TreeKind::DT ? "DT" : "BDT"; }

inline TreeKind tree_kind_from_string(const std::string& s) {
    if (s == "DT") return TreeKind::DT;
    if (s == "BDT") return TreeKind::BDT;
    throw std::invalid_argument("unknown tree kind: " + s);
}

// Internal node: feature test against a Gaussian threshold N(mu, sigma^2);
// sigma is exactly 0 for DT nodes. Leaf: class label. Children are indices
// into TreeModel::nodes; -1 marks none.
struct TreeNode {
    int id = -1;
    bool leaf = false;
    int feature = -1;
    double mu = 0.0;
    double sigma = 0.0;
    int left = -1;
    int right = -1;
    int label = -1;
};

struct PathStep {
    int node_id;
    bool goes_left;  // true: took the "x <= mu" branch
};

struct TreePath {
    std::vector<PathStep> steps;
    int leaf_id = -1;
    int leaf_label = -1;
};

struct TreeModel {
    std::vector<TreeNode> nodes;  // nodes[i].id == i
    int root = 0;
    int depth = 0;  // requested max depth
    TreeKind kind = TreeKind::DT;
    int n_classes = 0;
    std::vector<TreePath> paths;  // one per leaf, root-to-leaf order
    std::vector<int> path_of_leaf;  // node id -> path index (-1 for internal)
    std::vector<std::string> feature_names;
    std::vector<double> norm_min, norm_max;

    const TreeNode& node(int id) const { return nodes[static_cast<std::size_t>(id)]; }

    std::vector<int> internal_node_ids() const {
        std::vector<int> ids;
        for (const auto& n : nodes)
            if (!n.leaf) ids.push_back(n.id);
        return ids;
    }

    std::size_t n_leaves() const { return paths.size(); }

    // Rebuild the path table by depth-first walk, left branch first.
    void build_paths() {
        paths.clear();
        path_of_leaf.assign(nodes.size(), -1);
        if (nodes.empty()) return;
        std::vector<PathStep> trail;
        walk(root, trail);
        for (std::size_t p = 0; p < paths.size(); ++p)
            path_of_leaf[static_cast<std::size_t>(paths[p].leaf_id)] = static_cast<int>(p);
    }

private:
    void walk(int id, std::vector<PathStep>& trail) {
        const TreeNode& n = node(id);
        if (n.leaf) {
            paths.push_back({trail, n.id, n.label});
            return;
        }
        trail.push_back({n.id, true});
        walk(n.left, trail);
        trail.back().goes_left = false;
        walk(n.right, trail);
        trail.pop_back();
    }
};

inline nlohmann::json to_json(const TreeModel& t) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) {
        nlohmann::json j{{"id", n.id}};
        if (n.leaf) {
            j["label"] = n.label;
        } else {
            j["feature"] = n.feature;
            j["mu"] = n.mu;
            j["sigma"] = n.sigma;
            j["left"] = n.left;
            j["right"] = n.right;
        }
        nodes.push_back(std::move(j));
    }
    return nlohmann::json{{"nodes", std::move(nodes)},
                          {"root", t.root},
                          {"kind", to_string(t.kind)},
                          {"depth", t.depth},
                          {"n_classes", t.n_classes},
                          {"feature_names", t.feature_names},
                          {"norm_min", t.norm_min},
                          {"norm_max", t.norm_max}};
}

inline TreeModel tree_from_json(const nlohmann::json& j) {
    TreeModel t;
    t.root = j.at("root").get<int>();
    t.kind = tree_kind_from_string(j.at("kind").get<std::string>());
    t.depth = j.at("depth").get<int>();
    t.n_classes = j.at("n_classes").get<int>();
    if (j.contains("feature_names")) t.feature_names = j["feature_names"].get<std::vector<std::string>>();
    if (j.contains("norm_min")) t.norm_min = j["norm_min"].get<std::vector<double>>();
    if (j.contains("norm_max")) t.norm_max = j["norm_max"].get<std::vector<double>>();
    t.nodes.resize(j.at("nodes").size());
    for (const auto& jn : j.at("nodes")) {
        TreeNode n;
        n.id = jn.at("id").get<int>();
        if (jn.contains("label")) {
            n.leaf = true;
            n.label = jn["label"].get<int>();
        } else {
            n.feature = jn.at("feature").get<int>();
            n.mu = jn.at("mu").get<double>();
            n.sigma = jn.at("sigma").get<double>();
            n.left = jn.at("left").get<int>();
            n.right = jn.at("right").get<int>();
        }
        if (n.id < 0 || static_cast<std::size_t>(n.id) >= t.nodes.size())
            throw std::runtime_error("tree_from_json: node id out of range");
        t.nodes[static_cast<std::size_t>(n.id)] = n;
    }
    t.build_paths();
    return t;
}

inline void save_tree(const TreeModel& t, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_tree: cannot write " + path);
    out << to_json(t).dump(2) << '\n';
}

inline TreeModel load_tree(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_tree: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return tree_from_json(j);
}

}  // namespace bdtsim
