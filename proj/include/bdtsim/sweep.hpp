#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bdtsim/inference.hpp"
#include "bdtsim/train.hpp"

namespace bdtsim {

enum class SweepAxis { INPUT_NOISE, DEVICE_NOISE, BITS, DEPTH };

inline std::string to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::INPUT_NOISE: return "input_noise";
        case SweepAxis::DEVICE_NOISE: return "device_noise";
        case SweepAxis::BITS: return "bits";
        case SweepAxis::DEPTH: return "depth";
    }
    return "?";
}

inline SweepAxis axis_from_string(const std::string& s) {
    if (s == "input_noise" || s == "input") return SweepAxis::INPUT_NOISE;
    if (s == "device_noise" || s == "device") return SweepAxis::DEVICE_NOISE;
    if (s == "bits") return SweepAxis::BITS;
    if (s == "depth") return SweepAxis::DEPTH;
    throw std::invalid_argument("unknown sweep axis: " + s);
}

struct ModelSpec {
    TreeKind kind;
    int max_depth;

    std::string name() const { return to_string(kind) + "-d" + std::to_string(max_depth); }
};

struct SweepSpec {
    SweepAxis axis = SweepAxis::DEVICE_NOISE;
    std::vector<double> values;  // BITS axis: 0 means quantization disabled
    std::vector<ModelSpec> models;
    std::size_t n_iter = 100;  // sampling iterations for BDT models (DT uses 1)
    std::size_t trials = 5;
    std::uint64_t seed = 1;

    void validate() const {
        if (values.empty()) throw std::domain_error("SweepSpec: values must be non-empty");
        for (std::size_t i = 1; i < values.size(); ++i)
            if (values[i] < values[i - 1])
                throw std::domain_error("SweepSpec: values must be sorted ascending");
        if (models.empty()) throw std::domain_error("SweepSpec: no models");
        if (trials < 1) throw std::domain_error("SweepSpec: trials must be >= 1");
        if (axis == SweepAxis::BITS)
            for (double v : values)
                if (v < 0 || v != std::floor(v))
                    throw std::domain_error(
                        "SweepSpec: bits values must be non-negative integers (0 = disabled)");
        if (axis == SweepAxis::DEPTH)
            for (double v : values)
                if (v < 1 || v != std::floor(v))
                    throw std::domain_error("SweepSpec: depth values must be integers >= 1");
    }
};

struct SweepPoint {
    double value;
    std::string model;
    double mean_acc;
    double std_acc;
    std::size_t trials;
    std::vector<double> accs;
};

// One robustness sweep: per (axis value, model, trial), configure the noise
// spec for the axis, program the array, run the test batch, and collect the
// accuracy. Results come back ordered by (value, model). Trees are trained
// once per distinct (kind, depth) and reused across the grid.
inline std::vector<SweepPoint> run_sweep(const SweepSpec& spec, const Dataset& train_data,
                                         const Dataset& test_data, const NoiseSpec& base_noise,
                                         const GrngConfig& grng, const CellIvModel& iv,
                                         const TrainOptions& base_opt, unsigned n_threads = 0) {
    spec.validate();
    base_noise.validate();

    std::map<std::pair<int, int>, TreeModel> trained;  // (kind, depth) -> tree
    auto get_tree = [&](TreeKind kind, int depth) -> const TreeModel& {
        const auto key = std::make_pair(static_cast<int>(kind), depth);
        auto it = trained.find(key);
        if (it == trained.end()) {
            TrainOptions opt = base_opt;
            opt.max_depth = depth;
            it = trained.emplace(key, train(train_data, kind, opt)).first;
        }
        return it->second;
    };

    std::vector<SweepPoint> out;
    for (std::size_t vi = 0; vi < spec.values.size(); ++vi) {
        const double value = spec.values[vi];
        for (std::size_t mi = 0; mi < spec.models.size(); ++mi) {
            const ModelSpec& m = spec.models[mi];
            NoiseSpec noise = base_noise;
            int depth = m.max_depth;
            switch (spec.axis) {
                case SweepAxis::INPUT_NOISE: noise.input_sigma = value; break;
                case SweepAxis::DEVICE_NOISE: noise.read_sigma = value; break;
                case SweepAxis::BITS:
                    if (value == 0)
                        noise.bits.reset();
                    else
                        noise.bits = static_cast<int>(value);
                    break;
                case SweepAxis::DEPTH: depth = static_cast<int>(value); break;
            }
            const TreeModel& tree = get_tree(m.kind, depth);
            const AcamArray array = map_node_wise(tree);
            const std::size_t n_iter = m.kind == TreeKind::BDT ? spec.n_iter : 1;

            SweepPoint pt{value, m.name(), 0.0, 0.0, spec.trials, {}};
            for (std::size_t trial = 0; trial < spec.trials; ++trial) {
                const std::uint64_t trial_seed = derive_key(spec.seed, vi, mi, trial);
                const AcamArray programmed = program(array, noise, derive_key(trial_seed, 0xF1AEu));
                const SearchEngine eng(programmed, iv);
                const BatchResult br =
                    predict_batch(eng, test_data, n_iter, noise, grng, trial_seed, n_threads);
                pt.accs.push_back(br.accuracy);
            }
            for (double a : pt.accs) pt.mean_acc += a;
            pt.mean_acc /= static_cast<double>(pt.accs.size());
            double var = 0.0;
            for (double a : pt.accs) var += (a - pt.mean_acc) * (a - pt.mean_acc);
            pt.std_acc = std::sqrt(var / static_cast<double>(pt.accs.size()));
            out.push_back(std::move(pt));
        }
    }
    return out;
}

inline nlohmann::json sweep_to_json(SweepAxis axis, const std::vector<SweepPoint>& pts) {
    // One series per model, plot-ready.
    std::vector<std::string> model_order;
    std::map<std::string, nlohmann::json> series;
    for (const auto& p : pts) {
        if (!series.count(p.model)) {
            model_order.push_back(p.model);
            series[p.model] = nlohmann::json::array();
        }
        series[p.model].push_back({{"value", p.value},
                                   {"mean_acc", p.mean_acc},
                                   {"std_acc", p.std_acc},
                                   {"trials", p.trials},
                                   {"accs", p.accs}});
    }
    nlohmann::json jseries = nlohmann::json::array();
    for (const auto& m : model_order)
        jseries.push_back({{"model", m}, {"points", series[m]}});
    return {{"axis", to_string(axis)}, {"series", jseries}};
}

inline std::pair<SweepAxis, std::vector<SweepPoint>> sweep_from_json(const nlohmann::json& j) {
    const SweepAxis axis = axis_from_string(j.at("axis").get<std::string>());
    // Rebuild in (value, model) order to match run_sweep output.
    std::vector<SweepPoint> pts;
    for (const auto& s : j.at("series")) {
        const std::string model = s.at("model").get<std::string>();
        for (const auto& p : s.at("points"))
            pts.push_back({p.at("value").get<double>(), model, p.at("mean_acc").get<double>(),
                           p.at("std_acc").get<double>(), p.at("trials").get<std::size_t>(),
                           p.value("accs", std::vector<double>{})});
    }
    std::stable_sort(pts.begin(), pts.end(), [](const SweepPoint& a, const SweepPoint& b) {
        return a.value < b.value;
    });
    return {axis, pts};
}

// CSV: header + one row per (axis value, model).
inline void emit_csv(SweepAxis axis, const std::vector<SweepPoint>& pts, std::ostream& out) {
    out << "axis,model,mean_acc,std_acc,trials\n";
    char buf[160];
    for (const auto& p : pts) {
        std::snprintf(buf, sizeof buf, "%.17g,%s,%.6f,%.6f,%zu\n", p.value, p.model.c_str(),
                      p.mean_acc, p.std_acc, p.trials);
        out << buf;
    }
}

inline void emit_report(SweepAxis axis, const std::vector<SweepPoint>& pts,
                        const std::string& format, const std::string& path) {
    if (pts.empty()) throw std::domain_error("emit_report: no results");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_report: cannot write " + path);
    if (format == "csv")
        emit_csv(axis, pts, out);
    else if (format == "json")
        out << sweep_to_json(axis, pts).dump(2) << '\n';
    else
        throw std::invalid_argument("emit_report: format must be csv or json");
}

}  // namespace bdtsim
