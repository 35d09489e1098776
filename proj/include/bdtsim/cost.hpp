#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "bdtsim/acam.hpp"
#include "bdtsim/tree.hpp"

namespace bdtsim {

// Per-operation costs. The defaults are calibrated so that a single-search
// decision totals 8.21 ns / 7.24 nJ and a 100-iteration sampling decision
// totals 1.24e3 ns / 9.21e2 nJ; the per-iteration surplus over the pure
// search cost is carried by the random-number batch terms. Programming
// costs have no calibration anchor and are plausible write-pulse figures.
struct CostModel {
    double search_latency_ns = 8.21;
    double grng_latency_ns = 4.19;
    double program_latency_ns = 10.0;
    double search_energy_nj = 7.24;
    double grng_energy_nj = 1.97;
    double program_energy_nj = 0.1;
    double peripheral_latency_factor = 1.0;  // multiplies the op subtotal
    double peripheral_energy_factor = 1.0;

    void validate() const {
        if (search_latency_ns < 0 || grng_latency_ns < 0 || program_latency_ns < 0 ||
            search_energy_nj < 0 || grng_energy_nj < 0 || program_energy_nj < 0 ||
            peripheral_latency_factor < 1.0 || peripheral_energy_factor < 1.0)
            throw std::domain_error("CostModel: entries must be >= 0 and factors >= 1");
    }
};

struct CostReport {
    double latency_ns_per_decision = 0.0;
    double energy_nj_per_decision = 0.0;
    std::map<std::string, double> latency_breakdown_ns;
    std::map<std::string, double> energy_breakdown_nj;
    std::size_t write_count = 0;
    std::size_t searches = 0;
    std::size_t grng_batches = 0;
};

// Operation counts per decision: a deterministic tree needs one parallel
// search; a sampling tree needs one search plus one random-number batch per
// iteration; the feature-wise layout additionally rewrites every
// programmable cell each iteration.
inline CostReport estimate_cost(const AcamArray& a, TreeKind kind, std::size_t n_iter,
                                const CostModel& c) {
    c.validate();
    CostReport r;
    r.searches = kind == TreeKind::DT ? 1 : n_iter;
    r.grng_batches = kind == TreeKind::BDT ? n_iter : 0;
    if (kind == TreeKind::BDT && a.strategy == MappingStrategy::FEATURE_WISE) {
        std::size_t programmable = 0;
        for (const auto& cell : a.cells)
            if (!cell.dont_care) ++programmable;
        r.write_count = n_iter * programmable;
    }

    const double s = static_cast<double>(r.searches);
    const double g = static_cast<double>(r.grng_batches);
    const double w = static_cast<double>(r.write_count);
    r.latency_breakdown_ns["search"] = s * c.search_latency_ns;
    r.latency_breakdown_ns["grng"] = g * c.grng_latency_ns;
    r.latency_breakdown_ns["program"] = w * c.program_latency_ns;
    double subtotal = r.latency_breakdown_ns["search"] + r.latency_breakdown_ns["grng"] +
                      r.latency_breakdown_ns["program"];
    r.latency_breakdown_ns["peripheral"] = (c.peripheral_latency_factor - 1.0) * subtotal;
    for (const auto& [k, v] : r.latency_breakdown_ns) r.latency_ns_per_decision += v;

    r.energy_breakdown_nj["search"] = s * c.search_energy_nj;
    r.energy_breakdown_nj["grng"] = g * c.grng_energy_nj;
    r.energy_breakdown_nj["program"] = w * c.program_energy_nj;
    subtotal = r.energy_breakdown_nj["search"] + r.energy_breakdown_nj["grng"] +
               r.energy_breakdown_nj["program"];
    r.energy_breakdown_nj["peripheral"] = (c.peripheral_energy_factor - 1.0) * subtotal;
    for (const auto& [k, v] : r.energy_breakdown_nj) r.energy_nj_per_decision += v;
    return r;
}

enum class Baseline { CPU_DT, CPU_BDT, GPU_BDT };

struct BaselineCost {
    std::string name;
    double latency_ns;
    double energy_nj;
};

// Fixed reference constants for the CPU/GPU implementations compared
// against; not re-measured here.
inline BaselineCost baseline_cost(Baseline b) {
    switch (b) {
        case Baseline::CPU_DT: return {"cpu_dt", 1.02e3, 1.08e5};
        case Baseline::CPU_BDT: return {"cpu_bdt", 3.62e6, 6.48e7};
        case Baseline::GPU_BDT: return {"gpu_bdt", 5.96e4, 5.24e5};
    }
    throw std::invalid_argument("baseline_cost: unknown baseline");
}

inline Baseline baseline_from_string(const std::string& s) {
    if (s == "cpu_dt") return Baseline::CPU_DT;
    if (s == "cpu_bdt") return Baseline::CPU_BDT;
    if (s == "gpu_bdt") return Baseline::GPU_BDT;
    throw std::invalid_argument("unknown baseline: " + s);
}

struct CostComparison {
    std::string baseline;
    double speedup;       // baseline latency / report latency
    double energy_ratio;  // baseline energy / report energy
};

inline CostComparison compare_reference(const CostReport& r, Baseline b) {
    const BaselineCost base = baseline_cost(b);
    return {base.name, base.latency_ns / r.latency_ns_per_decision,
            base.energy_nj / r.energy_nj_per_decision};
}

inline nlohmann::json to_json(const CostReport& r) {
    return {{"latency_ns_per_decision", r.latency_ns_per_decision},
            {"energy_nj_per_decision", r.energy_nj_per_decision},
            {"latency_breakdown_ns", r.latency_breakdown_ns},
            {"energy_breakdown_nj", r.energy_breakdown_nj},
            {"write_count", r.write_count},
            {"searches", r.searches},
            {"grng_batches", r.grng_batches}};
}

inline nlohmann::json to_json(const CostComparison& c) {
    return {{"baseline", c.baseline}, {"speedup", c.speedup}, {"energy_ratio", c.energy_ratio}};
}

inline CostModel cost_model_from_json(const nlohmann::json& j) {
    CostModel c;
    c.search_latency_ns = j.value("search_latency_ns", c.search_latency_ns);
    c.grng_latency_ns = j.value("grng_latency_ns", c.grng_latency_ns);
    c.program_latency_ns = j.value("program_latency_ns", c.program_latency_ns);
    c.search_energy_nj = j.value("search_energy_nj", c.search_energy_nj);
    c.grng_energy_nj = j.value("grng_energy_nj", c.grng_energy_nj);
    c.program_energy_nj = j.value("program_energy_nj", c.program_energy_nj);
    c.peripheral_latency_factor = j.value("peripheral_latency_factor", c.peripheral_latency_factor);
    c.peripheral_energy_factor = j.value("peripheral_energy_factor", c.peripheral_energy_factor);
    c.validate();
    return c;
}

}  // namespace bdtsim
