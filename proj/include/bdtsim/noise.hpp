#pragma once

#include <optional>
#include <stdexcept>

#include <json.hpp>

namespace bdtsim {

// All sigmas are in normalized units: the feature/threshold range [0,1]
// maps onto the device voltage window, so 0.1 here means a 0.1 V swing.
struct NoiseSpec {
    double input_sigma = 0.0;   // dataset perturbation, clipped to [0,1]
    double read_sigma = 0.0;    // per-search stored-threshold perturbation
    double write_sigma = 0.0;   // one-time programming error
    std::optional<int> bits;    // threshold quantization; nullopt = analog
    double drift = 0.0;         // slow mean offset on the entropy source

    void validate() const {
        if (input_sigma < 0 || read_sigma < 0 || write_sigma < 0)
            throw std::domain_error("NoiseSpec: sigmas must be >= 0");
        if (bits && *bits < 1) throw std::domain_error("NoiseSpec: bits must be >= 1");
    }
};

inline nlohmann::json to_json(const NoiseSpec& n) {
    nlohmann::json j{{"input_sigma", n.input_sigma},
                     {"read_sigma", n.read_sigma},
                     {"write_sigma", n.write_sigma},
                     {"drift", n.drift}};
    if (n.bits) j["bits"] = *n.bits;
    return j;
}

inline NoiseSpec noise_from_json(const nlohmann::json& j) {
    NoiseSpec n;
    n.input_sigma = j.value("input_sigma", 0.0);
    n.read_sigma = j.value("read_sigma", 0.0);
    n.write_sigma = j.value("write_sigma", 0.0);
    n.drift = j.value("drift", 0.0);
    if (j.contains("bits") && !j["bits"].is_null()) n.bits = j["bits"].get<int>();
    n.validate();
    return n;
}

}  // namespace bdtsim
