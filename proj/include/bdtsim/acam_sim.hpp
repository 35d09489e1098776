#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "bdtsim/acam.hpp"
#include "bdtsim/noise.hpp"
#include "bdtsim/rng.hpp"

namespace bdtsim {

// Mismatch-branch I-V shape: current rises exponentially with overdrive at
// subthreshold_slope decades per normalized volt from the off_current
// floor, saturating at on_conductance. Units are arbitrary; only contrast
// between rows matters for match selection.
struct CellIvModel {
    double on_conductance = 100.0;
    double subthreshold_slope = 20.0;  // decades per normalized volt
    double off_current = 1e-4;

    void validate() const {
        if (on_conductance <= 0 || subthreshold_slope <= 0 || off_current < 0)
            throw std::domain_error("CellIvModel: parameters out of range");
    }

    double branch_current(double overdrive) const {
        if (overdrive <= 0.0) return 0.0;
        const double floor = off_current > 0 ? off_current : 1e-12;
        const double grown = floor * (std::exp2(subthreshold_slope * overdrive * 3.321928094887362) - 1.0);
        return std::min(on_conductance, grown);
    }
};

inline nlohmann::json to_json(const CellIvModel& m) {
    return {{"on_conductance", m.on_conductance},
            {"subthreshold_slope", m.subthreshold_slope},
            {"off_current", m.off_current}};
}

inline CellIvModel iv_from_json(const nlohmann::json& j) {
    CellIvModel m;
    m.on_conductance = j.value("on_conductance", m.on_conductance);
    m.subthreshold_slope = j.value("subthreshold_slope", m.subthreshold_slope);
    m.off_current = j.value("off_current", m.off_current);
    m.validate();
    return m;
}

// Current drawn by one cell for query v, with additive perturbations on the
// stored bounds (the read-time threshold-voltage error). A matching or
// don't-care cell contributes the off floor; a mismatch adds the branch
// current of whichever FeFET turned on.
inline double cell_current(const AcamCell& c, double v, const CellIvModel& iv,
                           double lo_noise = 0.0, double hi_noise = 0.0) {
    if (c.dont_care) return iv.off_current;
    double over = 0.0;
    if (c.lo) {
        const double lo = *c.lo + lo_noise;
        if (v <= lo) over = std::max(over, lo - v);
    }
    if (c.hi) {
        const double hi = *c.hi + hi_noise;
        if (v > hi) over = std::max(over, v - hi);
    }
    return iv.off_current + iv.branch_current(over);
}

struct SearchResult {
    std::vector<double> row_currents;
    std::size_t matched_row = 0;
    std::vector<double> margins;  // current gap to the winner, >= 0
};

// Flattened non-don't-care cells of an array, reusable across many
// searches. Don't-care cells contribute exactly off_current each, so only
// programmed cells need evaluating.
class SearchEngine {
public:
    SearchEngine(const AcamArray& a, const CellIvModel& iv) : a_(a), iv_(iv) {
        iv.validate();
        for (std::size_t r = 0; r < a.rows; ++r)
            for (std::size_t c = 0; c < a.cols; ++c) {
                const AcamCell& cell = a.cell(r, c);
                if (!cell.dont_care) entries_.push_back({r, c, cell.lo, cell.hi});
            }
    }

    const AcamArray& array() const { return a_; }
    const CellIvModel& iv() const { return iv_; }

    // One parallel search. Every finite bound gets an independent draw from
    // a stream keyed by (seed, row, col), so results are reproducible cell
    // by cell. Rows with valid[r] == false are excluded from the argmin.
    SearchResult search(std::span<const double> query, double read_sigma, std::uint64_t seed,
                        const std::vector<char>* valid = nullptr) const {
        if (query.size() != a_.cols)
            throw std::domain_error("search: query length != column count");
        SearchResult res;
        res.row_currents.assign(a_.rows, iv_.off_current * static_cast<double>(a_.cols));
        for (const Entry& e : entries_) {
            double lo_n = 0.0, hi_n = 0.0;
            if (read_sigma > 0.0) {
                RngStream rs = RngStream::from(seed, 0x5EA2u, e.row, e.col);
                if (e.lo) lo_n = read_sigma * rs.gaussian();
                if (e.hi) hi_n = read_sigma * rs.gaussian();
            }
            const double v = query[e.col];
            double over = 0.0;
            if (e.lo) {
                const double lo = *e.lo + lo_n;
                if (v <= lo) over = lo - v;
            }
            if (e.hi) {
                const double hi = *e.hi + hi_n;
                if (v > hi) over = std::max(over, v - hi);
            }
            res.row_currents[e.row] += iv_.branch_current(over);
        }
        res.matched_row = a_.rows;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < a_.rows; ++r) {
            if (valid && !(*valid)[r]) continue;
            if (res.row_currents[r] < best) {
                best = res.row_currents[r];
                res.matched_row = r;
            }
        }
        if (res.matched_row == a_.rows) throw std::runtime_error("search: no selectable row");
        res.margins.resize(a_.rows);
        for (std::size_t r = 0; r < a_.rows; ++r) res.margins[r] = res.row_currents[r] - best;
        return res;
    }

private:
    struct Entry {
        std::size_t row, col;
        std::optional<double> lo, hi;
    };
    AcamArray a_;
    CellIvModel iv_;
    std::vector<Entry> entries_;
};

inline SearchResult search(const AcamArray& a, std::span<const double> query,
                           const NoiseSpec& noise, const CellIvModel& iv, std::uint64_t seed) {
    noise.validate();
    return SearchEngine(a, iv).search(query, noise.read_sigma, seed);
}

// Noise-free matching oracle: rows whose every programmed cell satisfies
// lo < v <= hi. Tree-derived arrays yield exactly one row per query.
inline std::vector<std::size_t> digital_match(const AcamArray& a, std::span<const double> query) {
    if (query.size() != a.cols) throw std::domain_error("digital_match: query length mismatch");
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < a.rows; ++r) {
        bool ok = true;
        for (std::size_t c = 0; c < a.cols && ok; ++c) ok = a.cell(r, c).matches(query[c]);
        if (ok) out.push_back(r);
    }
    return out;
}

// Fit the I-V shape to measured (overdrive voltage, current) transfer
// points: the floor is the smallest current, the saturated branch current
// the largest, and the slope comes from a log-linear regression over the
// exponential region between them.
inline CellIvModel fit_iv_model(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw std::domain_error("fit_iv_model: need at least 3 points");
    double imin = points[0].second, imax = points[0].second;
    for (const auto& [v, i] : points) {
        if (i < 0) throw std::domain_error("fit_iv_model: negative current");
        imin = std::min(imin, i);
        imax = std::max(imax, i);
    }
    if (!(imax > imin)) throw std::domain_error("fit_iv_model: flat transfer curve");
    CellIvModel m;
    m.off_current = imin;
    m.on_conductance = imax - imin;
    // Regress log10(i - floor) on v where the branch is clearly above the
    // floor and below saturation.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (const auto& [v, i] : points) {
        const double branch = i - imin;
        if (branch < 0.02 * m.on_conductance || branch > 0.5 * m.on_conductance) continue;
        const double y = std::log10(branch / (imin > 0 ? imin : 1e-12));
        sx += v;
        sy += y;
        sxx += v * v;
        sxy += v * y;
        ++n;
    }
    if (n < 2) throw std::domain_error("fit_iv_model: no resolvable exponential region");
    const double denom = static_cast<double>(n) * sxx - sx * sx;
    if (denom == 0.0) throw std::domain_error("fit_iv_model: degenerate voltage values");
    m.subthreshold_slope = (static_cast<double>(n) * sxy - sx * sy) / denom;
    if (m.subthreshold_slope <= 0)
        throw std::domain_error("fit_iv_model: non-increasing transfer curve");
    return m;
}

}  // namespace bdtsim
