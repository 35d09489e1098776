#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "bdtsim/rng.hpp"

namespace bdtsim {

// Behavioral model of the Gaussian random voltage chain: a stochastic
// entropy source yields pulse widths T ~ N(mu_p, sigma_p^2); a programmable
// scale factor sigma' = sigma_target/sigma_p stretches them to the wanted
// spread; subtracting the stored compensation voltage sigma'*mu_p recenters
// the output at zero. A slow endurance shift of the source mean enters as
// `drift` and is what the compensation architecture must cancel.
struct GrngPipeline {
    double mu_p = 1.0;      // mean pulse width (s, arbitrary scale)
    double sigma_p = 0.15;  // pulse width spread
    double sigma_target = 0.0;
    double drift = 0.0;     // added to the pulse mean

    double scale() const { return sigma_target / sigma_p; }         // sigma'
    double v_comp() const { return scale() * mu_p; }

    void validate(bool enforce_truncation_guard = true) const {
        if (sigma_p <= 0.0) throw std::domain_error("GrngPipeline: sigma_p must be > 0");
        if (sigma_target < 0.0) throw std::domain_error("GrngPipeline: sigma_target must be >= 0");
        // Keep the T >= 0 truncation bias negligible.
        if (enforce_truncation_guard && mu_p < 5.0 * sigma_p)
            throw std::domain_error("GrngPipeline: mu_p must be >= 5*sigma_p");
    }
};

// Pulse widths are physical durations; the Gaussian is truncated at zero.
inline double sample_pulse(const GrngPipeline& p, RngStream& rs) {
    return std::max(0.0, rs.gaussian(p.mu_p + p.drift, p.sigma_p));
}

// Zero-mean output: sigma' * T - V_comp ~ N(drift * sigma', sigma_target^2).
inline double sample_epsilon(const GrngPipeline& p, RngStream& rs) {
    if (p.sigma_target == 0.0) return 0.0;
    return p.scale() * sample_pulse(p, rs) - p.v_comp();
}

// Inverse standard normal CDF (Wichura's AS241, double precision).
inline double normal_quantile(double p) {
    if (p <= 0.0 || p >= 1.0) throw std::domain_error("normal_quantile: p must be in (0,1)");
    const double q = p - 0.5;
    double r;
    if (std::abs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2509.0809287301226727 * r + 33430.575583588128105) * r +
                     67265.770927008700853) * r + 45921.953931549871457) * r +
                   13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((5226.495278852545703 * r + 28729.085735721942674) * r +
                     39307.89580009271061) * r + 21213.794301586595867) * r +
                   5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r +
                    0.24178072517745061177) * r + 1.27045825245236838258) * r +
                  3.64784832476320460504) * r + 5.7694972214606914055) * r +
                4.6303378461565452959) * r + 1.42343711074968357734) /
              (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r +
                    0.0151986665636164571966) * r + 0.14810397642748007459) * r +
                  0.68976733498510000455) * r + 1.6763848301838038494) * r +
                2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    0.0012426609473880784386) * r + 0.026532189526576123093) * r +
                  0.29656057182850489123) * r + 1.7848265399172913358) * r +
                5.4637849111641143699) * r + 6.6579046435011037772) /
              (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r +
                    1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r +
                  0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                0.59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

struct QualityReport {
    std::size_t n = 0;
    double mean = 0.0;
    double stddev = 0.0;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    double qq_correlation = 0.0;  // sorted samples vs normal quantiles
    double ks_statistic = 0.0;    // against N(mean, stddev^2)
    double ks_critical = 0.0;
    double alpha = 0.0;
    bool ks_pass = false;
    bool zero_variance = false;
};

// Moment, quantile-quantile, and Kolmogorov-Smirnov checks on a sample.
// The KS statistic compares the standardized empirical CDF against the
// standard normal; critical value is the large-n approximation.
inline QualityReport quality_report(std::vector<double> samples, double alpha = 0.01) {
    if (samples.size() < 1000)
        throw std::domain_error("quality_report: need at least 1000 samples");
    QualityReport r;
    r.n = samples.size();
    r.alpha = alpha;
    const double n = static_cast<double>(samples.size());
    for (double v : samples) r.mean += v;
    r.mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : samples) {
        const double d = v - r.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    const double var = m2 / (n - 1.0);
    r.stddev = std::sqrt(var);
    if (!(r.stddev > 0.0)) {
        r.zero_variance = true;
        r.ks_statistic = 1.0;
        r.ks_pass = false;
        return r;
    }
    const double pop_var = m2 / n;
    r.skewness = (m3 / n) / std::pow(pop_var, 1.5);
    r.excess_kurtosis = (m4 / n) / (pop_var * pop_var) - 3.0;

    std::sort(samples.begin(), samples.end());
    // QQ correlation: Pearson r between order statistics and quantiles.
    double qmean = 0.0;
    std::vector<double> q(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        q[i] = normal_quantile((static_cast<double>(i) + 0.5) / n);
        qmean += q[i];
    }
    qmean /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    const double smean = r.mean;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double dx = samples[i] - smean;
        const double dy = q[i] - qmean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    r.qq_correlation = sxy / std::sqrt(sxx * syy);

    double d_max = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double z = (samples[i] - r.mean) / r.stddev;
        const double cdf = normal_cdf(z);
        d_max = std::max(d_max, std::abs(cdf - static_cast<double>(i + 1) / n));
        d_max = std::max(d_max, std::abs(cdf - static_cast<double>(i) / n));
    }
    r.ks_statistic = d_max;
    r.ks_critical = std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(n);
    r.ks_pass = r.ks_statistic < r.ks_critical;
    return r;
}

inline nlohmann::json to_json(const QualityReport& r) {
    return {{"n", r.n},
            {"mean", r.mean},
            {"stddev", r.stddev},
            {"skewness", r.skewness},
            {"excess_kurtosis", r.excess_kurtosis},
            {"qq_correlation", r.qq_correlation},
            {"ks_statistic", r.ks_statistic},
            {"ks_critical", r.ks_critical},
            {"alpha", r.alpha},
            {"ks_pass", r.ks_pass},
            {"zero_variance", r.zero_variance}};
}

}  // namespace bdtsim
