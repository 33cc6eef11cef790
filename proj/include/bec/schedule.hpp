#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bec/errors.hpp"
#include "bec/learners.hpp"

namespace bec {

enum class DecayMode { constant, power };

/// Base rates plus an optional k^-p decay per rate. With DecayMode::power the
/// rate at step k (k >= 1) is base * k^-exponent.
struct StepSizes {
    double alpha = 0.01;
    double beta = 0.01;
    double zeta = 0.01;
    DecayMode decay = DecayMode::constant;
    double alpha_exponent = 1.0;
    double beta_exponent = 1.0;
    double zeta_exponent = 1.0;

    void validate() const {
        if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidModel("step sizes: alpha must be > 0");
        if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidModel("step sizes: beta must be > 0");
        if (!(zeta > 0.0) || !std::isfinite(zeta)) throw InvalidModel("step sizes: zeta must be > 0");
        if (decay == DecayMode::power) {
            for (double p : {alpha_exponent, beta_exponent, zeta_exponent})
                if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidModel("step sizes: exponents must be >= 0");
        }
    }

    Rates at(std::uint64_t k) const {
        if (decay == DecayMode::constant) return {alpha, beta, zeta};
        const double t = static_cast<double>(k < 1 ? 1 : k);
        return {alpha * std::pow(t, -alpha_exponent), beta * std::pow(t, -beta_exponent),
                zeta * std::pow(t, -zeta_exponent)};
    }
};

enum class Timescales {
    two,   ///< alpha = o(beta)
    three, ///< alpha = o(zeta), zeta = o(beta)
};

enum class ScheduleStatus { valid, invalid, constant_rates };

struct RateCheck {
    std::string name;
    double exponent = 0.0;
    bool divergent_sum = false;  ///< sum_k rate_k = infinity
    bool square_summable = false; ///< sum_k rate_k^2 < infinity
    double partial_sum = 0.0;     ///< over the horizon
    double partial_square_sum = 0.0;
};

struct ScheduleReport {
    ScheduleStatus status = ScheduleStatus::invalid;
    std::vector<RateCheck> rates;
    std::vector<std::string> messages;
};

inline const char* to_string(ScheduleStatus s) {
    switch (s) {
    case ScheduleStatus::valid: return "valid";
    case ScheduleStatus::invalid: return "invalid";
    case ScheduleStatus::constant_rates: return "theorem conditions not met (constant rates)";
    }
    return "?";
}

/// Checks the stochastic-approximation conditions for k^-p schedules:
/// divergent sum iff p <= 1, square-summable iff p > 1/2, and the timescale
/// ordering (rate_a = o(rate_b) iff p_a > p_b). Constant schedules are
/// reported, not rejected.
inline ScheduleReport schedule_validate(const StepSizes& sizes, std::uint64_t horizon,
                                        Timescales scales = Timescales::two) {
    ScheduleReport report;
    std::vector<std::pair<std::string, double>> rates{{"alpha", sizes.alpha_exponent}, {"beta", sizes.beta_exponent}};
    if (scales == Timescales::three) rates.insert(rates.begin() + 1, {"zeta", sizes.zeta_exponent});

    for (const auto& [name, p] : rates) {
        RateCheck rc;
        rc.name = name;
        rc.exponent = sizes.decay == DecayMode::constant ? 0.0 : p;
        rc.divergent_sum = rc.exponent <= 1.0;
        rc.square_summable = sizes.decay == DecayMode::power && rc.exponent > 0.5;
        const double base = name == "alpha" ? sizes.alpha : name == "beta" ? sizes.beta : sizes.zeta;
        for (std::uint64_t k = 1; k <= horizon; ++k) {
            const double r = base * std::pow(static_cast<double>(k), -rc.exponent);
            rc.partial_sum += r;
            rc.partial_square_sum += r * r;
        }
        report.rates.push_back(rc);
    }

    if (sizes.decay == DecayMode::constant) {
        report.status = ScheduleStatus::constant_rates;
        report.messages.emplace_back("theorem conditions not met (constant rates)");
        return report;
    }

    bool ok = true;
    for (const auto& rc : report.rates) {
        if (!rc.divergent_sum) {
            ok = false;
            report.messages.push_back(rc.name + ": exponent " + std::to_string(rc.exponent) + " > 1, sum is finite");
        }
        if (!rc.square_summable) {
            ok = false;
            report.messages.push_back(rc.name + ": exponent " + std::to_string(rc.exponent) +
                                      " <= 0.5, not square-summable");
        }
    }
    // rates are ordered slowest first; each must vanish relative to the next
    for (std::size_t i = 0; i + 1 < report.rates.size(); ++i) {
        const auto& slow = report.rates[i];
        const auto& fast = report.rates[i + 1];
        if (!(slow.exponent > fast.exponent)) {
            ok = false;
            report.messages.push_back(slow.name + " is not o(" + fast.name + "): exponent " +
                                      std::to_string(slow.exponent) + " <= " + std::to_string(fast.exponent));
        }
    }
    report.status = ok ? ScheduleStatus::valid : ScheduleStatus::invalid;
    return report;
}

} // namespace bec
