#include "vwrrl/vwr.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vwrrl/errors.hpp"

namespace vwrrl {

namespace {

void require_finite(std::span<const double> values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw InputError(std::string(what) + ": non-finite value");
        }
    }
}

}  // namespace

std::string_view to_string(StdMode mode) {
    return mode == StdMode::population ? "population" : "sample";
}

StdMode std_mode_from_string(std::string_view name) {
    if (name == "population") return StdMode::population;
    if (name == "sample") return StdMode::sample;
    throw InputError("unknown std mode '" + std::string(name) + "' (expected population|sample)");
}

std::string_view to_string(ZeroedReason reason) {
    switch (reason) {
        case ZeroedReason::none: return "none";
        case ZeroedReason::volatility_exceeded: return "volatility_exceeded";
        case ZeroedReason::nonpositive_terminal: return "nonpositive_terminal";
    }
    return "unknown";
}

void VwrConfig::validate() const {
    if (window_T < 2) throw InputError("vwr window T must be >= 2");
    if (!(sigma_max > 0.0) || !std::isfinite(sigma_max)) throw InputError("sigma_max must be > 0");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InputError("tau must be > 0");
}

RewardHistory::RewardHistory(int capacity) {
    if (capacity < 1) throw InputError("reward history capacity must be positive");
    values_.assign(static_cast<std::size_t>(capacity), 0.0);
}

void RewardHistory::push(double reward) {
    if (!std::isfinite(reward)) throw InputError("reward history: non-finite reward");
    std::shift_left(values_.begin(), values_.end(), 1);
    values_.back() = reward;
}

void RewardHistory::clear() { std::fill(values_.begin(), values_.end(), 0.0); }

std::vector<double> first_difference(std::span<const double> rewards) {
    std::vector<double> out(rewards.size());
    double previous = 0.0;
    for (std::size_t k = 0; k < rewards.size(); ++k) {
        out[k] = rewards[k] - previous;
        previous = rewards[k];
    }
    return out;
}

std::vector<double> flip(std::span<const double> diffs) {
    return {diffs.rbegin(), diffs.rend()};
}

std::vector<double> cumulative_normalize(std::span<const double> flipped) {
    const double denom = static_cast<double>(flipped.size() + 1);
    std::vector<double> out;
    out.reserve(flipped.size() + 1);
    double sum = 1.0;
    out.push_back(sum / denom);
    for (double f : flipped) {
        sum += f;
        out.push_back(sum / denom);
    }
    return out;
}

double log_total_return(std::span<const double> processed) {
    if (processed.size() < 2) throw InputError("log_total_return: need at least two entries");
    if (!(processed.back() > 0.0)) throw InputError("log_total_return: nonpositive terminal value");
    const double T = static_cast<double>(processed.size() - 1);
    return 100.0 * (std::exp(std::log(processed.back() / processed.front()) / T) - 1.0);
}

std::vector<double> zero_variability_reference(std::span<const double> processed) {
    if (processed.size() < 2) throw InputError("zero_variability_reference: need at least two entries");
    if (!(processed.back() > 0.0) || !(processed.front() > 0.0)) {
        throw InputError("zero_variability_reference: nonpositive endpoint");
    }
    const std::size_t T = processed.size() - 1;
    const double r0 = processed.front();
    const double growth = std::log(processed.back() / r0) / static_cast<double>(T);
    std::vector<double> out(T + 1);
    for (std::size_t n = 0; n <= T; ++n) out[n] = r0 * std::exp(static_cast<double>(n) * growth);
    // Pin the far endpoint; exp(T * log(x) / T) can be off by an ulp.
    out[T] = processed.back();
    return out;
}

std::vector<double> reward_differential(std::span<const double> processed,
                                        std::span<const double> reference) {
    if (processed.size() != reference.size()) throw InputError("reward_differential: size mismatch");
    std::vector<double> out(processed.size());
    for (std::size_t n = 0; n < processed.size(); ++n) {
        if (!(reference[n] > 0.0)) throw InputError("reward_differential: nonpositive reference");
        out[n] = (processed[n] - reference[n]) / reference[n];
    }
    return out;
}

double standard_deviation(std::span<const double> values, StdMode mode) {
    const std::size_t n = values.size();
    const std::size_t dof = mode == StdMode::population ? n : n - 1;
    if (n == 0 || dof == 0) throw InputError("standard_deviation: not enough values");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(dof));
}

double variability_weight(double sigma_delta, const VwrConfig& cfg) {
    if (!(sigma_delta >= 0.0)) throw InputError("variability_weight: sigma must be >= 0");
    return 1.0 - std::pow(sigma_delta / cfg.sigma_max, cfg.tau);
}

VwrBreakdown vwr(std::span<const double> rewards, const VwrConfig& cfg) {
    cfg.validate();
    if (rewards.size() != static_cast<std::size_t>(cfg.window_T)) {
        throw InputError("vwr: history length does not match window T");
    }
    require_finite(rewards, "vwr");

    VwrBreakdown out;
    const auto diffs = first_difference(rewards);
    out.processed = cumulative_normalize(cfg.flip ? flip(diffs) : diffs);

    if (!(out.processed.back() > 0.0)) {
        out.zeroed_reason = ZeroedReason::nonpositive_terminal;
        return out;
    }

    out.r_high = log_total_return(out.processed);
    out.reference = zero_variability_reference(out.processed);
    out.differential = reward_differential(out.processed, out.reference);
    out.sigma_delta = standard_deviation(out.differential, cfg.std_mode);

    if (!(out.sigma_delta < cfg.sigma_max)) {
        out.omega = std::isfinite(out.sigma_delta) ? variability_weight(out.sigma_delta, cfg) : 0.0;
        out.zeroed_reason = ZeroedReason::volatility_exceeded;
        return out;
    }
    out.omega = variability_weight(out.sigma_delta, cfg);
    out.r_vwr = out.r_high * out.omega;
    return out;
}

double sparseness(std::span<const double> rewards) {
    const std::size_t n = rewards.size();
    if (n < 2) throw InputError("sparseness: need at least two values");
    require_finite(rewards, "sparseness");
    // Scale by the max magnitude so the l2 norm cannot overflow or underflow.
    double scale = 0.0;
    for (double x : rewards) scale = std::max(scale, std::abs(x));
    if (scale == 0.0) return 1.0;
    double l1 = 0.0;
    double l2sq = 0.0;
    for (double x : rewards) {
        const double y = std::abs(x) / scale;
        l1 += y;
        l2sq += y * y;
    }
    const double root_n = std::sqrt(static_cast<double>(n));
    // sqrt(l1^2 / l2^2) keeps the constant-vector case exact (ratio == n).
    const double phi = (root_n - std::sqrt(l1 * l1 / l2sq)) / (root_n - 1.0);
    return std::clamp(phi, 0.0, 1.0);
}

}  // namespace vwrrl
