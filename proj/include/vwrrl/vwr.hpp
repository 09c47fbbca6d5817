#pragma once

// Variability-weighted reward (VWR): a scalar summary of the last T rewards
// that multiplies how high the latest reward is (R_H) by how stable the
// recent history was (omega). Everything here is pure and reentrant.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace vwrrl {

enum class StdMode { population, sample };

std::string_view to_string(StdMode mode);
StdMode std_mode_from_string(std::string_view name);

struct VwrConfig {
    int window_T = 20;
    double sigma_max = 1.0;
    double tau = 2.0;
    StdMode std_mode = StdMode::population;
    /// Reverse the difference sequence before accumulation. Disabling it is
    /// only meant for ablations.
    bool flip = true;

    /// Throws InputError unless window_T >= 2, sigma_max > 0, tau > 0.
    void validate() const;

    bool operator==(const VwrConfig&) const = default;
};

/// Fixed-capacity, zero-filled window of the most recent rewards, oldest first.
class RewardHistory {
public:
    explicit RewardHistory(int capacity);

    /// Appends `reward` and evicts the oldest entry. Non-finite rewards are rejected.
    void push(double reward);
    void clear();

    int capacity() const { return static_cast<int>(values_.size()); }
    std::span<const double> values() const { return values_; }
    double latest() const { return values_.back(); }

private:
    std::vector<double> values_;
};

enum class ZeroedReason { none, volatility_exceeded, nonpositive_terminal };

std::string_view to_string(ZeroedReason reason);

struct VwrBreakdown {
    double r_vwr = 0.0;
    double r_high = 0.0;
    double sigma_delta = 0.0;
    double omega = 1.0;
    std::vector<double> processed;
    /// Empty when the terminal processed value is nonpositive (reference undefined).
    std::vector<double> reference;
    std::vector<double> differential;
    ZeroedReason zeroed_reason = ZeroedReason::none;

    bool operator==(const VwrBreakdown&) const = default;
};

/// d[0] = r[0]; d[k] = r[k] - r[k-1].
std::vector<double> first_difference(std::span<const double> rewards);

/// Reversal: out[n] = in[T-1-n].
std::vector<double> flip(std::span<const double> diffs);

/// Prepends 1 and returns the cumulative sums divided by (T+1); T+1 entries.
std::vector<double> cumulative_normalize(std::span<const double> flipped);

/// Average log total return 100 * ((R_T/R_0)^(1/T) - 1). Throws InputError
/// when processed.back() <= 0.
double log_total_return(std::span<const double> processed);

/// Geometric interpolation R_0 * exp(n * ln(R_T/R_0) / T), n = 0..T.
/// Throws InputError when either endpoint is nonpositive.
std::vector<double> zero_variability_reference(std::span<const double> processed);

/// (R_n - Z_n) / Z_n elementwise. Throws InputError on size mismatch or a
/// nonpositive reference entry.
std::vector<double> reward_differential(std::span<const double> processed,
                                        std::span<const double> reference);

/// Standard deviation under the given normalization (count or count - 1).
double standard_deviation(std::span<const double> values, StdMode mode);

/// omega = 1 - (sigma / sigma_max)^tau.
double variability_weight(double sigma_delta, const VwrConfig& cfg);

/// Full pipeline over a reward window (oldest first, length cfg.window_T).
/// Degenerate inputs land in the zero branch with a tagged reason; only
/// non-finite rewards or a length mismatch throw.
VwrBreakdown vwr(std::span<const double> rewards, const VwrConfig& cfg);

inline VwrBreakdown vwr(const RewardHistory& history, const VwrConfig& cfg) {
    return vwr(history.values(), cfg);
}

/// phi(x) = (sqrt(n) - |x|_1 / |x|_2) / (sqrt(n) - 1), in [0, 1]. 1 means
/// maximally sparse. The all-zero vector maps to 1. Requires n >= 2.
double sparseness(std::span<const double> rewards);

}  // namespace vwrrl
