#pragma once

// Shared-trunk actor/critic MLP with hand-derived gradients:
//
//   h      = tanh(W_t x + b_t)
//   logits = W_p h + b_p,  pi = softmax(logits)
//   v_s    = w_s . h + b_s,  v_l = w_l . h + b_l
//
// Every tensor is an Eigen::MatrixXd (biases are column vectors) so the
// parameter set, its gradient and optimizer state share one shape.

#include <Eigen/Core>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

#include "vwrrl/random.hpp"

namespace vwrrl {

struct PolicyValueParams {
    Eigen::MatrixXd trunk_w;        // hidden x state
    Eigen::MatrixXd trunk_b;        // hidden x 1
    Eigen::MatrixXd policy_w;       // actions x hidden
    Eigen::MatrixXd policy_b;       // actions x 1
    Eigen::MatrixXd value_short_w;  // 1 x hidden
    Eigen::MatrixXd value_short_b;  // 1 x 1
    Eigen::MatrixXd value_long_w;   // 1 x hidden
    Eigen::MatrixXd value_long_b;   // 1 x 1

    static PolicyValueParams zeros(int state_dim, int hidden_dim, int num_actions);

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every tensor.
    static PolicyValueParams random(int state_dim, int hidden_dim, int num_actions, Rng& rng);

    int state_dim() const { return static_cast<int>(trunk_w.cols()); }
    int hidden_dim() const { return static_cast<int>(trunk_w.rows()); }
    int num_actions() const { return static_cast<int>(policy_w.rows()); }

    /// Visits (name, tensor) in a fixed order. Names are the checkpoint keys.
    template <class F>
    void for_each(F&& f) {
        f("trunk.weight", trunk_w);
        f("trunk.bias", trunk_b);
        f("policy.weight", policy_w);
        f("policy.bias", policy_b);
        f("value_short.weight", value_short_w);
        f("value_short.bias", value_short_b);
        f("value_long.weight", value_long_w);
        f("value_long.bias", value_long_b);
    }

    template <class F>
    void for_each(F&& f) const {
        const_cast<PolicyValueParams*>(this)->for_each(
            [&](std::string_view name, Eigen::MatrixXd& t) { f(name, static_cast<const Eigen::MatrixXd&>(t)); });
    }

    PolicyValueParams& operator+=(const PolicyValueParams& other);

    std::size_t size() const;
    double norm() const;
    bool all_finite() const;
    bool same_shape(const PolicyValueParams& other) const;

    /// Multi-line summary of each tensor (shape, min, max, non-finite count).
    std::string diagnostics() const;

    bool operator==(const PolicyValueParams& other) const;
};

struct ForwardCache {
    Eigen::VectorXd input;
    Eigen::VectorXd trunk_pre;
    Eigen::VectorXd trunk_out;
    Eigen::VectorXd logits;
    Eigen::VectorXd probs;
    Eigen::VectorXd log_probs;
    double v_short = 0.0;
    double v_long = 0.0;

    double entropy() const;
};

/// Throws InputError when the state has the wrong dimension.
ForwardCache forward(const PolicyValueParams& params, std::span<const double> state);

/// Numerically stable softmax; exposed for testing.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

struct LossTerms {
    int action = 0;
    /// Treated as a constant: no gradient flows through it.
    double advantage_sum = 0.0;
    /// Return minus predicted value for each critic.
    double td_short = 0.0;
    double td_long = 0.0;
    double entropy_coef = 0.0;
    double value_coef_short = 1.0;
    double value_coef_long = 1.0;
};

/// Loss for one sample, evaluated from a cache:
///   -log pi(a) * A + c_s * td_s^2 + c_l * td_l^2 - beta * H(pi)
double sample_loss(const ForwardCache& cache, const LossTerms& terms);

/// Gradient of `sample_loss` w.r.t. every parameter, where td_j = R_j - V_j(params)
/// is differentiated through V_j. The policy term only reaches the policy head
/// and the trunk; each critic term only reaches its own head and the trunk.
PolicyValueParams backward(const PolicyValueParams& params, const ForwardCache& cache,
                           const LossTerms& terms);

/// params -= step_size * clip(grads), where clip rescales to a global L2 norm
/// of at most `clip_norm` (disabled when clip_norm <= 0). Returns the norm of
/// the gradient actually applied. Throws TrainingError on non-finite gradients.
double apply_gradients(PolicyValueParams& params, const PolicyValueParams& grads, double step_size,
                       double clip_norm);

/// Clipped SGD with optional heavy-ball momentum.
class SgdOptimizer {
public:
    SgdOptimizer(double step_size, double momentum, double clip_norm)
        : step_size_(step_size), momentum_(momentum), clip_norm_(clip_norm) {}

    /// Returns the pre-clip gradient norm.
    double step(PolicyValueParams& params, const PolicyValueParams& grads);

private:
    double step_size_;
    double momentum_;
    double clip_norm_;
    PolicyValueParams velocity_;
    bool has_velocity_ = false;
};

/// Text checkpoint:
///   vwrrl-checkpoint 1
///   dims <state_dim> <hidden_dim> <num_actions>
///   tensor <name> <rows> <cols>
///   <rows lines of cols values, %.17g>
///   ... (one block per tensor, in for_each order)
///   end
void save_checkpoint(std::ostream& out, const PolicyValueParams& params);
PolicyValueParams load_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const PolicyValueParams& params);
PolicyValueParams load_checkpoint(const std::string& path);

}  // namespace vwrrl
