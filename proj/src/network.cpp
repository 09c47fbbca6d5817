#include "vwrrl/network.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "vwrrl/errors.hpp"

namespace vwrrl {

namespace {

void fill_uniform(Eigen::MatrixXd& m, double bound, Rng& rng) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-bound, bound);
}

}  // namespace

PolicyValueParams PolicyValueParams::zeros(int state_dim, int hidden_dim, int num_actions) {
    if (state_dim < 1 || hidden_dim < 1 || num_actions < 2) {
        throw InputError("network dims must be positive (and at least two actions)");
    }
    PolicyValueParams p;
    p.trunk_w = Eigen::MatrixXd::Zero(hidden_dim, state_dim);
    p.trunk_b = Eigen::MatrixXd::Zero(hidden_dim, 1);
    p.policy_w = Eigen::MatrixXd::Zero(num_actions, hidden_dim);
    p.policy_b = Eigen::MatrixXd::Zero(num_actions, 1);
    p.value_short_w = Eigen::MatrixXd::Zero(1, hidden_dim);
    p.value_short_b = Eigen::MatrixXd::Zero(1, 1);
    p.value_long_w = Eigen::MatrixXd::Zero(1, hidden_dim);
    p.value_long_b = Eigen::MatrixXd::Zero(1, 1);
    return p;
}

PolicyValueParams PolicyValueParams::random(int state_dim, int hidden_dim, int num_actions, Rng& rng) {
    PolicyValueParams p = zeros(state_dim, hidden_dim, num_actions);
    const double trunk_bound = 1.0 / std::sqrt(static_cast<double>(state_dim));
    const double head_bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    fill_uniform(p.trunk_w, trunk_bound, rng);
    fill_uniform(p.trunk_b, trunk_bound, rng);
    fill_uniform(p.policy_w, head_bound, rng);
    fill_uniform(p.policy_b, head_bound, rng);
    fill_uniform(p.value_short_w, head_bound, rng);
    fill_uniform(p.value_short_b, head_bound, rng);
    fill_uniform(p.value_long_w, head_bound, rng);
    fill_uniform(p.value_long_b, head_bound, rng);
    return p;
}

PolicyValueParams& PolicyValueParams::operator+=(const PolicyValueParams& other) {
    if (!same_shape(other)) throw InputError("parameter shape mismatch");
    trunk_w += other.trunk_w;
    trunk_b += other.trunk_b;
    policy_w += other.policy_w;
    policy_b += other.policy_b;
    value_short_w += other.value_short_w;
    value_short_b += other.value_short_b;
    value_long_w += other.value_long_w;
    value_long_b += other.value_long_b;
    return *this;
}

std::size_t PolicyValueParams::size() const {
    std::size_t n = 0;
    for_each([&](std::string_view, const Eigen::MatrixXd& t) { n += static_cast<std::size_t>(t.size()); });
    return n;
}

double PolicyValueParams::norm() const {
    double sq = 0.0;
    for_each([&](std::string_view, const Eigen::MatrixXd& t) { sq += t.squaredNorm(); });
    return std::sqrt(sq);
}

bool PolicyValueParams::all_finite() const {
    bool ok = true;
    for_each([&](std::string_view, const Eigen::MatrixXd& t) { ok = ok && t.allFinite(); });
    return ok;
}

bool PolicyValueParams::same_shape(const PolicyValueParams& other) const {
    return trunk_w.rows() == other.trunk_w.rows() && trunk_w.cols() == other.trunk_w.cols() &&
           policy_w.rows() == other.policy_w.rows() && value_short_w.cols() == other.value_short_w.cols() &&
           value_long_w.cols() == other.value_long_w.cols();
}

std::string PolicyValueParams::diagnostics() const {
    std::ostringstream out;
    for_each([&](std::string_view name, const Eigen::MatrixXd& t) {
        Eigen::Index bad = 0;
        for (Eigen::Index i = 0; i < t.size(); ++i) bad += std::isfinite(t.data()[i]) ? 0 : 1;
        out << "  " << name << " [" << t.rows() << "x" << t.cols() << "]";
        if (t.size() > 0) out << " min=" << t.minCoeff() << " max=" << t.maxCoeff();
        out << " non_finite=" << bad << '\n';
    });
    return out.str();
}

bool PolicyValueParams::operator==(const PolicyValueParams& other) const {
    return same_shape(other) && trunk_w == other.trunk_w && trunk_b == other.trunk_b &&
           policy_w == other.policy_w && policy_b == other.policy_b &&
           value_short_w == other.value_short_w && value_short_b == other.value_short_b &&
           value_long_w == other.value_long_w && value_long_b == other.value_long_b;
}

double ForwardCache::entropy() const { return -(probs.array() * log_probs.array()).sum(); }

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const Eigen::VectorXd shifted = logits.array() - logits.maxCoeff();
    const Eigen::VectorXd e = shifted.array().exp();
    return e / e.sum();
}

ForwardCache forward(const PolicyValueParams& params, std::span<const double> state) {
    if (static_cast<int>(state.size()) != params.state_dim()) {
        throw InputError("forward: state has dimension " + std::to_string(state.size()) + ", network expects " +
                         std::to_string(params.state_dim()));
    }
    ForwardCache c;
    c.input = Eigen::Map<const Eigen::VectorXd>(state.data(), static_cast<Eigen::Index>(state.size()));
    c.trunk_pre = params.trunk_w * c.input + params.trunk_b.col(0);
    c.trunk_out = c.trunk_pre.array().tanh();
    c.logits = params.policy_w * c.trunk_out + params.policy_b.col(0);

    const double max_logit = c.logits.maxCoeff();
    const Eigen::VectorXd shifted = c.logits.array() - max_logit;
    const double log_z = std::log(shifted.array().exp().sum());
    c.log_probs = shifted.array() - log_z;
    c.probs = c.log_probs.array().exp();

    c.v_short = params.value_short_w.row(0).dot(c.trunk_out) + params.value_short_b(0, 0);
    c.v_long = params.value_long_w.row(0).dot(c.trunk_out) + params.value_long_b(0, 0);
    return c;
}

double sample_loss(const ForwardCache& cache, const LossTerms& terms) {
    return -cache.log_probs(terms.action) * terms.advantage_sum +
           terms.value_coef_short * terms.td_short * terms.td_short +
           terms.value_coef_long * terms.td_long * terms.td_long - terms.entropy_coef * cache.entropy();
}

PolicyValueParams backward(const PolicyValueParams& params, const ForwardCache& cache, const LossTerms& terms) {
    PolicyValueParams g;
    const Eigen::VectorXd& h = cache.trunk_out;

    // dL/dlogits: policy term A * (pi - e_a); entropy term beta * pi * (log pi + H).
    Eigen::VectorXd g_logits = terms.advantage_sum * cache.probs;
    g_logits(terms.action) -= terms.advantage_sum;
    if (terms.entropy_coef != 0.0) {
        const double H = cache.entropy();
        g_logits.array() += terms.entropy_coef * cache.probs.array() * (cache.log_probs.array() + H);
    }

    // d(c * (R - V)^2)/dV = -2 c (R - V)
    const double g_vs = -2.0 * terms.value_coef_short * terms.td_short;
    const double g_vl = -2.0 * terms.value_coef_long * terms.td_long;

    g.policy_w = g_logits * h.transpose();
    g.policy_b = g_logits;
    g.value_short_w = g_vs * h.transpose();
    g.value_short_b = Eigen::MatrixXd::Constant(1, 1, g_vs);
    g.value_long_w = g_vl * h.transpose();
    g.value_long_b = Eigen::MatrixXd::Constant(1, 1, g_vl);

    Eigen::VectorXd g_h = params.policy_w.transpose() * g_logits;
    g_h += g_vs * params.value_short_w.row(0).transpose();
    g_h += g_vl * params.value_long_w.row(0).transpose();
    const Eigen::VectorXd g_pre = g_h.array() * (1.0 - h.array().square());

    g.trunk_w = g_pre * cache.input.transpose();
    g.trunk_b = g_pre;
    return g;
}

namespace {

double clip_scale(double norm, double clip_norm) {
    return clip_norm > 0.0 && norm > clip_norm ? clip_norm / norm : 1.0;
}

void check_gradients(const PolicyValueParams& params, const PolicyValueParams& grads) {
    if (!params.same_shape(grads)) throw InputError("apply_gradients: shape mismatch");
    if (!grads.all_finite()) {
        throw TrainingError("non-finite gradient\ngradients:\n" + grads.diagnostics() + "parameters:\n" +
                            params.diagnostics());
    }
}

}  // namespace

double apply_gradients(PolicyValueParams& params, const PolicyValueParams& grads, double step_size,
                       double clip_norm) {
    check_gradients(params, grads);
    const double norm = grads.norm();
    const double scale = clip_scale(norm, clip_norm);
    params.trunk_w -= step_size * scale * grads.trunk_w;
    params.trunk_b -= step_size * scale * grads.trunk_b;
    params.policy_w -= step_size * scale * grads.policy_w;
    params.policy_b -= step_size * scale * grads.policy_b;
    params.value_short_w -= step_size * scale * grads.value_short_w;
    params.value_short_b -= step_size * scale * grads.value_short_b;
    params.value_long_w -= step_size * scale * grads.value_long_w;
    params.value_long_b -= step_size * scale * grads.value_long_b;
    return norm * scale;
}

double SgdOptimizer::step(PolicyValueParams& params, const PolicyValueParams& grads) {
    check_gradients(params, grads);
    const double norm = grads.norm();
    if (momentum_ == 0.0) {
        apply_gradients(params, grads, step_size_, clip_norm_);
        return norm;
    }
    const double scale = clip_scale(norm, clip_norm_);
    if (!has_velocity_) {
        velocity_ = PolicyValueParams::zeros(params.state_dim(), params.hidden_dim(), params.num_actions());
        has_velocity_ = true;
    }
    PolicyValueParams update = grads;
    update.for_each([&](std::string_view, Eigen::MatrixXd& t) { t *= scale; });
    // v <- mu v + g;  theta <- theta - lr v
    velocity_.trunk_w = momentum_ * velocity_.trunk_w + update.trunk_w;
    velocity_.trunk_b = momentum_ * velocity_.trunk_b + update.trunk_b;
    velocity_.policy_w = momentum_ * velocity_.policy_w + update.policy_w;
    velocity_.policy_b = momentum_ * velocity_.policy_b + update.policy_b;
    velocity_.value_short_w = momentum_ * velocity_.value_short_w + update.value_short_w;
    velocity_.value_short_b = momentum_ * velocity_.value_short_b + update.value_short_b;
    velocity_.value_long_w = momentum_ * velocity_.value_long_w + update.value_long_w;
    velocity_.value_long_b = momentum_ * velocity_.value_long_b + update.value_long_b;
    apply_gradients(params, velocity_, step_size_, 0.0);
    return norm;
}

void save_checkpoint(std::ostream& out, const PolicyValueParams& params) {
    out << "vwrrl-checkpoint 1\n";
    out << "dims " << params.state_dim() << ' ' << params.hidden_dim() << ' ' << params.num_actions() << '\n';
    out << std::setprecision(17);
    params.for_each([&](std::string_view name, const Eigen::MatrixXd& t) {
        out << "tensor " << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
        for (Eigen::Index r = 0; r < t.rows(); ++r) {
            for (Eigen::Index c = 0; c < t.cols(); ++c) out << (c ? " " : "") << t(r, c);
            out << '\n';
        }
    });
    out << "end\n";
}

PolicyValueParams load_checkpoint(std::istream& in) {
    std::string word;
    int version = 0;
    if (!(in >> word >> version) || word != "vwrrl-checkpoint" || version != 1) {
        throw InputError("checkpoint: bad header");
    }
    int state_dim = 0, hidden_dim = 0, num_actions = 0;
    if (!(in >> word >> state_dim >> hidden_dim >> num_actions) || word != "dims") {
        throw InputError("checkpoint: missing dims line");
    }
    PolicyValueParams params = PolicyValueParams::zeros(state_dim, hidden_dim, num_actions);
    params.for_each([&](std::string_view name, Eigen::MatrixXd& t) {
        std::string tag, got;
        Eigen::Index rows = 0, cols = 0;
        if (!(in >> tag >> got >> rows >> cols) || tag != "tensor" || got != name) {
            throw InputError("checkpoint: expected tensor " + std::string(name));
        }
        if (rows != t.rows() || cols != t.cols()) {
            throw InputError("checkpoint: shape mismatch for " + std::string(name));
        }
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c)
                if (!(in >> t(r, c))) throw InputError("checkpoint: truncated tensor " + std::string(name));
    });
    if (!(in >> word) || word != "end") throw InputError("checkpoint: missing end marker");
    return params;
}

void save_checkpoint(const std::string& path, const PolicyValueParams& params) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write checkpoint " + path);
    save_checkpoint(out, params);
}

PolicyValueParams load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read checkpoint " + path);
    return load_checkpoint(in);
}

}  // namespace vwrrl
