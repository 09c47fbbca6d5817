#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <sstream>
#include <string>

#include "vwrrl/errors.hpp"
#include "vwrrl/network.hpp"
#include "vwrrl/random.hpp"

using namespace vwrrl;
using doctest::Approx;

namespace {

std::vector<double> random_state(Rng& rng, int dim) {
    std::vector<double> s(static_cast<std::size_t>(dim));
    for (double& v : s) v = rng.uniform(-1.5, 1.5);
    return s;
}

double loss_at(const PolicyValueParams& p, const std::vector<double>& s, LossTerms t, double Rs, double Rl) {
    const auto c = forward(p, s);
    t.td_short = Rs - c.v_short;
    t.td_long = Rl - c.v_long;
    return sample_loss(c, t);
}

}  // namespace

TEST_CASE("softmax") {
    Eigen::VectorXd z(3);
    z << 0.0, 0.0, 0.0;
    for (double p : softmax(z)) CHECK(p == Approx(1.0 / 3.0));
    z << 1.0, 2.0, 3.0;
    const auto p = softmax(z);
    const double denom = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
    CHECK(p[0] == Approx(std::exp(1.0) / denom).epsilon(1e-14));
    CHECK(p[2] == Approx(std::exp(3.0) / denom).epsilon(1e-14));
    CHECK(p.sum() == Approx(1.0).epsilon(1e-15));

    Eigen::VectorXd shifted = z.array() + 1000.0;
    const auto q = softmax(shifted);
    for (int i = 0; i < 3; ++i) CHECK(q[i] == Approx(p[i]).epsilon(1e-12));
    z << -1000.0, 0.0, 1000.0;
    const auto big = softmax(z);
    CHECK(big.allFinite());
    CHECK(big[2] == Approx(1.0));
}

TEST_CASE("forward shapes and input validation") {
    Rng rng(1);
    const auto p = PolicyValueParams::random(5, 8, 3, rng);
    CHECK(p.state_dim() == 5);
    CHECK(p.hidden_dim() == 8);
    CHECK(p.num_actions() == 3);
    CHECK(p.size() == 8 * 5 + 8 + 3 * 8 + 3 + 8 + 1 + 8 + 1);
    const auto c = forward(p, random_state(rng, 5));
    CHECK(c.probs.size() == 3);
    CHECK(c.probs.sum() == Approx(1.0));
    CHECK(c.entropy() >= 0.0);
    CHECK(c.entropy() <= std::log(3.0) + 1e-12);
    CHECK_THROWS_AS(forward(p, std::vector<double>(4, 0.0)), InputError);

    const double bound = 1.0 / std::sqrt(5.0);
    CHECK(p.trunk_w.cwiseAbs().maxCoeff() <= bound);
    CHECK(PolicyValueParams::zeros(5, 8, 3).norm() == 0.0);
}

TEST_CASE("backward matches central finite differences") {
    Rng rng(77);
    const double h = 1e-5;
    int checked = 0;
    for (int inst = 0; inst < 100; ++inst) {
        const int S = 1 + static_cast<int>(rng.below(6));
        const int H = 2 + static_cast<int>(rng.below(8));
        const int A = 2 + static_cast<int>(rng.below(4));
        auto p = PolicyValueParams::random(S, H, A, rng);
        const auto s = random_state(rng, S);
        LossTerms t;
        t.action = static_cast<int>(rng.below(static_cast<std::uint64_t>(A)));
        t.advantage_sum = rng.uniform(-3, 3);
        t.entropy_coef = rng.uniform(0, 0.1);
        t.value_coef_short = rng.uniform(0.1, 2);
        t.value_coef_long = rng.bernoulli(0.2) ? 0.0 : rng.uniform(0.1, 2);
        const double Rs = rng.uniform(-2, 2);
        const double Rl = rng.uniform(-2, 2);

        const auto c = forward(p, s);
        t.td_short = Rs - c.v_short;
        t.td_long = Rl - c.v_long;
        const auto g = backward(p, c, t);

        std::vector<Eigen::MatrixXd*> ptensors;
        p.for_each([&](std::string_view, Eigen::MatrixXd& m) { ptensors.push_back(&m); });
        std::vector<const Eigen::MatrixXd*> gtensors;
        g.for_each([&](std::string_view, const Eigen::MatrixXd& m) { gtensors.push_back(&m); });
        REQUIRE(ptensors.size() == gtensors.size());
        for (std::size_t k = 0; k < ptensors.size(); ++k) {
            Eigen::MatrixXd& m = *ptensors[k];
            for (Eigen::Index i = 0; i < m.size(); ++i) {
                const double saved = m.data()[i];
                m.data()[i] = saved + h;
                const double up = loss_at(p, s, t, Rs, Rl);
                m.data()[i] = saved - h;
                const double down = loss_at(p, s, t, Rs, Rl);
                m.data()[i] = saved;
                const double numeric = (up - down) / (2 * h);
                const double analytic = gtensors[k]->data()[i];
                const double rel = std::abs(analytic - numeric) /
                                   std::max({std::abs(analytic), std::abs(numeric), 1e-4});
                CHECK(rel < 1e-4);
                ++checked;
            }
        }
    }
    CHECK(checked > 1000);
}

TEST_CASE("gradient routing between heads") {
    Rng rng(3);
    const auto p = PolicyValueParams::random(4, 6, 3, rng);
    const auto c = forward(p, random_state(rng, 4));

    LossTerms policy_only;
    policy_only.action = 1;
    policy_only.advantage_sum = 1.3;
    auto g = backward(p, c, policy_only);
    CHECK(g.value_short_w.norm() == 0.0);
    CHECK(g.value_long_w.norm() == 0.0);
    CHECK(g.value_long_b.norm() == 0.0);
    CHECK(g.policy_w.norm() > 0.0);

    LossTerms short_only;
    short_only.td_short = 0.7;
    g = backward(p, c, short_only);
    CHECK(g.policy_w.norm() == 0.0);
    CHECK(g.value_long_w.norm() == 0.0);
    CHECK(g.value_short_w.norm() > 0.0);
    CHECK(g.trunk_w.norm() > 0.0);

    LossTerms long_off;
    long_off.td_short = 0.7;
    long_off.td_long = 5.0;
    long_off.value_coef_long = 0.0;
    g = backward(p, c, long_off);
    CHECK(g.value_long_w.norm() == 0.0);
    CHECK(g.value_long_b.norm() == 0.0);
}

TEST_CASE("entropy gradient vanishes at the uniform policy") {
    Rng rng(4);
    auto p = PolicyValueParams::random(3, 5, 4, rng);
    p.policy_w.setZero();
    p.policy_b.setZero();
    const auto c = forward(p, random_state(rng, 3));
    LossTerms t;
    t.entropy_coef = 0.5;
    const auto g = backward(p, c, t);
    CHECK(g.policy_w.norm() < 1e-14);
    CHECK(g.policy_b.norm() < 1e-14);
    CHECK(c.entropy() == Approx(std::log(4.0)));
}

TEST_CASE("apply_gradients clipping and degenerate steps") {
    Rng rng(5);
    auto p = PolicyValueParams::random(3, 4, 2, rng);
    auto g = PolicyValueParams::random(3, 4, 2, rng);
    const double scale = 10.0 / g.norm();
    g.for_each([&](std::string_view, Eigen::MatrixXd& m) { m *= scale; });
    CHECK(g.norm() == Approx(10.0));

    auto q = p;
    CHECK(apply_gradients(q, g, 1.0, 0.5) == Approx(0.5));
    PolicyValueParams diff = q;
    auto neg = p;
    neg.for_each([](std::string_view, Eigen::MatrixXd& m) { m = -m; });
    diff += neg;
    CHECK(diff.norm() == Approx(0.5));

    q = p;
    CHECK(apply_gradients(q, g, 0.1, 0.0) == Approx(10.0));
    q = p;
    apply_gradients(q, g, 0.0, 1.0);
    CHECK(q == p);
    q = p;
    apply_gradients(q, PolicyValueParams::zeros(3, 4, 2), 0.3, 1.0);
    CHECK(q == p);

    auto bad = g;
    bad.trunk_w(0, 0) = std::numeric_limits<double>::quiet_NaN();
    q = p;
    CHECK_THROWS_AS(apply_gradients(q, bad, 0.1, 1.0), TrainingError);
}

TEST_CASE("sgd momentum accumulates velocity") {
    auto p = PolicyValueParams::zeros(1, 2, 2);
    auto g = PolicyValueParams::zeros(1, 2, 2);
    g.policy_b(0, 0) = 1.0;
    SgdOptimizer opt(0.1, 0.5, 0.0);
    CHECK(opt.step(p, g) == Approx(1.0));
    CHECK(p.policy_b(0, 0) == Approx(-0.1));
    opt.step(p, g);
    CHECK(p.policy_b(0, 0) == Approx(-0.1 - 0.15));
    opt.step(p, g);
    CHECK(p.policy_b(0, 0) == Approx(-0.25 - 0.175));
}

TEST_CASE("checkpoint round trip is exact") {
    Rng rng(6);
    const auto p = PolicyValueParams::random(7, 9, 3, rng);
    std::stringstream buf;
    save_checkpoint(buf, p);
    CHECK(buf.str().rfind("vwrrl-checkpoint 1\ndims 7 9 3\n", 0) == 0);
    const auto q = load_checkpoint(buf);
    CHECK(q == p);

    const auto dir = std::filesystem::path(VWRRL_TEST_TMP) / "network";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "p.ckpt").string();
    save_checkpoint(path, p);
    CHECK(load_checkpoint(path) == p);

    std::stringstream garbage("not a checkpoint\n");
    CHECK_THROWS(load_checkpoint(garbage));
    std::string text = buf.str();
    std::stringstream truncated(text.substr(0, text.size() / 2));
    CHECK_THROWS(load_checkpoint(truncated));
}
