#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "avsim/checkpoint.hpp"
#include "avsim/errors.hpp"
#include "avsim/geometry.hpp"
#include "avsim/neural.hpp"

using namespace avsim;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = scale * rng.uniform(-1.0, 1.0);
    return t;
}

// triple-loop reference forward pass
Tensor naive_forward(const MlpParams& p, const Tensor& x) {
    Tensor cur = x;
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        const Tensor& w = p.weights[l];
        Tensor next({cur.rows(), w.cols()});
        for (std::size_t i = 0; i < cur.rows(); ++i) {
            for (std::size_t j = 0; j < w.cols(); ++j) {
                double acc = p.biases[l].data[j];
                for (std::size_t k = 0; k < w.rows(); ++k) acc += cur.at(i, k) * w.at(k, j);
                next.at(i, j) = acc;
            }
        }
        if (l + 1 < p.weights.size()) {
            for (double& v : next.data) v = v > 0.0 ? v : 0.0;
        }
        cur = std::move(next);
    }
    return cur;
}

double weighted_sum(const Tensor& y, const Tensor& u) {
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += y.data[i] * u.data[i];
    return acc;
}

}  // namespace

TEST_SUITE_BEGIN("neural");

TEST_CASE("zero parameters produce zero output") {
    const MlpSpec spec{5, {8, 6}, 3};
    const MlpParams p = MlpParams::zeros(spec);
    Rng rng(1);
    const Tensor x = random_tensor({4, 5}, rng);
    const Tensor y = mlp_forward(p, spec, x);
    for (double v : y.data) CHECK(v == 0.0);
}

TEST_CASE("identity single linear layer") {
    const MlpSpec spec{3, {}, 3};
    MlpParams p = MlpParams::zeros(spec);
    for (int i = 0; i < 3; ++i) p.weights[0].at(i, i) = 1.0;
    Rng rng(2);
    const Tensor x = random_tensor({2, 3}, rng);
    const Tensor y = mlp_forward(p, spec, x);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.data[i] == doctest::Approx(x.data[i]));
}

TEST_CASE("forward matches the naive matrix oracle") {
    const MlpSpec spec{7, {11, 5}, 3};
    Rng rng(3);
    const MlpParams p = MlpParams::init(spec, rng);
    const Tensor x = random_tensor({4, 7}, rng);
    const Tensor mine = mlp_forward(p, spec, x);
    const Tensor ref = naive_forward(p, x);
    REQUIRE(mine.size() == ref.size());
    for (std::size_t i = 0; i < mine.size(); ++i) {
        CHECK(mine.data[i] == doctest::Approx(ref.data[i]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(mlp_forward(p, spec, random_tensor({4, 6}, rng)), Error);
}

TEST_CASE("zero upstream gradient zeroes every parameter gradient") {
    const MlpSpec spec{4, {6}, 2};
    Rng rng(4);
    const MlpParams p = MlpParams::init(spec, rng);
    ForwardCache cache;
    mlp_forward(p, spec, random_tensor({3, 4}, rng), &cache);
    const MlpGrads g = mlp_backward(p, spec, cache, Tensor({3, 2}));
    for (const Tensor* t : g.tensors()) {
        for (double v : t->data) CHECK(v == 0.0);
    }
}

TEST_CASE("single linear neuron gradient is the input") {
    const MlpSpec spec{1, {}, 1};
    MlpParams p = MlpParams::zeros(spec);
    p.weights[0].data[0] = 0.37;
    Tensor x({1, 1});
    x.data[0] = 2.5;
    ForwardCache cache;
    mlp_forward(p, spec, x, &cache);
    Tensor upstream({1, 1});
    upstream.data[0] = 1.0;
    const MlpGrads g = mlp_backward(p, spec, cache, upstream, true);
    CHECK(g.weights[0].data[0] == doctest::Approx(2.5));
    CHECK(g.biases[0].data[0] == doctest::Approx(1.0));
    CHECK(g.input_grad.data[0] == doctest::Approx(0.37));
}

TEST_CASE("backward matches central finite differences") {
    const MlpSpec spec{6, {8, 7}, 3};
    Rng rng(5);
    MlpParams p = MlpParams::init(spec, rng);
    const Tensor x = random_tensor({3, 6}, rng);
    const Tensor u = random_tensor({3, 3}, rng);

    ForwardCache cache;
    mlp_forward(p, spec, x, &cache);
    const MlpGrads g = mlp_backward(p, spec, cache, u, true);

    const double h = 1e-5;
    auto tensors = p.tensors();
    auto grads = g.tensors();
    int checked = 0;
    for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
        for (int probe = 0; probe < 17; ++probe) {
            const std::size_t idx = rng.uniform_index(tensors[ti]->size());
            const double saved = tensors[ti]->data[idx];
            tensors[ti]->data[idx] = saved + h;
            const double up = weighted_sum(mlp_forward(p, spec, x), u);
            tensors[ti]->data[idx] = saved - h;
            const double dn = weighted_sum(mlp_forward(p, spec, x), u);
            tensors[ti]->data[idx] = saved;
            const double fd = (up - dn) / (2.0 * h);
            const double an = grads[ti]->data[idx];
            CHECK(std::abs(fd - an) <= 1e-4 * std::max({std::abs(fd), std::abs(an), 1e-3}));
            ++checked;
        }
    }
    CHECK(checked >= 100);

    // input gradient through the same probe
    Tensor xp = x;
    for (int probe = 0; probe < 20; ++probe) {
        const std::size_t idx = rng.uniform_index(xp.size());
        const double saved = xp.data[idx];
        xp.data[idx] = saved + h;
        const double up = weighted_sum(mlp_forward(p, spec, xp), u);
        xp.data[idx] = saved - h;
        const double dn = weighted_sum(mlp_forward(p, spec, xp), u);
        xp.data[idx] = saved;
        const double fd = (up - dn) / (2.0 * h);
        CHECK(std::abs(fd - g.input_grad.data[idx]) <=
              1e-4 * std::max({std::abs(fd), std::abs(g.input_grad.data[idx]), 1e-3}));
    }
}

TEST_CASE("backward without a cache is a usage error") {
    const MlpSpec spec{4, {6}, 2};
    Rng rng(6);
    const MlpParams p = MlpParams::init(spec, rng);
    ForwardCache stale;
    CHECK_THROWS_AS(mlp_backward(p, spec, stale, Tensor({3, 2})), Error);
}

TEST_CASE("adam fixed point on zero gradient") {
    Tensor p({4});
    p.data = {1.0, -2.0, 3.0, 0.5};
    const Tensor before = p;
    Tensor g({4});
    Tensor* pp = &p;
    AdamState st = AdamState::init_like({pp});
    const Tensor* gp = &g;
    adam_step({pp}, {gp}, st, {});
    CHECK(st.t == 1);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(p.data[i] == before.data[i]);
}

TEST_CASE("first adam step matches the closed form") {
    AdamConfig cfg;
    cfg.lr = 1e-3;
    Tensor p({3});
    p.data = {0.2, -0.7, 1.4};
    Tensor g({3});
    g.data = {0.5, -1.25, 3.0};
    const Tensor p0 = p;
    Tensor* pp = &p;
    AdamState st = AdamState::init_like({pp});
    const Tensor* gp = &g;
    adam_step({pp}, {gp}, st, cfg);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m_hat = g.data[i];  // m/(1-b1) with m=(1-b1)g
        const double v_hat = g.data[i] * g.data[i];
        const double expect = p0.data[i] - cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
        CHECK(p.data[i] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("adam minimizes a quadratic bowl") {
    Tensor w({1});
    w.data[0] = 1.0;
    Tensor* wp = &w;
    AdamState st = AdamState::init_like({wp});
    AdamConfig cfg;
    cfg.lr = 0.01;
    for (int k = 0; k < 3000; ++k) {
        Tensor g({1});
        g.data[0] = 2.0 * w.data[0];
        const Tensor* gp = &g;
        adam_step({wp}, {gp}, st, cfg);
    }
    CHECK(std::abs(w.data[0]) < 1e-3);
}

TEST_CASE("adam is invariant to gradient chunking") {
    Rng rng(8);
    Tensor flat_p = random_tensor({10}, rng);
    Tensor flat_g = random_tensor({10}, rng);
    Tensor a_p(std::vector<std::size_t>{5}), b_p({5});
    Tensor a_g(std::vector<std::size_t>{5}), b_g({5});
    for (int i = 0; i < 5; ++i) {
        a_p.data[i] = flat_p.data[i];
        b_p.data[i] = flat_p.data[5 + i];
        a_g.data[i] = flat_g.data[i];
        b_g.data[i] = flat_g.data[5 + i];
    }
    Tensor* fp = &flat_p;
    AdamState flat_state = AdamState::init_like({fp});
    Tensor *ap = &a_p, *bp = &b_p;
    AdamState split_state = AdamState::init_like({ap, bp});
    for (int k = 0; k < 20; ++k) {
        const Tensor *fg = &flat_g, *ag = &a_g, *bg = &b_g;
        adam_step({fp}, {fg}, flat_state, {});
        adam_step({ap, bp}, {ag, bg}, split_state, {});
    }
    for (int i = 0; i < 5; ++i) {
        CHECK(flat_p.data[i] == a_p.data[i]);
        CHECK(flat_p.data[5 + i] == b_p.data[i]);
    }
}

TEST_CASE("gradient clipping rescales to the target norm") {
    MlpGrads g;
    g.weights.push_back(Tensor({2, 2}));
    g.biases.push_back(Tensor({2}));
    g.weights[0].data = {3.0, 0.0, 0.0, 0.0};
    g.biases[0].data = {0.0, 4.0};
    clip_grad_norm(g, 1.0);  // norm was 5
    CHECK(g.weights[0].data[0] == doctest::Approx(0.6));
    CHECK(g.biases[0].data[1] == doctest::Approx(0.8));
    clip_grad_norm(g, 10.0);  // under the limit: untouched
    CHECK(g.weights[0].data[0] == doctest::Approx(0.6));
}

TEST_CASE("squashed sampling limits") {
    Rng rng(9);
    SquashedSample s = sample_squashed({0.0, 0.0}, {-30.0, -30.0}, rng);  // clamped to -20
    CHECK(std::abs(s.action[0]) < 1e-6);
    CHECK(std::abs(s.action[1]) < 1e-6);
    for (int k = 0; k < 100; ++k) {
        s = sample_squashed({1.2, -0.4}, {-20.0, -20.0}, rng);
        CHECK(s.action[0] == doctest::Approx(std::tanh(1.2)).epsilon(1e-6));
        CHECK(s.action[1] == doctest::Approx(std::tanh(-0.4)).epsilon(1e-6));
    }
}

TEST_CASE("monte-carlo entropy matches the quadrature oracle") {
    const std::array<double, 2> mean = {0.3, -0.2};
    const double sigma = 0.8;
    const std::array<double, 2> log_std = {std::log(sigma), std::log(sigma)};

    Rng rng(10);
    const int draws = 100000;
    double mc_entropy = 0.0;
    for (int k = 0; k < draws; ++k) {
        mc_entropy -= sample_squashed(mean, log_std, rng).log_prob;
    }
    mc_entropy /= draws;

    // per-dimension quadrature over the pre-squash variable:
    // H = H_gauss + E[log(1 - tanh(u)^2)]
    double quad_entropy = 0.0;
    for (int dim = 0; dim < 2; ++dim) {
        const double h_gauss = 0.5 * std::log(kTwoPi * std::exp(1.0) * sigma * sigma);
        const int n = 20001;
        const double lo = mean[dim] - 10.0 * sigma, hi = mean[dim] + 10.0 * sigma;
        const double dx = (hi - lo) / (n - 1);
        double integral = 0.0;
        for (int i = 0; i < n; ++i) {
            const double u = lo + i * dx;
            const double pdf = std::exp(-0.5 * std::pow((u - mean[dim]) / sigma, 2)) /
                               (sigma * std::sqrt(kTwoPi));
            const double t = std::tanh(u);
            const double f = pdf * std::log(1.0 - t * t + kSquashEps);
            integral += f * dx * ((i == 0 || i == n - 1) ? 0.5 : 1.0);
        }
        quad_entropy += h_gauss + integral;
    }
    CHECK(mc_entropy == doctest::Approx(quad_entropy).epsilon(0.02));
}

TEST_CASE("no non-finite values across extreme parameters") {
    Rng rng(11);
    for (int k = 0; k < 100000; ++k) {
        const std::array<double, 2> mean = {rng.uniform(-30, 30), rng.uniform(-30, 30)};
        const std::array<double, 2> ls = {rng.uniform(-25, 5), rng.uniform(-25, 5)};
        const SquashedSample s = sample_squashed(mean, ls, rng);
        CHECK(std::isfinite(s.log_prob));
        CHECK(std::isfinite(s.action[0]));
        CHECK(std::abs(s.action[0]) <= 1.0);
    }
}

TEST_CASE("checkpoint round-trip is bit exact") {
    const std::string path = std::filesystem::temp_directory_path() / "avsim_ckpt_test.avcp";
    Rng rng(12);
    const Tensor a = random_tensor({3, 4}, rng);
    const Tensor b = random_tensor({7}, rng);
    save_checkpoint(path, "{\"note\":\"roundtrip\"}", {{"layer.a", &a}, {"layer.b", &b}});
    const Checkpoint ck = load_checkpoint(path);
    CHECK(ck.manifest_json == "{\"note\":\"roundtrip\"}");
    REQUIRE(ck.tensors.count("layer.a") == 1);
    REQUIRE(ck.tensors.count("layer.b") == 1);
    const Tensor& ra = ck.tensors.at("layer.a");
    REQUIRE(ra.shape == a.shape);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(ra.data[i] == a.data[i]);
    const Tensor& rb = ck.tensors.at("layer.b");
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(rb.data[i] == b.data[i]);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_checkpoint(path), Error);
}

TEST_SUITE_END();
