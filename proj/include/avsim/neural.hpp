#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "avsim/rng.hpp"

namespace avsim {

struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        data.assign(n, 0.0);
    }

    std::size_t size() const { return data.size(); }
    std::size_t rows() const { return shape.size() > 0 ? shape[0] : 0; }
    std::size_t cols() const { return shape.size() > 1 ? shape[1] : 1; }
    double& at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }
};

struct MlpSpec {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden = {512, 256, 256, 64};
    std::size_t output_dim = 0;

    std::vector<std::size_t> layer_dims() const {
        std::vector<std::size_t> dims = {input_dim};
        dims.insert(dims.end(), hidden.begin(), hidden.end());
        dims.push_back(output_dim);
        return dims;
    }
    std::size_t layer_count() const { return hidden.size() + 1; }
};

// Per-layer weight (in, out) and bias (out) tensors.
struct MlpParams {
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;

    // uniform fan-in init; head_scale shrinks the final layer
    static MlpParams init(const MlpSpec& spec, Rng& rng, double head_scale = 1.0);
    static MlpParams zeros(const MlpSpec& spec);

    std::vector<Tensor*> tensors();
    std::vector<const Tensor*> tensors() const;
};

struct ForwardCache {
    std::vector<Tensor> acts;  // input, post-ReLU hidden activations, output
};

// Affine + ReLU composition with a linear final layer. x is (batch, input).
// Throws Error(Shape) on dimension mismatch.
Tensor mlp_forward(const MlpParams& params, const MlpSpec& spec, const Tensor& x,
                   ForwardCache* cache = nullptr);

struct MlpGrads {
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;
    Tensor input_grad;  // populated when requested

    std::vector<const Tensor*> tensors() const;
};

// Exact reverse-mode gradients of sum(upstream .* output) w.r.t. parameters
// (and the input when want_input_grad). The cache must come from a forward
// pass of the same params; throws Error(Usage) otherwise.
MlpGrads mlp_backward(const MlpParams& params, const MlpSpec& spec, const ForwardCache& cache,
                      const Tensor& upstream, bool want_input_grad = false,
                      bool want_param_grads = true);

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    long t = 0;

    static AdamState init_like(const std::vector<Tensor*>& params);
};

// Standard Adam with bias correction, elementwise over the tensor list.
void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, const AdamConfig& cfg);

// global L2 clip across all gradient tensors; no-op when max_norm <= 0
void clip_grad_norm(MlpGrads& grads, double max_norm);

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kSquashEps = 1e-6;

struct SquashedSample {
    std::array<double, 2> action{};  // tanh(u), in (-1, 1)
    std::array<double, 2> u{};       // pre-squash Gaussian draw
    std::array<double, 2> z{};       // standard normal noise actually drawn
    double log_prob = 0.0;           // tanh-corrected density of `action`
};

// u ~ Normal(mean, exp(log_std)) with log_std clamped to [-20, 2];
// log_prob = Gaussian log-density of u minus sum(log(1 - tanh(u)^2 + eps)).
SquashedSample sample_squashed(const std::array<double, 2>& mean,
                               const std::array<double, 2>& log_std, Rng& rng);

// log-probability of a pre-squash value under the clamped parameters
double squashed_log_prob(const std::array<double, 2>& mean, const std::array<double, 2>& log_std,
                         const std::array<double, 2>& u);

// pin the BLAS backend to one thread; parallelism lives at the seed and
// episode level where it cannot perturb results
void blas_single_thread();

}  // namespace avsim
