#include "avsim/neural.hpp"

#include <cblas.h>

#include <cmath>

#include "avsim/errors.hpp"

namespace avsim {



namespace {

// C(M,N) = alpha * op(A) op(B) + beta * C, row-major
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, double alpha,
          const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
          double* c, std::size_t ldc) {
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m), static_cast<int>(n),
                static_cast<int>(k), alpha, a, static_cast<int>(lda), b, static_cast<int>(ldb),
                beta, c, static_cast<int>(ldc));
}

}  // namespace

MlpParams MlpParams::init(const MlpSpec& spec, Rng& rng, double head_scale) {
    MlpParams p;
    const auto dims = spec.layer_dims();
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Tensor w({dims[l], dims[l + 1]});
        const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
        const double scale = (l + 2 == dims.size()) ? head_scale : 1.0;
        for (double& v : w.data) v = scale * rng.uniform(-bound, bound);
        p.weights.push_back(std::move(w));
        p.biases.push_back(Tensor({dims[l + 1]}));
    }
    return p;
}

MlpParams MlpParams::zeros(const MlpSpec& spec) {
    MlpParams p;
    const auto dims = spec.layer_dims();
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        p.weights.push_back(Tensor({dims[l], dims[l + 1]}));
        p.biases.push_back(Tensor({dims[l + 1]}));
    }
    return p;
}

std::vector<Tensor*> MlpParams::tensors() {
    std::vector<Tensor*> out;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        out.push_back(&weights[l]);
        out.push_back(&biases[l]);
    }
    return out;
}

std::vector<const Tensor*> MlpParams::tensors() const {
    std::vector<const Tensor*> out;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        out.push_back(&weights[l]);
        out.push_back(&biases[l]);
    }
    return out;
}

std::vector<const Tensor*> MlpGrads::tensors() const {
    std::vector<const Tensor*> out;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        out.push_back(&weights[l]);
        out.push_back(&biases[l]);
    }
    return out;
}

Tensor mlp_forward(const MlpParams& params, const MlpSpec& spec, const Tensor& x,
                   ForwardCache* cache) {
    if (x.shape.size() != 2 || x.cols() != spec.input_dim) {
        throw Error(ErrorKind::Shape, "mlp_forward: input shape mismatch");
    }
    if (params.weights.size() != spec.layer_count()) {
        throw Error(ErrorKind::Shape, "mlp_forward: parameter/spec mismatch");
    }
    const std::size_t batch = x.rows();
    if (cache) {
        cache->acts.clear();
        cache->acts.reserve(params.weights.size() + 1);
        cache->acts.push_back(x);
    }
    Tensor local;
    const Tensor* cur = &x;
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        const Tensor& w = params.weights[l];
        const Tensor& b = params.biases[l];
        if (w.rows() != cur->cols()) throw Error(ErrorKind::Shape, "mlp_forward: layer mismatch");
        Tensor next({batch, w.cols()});
        gemm(false, false, batch, w.cols(), w.rows(), 1.0, cur->data.data(), cur->cols(),
             w.data.data(), w.cols(), 0.0, next.data.data(), next.cols());
        const std::size_t n = w.cols();
        for (std::size_t i = 0; i < batch; ++i) {
            double* row = next.data.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) row[j] += b.data[j];
        }
        if (l + 1 < params.weights.size()) {
            for (double& v : next.data) v = v > 0.0 ? v : 0.0;
        }
        if (cache) {
            cache->acts.push_back(std::move(next));
            cur = &cache->acts.back();
        } else {
            local = std::move(next);
            cur = &local;
        }
    }
    return cache ? cache->acts.back() : std::move(local);
}

MlpGrads mlp_backward(const MlpParams& params, const MlpSpec& spec, const ForwardCache& cache,
                      const Tensor& upstream, bool want_input_grad, bool want_param_grads) {
    const std::size_t layers = params.weights.size();
    if (cache.acts.size() != layers + 1) {
        throw Error(ErrorKind::Usage, "mlp_backward: forward cache missing or stale");
    }
    if (upstream.rows() != cache.acts[0].rows() || upstream.cols() != spec.output_dim) {
        throw Error(ErrorKind::Shape, "mlp_backward: upstream shape mismatch");
    }
    const std::size_t batch = upstream.rows();

    MlpGrads g;
    if (want_param_grads) {
        g.weights.resize(layers);
        g.biases.resize(layers);
    }

    Tensor delta = upstream;
    for (std::size_t li = layers; li-- > 0;) {
        const Tensor& w = params.weights[li];
        const Tensor& below = cache.acts[li];
        if (want_param_grads) {
            Tensor dw({w.rows(), w.cols()});
            gemm(true, false, w.rows(), w.cols(), batch, 1.0, below.data.data(), below.cols(),
                 delta.data.data(), delta.cols(), 0.0, dw.data.data(), dw.cols());
            Tensor db({w.cols()});
            for (std::size_t i = 0; i < batch; ++i) {
                const double* row = delta.data.data() + i * w.cols();
                for (std::size_t j = 0; j < w.cols(); ++j) db.data[j] += row[j];
            }
            g.weights[li] = std::move(dw);
            g.biases[li] = std::move(db);
        }
        const bool need_dx = li > 0 || want_input_grad;
        if (!need_dx) break;
        Tensor dx({batch, w.rows()});
        gemm(false, true, batch, w.rows(), w.cols(), 1.0, delta.data.data(), delta.cols(),
             w.data.data(), w.cols(), 0.0, dx.data.data(), dx.cols());
        if (li > 0) {
            // ReLU mask from the stored post-activation
            const Tensor& act = cache.acts[li];
            for (std::size_t i = 0; i < dx.data.size(); ++i) {
                if (act.data[i] <= 0.0) dx.data[i] = 0.0;
            }
            delta = std::move(dx);
        } else {
            g.input_grad = std::move(dx);
        }
    }
    return g;
}

AdamState AdamState::init_like(const std::vector<Tensor*>& params) {
    AdamState s;
    for (const Tensor* p : params) {
        s.m.push_back(Tensor(p->shape));
        s.v.push_back(Tensor(p->shape));
    }
    return s;
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, const AdamConfig& cfg) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw Error(ErrorKind::Shape, "adam_step: tensor list mismatch");
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        const Tensor& g = *grads[k];
        Tensor& m = state.m[k];
        Tensor& v = state.v[k];
        if (p.size() != g.size()) throw Error(ErrorKind::Shape, "adam_step: shape mismatch");
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = g.data[i];
            m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * gi;
            v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * gi * gi;
            const double mh = m.data[i] / bc1;
            const double vh = v.data[i] / bc2;
            p.data[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.eps);
        }
    }
}

void clip_grad_norm(MlpGrads& grads, double max_norm) {
    if (max_norm <= 0.0) return;
    double total = 0.0;
    for (const Tensor* g : grads.tensors()) {
        for (double v : g->data) total += v * v;
    }
    total = std::sqrt(total);
    if (total <= max_norm) return;
    const double scale = max_norm / total;
    for (std::size_t l = 0; l < grads.weights.size(); ++l) {
        for (double& v : grads.weights[l].data) v *= scale;
        for (double& v : grads.biases[l].data) v *= scale;
    }
}

SquashedSample sample_squashed(const std::array<double, 2>& mean,
                               const std::array<double, 2>& log_std, Rng& rng) {
    SquashedSample out;
    for (int i = 0; i < 2; ++i) out.z[i] = rng.normal();
    std::array<double, 2> u;
    for (int i = 0; i < 2; ++i) {
        const double ls = std::clamp(log_std[i], kLogStdMin, kLogStdMax);
        u[i] = mean[i] + std::exp(ls) * out.z[i];
        out.action[i] = std::tanh(u[i]);
    }
    out.u = u;
    out.log_prob = squashed_log_prob(mean, log_std, u);
    return out;
}

double squashed_log_prob(const std::array<double, 2>& mean, const std::array<double, 2>& log_std,
                         const std::array<double, 2>& u) {
    constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;
    double lp = 0.0;
    for (int i = 0; i < 2; ++i) {
        const double ls = std::clamp(log_std[i], kLogStdMin, kLogStdMax);
        const double z = (u[i] - mean[i]) / std::exp(ls);
        lp += -0.5 * z * z - ls - kLogSqrt2Pi;
        const double a = std::tanh(u[i]);
        lp -= std::log(1.0 - a * a + kSquashEps);
    }
    return lp;
}

}  // namespace avsim
