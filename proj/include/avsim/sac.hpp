#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avsim/env.hpp"
#include "avsim/neural.hpp"
#include "avsim/replay.hpp"
#include "avsim/rng.hpp"

namespace avsim {

struct SacConfig {
    double gamma = 0.99;
    std::size_t batch = 256;
    double lr = 1e-4;
    long training_frequency = 2;  // environment decisions per gradient update
    long total_steps = 1'000'000;
    double tau = 0.005;
    double target_entropy = -2.0;  // -action_dim
    double alpha_p = 0.6;
    double beta_is_start = 0.4;  // annealed to beta_is_end over total_steps
    double beta_is_end = 1.0;
    long warmup = 2000;  // uniform-random decisions before the first update
    double grad_clip = 10.0;
    std::size_t buffer_capacity = 1'000'000;
    std::vector<std::size_t> hidden = {512, 256, 256, 64};
    long log_every = 1000;
    long checkpoint_every = 0;  // 0: only the final checkpoint
};

struct SacState {
    MlpSpec policy_spec;  // obs -> [mean(2), log_std(2)]
    MlpSpec critic_spec;  // obs + action -> q
    MlpParams policy;
    MlpParams q1, q2;
    MlpParams target_q1, target_q2;
    Tensor log_alpha;  // single element, optimized in log space
    AdamState opt_policy, opt_q1, opt_q2, opt_alpha;

    double alpha() const { return std::exp(log_alpha.data[0]); }

    static SacState init(std::size_t obs_dim, const SacConfig& cfg, Rng& rng);
};

// struct-of-arrays view of a sampled batch
struct BatchTensors {
    Tensor s;      // (B, obs)
    Tensor a;      // (B, 2)
    Tensor r;      // (B)
    Tensor s2;     // (B, obs)
    Tensor done;   // (B), 1.0 on true termination
    Tensor w;      // (B), importance weights
    std::vector<std::size_t> indices;
};

BatchTensors build_batch(const PrioritizedReplay::Sample& sample, std::size_t obs_dim);

// y = r + gamma (1 - done) (min(targetQ1, targetQ2)(s', a') - alpha log pi(a'|s'))
// with a' freshly sampled from the current policy
std::vector<double> critic_targets(const SacState& state, const BatchTensors& batch,
                                   const SacConfig& cfg, Rng& rng);

struct CriticUpdateResult {
    double loss_q1 = 0.0;
    double loss_q2 = 0.0;
    std::vector<double> new_priorities;  // |td error| + 1e-6
};

CriticUpdateResult critic_update(SacState& state, const BatchTensors& batch, const SacConfig& cfg,
                                 Rng& rng);

struct ActorUpdateResult {
    double actor_loss = 0.0;
    double alpha_loss = 0.0;
    double alpha = 0.0;
    double mean_log_prob = 0.0;
};

ActorUpdateResult actor_and_alpha_update(SacState& state, const BatchTensors& batch,
                                         const SacConfig& cfg, Rng& rng);

void polyak_update(MlpParams& target, const MlpParams& source, double tau);

ActionPair policy_sample_action(const SacState& state, const std::vector<double>& obs, Rng& rng);
ActionPair policy_mean_action(const MlpParams& policy, const MlpSpec& spec,
                              const std::vector<double>& obs);

// checkpoint round-trips carry networks, optimizer state and counters
void save_sac_checkpoint(const std::string& path, const SacState& state,
                         const std::string& manifest_json);

struct SacCheckpoint {
    SacState state;
    std::string manifest_json;
};
SacCheckpoint load_sac_checkpoint(const std::string& path);

struct PolicyHandle {
    MlpSpec spec;
    MlpParams params;
};
PolicyHandle load_policy(const std::string& path);  // policy head only

struct TrainResult {
    long decisions = 0;
    long updates = 0;
    std::string final_checkpoint;
    std::string log_path;
};

// Interleaved collect/update loop over the pool: every environment advances
// one decision per sweep, transitions go to the shared prioritized buffer,
// and one gradient update runs per training_frequency decisions once past
// warmup with a full batch available. Aborts with Error(Diverged) and a
// diagnostic dump on non-finite losses.
class SacTrainer {
public:
    SacTrainer(EnvPool& pool, SacConfig cfg, std::uint64_t master_seed);

    // continue a previous run; counters and optimizer state come from the
    // checkpoint, episodes restart at the stored per-env seed counters
    void resume(const SacCheckpoint& ckpt);

    TrainResult run(const std::string& out_dir, const std::string& config_hash);

    const SacState& state() const { return state_; }
    long decisions() const { return decisions_; }
    long updates() const { return updates_; }
    PrioritizedReplay& buffer() { return buffer_; }

private:
    void do_update(Rng& rng);
    std::string manifest(const std::string& config_hash) const;

    EnvPool& pool_;
    SacConfig cfg_;
    std::uint64_t master_seed_;
    SacState state_;
    PrioritizedReplay buffer_;
    Rng action_rng_;
    Rng update_rng_;
    long decisions_ = 0;
    long updates_ = 0;
    double acc_critic_loss_ = 0.0;
    double acc_actor_loss_ = 0.0;
    long acc_count_ = 0;
};

}  // namespace avsim
