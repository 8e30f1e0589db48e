#include "avsim/sac.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "avsim/checkpoint.hpp"
#include "avsim/errors.hpp"
#include "avsim/format.hpp"
#include "json.hpp"

namespace avsim {

namespace {

SacState make_initial_state(std::size_t obs_dim, const SacConfig& cfg, std::uint64_t master) {
    Rng rng(derive_seed(master, "init"));
    return SacState::init(obs_dim, cfg, rng);
}

Tensor concat_obs_action(const Tensor& s, const Tensor& a) {
    const std::size_t batch = s.rows();
    Tensor x({batch, s.cols() + a.cols()});
    for (std::size_t i = 0; i < batch; ++i) {
        double* row = x.data.data() + i * x.cols();
        const double* srow = s.data.data() + i * s.cols();
        const double* arow = a.data.data() + i * a.cols();
        std::copy(srow, srow + s.cols(), row);
        std::copy(arow, arow + a.cols(), row + s.cols());
    }
    return x;
}

struct PolicyRows {
    // per-sample squashed draws with everything the gradients need
    std::vector<std::array<double, 2>> mean, log_std_raw, z, action;
    std::vector<double> log_prob;
};

PolicyRows sample_policy_rows(const Tensor& head, Rng& rng) {
    const std::size_t batch = head.rows();
    PolicyRows rows;
    rows.mean.resize(batch);
    rows.log_std_raw.resize(batch);
    rows.z.resize(batch);
    rows.action.resize(batch);
    rows.log_prob.resize(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        const std::array<double, 2> mean = {head.at(i, 0), head.at(i, 1)};
        const std::array<double, 2> ls = {head.at(i, 2), head.at(i, 3)};
        const SquashedSample smp = sample_squashed(mean, ls, rng);
        rows.mean[i] = mean;
        rows.log_std_raw[i] = ls;
        rows.z[i] = smp.z;
        rows.action[i] = smp.action;
        rows.log_prob[i] = smp.log_prob;
    }
    return rows;
}

}  // namespace

SacState SacState::init(std::size_t obs_dim, const SacConfig& cfg, Rng& rng) {
    SacState st;
    st.policy_spec = MlpSpec{obs_dim, cfg.hidden, 4};
    st.critic_spec = MlpSpec{obs_dim + 2, cfg.hidden, 1};
    st.policy = MlpParams::init(st.policy_spec, rng, 1e-2);
    st.q1 = MlpParams::init(st.critic_spec, rng);
    st.q2 = MlpParams::init(st.critic_spec, rng);
    st.target_q1 = st.q1;
    st.target_q2 = st.q2;
    st.log_alpha = Tensor({1});
    st.opt_policy = AdamState::init_like(st.policy.tensors());
    st.opt_q1 = AdamState::init_like(st.q1.tensors());
    st.opt_q2 = AdamState::init_like(st.q2.tensors());
    Tensor* la = &st.log_alpha;
    st.opt_alpha = AdamState::init_like({la});
    return st;
}

BatchTensors build_batch(const PrioritizedReplay::Sample& sample, std::size_t obs_dim) {
    const std::size_t batch = sample.items.size();
    BatchTensors b;
    b.s = Tensor({batch, obs_dim});
    b.a = Tensor({batch, 2});
    b.r = Tensor({batch});
    b.s2 = Tensor({batch, obs_dim});
    b.done = Tensor({batch});
    b.w = Tensor({batch});
    b.indices = sample.indices;
    for (std::size_t i = 0; i < batch; ++i) {
        const Transition& t = *sample.items[i];
        if (t.s.size() != obs_dim || t.s2.size() != obs_dim) {
            throw Error(ErrorKind::Shape, "build_batch: observation dimension mismatch");
        }
        std::copy(t.s.begin(), t.s.end(), b.s.data.begin() + i * obs_dim);
        std::copy(t.s2.begin(), t.s2.end(), b.s2.data.begin() + i * obs_dim);
        b.a.at(i, 0) = t.a[0];
        b.a.at(i, 1) = t.a[1];
        b.r.data[i] = t.r;
        b.done.data[i] = t.done ? 1.0 : 0.0;
        b.w.data[i] = sample.is_weights[i];
    }
    return b;
}

std::vector<double> critic_targets(const SacState& state, const BatchTensors& batch,
                                   const SacConfig& cfg, Rng& rng) {
    const std::size_t n = batch.r.size();
    const Tensor head = mlp_forward(state.policy, state.policy_spec, batch.s2);
    const PolicyRows rows = sample_policy_rows(head, rng);

    Tensor a2({n, 2});
    for (std::size_t i = 0; i < n; ++i) {
        a2.at(i, 0) = rows.action[i][0];
        a2.at(i, 1) = rows.action[i][1];
    }
    const Tensor x2 = concat_obs_action(batch.s2, a2);
    const Tensor t1 = mlp_forward(state.target_q1, state.critic_spec, x2);
    const Tensor t2 = mlp_forward(state.target_q2, state.critic_spec, x2);

    const double alpha = state.alpha();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double qmin = std::min(t1.data[i], t2.data[i]);
        y[i] = batch.r.data[i] +
               cfg.gamma * (1.0 - batch.done.data[i]) * (qmin - alpha * rows.log_prob[i]);
    }
    return y;
}

CriticUpdateResult critic_update(SacState& state, const BatchTensors& batch, const SacConfig& cfg,
                                 Rng& rng) {
    const std::size_t n = batch.r.size();
    const std::vector<double> y = critic_targets(state, batch, cfg, rng);
    const Tensor x = concat_obs_action(batch.s, batch.a);

    CriticUpdateResult out;
    out.new_priorities.assign(n, 0.0);
    std::vector<double> td(n, 0.0);

    const AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};
    MlpParams* critics[2] = {&state.q1, &state.q2};
    AdamState* opts[2] = {&state.opt_q1, &state.opt_q2};
    double* losses[2] = {&out.loss_q1, &out.loss_q2};
    for (int k = 0; k < 2; ++k) {
        ForwardCache cache;
        const Tensor q = mlp_forward(*critics[k], state.critic_spec, x, &cache);
        Tensor upstream({n, 1});
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double delta = q.data[i] - y[i];
            loss += batch.w.data[i] * delta * delta;
            upstream.data[i] = 2.0 * batch.w.data[i] * delta / static_cast<double>(n);
            td[i] += 0.5 * delta;
        }
        *losses[k] = loss / static_cast<double>(n);
        MlpGrads g = mlp_backward(*critics[k], state.critic_spec, cache, upstream);
        clip_grad_norm(g, cfg.grad_clip);
        adam_step(critics[k]->tensors(), g.tensors(), *opts[k], adam);
    }
    for (std::size_t i = 0; i < n; ++i) out.new_priorities[i] = std::abs(td[i]) + 1e-6;
    return out;
}

ActorUpdateResult actor_and_alpha_update(SacState& state, const BatchTensors& batch,
                                         const SacConfig& cfg, Rng& rng) {
    const std::size_t n = batch.r.size();
    ForwardCache pol_cache;
    const Tensor head = mlp_forward(state.policy, state.policy_spec, batch.s, &pol_cache);
    const PolicyRows rows = sample_policy_rows(head, rng);
    const double alpha = state.alpha();

    Tensor a_new({n, 2});
    for (std::size_t i = 0; i < n; ++i) {
        a_new.at(i, 0) = rows.action[i][0];
        a_new.at(i, 1) = rows.action[i][1];
    }
    const Tensor xa = concat_obs_action(batch.s, a_new);
    ForwardCache c1, c2;
    const Tensor q1 = mlp_forward(state.q1, state.critic_spec, xa, &c1);
    const Tensor q2 = mlp_forward(state.q2, state.critic_spec, xa, &c2);

    // dQmin/da through whichever critic attains the minimum, critics frozen
    Tensor up1({n, 1}), up2({n, 1});
    double actor_loss = 0.0;
    double mean_log_prob = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool first = q1.data[i] <= q2.data[i];
        const double qmin = first ? q1.data[i] : q2.data[i];
        (first ? up1 : up2).data[i] = 1.0;
        actor_loss += alpha * rows.log_prob[i] - qmin;
        mean_log_prob += rows.log_prob[i];
    }
    actor_loss /= static_cast<double>(n);
    mean_log_prob /= static_cast<double>(n);
    const MlpGrads gi1 = mlp_backward(state.q1, state.critic_spec, c1, up1, true, false);
    const MlpGrads gi2 = mlp_backward(state.q2, state.critic_spec, c2, up2, true, false);
    const std::size_t obs_dim = batch.s.cols();

    Tensor upstream({n, 4});
    for (std::size_t i = 0; i < n; ++i) {
        for (int j = 0; j < 2; ++j) {
            const double a = rows.action[i][j];
            const double one_m_a2 = 1.0 - a * a;
            const double dlogp_du = 2.0 * a * one_m_a2 / (one_m_a2 + kSquashEps);
            const double dq_da = gi1.input_grad.at(i, obs_dim + j) + gi2.input_grad.at(i, obs_dim + j);
            // d/du of the per-sample loss, then chain into mean and log_std
            const double dl_du = (alpha * dlogp_du - dq_da * one_m_a2) / static_cast<double>(n);
            upstream.at(i, j) = dl_du;
            const double ls_raw = rows.log_std_raw[i][j];
            if (ls_raw <= kLogStdMin || ls_raw >= kLogStdMax) {
                upstream.at(i, 2 + j) = 0.0;  // clamp active
            } else {
                const double sd_z = std::exp(ls_raw) * rows.z[i][j];
                upstream.at(i, 2 + j) =
                    dl_du * sd_z + alpha * (-1.0) / static_cast<double>(n);
            }
        }
    }
    MlpGrads pg = mlp_backward(state.policy, state.policy_spec, pol_cache, upstream);
    clip_grad_norm(pg, cfg.grad_clip);
    const AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};
    adam_step(state.policy.tensors(), pg.tensors(), state.opt_policy, adam);

    // temperature step from the same batch, log probs detached
    double alpha_grad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        alpha_grad += -(rows.log_prob[i] + cfg.target_entropy);
    }
    alpha_grad /= static_cast<double>(n);
    const double alpha_loss = alpha_grad * state.log_alpha.data[0];
    Tensor ga({1});
    ga.data[0] = alpha_grad;
    Tensor* la = &state.log_alpha;
    const Tensor* gap = &ga;
    adam_step({la}, {gap}, state.opt_alpha, adam);

    ActorUpdateResult out;
    out.actor_loss = actor_loss;
    out.alpha_loss = alpha_loss;
    out.alpha = state.alpha();
    out.mean_log_prob = mean_log_prob;
    return out;
}

void polyak_update(MlpParams& target, const MlpParams& source, double tau) {
    auto t = target.tensors();
    auto s = source.tensors();
    if (t.size() != s.size()) throw Error(ErrorKind::Shape, "polyak_update: shape mismatch");
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k]->size() != s[k]->size()) {
            throw Error(ErrorKind::Shape, "polyak_update: tensor mismatch");
        }
        for (std::size_t i = 0; i < t[k]->size(); ++i) {
            t[k]->data[i] = (1.0 - tau) * t[k]->data[i] + tau * s[k]->data[i];
        }
    }
}

ActionPair policy_sample_action(const SacState& state, const std::vector<double>& obs, Rng& rng) {
    Tensor x({1, obs.size()});
    x.data = obs;
    const Tensor head = mlp_forward(state.policy, state.policy_spec, x);
    const SquashedSample smp = sample_squashed({head.data[0], head.data[1]},
                                               {head.data[2], head.data[3]}, rng);
    return {smp.action[0], smp.action[1]};
}

ActionPair policy_mean_action(const MlpParams& policy, const MlpSpec& spec,
                              const std::vector<double>& obs) {
    Tensor x({1, obs.size()});
    x.data = obs;
    const Tensor head = mlp_forward(policy, spec, x);
    return {std::tanh(head.data[0]), std::tanh(head.data[1])};
}

// ---------------------------------------------------------------------------
// checkpointing

namespace {

void collect_net(std::vector<std::pair<std::string, const Tensor*>>& out, const std::string& name,
                 const MlpParams& p) {
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        out.push_back({name + ".w" + std::to_string(l), &p.weights[l]});
        out.push_back({name + ".b" + std::to_string(l), &p.biases[l]});
    }
}

void collect_adam(std::vector<std::pair<std::string, const Tensor*>>& out, const std::string& name,
                  const AdamState& s) {
    for (std::size_t i = 0; i < s.m.size(); ++i) {
        out.push_back({"opt." + name + "." + std::to_string(i) + ".m", &s.m[i]});
        out.push_back({"opt." + name + "." + std::to_string(i) + ".v", &s.v[i]});
    }
}

void restore_net(const std::map<std::string, Tensor>& tensors, const std::string& name,
                 MlpParams& p) {
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        const auto wi = tensors.find(name + ".w" + std::to_string(l));
        const auto bi = tensors.find(name + ".b" + std::to_string(l));
        if (wi == tensors.end() || bi == tensors.end()) {
            throw Error(ErrorKind::Io, "checkpoint: missing tensors for " + name);
        }
        p.weights[l] = wi->second;
        p.biases[l] = bi->second;
    }
}

void restore_adam(const std::map<std::string, Tensor>& tensors, const std::string& name,
                  AdamState& s) {
    for (std::size_t i = 0; i < s.m.size(); ++i) {
        const auto mi = tensors.find("opt." + name + "." + std::to_string(i) + ".m");
        const auto vi = tensors.find("opt." + name + "." + std::to_string(i) + ".v");
        if (mi == tensors.end() || vi == tensors.end()) {
            throw Error(ErrorKind::Io, "checkpoint: missing optimizer state for " + name);
        }
        s.m[i] = mi->second;
        s.v[i] = vi->second;
    }
}

}  // namespace

void save_sac_checkpoint(const std::string& path, const SacState& state,
                         const std::string& manifest_json) {
    std::vector<std::pair<std::string, const Tensor*>> tensors;
    collect_net(tensors, "policy", state.policy);
    collect_net(tensors, "q1", state.q1);
    collect_net(tensors, "q2", state.q2);
    collect_net(tensors, "target_q1", state.target_q1);
    collect_net(tensors, "target_q2", state.target_q2);
    tensors.push_back({"log_alpha", &state.log_alpha});
    collect_adam(tensors, "policy", state.opt_policy);
    collect_adam(tensors, "q1", state.opt_q1);
    collect_adam(tensors, "q2", state.opt_q2);
    collect_adam(tensors, "alpha", state.opt_alpha);
    save_checkpoint(path, manifest_json, tensors);
}

SacCheckpoint load_sac_checkpoint(const std::string& path) {
    const Checkpoint raw = load_checkpoint(path);
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(raw.manifest_json);
    } catch (const std::exception& e) {
        throw Error(ErrorKind::Io, std::string("checkpoint: bad manifest: ") + e.what());
    }
    SacConfig cfg;
    cfg.hidden = m.at("hidden").get<std::vector<std::size_t>>();
    const std::size_t obs_dim = m.at("obs_dim").get<std::size_t>();
    Rng dummy(0);
    SacCheckpoint out;
    out.state = SacState::init(obs_dim, cfg, dummy);
    out.manifest_json = raw.manifest_json;
    restore_net(raw.tensors, "policy", out.state.policy);
    restore_net(raw.tensors, "q1", out.state.q1);
    restore_net(raw.tensors, "q2", out.state.q2);
    restore_net(raw.tensors, "target_q1", out.state.target_q1);
    restore_net(raw.tensors, "target_q2", out.state.target_q2);
    const auto la = raw.tensors.find("log_alpha");
    if (la == raw.tensors.end()) throw Error(ErrorKind::Io, "checkpoint: missing log_alpha");
    out.state.log_alpha = la->second;
    restore_adam(raw.tensors, "policy", out.state.opt_policy);
    restore_adam(raw.tensors, "q1", out.state.opt_q1);
    restore_adam(raw.tensors, "q2", out.state.opt_q2);
    restore_adam(raw.tensors, "alpha", out.state.opt_alpha);
    out.state.opt_policy.t = m.at("adam_t").at("policy").get<long>();
    out.state.opt_q1.t = m.at("adam_t").at("q1").get<long>();
    out.state.opt_q2.t = m.at("adam_t").at("q2").get<long>();
    out.state.opt_alpha.t = m.at("adam_t").at("alpha").get<long>();
    return out;
}

PolicyHandle load_policy(const std::string& path) {
    const SacCheckpoint ckpt = load_sac_checkpoint(path);
    return {ckpt.state.policy_spec, ckpt.state.policy};
}

// ---------------------------------------------------------------------------
// trainer

SacTrainer::SacTrainer(EnvPool& pool, SacConfig cfg, std::uint64_t master_seed)
    : pool_(pool),
      cfg_(std::move(cfg)),
      master_seed_(master_seed),
      state_(make_initial_state(static_cast<std::size_t>(pool.env(0).observation_dim()), cfg_,
                                master_seed)),
      buffer_(cfg_.buffer_capacity, cfg_.alpha_p),
      action_rng_(derive_seed(master_seed, "action")),
      update_rng_(derive_seed(master_seed, "update")) {}

void SacTrainer::resume(const SacCheckpoint& ckpt) {
    const nlohmann::json m = nlohmann::json::parse(ckpt.manifest_json);
    state_ = ckpt.state;
    decisions_ = m.at("decisions").get<long>();
    updates_ = m.at("updates").get<long>();
    action_rng_.deserialize(m.at("rng").at("action").get<std::string>());
    update_rng_.deserialize(m.at("rng").at("update").get<std::string>());
    if (m.contains("episode_counters")) {
        pool_.restore_episode_counters(m.at("episode_counters").get<std::vector<long>>());
    }
}

std::string SacTrainer::manifest(const std::string& config_hash) const {
    nlohmann::json m;
    m["format"] = "avsim-sac";
    m["decisions"] = decisions_;
    m["updates"] = updates_;
    m["config_hash"] = config_hash;
    m["obs_dim"] = state_.policy_spec.input_dim;
    m["hidden"] = state_.policy_spec.hidden;
    m["adam_t"] = {{"policy", state_.opt_policy.t},
                   {"q1", state_.opt_q1.t},
                   {"q2", state_.opt_q2.t},
                   {"alpha", state_.opt_alpha.t}};
    m["rng"] = {{"action", action_rng_.serialize()}, {"update", update_rng_.serialize()}};
    m["episode_counters"] = pool_.episode_counters();
    return m.dump();
}

void SacTrainer::do_update(Rng& rng) {
    const double frac =
        std::min(1.0, static_cast<double>(decisions_) / static_cast<double>(cfg_.total_steps));
    const double beta = cfg_.beta_is_start + (cfg_.beta_is_end - cfg_.beta_is_start) * frac;
    auto sample = buffer_.sample(cfg_.batch, beta, rng);
    if (!sample) return;
    BatchTensors batch = build_batch(*sample, state_.policy_spec.input_dim);
    const CriticUpdateResult cr = critic_update(state_, batch, cfg_, rng);
    const double critic_loss = 0.5 * (cr.loss_q1 + cr.loss_q2);
    if (!std::isfinite(critic_loss)) {
        throw Error(ErrorKind::Diverged, "training diverged: non-finite critic loss at update " +
                                             std::to_string(updates_ + 1));
    }
    buffer_.update_priorities(batch.indices, cr.new_priorities);
    const ActorUpdateResult ar = actor_and_alpha_update(state_, batch, cfg_, rng);
    polyak_update(state_.target_q1, state_.q1, cfg_.tau);
    polyak_update(state_.target_q2, state_.q2, cfg_.tau);
    ++updates_;

    if (!std::isfinite(ar.actor_loss) || !std::isfinite(ar.alpha)) {
        throw Error(ErrorKind::Diverged, "training diverged: non-finite actor loss at update " +
                                             std::to_string(updates_));
    }
    acc_critic_loss_ += critic_loss;
    acc_actor_loss_ += ar.actor_loss;
    ++acc_count_;
}

TrainResult SacTrainer::run(const std::string& out_dir, const std::string& config_hash) {
    blas_single_thread();
    std::filesystem::create_directories(out_dir);
    const std::string log_path = out_dir + "/training_log.csv";
    std::ofstream log(log_path, std::ios::trunc);
    if (!log) throw Error(ErrorKind::Io, "cannot open training log '" + log_path + "'");
    log << "step,critic_loss,actor_loss,alpha,buffer_size";
    for (std::size_t i = 0; i < pool_.size(); ++i) log << ",return_cfg" << i;
    log << "\n";

    std::vector<double> return_sum(pool_.size(), 0.0);
    std::vector<long> return_count(pool_.size(), 0);
    auto write_row = [&]() {
        for (const auto& [cfg_id, ret] : pool_.drain_finished_returns()) {
            return_sum[cfg_id] += ret;
            return_count[cfg_id] += 1;
        }
        log << decisions_ << ',';
        log << (acc_count_ > 0 ? format_double(acc_critic_loss_ / acc_count_) : "") << ',';
        log << (acc_count_ > 0 ? format_double(acc_actor_loss_ / acc_count_) : "") << ',';
        log << format_double(state_.alpha()) << ',' << buffer_.size();
        for (std::size_t i = 0; i < pool_.size(); ++i) {
            log << ',';
            if (return_count[i] > 0) log << format_double(return_sum[i] / return_count[i]);
            return_sum[i] = 0.0;
            return_count[i] = 0;
        }
        log << "\n";
        acc_critic_loss_ = acc_actor_loss_ = 0.0;
        acc_count_ = 0;
    };

    try {
        bool logged_at_end = false;
        while (decisions_ < cfg_.total_steps) {
            for (std::size_t i = 0; i < pool_.size() && decisions_ < cfg_.total_steps; ++i) {
                ActionPair act;
                if (decisions_ < cfg_.warmup) {
                    act.a1 = action_rng_.uniform(-1.0, 1.0);
                    act.a2 = action_rng_.uniform(-1.0, 1.0);
                } else {
                    act = policy_sample_action(state_, pool_.current_obs(i), action_rng_);
                }
                buffer_.push(pool_.step_env(i, act));
                ++decisions_;
                if (decisions_ > cfg_.warmup && cfg_.training_frequency > 0 &&
                    decisions_ % cfg_.training_frequency == 0 && buffer_.size() >= cfg_.batch) {
                    do_update(update_rng_);
                }
                logged_at_end = false;
                if (cfg_.log_every > 0 && decisions_ % cfg_.log_every == 0) {
                    write_row();
                    logged_at_end = true;
                }
                if (cfg_.checkpoint_every > 0 && decisions_ % cfg_.checkpoint_every == 0) {
                    save_sac_checkpoint(out_dir + "/checkpoint_" + std::to_string(decisions_) +
                                            ".avcp",
                                        state_, manifest(config_hash));
                }
            }
        }
        if (!logged_at_end) write_row();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Diverged) {
            nlohmann::json diag;
            diag["error"] = e.what();
            diag["decisions"] = decisions_;
            diag["updates"] = updates_;
            diag["alpha"] = state_.alpha();
            std::ofstream dump(out_dir + "/diverged.json");
            dump << diag.dump(2) << "\n";
        }
        throw;
    }

    TrainResult out;
    out.decisions = decisions_;
    out.updates = updates_;
    out.final_checkpoint = out_dir + "/checkpoint_final.avcp";
    out.log_path = log_path;
    save_sac_checkpoint(out.final_checkpoint, state_, manifest(config_hash));
    return out;
}

}  // namespace avsim
