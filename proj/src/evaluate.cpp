#include "avsim/evaluate.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include "avsim/errors.hpp"

namespace avsim {

namespace {

struct EpisodeRecord {
    long episode_id = 0;
    int config_id = 0;
    std::uint64_t seed = 0;
    EpisodeOutcome outcome;
    std::vector<TrajStep> steps;
};

EpisodeRecord run_episode(const RunConfig& cfg, const PolicyHandle& policy, int config_id,
                          long episode_id, std::uint64_t seed) {
    Environment env(cfg.env_config(static_cast<std::size_t>(config_id), EnvMode::Eval));
    std::vector<double> obs = env.reset(seed);
    EpisodeRecord rec;
    rec.episode_id = episode_id;
    rec.config_id = config_id;
    rec.seed = seed;
    while (!env.episode_done()) {
        const ActionPair act = policy_mean_action(policy.params, policy.spec, obs);
        const StepResult res = env.step(act);
        TrajStep s;
        s.episode_id = episode_id;
        s.step = env.decisions();
        s.sim_time = res.info.sim_time;
        s.x = env.ego().position.x;
        s.y = env.ego().position.y;
        s.heading = env.ego().heading;
        s.speed = env.ego().speed;
        s.steering = env.ego().steering;
        s.a1 = act.a1;
        s.a2 = act.a2;
        s.reward = res.reward;
        s.crashed = res.info.crashed;
        s.off_road = res.info.off_road;
        s.checkpoint_index = static_cast<long>(res.info.checkpoint_index);
        rec.steps.push_back(s);
        obs = res.observation;
    }
    rec.outcome = env.outcome();
    return rec;
}

}  // namespace

EvalResult evaluate_policy(const RunConfig& cfg, const PolicyHandle& policy,
                           const std::string& out_dir, int threads) {
    {
        // checkpoint/spec compatibility gate
        Environment probe(cfg.env_config(0, EnvMode::Eval));
        if (policy.spec.input_dim != static_cast<std::size_t>(probe.observation_dim())) {
            throw Error(ErrorKind::Io,
                        "checkpoint/config mismatch: policy expects input dim " +
                            std::to_string(policy.spec.input_dim) + ", environment emits " +
                            std::to_string(probe.observation_dim()));
        }
    }

    const long per_config = cfg.eval_episodes;
    const long total = per_config * static_cast<long>(cfg.scenarios.size());
    std::vector<EpisodeRecord> records(static_cast<std::size_t>(total));

    std::atomic<long> next{0};
    auto worker = [&]() {
        for (;;) {
            const long idx = next.fetch_add(1);
            if (idx >= total) return;
            const int config_id = static_cast<int>(idx / per_config);
            const std::uint64_t seed =
                derive_seed(cfg.seed, "eval", cfg.eval_seed_base + static_cast<std::uint64_t>(idx));
            records[static_cast<std::size_t>(idx)] =
                run_episode(cfg, policy, config_id, idx, seed);
        }
    };
    const int workers = std::max(1, threads);
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    EvalResult out;
    for (std::size_t c = 0; c < cfg.scenarios.size(); ++c) {
        std::vector<EpisodeOutcome> outcomes;
        for (long e = 0; e < per_config; ++e) {
            outcomes.push_back(records[c * per_config + e].outcome);
        }
        out.per_config.push_back(aggregate_metrics(scenario_kind_name(cfg.scenarios[c].kind),
                                                   density_label(cfg.scenarios[c].density),
                                                   outcomes));
    }
    out.metrics_csv_text = metrics_csv(out.per_config);

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        out.metrics_path = out_dir + "/metrics.csv";
        std::ofstream mf(out.metrics_path, std::ios::trunc);
        if (!mf) throw Error(ErrorKind::Io, "cannot write '" + out.metrics_path + "'");
        mf << out.metrics_csv_text;

        out.trajectory_path = out_dir + "/trajectories.jsonl";
        std::ofstream tf(out.trajectory_path, std::ios::trunc);
        if (!tf) throw Error(ErrorKind::Io, "cannot write '" + out.trajectory_path + "'");
        TrajectoryWriter writer(tf);
        for (const EpisodeRecord& rec : records) {
            for (const TrajStep& s : rec.steps) writer.write_step(s);
            TrajEnd end;
            end.episode_id = rec.episode_id;
            end.outcome = outcome_name(rec.outcome.classification);
            end.duration_s = rec.outcome.duration_s;
            end.collided_ever = rec.outcome.collided_ever;
            end.decisions = static_cast<long>(rec.steps.size());
            end.seed = rec.seed;
            end.config_id = rec.config_id;
            writer.write_end(end);
        }
    }
    return out;
}

}  // namespace avsim
