#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "avsim/bench.hpp"
#include "avsim/config.hpp"
#include "avsim/errors.hpp"
#include "avsim/evaluate.hpp"
#include "avsim/format.hpp"
#include "avsim/trajlog.hpp"
#include "json.hpp"

namespace {

using namespace avsim;

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
    os << text;
}

void export_maps(const RunConfig& cfg, const std::string& out_dir) {
    std::set<std::string> done;
    for (std::size_t i = 0; i < cfg.scenarios.size(); ++i) {
        const EnvConfig env_cfg = cfg.env_config(i, EnvMode::Train);
        const std::string name = scenario_kind_name(env_cfg.scenario.kind);
        if (!done.insert(name).second) continue;
        const auto net = build_scenario_cached(env_cfg.scenario);
        write_text(out_dir + "/map_" + name + ".json", network_to_json(*net));
    }
}

RunConfig resolve_config(const std::string& config_path, std::uint64_t* seed_flag,
                         std::string* out_flag, long* episodes_flag) {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_run_config(config_path);
    if (seed_flag) cfg.seed = *seed_flag;
    if (out_flag) cfg.out = *out_flag;
    if (episodes_flag) cfg.eval_episodes = *episodes_flag;
    return cfg;
}

int cmd_train(const std::string& config_path, std::uint64_t* seed_flag, std::string* out_flag,
              const std::string& checkpoint_path) {
    RunConfig cfg = resolve_config(config_path, seed_flag, out_flag, nullptr);
    std::filesystem::create_directories(cfg.out);
    write_text(cfg.out + "/effective_config.json", cfg.canonical_json() + "\n");
    export_maps(cfg, cfg.out);

    EnvPool pool(cfg.pool_configs(EnvMode::Train), cfg.seed);
    SacTrainer trainer(pool, cfg.sac, cfg.seed);
    if (!checkpoint_path.empty()) {
        const SacCheckpoint ckpt = load_sac_checkpoint(checkpoint_path);
        const auto manifest = nlohmann::json::parse(ckpt.manifest_json);
        const std::string stored_hash = manifest.value("config_hash", "");
        if (stored_hash != cfg.hash_hex()) {
            throw Error(ErrorKind::Config,
                        "resumption refused: checkpoint config hash " + stored_hash +
                            " does not match current config " + cfg.hash_hex());
        }
        trainer.resume(ckpt);
        std::cout << "resumed at decision " << trainer.decisions() << "\n";
    }
    const TrainResult res = trainer.run(cfg.out, cfg.hash_hex());
    std::cout << "trained " << res.decisions << " decisions, " << res.updates << " updates\n"
              << "checkpoint: " << res.final_checkpoint << "\n"
              << "log: " << res.log_path << "\n";
    return 0;
}

int cmd_eval(const std::string& config_path, std::uint64_t* seed_flag, std::string* out_flag,
             long* episodes_flag, const std::string& checkpoint_path) {
    RunConfig cfg = resolve_config(config_path, seed_flag, out_flag, episodes_flag);
    if (checkpoint_path.empty()) {
        throw Error(ErrorKind::Usage, "eval requires --checkpoint");
    }
    std::filesystem::create_directories(cfg.out);
    write_text(cfg.out + "/effective_config.json", cfg.canonical_json() + "\n");
    export_maps(cfg, cfg.out);
    const PolicyHandle policy = load_policy(checkpoint_path);
    const EvalResult res = evaluate_policy(cfg, policy, cfg.out);
    std::cout << res.metrics_csv_text;
    return 0;
}

int cmd_replay(const std::string& log_path, long episode_id, const std::string& out_path) {
    const TrajectoryLogData log = read_trajectory_log(log_path);
    const std::string csv = replay_episode_csv(log, episode_id);
    if (out_path.empty()) {
        std::cout << csv;
    } else {
        write_text(out_path, csv);
        std::cout << "wrote " << out_path << "\n";
    }
    return 0;
}

int cmd_raycast_bench(const std::string& config_path, int scans) {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_run_config(config_path);
    const RaycastBench b = run_raycast_bench(cfg.lidar, scans);
    std::cout << "scans: " << b.scans << "\n"
              << "throughput: " << format_double(b.scans_per_second) << " scans/s\n"
              << "mean: " << format_double(b.mean_ms) << " ms\n"
              << "p99: " << format_double(b.p99_ms) << " ms\n"
              << "checksum: " << std::hex << b.checksum << std::dec << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"avsim: 2D driving micro-simulator with a soft actor-critic training stack"};
    app.require_subcommand(1);

    std::string config_path, out_flag, checkpoint_path, log_path, replay_out;
    std::uint64_t seed_flag = 0;
    long episodes_flag = 0, episode_id = 0;
    int bench_scans = 100;

    auto* train = app.add_subcommand("train", "train a policy over the configured environments");
    train->add_option("--config", config_path, "run configuration file (JSON)");
    auto* train_seed = train->add_option("--seed", seed_flag, "master seed override");
    auto* train_out = train->add_option("--out", out_flag, "output directory override");
    train->add_option("--checkpoint", checkpoint_path, "resume from this checkpoint");

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint and write metrics");
    eval->add_option("--config", config_path, "run configuration file (JSON)");
    auto* eval_seed = eval->add_option("--seed", seed_flag, "master seed override");
    auto* eval_out = eval->add_option("--out", out_flag, "output directory override");
    auto* eval_eps = eval->add_option("--episodes", episodes_flag, "episodes per configuration");
    eval->add_option("--checkpoint", checkpoint_path, "policy checkpoint to evaluate");

    auto* replay = app.add_subcommand("replay", "export one logged episode as CSV");
    replay->add_option("--log", log_path, "trajectory log (JSON lines)")->required();
    replay->add_option("--episode", episode_id, "episode id")->required();
    replay->add_option("--out", replay_out, "output CSV path (stdout when omitted)");

    auto* bench = app.add_subcommand("raycast-bench", "time the LiDAR raycaster");
    bench->add_option("--config", config_path, "run configuration file (JSON)");
    bench->add_option("--scans", bench_scans, "scans per scene");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            return cmd_train(config_path, train_seed->count() ? &seed_flag : nullptr,
                             train_out->count() ? &out_flag : nullptr, checkpoint_path);
        }
        if (eval->parsed()) {
            return cmd_eval(config_path, eval_seed->count() ? &seed_flag : nullptr,
                            eval_out->count() ? &out_flag : nullptr,
                            eval_eps->count() ? &episodes_flag : nullptr, checkpoint_path);
        }
        if (replay->parsed()) return cmd_replay(log_path, episode_id, replay_out);
        if (bench->parsed()) return cmd_raycast_bench(config_path, bench_scans);
    } catch (const avsim::Error& e) {
        std::cerr << "error (" << avsim::error_category(e.kind()) << "): " << e.what() << "\n";
        switch (e.kind()) {
            case avsim::ErrorKind::Config:
            case avsim::ErrorKind::Usage:
                return 2;
            case avsim::ErrorKind::NotFound:
                return 3;
            default:
                return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
