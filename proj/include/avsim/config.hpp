#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avsim/env.hpp"
#include "avsim/sac.hpp"

namespace avsim {

struct ScenarioEntry {
    ScenarioKind kind = ScenarioKind::TIntersection;
    double density = 0.1;
};

// Effective run configuration. Field defaults are the built-in parameter
// table; file values override them and command-line flags override the file.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string out = "runs/out";

    std::vector<ScenarioEntry> scenarios = {{ScenarioKind::TIntersection, 0.1}};
    double entrance_length = 50.0;
    int lanes_per_approach = 3;
    double speed_limit_kmh = 80.0;
    double lane_width = 3.5;

    RewardConfig reward;
    VehicleParams vehicle;
    IdmParams idm;
    TrafficConfig traffic;
    LidarConfig lidar;
    double v2x_dropout = 0.0;
    int v2x_latency = 0;

    int decision_repeat = 10;
    double dt = 0.02;
    int max_decisions = 1000;
    double checkpoint_interval = 10.0;
    double capture_radius = 2.0;
    double arrival_radius = 5.0;

    SacConfig sac;

    long eval_episodes = 100;
    std::uint64_t eval_seed_base = 1'000'000;

    EnvConfig env_config(std::size_t scenario_index, EnvMode mode) const;
    std::vector<EnvConfig> pool_configs(EnvMode mode) const;

    std::string canonical_json() const;  // effective config, stable key order
    std::uint64_t hash() const;          // FNV-1a of canonical_json()
    std::string hash_hex() const;
};

// density label convention: 0.1 veh/10m is regular traffic, 0.2 is dense
std::string density_label(double density);

// Parse and validate; unknown keys are rejected with their full path.
// Throws Error(Config).
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);  // Error(Io) on read failure

}  // namespace avsim
