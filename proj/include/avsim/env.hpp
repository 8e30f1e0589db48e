#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <vector>

#include "avsim/dynamics.hpp"
#include "avsim/map.hpp"
#include "avsim/rng.hpp"
#include "avsim/sensing.hpp"
#include "avsim/traffic.hpp"
#include "avsim/transition.hpp"

namespace avsim {

struct RewardConfig {
    double c1 = 0.1;            // speed reward weight
    double c2 = 0.05;           // displacement weight
    double r_term = 20.0;       // terminal reward on arrival
    double p_crash = 5.0;       // per-decision crash penalty
    double p_out = 5.0;         // per-decision off-road penalty
    bool reshaped = true;       // displacement as penalty instead of bonus
    double reward_scale = 5.0;  // multiplier on the final reward
    bool potential_disp = false;  // replace the displacement term by a
                                  // remaining-distance potential penalty
};

struct RewardInputs {
    double speed = 0.0;
    double v_max = 1.0;
    double disp = 0.0;  // longitudinal Frenet displacement along the route, m
    bool crashed = false;
    bool off_road = false;
    bool arrived = false;
    double remaining_frac = 0.0;  // only used with potential_disp
};

double compute_reward(const RewardInputs& in, const RewardConfig& cfg);

enum class EnvMode { Train, Eval };

enum class Outcome { Success, Crash, OffRoad, Timeout };
const char* outcome_name(Outcome o);

struct EpisodeOutcome {
    Outcome classification = Outcome::Timeout;
    double duration_s = 0.0;
    bool collided_ever = false;
};

struct EpisodeTrace {
    bool reached = false;
    bool collided_ever = false;
    bool offroad_terminated = false;
    long decisions = 0;
    double decision_period = 0.2;
};

EpisodeOutcome classify_outcome(const EpisodeTrace& trace);

struct EnvConfig {
    ScenarioSpec scenario;
    RewardConfig reward;
    VehicleParams vehicle;
    IdmParams idm;
    LidarConfig lidar;
    TrafficConfig traffic;
    double v2x_dropout = 0.0;  // per-report drop probability
    int v2x_latency = 0;       // decisions of delay on the V2X block
    int decision_repeat = 10;
    double dt = 0.02;
    int max_decisions = 1000;  // T, truncation horizon
    double checkpoint_interval = 10.0;
    double capture_radius = 2.0;
    double arrival_radius = 5.0;
    EnvMode mode = EnvMode::Train;
};

struct StepInfo {
    bool crashed = false;   // collision happened during this decision window
    bool off_road = false;  // reference point left the drivable area this window
    std::size_t checkpoint_index = 0;
    double sim_time = 0.0;
};

struct StepResult {
    std::vector<double> observation;
    double reward = 0.0;
    bool terminated = false;
    bool truncated = false;
    StepInfo info;
};

// Single-writer RL environment. One decision = decision_repeat physics ticks
// with the mapped command held; reward is computed once per decision from
// the post-repeat state. Training mode never terminates on crash/off-road;
// evaluation mode ends the episode on either.
class Environment {
public:
    explicit Environment(EnvConfig cfg);

    std::vector<double> reset(std::uint64_t seed);
    StepResult step(ActionPair a);

    // One physics tick under a held command; exposed for the decision-repeat
    // equivalence check and closed-loop replay verification.
    void physics_tick(const ControlCommand& cmd);

    std::vector<double> observe();  // draws LiDAR noise from the episode stream

    int observation_dim() const { return 9 + cfg_.lidar.beam_count + 24; }
    bool episode_done() const { return terminated_ || truncated_; }
    long decisions() const { return decisions_; }
    double decision_period() const { return cfg_.dt * cfg_.decision_repeat; }
    const VehicleState& ego() const { return ego_; }
    const std::vector<Hdv>& traffic() const { return hdvs_; }
    const RoadNetwork& network() const { return *net_; }
    const EnvConfig& config() const { return cfg_; }
    std::uint64_t episode_seed() const { return episode_seed_; }
    const Route& route() const { return route_; }
    EpisodeOutcome outcome() const;  // Error(Usage) before episode end
    EpisodeTrace trace() const;

private:
    void assemble_v2x(std::vector<double>& obs);

    EnvConfig cfg_;
    std::shared_ptr<const RoadNetwork> net_;
    VehicleState ego_;
    std::vector<Hdv> hdvs_;
    Route route_;
    RouteTracker tracker_;
    Point2 destination_;
    Rng noise_rng_;
    std::uint64_t episode_seed_ = 0;
    long decisions_ = 0;
    double prev_route_s_ = 0.0;
    bool started_ = false;
    bool terminated_ = false;
    bool truncated_ = false;
    bool arrived_ = false;
    bool collided_ever_ = false;
    bool offroad_terminated_ = false;
    bool window_crashed_ = false;
    bool window_off_road_ = false;
    std::deque<V2XObservation> v2x_history_;
};

// Independently seeded environments, one per (scenario, density)
// configuration. Environments never share mutable state.
class EnvPool {
public:
    EnvPool(std::vector<EnvConfig> configs, std::uint64_t master_seed);

    std::size_t size() const { return envs_.size(); }
    Environment& env(std::size_t i) { return *envs_[i]; }
    const std::vector<double>& current_obs(std::size_t i) const { return obs_[i]; }

    // one decision in environment i with auto-reset on episode end
    Transition step_env(std::size_t i, ActionPair a);

    // rolls the shared policy in every environment for steps_per_env
    // decisions; transitions are interleaved env-major per sweep
    std::vector<Transition> collect(
        const std::function<ActionPair(const std::vector<double>&)>& policy, int steps_per_env);

    // episode returns finished since the last drain, as (config_id, return)
    std::vector<std::pair<int, double>> drain_finished_returns();

    // per-env episode counters, for seed continuity across training resumes
    std::vector<long> episode_counters() const { return episode_counter_; }
    void restore_episode_counters(const std::vector<long>& counters);

private:
    std::vector<std::unique_ptr<Environment>> envs_;
    std::vector<std::vector<double>> obs_;
    std::vector<long> episode_counter_;
    std::vector<double> running_return_;
    std::vector<std::pair<int, double>> finished_;
    std::uint64_t master_seed_ = 0;
};

}  // namespace avsim
