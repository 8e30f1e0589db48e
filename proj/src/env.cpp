#include "avsim/env.hpp"

#include <algorithm>
#include <cmath>

#include "avsim/errors.hpp"

namespace avsim {

double compute_reward(const RewardInputs& in, const RewardConfig& cfg) {
    const double r_speed = in.speed / in.v_max;
    double disp_term;
    if (cfg.potential_disp) {
        disp_term = -cfg.c2 * in.remaining_frac;
    } else {
        disp_term = (cfg.reshaped ? -1.0 : 1.0) * cfg.c2 * in.disp;
    }
    const double base = cfg.r_term * (in.arrived ? 1.0 : 0.0) + cfg.c1 * r_speed -
                        (cfg.p_crash * (in.crashed ? 1.0 : 0.0) +
                         cfg.p_out * (in.off_road ? 1.0 : 0.0));
    return cfg.reward_scale * (base + disp_term);
}

const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Success: return "success";
        case Outcome::Crash: return "crash";
        case Outcome::OffRoad: return "offroad";
        case Outcome::Timeout: return "timeout";
    }
    return "unknown";
}

EpisodeOutcome classify_outcome(const EpisodeTrace& trace) {
    EpisodeOutcome out;
    out.collided_ever = trace.collided_ever;
    out.duration_s = trace.decisions * trace.decision_period;
    if (trace.reached && !trace.collided_ever) {
        out.classification = Outcome::Success;
    } else if (trace.collided_ever) {
        out.classification = Outcome::Crash;
    } else if (trace.offroad_terminated) {
        out.classification = Outcome::OffRoad;
    } else {
        out.classification = Outcome::Timeout;
    }
    return out;
}

Environment::Environment(EnvConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.lidar.validate();
    cfg_.scenario.validate();
    net_ = build_scenario_cached(cfg_.scenario);
}

std::vector<double> Environment::reset(std::uint64_t seed) {
    episode_seed_ = seed;
    Rng spawn_rng(derive_seed(seed, "spawn"));
    noise_rng_ = Rng(derive_seed(seed, "noise"));

    const LaneOffset spawn = net_->spawn_points[spawn_rng.uniform_index(net_->spawn_points.size())];
    auto dests = reachable_destinations(*net_, spawn.lane, spawn.s);
    if (dests.empty()) throw Error(ErrorKind::Reset, "reset: no reachable destination from spawn");
    if (cfg_.scenario.kind == ScenarioKind::Roundabout) {
        // skip U-turns back into the spawn arm when alternatives exist
        std::vector<LaneOffset> filtered;
        for (const LaneOffset& d : dests) {
            if (net_->lanes[d.lane].arm != net_->lanes[spawn.lane].arm) filtered.push_back(d);
        }
        if (!filtered.empty()) dests = std::move(filtered);
    }
    const LaneOffset dest = dests[spawn_rng.uniform_index(dests.size())];
    route_ = plan_route(*net_, spawn, dest, cfg_.checkpoint_interval);
    tracker_ = RouteTracker(&route_, cfg_.capture_radius);
    destination_ = route_.checkpoints.back();

    ego_ = VehicleState{};
    ego_.position = net_->lanes[spawn.lane].point_at(spawn.s);
    ego_.heading = net_->lanes[spawn.lane].heading_at(spawn.s);
    ego_.length = cfg_.vehicle.length;
    ego_.width = cfg_.vehicle.width;

    bool traffic_ok = false;
    for (int attempt = 0; attempt < 20 && !traffic_ok; ++attempt) {
        hdvs_ = spawn_traffic(*net_, cfg_.scenario.traffic_density,
                              derive_seed(seed, "traffic", static_cast<std::uint64_t>(attempt)),
                              cfg_.idm, cfg_.vehicle, cfg_.traffic);
        traffic_ok = true;
        VehicleState clearance = ego_;
        clearance.length += 4.0;
        clearance.width += 2.0;
        for (const Hdv& h : hdvs_) {
            if (distance(h.state.position, ego_.position) < 8.0 ||
                check_collision(clearance, h.state)) {
                traffic_ok = false;
                break;
            }
        }
    }
    if (!traffic_ok) {
        throw Error(ErrorKind::Reset, "reset: traffic placement conflicts with the ego spawn");
    }

    decisions_ = 0;
    terminated_ = truncated_ = arrived_ = false;
    collided_ever_ = offroad_terminated_ = false;
    window_crashed_ = window_off_road_ = false;
    v2x_history_.clear();
    started_ = true;
    prev_route_s_ = tracker_.progress(ego_.position);
    return observe();
}

void Environment::physics_tick(const ControlCommand& cmd) {
    if (!started_) throw Error(ErrorKind::Usage, "physics_tick before reset");
    ego_ = step_vehicle(ego_, cmd, cfg_.vehicle, cfg_.dt);
    step_traffic(hdvs_, ego_, *net_, cfg_.vehicle, cfg_.traffic, cfg_.dt);
    for (const Hdv& h : hdvs_) {
        if (check_collision(ego_, h.state)) {
            window_crashed_ = true;
            collided_ever_ = true;
        }
    }
    if (!net_->contains(ego_.position)) window_off_road_ = true;
    tracker_.navigation_features(ego_.position, ego_.heading);  // consume checkpoints
    if (distance(ego_.position, destination_) < cfg_.arrival_radius) arrived_ = true;
}

StepResult Environment::step(ActionPair a) {
    if (!started_) throw Error(ErrorKind::Usage, "step before reset");
    if (episode_done()) throw Error(ErrorKind::Usage, "step after episode end");

    window_crashed_ = window_off_road_ = false;
    const ControlCommand cmd = map_action(a, cfg_.vehicle);
    for (int t = 0; t < cfg_.decision_repeat; ++t) {
        physics_tick(cmd);
        if (arrived_) break;
        if (cfg_.mode == EnvMode::Eval && (window_crashed_ || window_off_road_)) break;
    }
    ++decisions_;

    const double route_s = tracker_.progress(ego_.position);
    RewardInputs rin;
    rin.speed = ego_.speed;
    rin.v_max = cfg_.vehicle.v_max;
    rin.disp = route_s - prev_route_s_;
    rin.crashed = window_crashed_;
    rin.off_road = window_off_road_;
    rin.arrived = arrived_;
    rin.remaining_frac = route_.length > 0.0 ? (route_.length - route_s) / route_.length : 0.0;
    prev_route_s_ = route_s;

    if (arrived_) {
        terminated_ = true;
    } else if (cfg_.mode == EnvMode::Eval && (window_crashed_ || window_off_road_)) {
        terminated_ = true;
        offroad_terminated_ = window_off_road_ && !window_crashed_;
    }
    truncated_ = !terminated_ && decisions_ >= cfg_.max_decisions;

    StepResult out;
    out.reward = compute_reward(rin, cfg_.reward);
    out.terminated = terminated_;
    out.truncated = truncated_;
    out.info.crashed = window_crashed_;
    out.info.off_road = window_off_road_;
    out.info.checkpoint_index = tracker_.next_checkpoint();
    out.info.sim_time = decisions_ * decision_period();
    out.observation = observe();
    return out;
}

std::vector<double> Environment::observe() {
    std::vector<double> obs;
    obs.reserve(observation_dim());

    const VehicleParams& vp = cfg_.vehicle;
    obs.push_back(ego_.speed / vp.v_max);
    obs.push_back(ego_.steering / vp.s_max);
    obs.push_back(std::cos(ego_.heading));
    obs.push_back(std::sin(ego_.heading));
    const BoundaryDistance bd = distance_to_boundary(*net_, ego_.position, ego_.heading);
    obs.push_back(bd.left / 10.0);
    obs.push_back(bd.right / 10.0);

    const NavFeatures nav = tracker_.navigation_features(ego_.position, ego_.heading);
    obs.push_back(nav.distance / 50.0);
    obs.push_back(std::sin(nav.direction));
    obs.push_back(std::cos(nav.direction));

    SensorScene scene;
    scene.boundaries = &net_->boundary_segments();
    scene.vehicles.reserve(hdvs_.size());
    for (const Hdv& h : hdvs_) scene.vehicles.push_back(h.state);

    const LidarScan scan = raycast(scene, ego_, cfg_.lidar, noise_rng_);
    obs.insert(obs.end(), scan.ranges.begin(), scan.ranges.end());

    assemble_v2x(obs);

    for (double& v : obs) v = std::clamp(v, -1.0, 1.0);
    return obs;
}

void Environment::assemble_v2x(std::vector<double>& obs) {
    SensorScene scene;
    scene.vehicles.reserve(hdvs_.size());
    for (const Hdv& h : hdvs_) scene.vehicles.push_back(h.state);

    V2XObservation cur = v2x_query(scene, ego_);
    if (cfg_.v2x_dropout > 0.0) {
        for (V2XReport& r : cur.reports) {
            if (r.present && noise_rng_.uniform() < cfg_.v2x_dropout) r = V2XReport{};
        }
    }
    v2x_history_.push_back(cur);
    while (static_cast<int>(v2x_history_.size()) > cfg_.v2x_latency + 1) v2x_history_.pop_front();
    const V2XObservation& used = v2x_history_.front();

    for (const V2XReport& r : used.reports) {
        if (!r.present) {
            obs.insert(obs.end(), 6, 0.0);  // absent slots are fully zeroed
            continue;
        }
        obs.push_back(r.dx / 50.0);
        obs.push_back(r.dy / 50.0);
        obs.push_back(r.speed / cfg_.vehicle.v_max);
        obs.push_back(std::sin(r.relative_heading));
        obs.push_back(std::cos(r.relative_heading));
        obs.push_back(1.0);
    }
}

EpisodeOutcome Environment::outcome() const {
    if (!episode_done()) throw Error(ErrorKind::Usage, "outcome requested before episode end");
    return classify_outcome(trace());
}

EpisodeTrace Environment::trace() const {
    EpisodeTrace t;
    t.reached = arrived_;
    t.collided_ever = collided_ever_;
    t.offroad_terminated = offroad_terminated_;
    t.decisions = decisions_;
    t.decision_period = decision_period();
    return t;
}

// ---------------------------------------------------------------------------
// EnvPool

EnvPool::EnvPool(std::vector<EnvConfig> configs, std::uint64_t master_seed)
    : master_seed_(master_seed) {
    if (configs.empty()) throw Error(ErrorKind::Config, "EnvPool needs at least one configuration");
    for (std::size_t i = 0; i < configs.size(); ++i) {
        envs_.push_back(std::make_unique<Environment>(configs[i]));
        episode_counter_.push_back(0);
        running_return_.push_back(0.0);
        obs_.push_back(envs_[i]->reset(derive_seed(master_seed_, "episode", i << 24)));
    }
}

Transition EnvPool::step_env(std::size_t i, ActionPair a) {
    Environment& env = *envs_[i];
    Transition t;
    t.s = obs_[i];
    t.a = {a.a1, a.a2};
    t.config_id = static_cast<int>(i);
    const StepResult res = env.step(a);
    t.r = res.reward;
    t.s2 = res.observation;
    t.done = res.terminated;
    running_return_[i] += res.reward;
    if (res.terminated || res.truncated) {
        finished_.push_back({static_cast<int>(i), running_return_[i]});
        running_return_[i] = 0.0;
        ++episode_counter_[i];
        obs_[i] = env.reset(
            derive_seed(master_seed_, "episode",
                        (i << 24) + static_cast<std::uint64_t>(episode_counter_[i])));
    } else {
        obs_[i] = res.observation;
    }
    return t;
}

std::vector<Transition> EnvPool::collect(
    const std::function<ActionPair(const std::vector<double>&)>& policy, int steps_per_env) {
    std::vector<Transition> out;
    out.reserve(envs_.size() * static_cast<std::size_t>(steps_per_env));
    for (int step = 0; step < steps_per_env; ++step) {
        for (std::size_t i = 0; i < envs_.size(); ++i) {
            out.push_back(step_env(i, policy(obs_[i])));
        }
    }
    return out;
}

std::vector<std::pair<int, double>> EnvPool::drain_finished_returns() {
    auto out = std::move(finished_);
    finished_.clear();
    return out;
}

void EnvPool::restore_episode_counters(const std::vector<long>& counters) {
    if (counters.size() != envs_.size()) {
        throw Error(ErrorKind::Usage, "restore_episode_counters: pool size mismatch");
    }
    for (std::size_t i = 0; i < envs_.size(); ++i) {
        episode_counter_[i] = counters[i];
        running_return_[i] = 0.0;
        obs_[i] = envs_[i]->reset(
            derive_seed(master_seed_, "episode",
                        (i << 24) + static_cast<std::uint64_t>(episode_counter_[i])));
    }
}

}  // namespace avsim
