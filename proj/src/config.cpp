#include "avsim/config.hpp"

#include <fstream>
#include <sstream>

#include "avsim/errors.hpp"
#include "json.hpp"

namespace avsim {

using nlohmann::json;

namespace {

void require_keys(const json& obj, const std::string& path,
                  std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw Error(ErrorKind::Config,
                        "unknown config key '" + (path.empty() ? key : path + "." + key) + "'");
        }
    }
}

template <typename T>
void get_if(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

EnvConfig RunConfig::env_config(std::size_t scenario_index, EnvMode mode) const {
    const ScenarioEntry& entry = scenarios.at(scenario_index);
    EnvConfig cfg;
    cfg.scenario.kind = entry.kind;
    cfg.scenario.traffic_density = entry.density;
    cfg.scenario.entrance_length = entrance_length;
    cfg.scenario.lanes_per_approach = lanes_per_approach;
    cfg.scenario.speed_limit = speed_limit_kmh / 3.6;
    cfg.scenario.lane_width = lane_width;
    cfg.reward = reward;
    cfg.vehicle = vehicle;
    cfg.vehicle.v_max = speed_limit_kmh / 3.6;
    cfg.idm = idm;
    cfg.lidar = lidar;
    cfg.traffic = traffic;
    cfg.v2x_dropout = v2x_dropout;
    cfg.v2x_latency = v2x_latency;
    cfg.decision_repeat = decision_repeat;
    cfg.dt = dt;
    cfg.max_decisions = max_decisions;
    cfg.checkpoint_interval = checkpoint_interval;
    cfg.capture_radius = capture_radius;
    cfg.arrival_radius = arrival_radius;
    cfg.mode = mode;
    return cfg;
}

std::vector<EnvConfig> RunConfig::pool_configs(EnvMode mode) const {
    std::vector<EnvConfig> out;
    for (std::size_t i = 0; i < scenarios.size(); ++i) out.push_back(env_config(i, mode));
    return out;
}

std::string density_label(double density) {
    if (std::abs(density - 0.1) < 1e-12) return "regular";
    if (std::abs(density - 0.2) < 1e-12) return "dense";
    std::ostringstream os;
    os << "d=" << density;
    return os.str();
}

std::string RunConfig::canonical_json() const {
    json doc;
    doc["seed"] = seed;
    doc["out"] = out;
    json sc = json::array();
    for (const auto& e : scenarios) {
        sc.push_back({{"kind", scenario_kind_name(e.kind)}, {"density", e.density}});
    }
    doc["scenarios"] = sc;
    doc["scenario"] = {{"entrance_length", entrance_length},
                       {"lanes_per_approach", lanes_per_approach},
                       {"speed_limit_kmh", speed_limit_kmh},
                       {"lane_width", lane_width}};
    doc["reward"] = {{"c1", reward.c1},
                     {"c2", reward.c2},
                     {"r_term", reward.r_term},
                     {"p_crash", reward.p_crash},
                     {"p_out", reward.p_out},
                     {"reshaped", reward.reshaped},
                     {"reward_scale", reward.reward_scale},
                     {"potential_disp", reward.potential_disp}};
    doc["vehicle"] = {{"s_max", vehicle.s_max},     {"f_max", vehicle.f_max},
                      {"b_max", vehicle.b_max},     {"mass", vehicle.mass},
                      {"wheelbase", vehicle.wheelbase}, {"length", vehicle.length},
                      {"width", vehicle.width},     {"drag", vehicle.drag}};
    doc["idm"] = {{"v0", idm.v0},         {"t_headway", idm.t_headway}, {"a_max", idm.a_max},
                  {"b_comf", idm.b_comf}, {"s0", idm.s0},               {"delta", idm.delta}};
    doc["traffic"] = {{"trigger_radius", traffic.trigger_radius}, {"idm_jitter", traffic.idm_jitter}};
    doc["lidar"] = {{"beams", lidar.beam_count},
                    {"max_range", lidar.max_range},
                    {"noise_sigma", lidar.noise_sigma}};
    doc["v2x"] = {{"dropout", v2x_dropout}, {"latency", v2x_latency}};
    doc["env"] = {{"decision_repeat", decision_repeat},
                  {"dt", dt},
                  {"max_decisions", max_decisions},
                  {"checkpoint_interval", checkpoint_interval},
                  {"capture_radius", capture_radius},
                  {"arrival_radius", arrival_radius}};
    doc["sac"] = {{"gamma", sac.gamma},
                  {"batch", sac.batch},
                  {"lr", sac.lr},
                  {"training_frequency", sac.training_frequency},
                  {"total_steps", sac.total_steps},
                  {"tau", sac.tau},
                  {"target_entropy", sac.target_entropy},
                  {"alpha_p", sac.alpha_p},
                  {"beta_is_start", sac.beta_is_start},
                  {"beta_is_end", sac.beta_is_end},
                  {"warmup", sac.warmup},
                  {"grad_clip", sac.grad_clip},
                  {"buffer_capacity", sac.buffer_capacity},
                  {"hidden", sac.hidden},
                  {"log_every", sac.log_every},
                  {"checkpoint_every", sac.checkpoint_every}};
    doc["eval"] = {{"episodes", eval_episodes}, {"seed_base", eval_seed_base}};
    return doc.dump();
}

std::uint64_t RunConfig::hash() const {
    const std::string canon = canonical_json();
    std::uint64_t h = 1469598103934665603ull;
    for (char c : canon) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

std::string RunConfig::hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash()));
    return std::string(buf);
}

RunConfig parse_run_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const std::exception& e) {
        throw Error(ErrorKind::Config, std::string("config parse error: ") + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorKind::Config, "config root must be an object");

    require_keys(doc, "", {"seed", "out", "scenarios", "scenario", "reward", "vehicle", "idm",
                           "traffic", "lidar", "v2x", "env", "sac", "eval"});

    RunConfig cfg;
    get_if(doc, "seed", cfg.seed);
    get_if(doc, "out", cfg.out);

    if (doc.contains("scenarios")) {
        cfg.scenarios.clear();
        for (const auto& e : doc.at("scenarios")) {
            require_keys(e, "scenarios[]", {"kind", "density"});
            ScenarioEntry entry;
            entry.kind = scenario_kind_from_name(e.at("kind").get<std::string>());
            get_if(e, "density", entry.density);
            cfg.scenarios.push_back(entry);
        }
        if (cfg.scenarios.empty()) {
            throw Error(ErrorKind::Config, "config key 'scenarios' must not be empty");
        }
    }
    if (doc.contains("scenario")) {
        const json& s = doc.at("scenario");
        require_keys(s, "scenario",
                     {"entrance_length", "lanes_per_approach", "speed_limit_kmh", "lane_width"});
        get_if(s, "entrance_length", cfg.entrance_length);
        get_if(s, "lanes_per_approach", cfg.lanes_per_approach);
        get_if(s, "speed_limit_kmh", cfg.speed_limit_kmh);
        get_if(s, "lane_width", cfg.lane_width);
    }
    if (doc.contains("reward")) {
        const json& r = doc.at("reward");
        require_keys(r, "reward",
                     {"c1", "c2", "r_term", "p_crash", "p_out", "reshaped", "reward_scale",
                      "potential_disp"});
        get_if(r, "c1", cfg.reward.c1);
        get_if(r, "c2", cfg.reward.c2);
        get_if(r, "r_term", cfg.reward.r_term);
        get_if(r, "p_crash", cfg.reward.p_crash);
        get_if(r, "p_out", cfg.reward.p_out);
        get_if(r, "reshaped", cfg.reward.reshaped);
        get_if(r, "reward_scale", cfg.reward.reward_scale);
        get_if(r, "potential_disp", cfg.reward.potential_disp);
        if (cfg.reward.c1 < 0 || cfg.reward.c2 < 0 || cfg.reward.r_term < 0 ||
            cfg.reward.p_crash < 0 || cfg.reward.p_out < 0) {
            throw Error(ErrorKind::Config, "reward constants must be >= 0");
        }
    }
    if (doc.contains("vehicle")) {
        const json& v = doc.at("vehicle");
        require_keys(v, "vehicle",
                     {"s_max", "f_max", "b_max", "mass", "wheelbase", "length", "width", "drag"});
        get_if(v, "s_max", cfg.vehicle.s_max);
        get_if(v, "f_max", cfg.vehicle.f_max);
        get_if(v, "b_max", cfg.vehicle.b_max);
        get_if(v, "mass", cfg.vehicle.mass);
        get_if(v, "wheelbase", cfg.vehicle.wheelbase);
        get_if(v, "length", cfg.vehicle.length);
        get_if(v, "width", cfg.vehicle.width);
        get_if(v, "drag", cfg.vehicle.drag);
    }
    if (doc.contains("idm")) {
        const json& m = doc.at("idm");
        require_keys(m, "idm", {"v0", "t_headway", "a_max", "b_comf", "s0", "delta"});
        get_if(m, "v0", cfg.idm.v0);
        get_if(m, "t_headway", cfg.idm.t_headway);
        get_if(m, "a_max", cfg.idm.a_max);
        get_if(m, "b_comf", cfg.idm.b_comf);
        get_if(m, "s0", cfg.idm.s0);
        get_if(m, "delta", cfg.idm.delta);
    }
    if (doc.contains("traffic")) {
        const json& t = doc.at("traffic");
        require_keys(t, "traffic", {"trigger_radius", "idm_jitter"});
        get_if(t, "trigger_radius", cfg.traffic.trigger_radius);
        get_if(t, "idm_jitter", cfg.traffic.idm_jitter);
    }
    if (doc.contains("lidar")) {
        const json& l = doc.at("lidar");
        require_keys(l, "lidar", {"beams", "max_range", "noise_sigma"});
        get_if(l, "beams", cfg.lidar.beam_count);
        get_if(l, "max_range", cfg.lidar.max_range);
        get_if(l, "noise_sigma", cfg.lidar.noise_sigma);
    }
    if (doc.contains("v2x")) {
        const json& v = doc.at("v2x");
        require_keys(v, "v2x", {"dropout", "latency"});
        get_if(v, "dropout", cfg.v2x_dropout);
        get_if(v, "latency", cfg.v2x_latency);
    }
    if (doc.contains("env")) {
        const json& e = doc.at("env");
        require_keys(e, "env",
                     {"decision_repeat", "dt", "max_decisions", "checkpoint_interval",
                      "capture_radius", "arrival_radius"});
        get_if(e, "decision_repeat", cfg.decision_repeat);
        get_if(e, "dt", cfg.dt);
        get_if(e, "max_decisions", cfg.max_decisions);
        get_if(e, "checkpoint_interval", cfg.checkpoint_interval);
        get_if(e, "capture_radius", cfg.capture_radius);
        get_if(e, "arrival_radius", cfg.arrival_radius);
    }
    if (doc.contains("sac")) {
        const json& s = doc.at("sac");
        require_keys(s, "sac",
                     {"gamma", "batch", "lr", "training_frequency", "total_steps", "tau",
                      "target_entropy", "alpha_p", "beta_is_start", "beta_is_end", "warmup",
                      "grad_clip", "buffer_capacity", "hidden", "log_every", "checkpoint_every"});
        get_if(s, "gamma", cfg.sac.gamma);
        get_if(s, "batch", cfg.sac.batch);
        get_if(s, "lr", cfg.sac.lr);
        get_if(s, "training_frequency", cfg.sac.training_frequency);
        get_if(s, "total_steps", cfg.sac.total_steps);
        get_if(s, "tau", cfg.sac.tau);
        get_if(s, "target_entropy", cfg.sac.target_entropy);
        get_if(s, "alpha_p", cfg.sac.alpha_p);
        get_if(s, "beta_is_start", cfg.sac.beta_is_start);
        get_if(s, "beta_is_end", cfg.sac.beta_is_end);
        get_if(s, "warmup", cfg.sac.warmup);
        get_if(s, "grad_clip", cfg.sac.grad_clip);
        get_if(s, "buffer_capacity", cfg.sac.buffer_capacity);
        get_if(s, "hidden", cfg.sac.hidden);
        get_if(s, "log_every", cfg.sac.log_every);
        get_if(s, "checkpoint_every", cfg.sac.checkpoint_every);
        if (cfg.sac.gamma <= 0.0 || cfg.sac.gamma >= 1.0) {
            throw Error(ErrorKind::Config, "sac.gamma must lie in (0, 1)");
        }
        if (cfg.sac.tau <= 0.0 || cfg.sac.tau > 1.0) {
            throw Error(ErrorKind::Config, "sac.tau must lie in (0, 1]");
        }
    }
    if (doc.contains("eval")) {
        const json& e = doc.at("eval");
        require_keys(e, "eval", {"episodes", "seed_base"});
        get_if(e, "episodes", cfg.eval_episodes);
        get_if(e, "seed_base", cfg.eval_seed_base);
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::Io, "cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_run_config(buf.str());
}

}  // namespace avsim
