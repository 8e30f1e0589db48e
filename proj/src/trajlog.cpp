#include "avsim/trajlog.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "avsim/errors.hpp"
#include "avsim/format.hpp"
#include "json.hpp"

namespace avsim {

using nlohmann::json;

void TrajectoryWriter::write_step(const TrajStep& s) {
    json j;
    j["type"] = "step";
    j["episode_id"] = s.episode_id;
    j["step"] = s.step;
    j["sim_time"] = s.sim_time;
    j["x"] = s.x;
    j["y"] = s.y;
    j["heading"] = s.heading;
    j["speed"] = s.speed;
    j["steering"] = s.steering;
    j["a1"] = s.a1;
    j["a2"] = s.a2;
    j["reward"] = s.reward;
    j["crashed"] = s.crashed;
    j["off_road"] = s.off_road;
    j["checkpoint_index"] = s.checkpoint_index;
    os_ << j.dump() << '\n';
}

void TrajectoryWriter::write_end(const TrajEnd& e) {
    json j;
    j["type"] = "end";
    j["episode_id"] = e.episode_id;
    j["outcome"] = e.outcome;
    j["duration_s"] = e.duration_s;
    j["collided_ever"] = e.collided_ever;
    j["decisions"] = e.decisions;
    j["seed"] = e.seed;
    j["config_id"] = e.config_id;
    os_ << j.dump() << '\n';
}

TrajectoryLogData read_trajectory_log(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::Io, "cannot open trajectory log '" + path + "'");
    TrajectoryLogData out;
    std::map<long, long> last_step;   // per-episode step ordering
    std::map<long, int> end_counts;
    std::string line;
    long line_no = 0;
    long last_episode = -1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const std::exception& e) {
            throw Error(ErrorKind::Io, "trajectory log line " + std::to_string(line_no) +
                                           " is not valid JSON: " + e.what());
        }
        const std::string type = j.at("type").get<std::string>();
        const long ep = j.at("episode_id").get<long>();
        if (ep < last_episode) {
            throw Error(ErrorKind::Io, "trajectory log: episode ids out of order at line " +
                                           std::to_string(line_no));
        }
        last_episode = ep;
        if (type == "step") {
            if (end_counts.count(ep)) {
                throw Error(ErrorKind::Io, "trajectory log: step after end record in episode " +
                                               std::to_string(ep));
            }
            TrajStep s;
            s.episode_id = ep;
            s.step = j.at("step").get<long>();
            if (last_step.count(ep) && s.step <= last_step[ep]) {
                throw Error(ErrorKind::Io, "trajectory log: steps out of order in episode " +
                                               std::to_string(ep));
            }
            last_step[ep] = s.step;
            s.sim_time = j.at("sim_time").get<double>();
            s.x = j.at("x").get<double>();
            s.y = j.at("y").get<double>();
            s.heading = j.at("heading").get<double>();
            s.speed = j.at("speed").get<double>();
            s.steering = j.at("steering").get<double>();
            s.a1 = j.at("a1").get<double>();
            s.a2 = j.at("a2").get<double>();
            s.reward = j.at("reward").get<double>();
            s.crashed = j.at("crashed").get<bool>();
            s.off_road = j.at("off_road").get<bool>();
            s.checkpoint_index = j.at("checkpoint_index").get<long>();
            out.steps.push_back(s);
        } else if (type == "end") {
            TrajEnd e;
            e.episode_id = ep;
            e.outcome = j.at("outcome").get<std::string>();
            e.duration_s = j.at("duration_s").get<double>();
            e.collided_ever = j.at("collided_ever").get<bool>();
            e.decisions = j.at("decisions").get<long>();
            e.seed = j.at("seed").get<std::uint64_t>();
            e.config_id = j.at("config_id").get<int>();
            end_counts[ep] += 1;
            if (end_counts[ep] > 1) {
                throw Error(ErrorKind::Io, "trajectory log: duplicate end record for episode " +
                                               std::to_string(ep));
            }
            out.ends.push_back(e);
        } else {
            throw Error(ErrorKind::Io, "trajectory log: unknown record type '" + type + "'");
        }
    }
    for (const auto& [ep, _] : last_step) {
        if (!end_counts.count(ep)) {
            throw Error(ErrorKind::Io,
                        "trajectory log: episode " + std::to_string(ep) + " has no end record");
        }
    }
    return out;
}

std::string replay_episode_csv(const TrajectoryLogData& log, long episode_id) {
    bool known = false;
    for (const TrajEnd& e : log.ends) {
        if (e.episode_id == episode_id) known = true;
    }
    if (!known) {
        throw Error(ErrorKind::NotFound,
                    "episode " + std::to_string(episode_id) + " not found in trajectory log");
    }
    std::ostringstream os;
    os << "time,x,y,speed,a1,a2,reward\n";
    for (const TrajStep& s : log.steps) {
        if (s.episode_id != episode_id) continue;
        os << format_double(s.sim_time) << ',' << format_double(s.x) << ',' << format_double(s.y)
           << ',' << format_double(s.speed) << ',' << format_double(s.a1) << ','
           << format_double(s.a2) << ',' << format_double(s.reward) << '\n';
    }
    return os.str();
}

}  // namespace avsim
