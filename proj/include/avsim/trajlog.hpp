#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace avsim {

struct TrajStep {
    long episode_id = 0;
    long step = 0;  // decision index within the episode, starting at 1
    double sim_time = 0.0;
    double x = 0.0, y = 0.0;
    double heading = 0.0, speed = 0.0, steering = 0.0;
    double a1 = 0.0, a2 = 0.0;
    double reward = 0.0;
    bool crashed = false;
    bool off_road = false;
    long checkpoint_index = 0;
};

struct TrajEnd {
    long episode_id = 0;
    std::string outcome;
    double duration_s = 0.0;
    bool collided_ever = false;
    long decisions = 0;
    std::uint64_t seed = 0;
    int config_id = 0;
};

// JSON-lines writer; one record per decision plus one end record per episode
class TrajectoryWriter {
public:
    explicit TrajectoryWriter(std::ostream& os) : os_(os) {}
    void write_step(const TrajStep& s);
    void write_end(const TrajEnd& e);

private:
    std::ostream& os_;
};

struct TrajectoryLogData {
    std::vector<TrajStep> steps;
    std::vector<TrajEnd> ends;
};

// Parses and checks the structural invariants: strict (episode, step)
// ordering and exactly one end record per episode. Throws Error(Io).
TrajectoryLogData read_trajectory_log(const std::string& path);

// plot-ready per-step table (time, x, y, speed, a1, a2, reward); throws
// Error(NotFound) when the episode is absent
std::string replay_episode_csv(const TrajectoryLogData& log, long episode_id);

}  // namespace avsim
