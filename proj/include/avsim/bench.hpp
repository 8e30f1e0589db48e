#pragma once

#include <cstdint>

#include "avsim/sensing.hpp"

namespace avsim {

struct RaycastBench {
    long scans = 0;
    double scans_per_second = 0.0;
    double mean_ms = 0.0;
    double p99_ms = 0.0;
    std::uint64_t checksum = 0;  // hash of noise-free readings; run-invariant
};

// Times raycasts over a fixed synthetic scene battery (empty plan, walled
// room with a vehicle ring, roundabout boundary with traffic).
RaycastBench run_raycast_bench(const LidarConfig& cfg, int scans_per_scene = 100);

}  // namespace avsim
