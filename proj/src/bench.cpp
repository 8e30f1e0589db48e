#include "avsim/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>

#include "avsim/map.hpp"

namespace avsim {

RaycastBench run_raycast_bench(const LidarConfig& cfg, int scans_per_scene) {
    LidarConfig quiet = cfg;
    quiet.noise_sigma = 0.0;  // keep the battery run-invariant

    VehicleState ego;
    Rng rng(7);

    // scene battery
    std::vector<SensorScene> scenes;
    std::vector<std::vector<Seg>> boundary_store(3);

    scenes.push_back({});  // empty plan
    scenes.back().boundaries = &boundary_store[0];

    SensorScene room;
    boundary_store[1] = {{{-20, -20}, {20, -20}},
                         {{20, -20}, {20, 20}},
                         {{20, 20}, {-20, 20}},
                         {{-20, 20}, {-20, -20}}};
    room.boundaries = &boundary_store[1];
    for (int k = 0; k < 8; ++k) {
        VehicleState v;
        const double a = kTwoPi * k / 8.0;
        v.position = {12.0 * std::cos(a), 12.0 * std::sin(a)};
        v.heading = a + kPi / 2.0;
        room.vehicles.push_back(v);
    }
    scenes.push_back(room);

    ScenarioSpec spec;
    spec.kind = ScenarioKind::Roundabout;
    auto net = build_scenario_cached(spec);
    SensorScene round;
    round.boundaries = &net->boundary_segments();
    for (int k = 0; k < 12; ++k) {
        VehicleState v;
        const double a = kTwoPi * k / 12.0;
        v.position = {20.0 * std::cos(a), 20.0 * std::sin(a)};
        v.heading = a + kPi / 2.0;
        round.vehicles.push_back(v);
    }
    scenes.push_back(round);

    RaycastBench out;
    std::vector<double> times_ms;
    std::uint64_t checksum = 1469598103934665603ull;
    for (const SensorScene& scene : scenes) {
        for (int k = 0; k < scans_per_scene; ++k) {
            const auto t0 = std::chrono::steady_clock::now();
            const LidarScan scan = raycast(scene, ego, quiet, rng);
            const auto t1 = std::chrono::steady_clock::now();
            times_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
            for (double r : scan.ranges) {
                std::uint64_t bits;
                std::memcpy(&bits, &r, sizeof(bits));
                checksum ^= bits;
                checksum *= 1099511628211ull;
            }
        }
    }
    out.scans = static_cast<long>(times_ms.size());
    double total = 0.0;
    for (double t : times_ms) total += t;
    out.mean_ms = total / static_cast<double>(times_ms.size());
    out.scans_per_second = 1000.0 / out.mean_ms;
    std::sort(times_ms.begin(), times_ms.end());
    const std::size_t p99 = std::min(times_ms.size() - 1,
                                     static_cast<std::size_t>(times_ms.size() * 99 / 100));
    out.p99_ms = times_ms[p99];
    out.checksum = checksum;
    return out;
}

}  // namespace avsim
