#pragma once

#include <array>
#include <vector>

#include "avsim/dynamics.hpp"
#include "avsim/geometry.hpp"
#include "avsim/rng.hpp"

namespace avsim {

struct LidarConfig {
    int beam_count = 240;
    double fov_deg = 360.0;
    double max_range = 50.0;      // m
    double noise_sigma = 0.01;    // std of Gaussian noise on the normalized reading

    double angular_resolution() const { return fov_deg / beam_count * kPi / 180.0; }
    void validate() const;  // throws Error(Config)
};

struct LidarScan {
    std::vector<double> ranges;  // beam_count entries, each in [0, 1]
};

struct V2XReport {
    double dx = 0.0;  // ego frame, m
    double dy = 0.0;
    double speed = 0.0;             // m/s, absolute
    double relative_heading = 0.0;  // rad, wrapped
    bool present = false;
};

struct V2XObservation {
    std::array<V2XReport, 4> reports;  // ascending center distance; trailing slots padded
};

// Obstacles seen by the raycaster: vehicle rectangles and boundary segments.
struct SensorScene {
    std::vector<VehicleState> vehicles;   // ego excluded by the caller
    const std::vector<Seg>* boundaries = nullptr;
};

// Beam 0 points along the ego heading; indices increase counterclockwise.
// Readings are min(hit distance, max_range)/max_range plus per-beam Gaussian
// noise from `rng` (skipped when noise_sigma == 0), clamped to [0, 1].
LidarScan raycast(const SensorScene& scene, const VehicleState& ego, const LidarConfig& cfg,
                  Rng& rng);

// The k nearest vehicles by center distance, occlusion ignored. Reports are
// anonymous: ego-frame relative position, absolute speed, relative heading.
// Ties break toward the lower scene index. k is fixed at 4 slots.
V2XObservation v2x_query(const SensorScene& scene, const VehicleState& ego);

}  // namespace avsim
