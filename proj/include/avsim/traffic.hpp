#pragma once

#include <cstdint>
#include <vector>

#include "avsim/dynamics.hpp"
#include "avsim/map.hpp"
#include "avsim/rng.hpp"

namespace avsim {

struct IdmParams {
    double v0 = 11.0;        // m/s desired speed
    double t_headway = 1.5;  // s
    double a_max = 1.5;      // m/s^2
    double b_comf = 2.0;     // m/s^2 comfortable deceleration
    double s0 = 2.0;         // m jam distance
    double delta = 4.0;      // acceleration exponent
};

// IDM acceleration, clamped to [-2 b_comf, a_max]. Free road is encoded as
// an infinite gap; gap <= 0 returns the emergency value -2 b_comf.
double idm_acceleration(double v, double gap, double v_lead, const IdmParams& p);

struct Hdv {
    VehicleState state;
    Route route;
    IdmParams idm;
    bool active = false;
    bool finished = false;   // parked at route end
    std::size_t route_cursor = 0;  // index into route.lanes
    double route_s = 0.0;          // longitudinal progress along the route
};

struct TrafficConfig {
    double trigger_radius = 60.0;  // m around each HDV
    bool idm_jitter = false;       // +-10% per-vehicle parameter jitter
};

// Density-based placement over all lanes, deterministic in `seed`. Vehicle
// count is density * total lane arclength / 10 m, rounded. Each HDV gets a
// route continuing to a reachable destination. Throws Error(Placement) when
// spacing cannot be satisfied after bounded retries.
std::vector<Hdv> spawn_traffic(const RoadNetwork& net, double density, std::uint64_t seed,
                               const IdmParams& base, const VehicleParams& vp,
                               const TrafficConfig& cfg);

// One physics tick: trigger activation, leader search (same route, junction
// conflicts, plus the ego), IDM longitudinal and pure-pursuit lateral
// control. Accelerations are computed from the pre-tick snapshot so the
// update order is irrelevant.
void step_traffic(std::vector<Hdv>& hdvs, const VehicleState& ego, const RoadNetwork& net,
                  const VehicleParams& vp, const TrafficConfig& cfg, double dt);

}  // namespace avsim
