#pragma once

#include "avsim/geometry.hpp"

namespace avsim {

struct VehicleParams {
    double s_max = 0.7;          // rad, maximum steering angle
    double f_max = 5000.0;       // N, maximum engine force
    double b_max = 8000.0;       // N, maximum brake force
    double mass = 1100.0;        // kg
    double wheelbase = 2.5;      // m
    double length = 4.5;         // m, footprint
    double width = 1.8;          // m, footprint
    double drag = 0.8;           // N s^2/m^2, quadratic drag
    double v_max = 80.0 / 3.6;   // m/s, speed clamp
};

struct VehicleState {
    Point2 position;        // footprint center
    double heading = 0.0;   // rad
    double speed = 0.0;     // m/s, never negative
    double steering = 0.0;  // rad, last applied steering
    double length = 4.5;
    double width = 1.8;
};

struct ActionPair {
    double a1 = 0.0;  // lateral, [-1, 1]
    double a2 = 0.0;  // longitudinal, [-1, 1]; negative brakes
};

struct ControlCommand {
    double u_s = 0.0;  // rad
    double u_a = 0.0;  // N, engine
    double u_b = 0.0;  // N, brake
};

inline ActionPair clamp_action(ActionPair a) {
    auto c = [](double v) { return v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v); };
    return {c(a.a1), c(a.a2)};
}

// u_s = S_max a1, u_a = F_max max(0, a2), u_b = -B_max min(0, a2)
ControlCommand map_action(ActionPair a, const VehicleParams& p);

// Kinematic bicycle step. Explicit Euler: the heading rate uses the current
// speed, the position advances along the current heading at the new speed.
// Speed is clamped to [0, v_max]; there is no reverse gear.
VehicleState step_vehicle(const VehicleState& s, const ControlCommand& c, const VehicleParams& p,
                          double dt);

// Separating-axis test on the two oriented footprint rectangles; touching
// rectangles do not count as colliding.
bool check_collision(const VehicleState& a, const VehicleState& b);

// footprint corners in world frame, counterclockwise
void vehicle_corners(const VehicleState& s, Point2 out[4]);

}  // namespace avsim
