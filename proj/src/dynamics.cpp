#include "avsim/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace avsim {

ControlCommand map_action(ActionPair a, const VehicleParams& p) {
    a = clamp_action(a);
    ControlCommand c;
    c.u_s = p.s_max * a.a1;
    c.u_a = p.f_max * std::max(0.0, a.a2);
    c.u_b = -p.b_max * std::min(0.0, a.a2);
    return c;
}

VehicleState step_vehicle(const VehicleState& s, const ControlCommand& c, const VehicleParams& p,
                          double dt) {
    VehicleState out = s;
    const double sign_v = s.speed > 0.0 ? 1.0 : 0.0;
    const double accel = (c.u_a - c.u_b * sign_v - p.drag * s.speed * s.speed) / p.mass;
    out.speed = std::clamp(s.speed + accel * dt, 0.0, p.v_max);
    out.position = s.position + heading_dir(s.heading) * (out.speed * dt);
    out.heading = wrap_angle(s.heading + s.speed / p.wheelbase * std::tan(c.u_s) * dt);
    out.steering = c.u_s;
    return out;
}

void vehicle_corners(const VehicleState& s, Point2 out[4]) {
    const Point2 fwd = heading_dir(s.heading) * (s.length / 2.0);
    const Point2 left = perp_left(heading_dir(s.heading)) * (s.width / 2.0);
    out[0] = s.position + fwd + left;
    out[1] = s.position - fwd + left;
    out[2] = s.position - fwd - left;
    out[3] = s.position + fwd - left;
}

namespace {

// strict interval overlap of both rectangles projected on `axis`
bool overlap_on_axis(const Point2* a, const Point2* b, Point2 axis) {
    double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
    for (int i = 0; i < 4; ++i) {
        const double pa = dot(a[i], axis);
        const double pb = dot(b[i], axis);
        amin = std::min(amin, pa);
        amax = std::max(amax, pa);
        bmin = std::min(bmin, pb);
        bmax = std::max(bmax, pb);
    }
    return std::min(amax, bmax) - std::max(amin, bmin) > 0.0;
}

}  // namespace

bool check_collision(const VehicleState& a, const VehicleState& b) {
    // cheap reject on bounding circles
    const double ra = std::hypot(a.length, a.width) / 2.0;
    const double rb = std::hypot(b.length, b.width) / 2.0;
    if (distance(a.position, b.position) > ra + rb) return false;

    Point2 ca[4], cb[4];
    vehicle_corners(a, ca);
    vehicle_corners(b, cb);
    const Point2 axes[4] = {heading_dir(a.heading), perp_left(heading_dir(a.heading)),
                            heading_dir(b.heading), perp_left(heading_dir(b.heading))};
    for (const Point2& axis : axes) {
        if (!overlap_on_axis(ca, cb, axis)) return false;
    }
    return true;
}

}  // namespace avsim
