#include "avsim/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "avsim/errors.hpp"

namespace avsim {

namespace {

constexpr double kLookahead = 5.0;        // m, pure-pursuit target distance
constexpr double kLeaderHorizon = 60.0;   // m, leader search along the route
constexpr double kConflictHorizon = 20.0; // m, junction conflict lookahead
constexpr double kConflictBuffer = 2.0;   // m, stop margin before a crossing point
constexpr double kMergeBuffer = 6.0;      // m, stop margin before a tangential merge
constexpr double kCapsuleAhead = 12.0;    // m, bumper-level frontal window
constexpr double kCapsuleHalfWidth = 2.2; // m
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double idm_acceleration(double v, double gap, double v_lead, const IdmParams& p) {
    const double b_hard = 2.0 * p.b_comf;
    if (gap <= 0.0) return -b_hard;
    const double dv = v - v_lead;
    const double dynamic = v * p.t_headway + v * dv / (2.0 * std::sqrt(p.a_max * p.b_comf));
    const double s_star = p.s0 + std::max(0.0, dynamic);
    const double ratio = s_star / gap;  // 0 for the infinite-gap sentinel
    const double a = p.a_max * (1.0 - std::pow(v / p.v0, p.delta) - ratio * ratio);
    return std::clamp(a, -b_hard, p.a_max);
}

namespace {

VehicleState state_on_lane(const RoadNetwork& net, int lane, double s, const VehicleParams& vp) {
    VehicleState st;
    st.position = net.lanes[lane].point_at(s);
    st.heading = net.lanes[lane].heading_at(s);
    st.speed = 0.0;
    st.length = vp.length;
    st.width = vp.width;
    return st;
}

struct Occupant {
    int vehicle = -1;  // index into hdvs, or -1 for the ego
    double s = 0.0;
    double speed = 0.0;
    double length = 4.5;
};

}  // namespace

std::vector<Hdv> spawn_traffic(const RoadNetwork& net, double density, std::uint64_t seed,
                               const IdmParams& base, const VehicleParams& vp,
                               const TrafficConfig& cfg) {
    std::vector<Hdv> hdvs;
    if (density <= 0.0) return hdvs;
    const double total = net.total_lane_length();
    const long count = std::lround(density * total / 10.0);
    if (count <= 0) return hdvs;

    Rng rng(derive_seed(seed, "traffic"));
    const double margin = vp.length / 2.0 + 0.5;
    const double min_center_gap = 2.0 * base.s0 + vp.length;

    // cumulative lane lengths for arclength-uniform lane choice
    std::vector<double> cum(net.lanes.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < net.lanes.size(); ++i) {
        acc += net.lanes[i].length;
        cum[i] = acc;
    }

    long attempts_left = 60 * count;
    while (static_cast<long>(hdvs.size()) < count) {
        if (--attempts_left < 0) {
            throw Error(ErrorKind::Placement,
                        "spawn_traffic: could not place traffic at the requested density");
        }
        const double pick = rng.uniform(0.0, total);
        const std::size_t lane =
            std::lower_bound(cum.begin(), cum.end(), pick) - cum.begin();
        const Lane& l = net.lanes[lane];
        if (l.length < 2.0 * margin + 1.0) continue;
        const double s = rng.uniform(margin, l.length - margin);

        bool ok = true;
        VehicleState cand = state_on_lane(net, static_cast<int>(lane), s, vp);
        for (const Hdv& other : hdvs) {
            if (other.route.lanes.front() == static_cast<int>(lane) &&
                std::abs(other.route.entry_offset - s) < min_center_gap) {
                ok = false;
                break;
            }
            VehicleState inflated = other.state;
            inflated.length += 1.0;
            inflated.width += 0.5;
            if (check_collision(cand, inflated)) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;

        const auto dests = reachable_destinations(net, static_cast<int>(lane), s);
        if (dests.empty()) continue;
        const LaneOffset dest = dests[rng.uniform_index(dests.size())];

        Hdv h;
        h.state = cand;
        try {
            h.route = plan_route(net, {static_cast<int>(lane), s}, dest, 10.0);
        } catch (const Error&) {
            continue;
        }
        h.idm = base;
        if (cfg.idm_jitter) {
            h.idm.v0 *= rng.uniform(0.9, 1.1);
            h.idm.t_headway *= rng.uniform(0.9, 1.1);
            h.idm.a_max *= rng.uniform(0.9, 1.1);
            h.idm.b_comf *= rng.uniform(0.9, 1.1);
            h.idm.s0 *= rng.uniform(0.9, 1.1);
        }
        hdvs.push_back(std::move(h));
    }
    return hdvs;
}

void step_traffic(std::vector<Hdv>& hdvs, const VehicleState& ego, const RoadNetwork& net,
                  const VehicleParams& vp, const TrafficConfig& cfg, double dt) {
    // trigger activation; once active, never deactivates
    for (Hdv& h : hdvs) {
        if (!h.active && distance(h.state.position, ego.position) < cfg.trigger_radius) {
            h.active = true;
        }
    }

    // refresh route progress from the pre-tick positions
    for (Hdv& h : hdvs) {
        if (!h.active || h.finished) continue;
        const auto& lanes = h.route.lanes;
        const std::size_t lo = h.route_cursor > 0 ? h.route_cursor - 1 : 0;
        const std::size_t hi = std::min(h.route_cursor + 1, lanes.size() - 1);
        double best = kInf;
        for (std::size_t i = lo; i <= hi; ++i) {
            const LaneProjection pr = net.lanes[lanes[i]].project(h.state.position);
            if (pr.dist < best) {
                best = pr.dist;
                h.route_cursor = i;
                const double entry = i == 0 ? h.route.entry_offset : 0.0;
                h.route_s = std::clamp(h.route.lane_start_s[i] + pr.s - entry, 0.0, h.route.length);
            }
        }
    }

    // per-lane occupancy from the snapshot; ego is added to every lane it
    // rides on so HDVs treat it as a same-lane leader
    std::vector<std::vector<Occupant>> occupancy(net.lanes.size());
    for (std::size_t i = 0; i < hdvs.size(); ++i) {
        const Hdv& h = hdvs[i];
        const int lane = h.route.lanes[h.route_cursor];
        const double entry = h.route_cursor == 0 ? h.route.entry_offset : 0.0;
        const double lane_s = h.route_s - h.route.lane_start_s[h.route_cursor] + entry;
        occupancy[lane].push_back({static_cast<int>(i), lane_s, h.state.speed, h.state.length});
    }
    for (std::size_t l = 0; l < net.lanes.size(); ++l) {
        const LaneProjection pr = net.lanes[l].project(ego.position);
        if (std::abs(pr.d) <= net.lanes[l].width * 0.6 && pr.dist < net.lanes[l].width * 1.5) {
            occupancy[l].push_back({-1, pr.s, ego.speed, ego.length});
        }
    }

    struct Command {
        double accel = 0.0;
        double steer = 0.0;
    };
    std::vector<Command> cmds(hdvs.size());

    for (std::size_t i = 0; i < hdvs.size(); ++i) {
        Hdv& h = hdvs[i];
        if (!h.active || h.finished) continue;

        const double remaining = h.route.length - h.route_s;
        if (remaining < h.state.length / 2.0 + 0.5) {
            h.finished = true;
            h.state.speed = 0.0;
            continue;
        }

        double gap = kInf;
        double v_lead = 0.0;

        // leader on the route ahead, ego included
        double walked = 0.0;
        for (std::size_t k = h.route_cursor; k < h.route.lanes.size() && walked < kLeaderHorizon;
             ++k) {
            const int lane = h.route.lanes[k];
            const double entry = k == 0 ? h.route.entry_offset : 0.0;
            for (const Occupant& occ : occupancy[lane]) {
                if (occ.vehicle == static_cast<int>(i)) continue;
                const double occ_route_s = h.route.lane_start_s[k] + occ.s - entry;
                const double ahead = occ_route_s - h.route_s;
                if (ahead <= 0.1) continue;
                const double g = ahead - (occ.length + h.state.length) / 2.0;
                if (g < gap) {
                    gap = g;
                    v_lead = occ.speed;
                }
            }
            walked = h.route.lane_start_s[k] + net.lanes[lane].length - entry - h.route_s;
        }

        // yield at junction conflicts: the vehicle closer to the crossing
        // point proceeds, ties break by index
        walked = 0.0;
        for (std::size_t k = h.route_cursor; k < h.route.lanes.size() && walked < kConflictHorizon;
             ++k) {
            const int lane = h.route.lanes[k];
            const double entry = k == 0 ? h.route.entry_offset : 0.0;
            for (const RoadNetwork::Conflict& c : net.conflicts[lane]) {
                const double conflict_route_s = h.route.lane_start_s[k] + c.s_self - entry;
                const double d_self = conflict_route_s - h.route_s;
                if (d_self <= 0.0 || d_self > kConflictHorizon) continue;

                // occupants on the conflicting lane and on its feeders:
                // (lane, D) where D is the distance from the lane start to
                // the conflict point along the graph
                std::vector<std::pair<int, double>> frontier = {{c.other, c.s_other}};
                std::vector<int> visited = {c.other};
                for (std::size_t f = 0; f < frontier.size(); ++f) {
                    const auto [other_lane, d_start] = frontier[f];
                    for (const Occupant& occ : occupancy[other_lane]) {
                        if (occ.vehicle < 0) continue;  // HDVs do not yield to the ego
                        const double d_other = d_start - occ.s;
                        if (d_other <= -occ.length) continue;  // already cleared
                        const bool other_first =
                            d_other < d_self ||
                            (d_other == d_self && occ.vehicle < static_cast<int>(i));
                        if (!other_first) continue;
                        const double buffer = c.merge ? kMergeBuffer : kConflictBuffer;
                        const double g = d_self - buffer - h.state.length / 2.0;
                        if (g < gap) {
                            gap = g;
                            v_lead = 0.0;
                        }
                    }
                    for (int pred : net.predecessors[other_lane]) {
                        const double d_pred = d_start + net.lanes[pred].length;
                        if (d_pred > kConflictHorizon + 15.0) continue;
                        if (std::find(visited.begin(), visited.end(), pred) != visited.end()) {
                            continue;
                        }
                        visited.push_back(pred);
                        frontier.push_back({pred, d_pred});
                    }
                }
            }
            walked = h.route.lane_start_s[k] + net.lanes[lane].length - entry - h.route_s;
        }

        // bumper-level frontal window: catches tangential merges, diverging
        // corridors and anything else the lane-based searches miss
        const Point2 fwd = heading_dir(h.state.heading);
        auto capsule_check = [&](const VehicleState& other) {
            const Point2 rel = other.position - h.state.position;
            const double longitudinal = dot(rel, fwd);
            if (longitudinal <= 0.0 || longitudinal > kCapsuleAhead) return;
            if (std::abs(cross(fwd, rel)) > kCapsuleHalfWidth) return;
            const double g = longitudinal - (other.length + h.state.length) / 2.0;
            if (g < gap) {
                gap = g;
                v_lead = other.speed * std::cos(other.heading - h.state.heading);
            }
        };
        for (std::size_t j = 0; j < hdvs.size(); ++j) {
            if (j != i) capsule_check(hdvs[j].state);
        }
        capsule_check(ego);

        // stop at the route end
        if (remaining < 15.0) {
            const double g = remaining - h.state.length / 2.0;
            if (g < gap) {
                gap = g;
                v_lead = 0.0;
            }
        }

        cmds[i].accel = idm_acceleration(h.state.speed, gap, v_lead, h.idm);

        const Point2 target = h.route.point_at(h.route_s + kLookahead);
        const Point2 rel = target - h.state.position;
        const double eta = wrap_angle(std::atan2(rel.y, rel.x) - h.state.heading);
        const double steer =
            std::atan2(2.0 * vp.wheelbase * std::sin(eta), kLookahead);
        cmds[i].steer = std::clamp(steer, -vp.s_max, vp.s_max);
    }

    // integrate from the snapshot commands
    for (std::size_t i = 0; i < hdvs.size(); ++i) {
        Hdv& h = hdvs[i];
        if (!h.active || h.finished) continue;
        VehicleState& s = h.state;
        const double new_speed = std::clamp(s.speed + cmds[i].accel * dt, 0.0, vp.v_max);
        s.position = s.position + heading_dir(s.heading) * (new_speed * dt);
        s.heading = wrap_angle(s.heading + s.speed / vp.wheelbase * std::tan(cmds[i].steer) * dt);
        s.speed = new_speed;
        s.steering = cmds[i].steer;
    }
}

}  // namespace avsim
