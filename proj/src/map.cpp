#include "avsim/map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <queue>
#include <sstream>

#include "avsim/errors.hpp"
#include "json.hpp"

namespace avsim {

namespace {

constexpr double kMaxPolylineStep = 0.5;   // m, sampling step for polylines
constexpr double kJunctionMargin = 4.0;    // m, corner setback of the junction box
constexpr double kRingRadius = 20.0;       // m, roundabout ring centerline
constexpr double kRingArmStart = 26.0;     // m, radial start of roundabout arms
constexpr double kRingMergeMargin = 10.0 * kPi / 180.0;
constexpr double kSpawnOffset = 5.0;       // m into a lane for spawns/destinations

}  // namespace

const char* scenario_kind_name(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::TIntersection: return "t_intersection";
        case ScenarioKind::FourWayIntersection: return "four_way_intersection";
        case ScenarioKind::Roundabout: return "roundabout";
        case ScenarioKind::StraightRoad: return "straight_road";
    }
    return "unknown";
}

ScenarioKind scenario_kind_from_name(const std::string& name) {
    if (name == "t_intersection") return ScenarioKind::TIntersection;
    if (name == "four_way_intersection") return ScenarioKind::FourWayIntersection;
    if (name == "roundabout") return ScenarioKind::Roundabout;
    if (name == "straight_road") return ScenarioKind::StraightRoad;
    throw Error(ErrorKind::Config, "unsupported scenario kind '" + name + "'");
}

void ScenarioSpec::validate() const {
    if (traffic_density < 0.0) throw Error(ErrorKind::Config, "traffic_density must be >= 0");
    if (entrance_length <= 0.0) throw Error(ErrorKind::Config, "entrance_length must be > 0");
    if (lanes_per_approach < 1) throw Error(ErrorKind::Config, "lanes_per_approach must be >= 1");
    if (lane_width <= 0.0) throw Error(ErrorKind::Config, "lane_width must be > 0");
    if (speed_limit <= 0.0) throw Error(ErrorKind::Config, "speed_limit must be > 0");
}

// ---------------------------------------------------------------------------
// LanePiece

Point2 LanePiece::point_at(double s_local) const {
    if (type == Type::Line) {
        const Point2 dir = normalized(b - a);
        return a + dir * s_local;
    }
    const double ang = sweep >= 0.0 ? a0 + s_local / radius : a0 - s_local / radius;
    return center + Point2{radius * std::cos(ang), radius * std::sin(ang)};
}

double LanePiece::heading_at(double s_local) const {
    if (type == Type::Line) {
        const Point2 d = b - a;
        return std::atan2(d.y, d.x);
    }
    const double ang = sweep >= 0.0 ? a0 + s_local / radius : a0 - s_local / radius;
    return sweep >= 0.0 ? ang + kPi / 2.0 : ang - kPi / 2.0;
}

namespace {

struct PieceProjection {
    double s_local = 0.0;
    double d = 0.0;
    double dist = 0.0;
};

PieceProjection project_piece(const LanePiece& pc, Point2 p) {
    PieceProjection out;
    if (pc.type == LanePiece::Type::Line) {
        const Point2 ab = pc.b - pc.a;
        const double len = norm(ab);
        const Point2 dir = ab * (1.0 / len);
        double t = dot(p - pc.a, dir);
        t = std::clamp(t, 0.0, len);
        const Point2 cp = pc.a + dir * t;
        out.s_local = t;
        out.dist = distance(p, cp);
        const double side = cross(dir, p - cp);
        out.d = side >= 0.0 ? out.dist : -out.dist;
        return out;
    }
    const Point2 v = p - pc.center;
    const double ang = std::atan2(v.y, v.x);
    // progress along travel direction, in [0, 2pi)
    double prog = pc.sweep >= 0.0 ? wrap_positive(ang - pc.a0) : wrap_positive(pc.a0 - ang);
    const double total = std::abs(pc.sweep);
    if (prog <= total) {
        out.s_local = prog * pc.radius;
        const Point2 cp = pc.point_at(out.s_local);
        out.dist = distance(p, cp);
        const double rp = norm(v);
        out.d = pc.sweep >= 0.0 ? pc.radius - rp : rp - pc.radius;
        return out;
    }
    // off the arc: clamp to the nearer endpoint
    const double mid = total + 0.5 * (kTwoPi - total);
    const double s_clamped = prog < mid ? pc.len : 0.0;
    const Point2 cp = pc.point_at(s_clamped);
    out.s_local = s_clamped;
    out.dist = distance(p, cp);
    const Point2 tangent = heading_dir(pc.heading_at(s_clamped));
    const double side = cross(tangent, p - cp);
    out.d = side >= 0.0 ? out.dist : -out.dist;
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Lane

Point2 Lane::point_at(double s) const {
    s = std::clamp(s, 0.0, length);
    for (const auto& pc : pieces) {
        if (s <= pc.s0 + pc.len + 1e-12) return pc.point_at(s - pc.s0);
    }
    return pieces.back().point_at(pieces.back().len);
}

double Lane::heading_at(double s) const {
    s = std::clamp(s, 0.0, length);
    for (const auto& pc : pieces) {
        if (s <= pc.s0 + pc.len + 1e-12) return pc.heading_at(s - pc.s0);
    }
    return pieces.back().heading_at(pieces.back().len);
}

LaneProjection Lane::project(Point2 p) const {
    LaneProjection best;
    best.dist = std::numeric_limits<double>::infinity();
    for (const auto& pc : pieces) {
        const PieceProjection pr = project_piece(pc, p);
        if (pr.dist < best.dist) {
            best.dist = pr.dist;
            best.d = pr.d;
            best.s = pc.s0 + std::min(pr.s_local, pc.len);
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// lane construction helpers

namespace {

void append_piece(Lane& lane, LanePiece pc) {
    pc.s0 = lane.length;
    lane.pieces.push_back(pc);
    lane.length += pc.len;
}

LanePiece make_line(Point2 a, Point2 b) {
    LanePiece pc;
    pc.type = LanePiece::Type::Line;
    pc.a = a;
    pc.b = b;
    pc.len = distance(a, b);
    return pc;
}

LanePiece make_arc(Point2 center, double radius, double a0, double sweep) {
    LanePiece pc;
    pc.type = LanePiece::Type::Arc;
    pc.center = center;
    pc.radius = radius;
    pc.a0 = a0;
    pc.sweep = sweep;
    pc.len = radius * std::abs(sweep);
    return pc;
}

// Tangent-continuous connection between two directed points: straight line
// when collinear, otherwise line + circular fillet arc + line.
void append_fillet(Lane& lane, Point2 p0, double h0, Point2 p1, double h1) {
    const Point2 d0 = heading_dir(h0);
    const Point2 d1 = heading_dir(h1);
    const double phi = wrap_angle(h1 - h0);
    if (std::abs(phi) < 1e-9) {
        append_piece(lane, make_line(p0, p1));
        return;
    }
    const double denom = cross(d0, d1);
    const double t0 = cross(p1 - p0, d1) / denom;
    const double u0 = cross(p1 - p0, d0) / denom;
    if (t0 <= 1e-9 || u0 >= -1e-9) {
        // corner not ahead of both endpoints; degrade to a chord
        append_piece(lane, make_line(p0, p1));
        return;
    }
    const Point2 corner = p0 + d0 * t0;
    const double t = std::min(t0, -u0);
    const double r = t / std::tan(std::abs(phi) / 2.0);
    const Point2 arc_start = corner - d0 * t;
    const Point2 arc_end = corner + d1 * t;
    if (distance(p0, arc_start) > 1e-9) append_piece(lane, make_line(p0, arc_start));
    const Point2 center = phi > 0.0 ? arc_start + perp_left(d0) * r : arc_start - perp_left(d0) * r;
    const Point2 rel = arc_start - center;
    append_piece(lane, make_arc(center, r, std::atan2(rel.y, rel.x), phi));
    if (distance(arc_end, p1) > 1e-9) append_piece(lane, make_line(arc_end, p1));
}

void sample_centerline(Lane& lane) {
    lane.centerline.clear();
    lane.centerline.push_back(lane.pieces.front().point_at(0.0));
    for (const auto& pc : lane.pieces) {
        const int n = std::max(1, static_cast<int>(std::ceil(pc.len / kMaxPolylineStep)));
        for (int i = 1; i <= n; ++i) {
            const Point2 p = pc.point_at(pc.len * i / n);
            if (distance(p, lane.centerline.back()) > 1e-12) lane.centerline.push_back(p);
        }
    }
}

std::vector<Point2> sample_circle_arc(Point2 center, double radius, double a0, double a1) {
    // CCW from a0 to a1 (a1 unwrapped above a0)
    while (a1 < a0) a1 += kTwoPi;
    const double len = radius * (a1 - a0);
    const int n = std::max(1, static_cast<int>(std::ceil(len / kMaxPolylineStep)));
    std::vector<Point2> pts;
    for (int i = 0; i <= n; ++i) {
        const double a = a0 + (a1 - a0) * i / n;
        pts.push_back(center + Point2{radius * std::cos(a), radius * std::sin(a)});
    }
    return pts;
}

struct ArmFrame {
    double angle;
    Point2 u;    // unit vector pointing outward from the junction center
    Point2 eta;  // left of u
};

ArmFrame arm_frame(double angle_deg) {
    const double a = angle_deg * kPi / 180.0;
    const Point2 u = heading_dir(a);
    return {a, u, perp_left(u)};
}

enum class Movement { Left, Straight, Right };

int find_arm(const std::vector<ArmFrame>& arms, double angle) {
    for (std::size_t i = 0; i < arms.size(); ++i) {
        if (std::abs(wrap_angle(arms[i].angle - angle)) < 1e-6) return static_cast<int>(i);
    }
    return -1;
}

// exit arm for a movement from an approach arm, -1 when that arm is absent
int movement_exit(const std::vector<ArmFrame>& arms, int approach, Movement m) {
    const double base = arms[approach].angle;
    double target = base + kPi;  // straight
    if (m == Movement::Left) target = base - kPi / 2.0;
    if (m == Movement::Right) target = base + kPi / 2.0;
    return find_arm(arms, target);
}

void finish_lane(RoadNetwork& net, Lane lane) {
    sample_centerline(lane);
    net.lanes.push_back(std::move(lane));
}

RoadNetwork build_straight_road(const ScenarioSpec& spec) {
    RoadNetwork net;
    net.kind = spec.kind;
    const int n = spec.lanes_per_approach;
    const double w = spec.lane_width;
    const double half = n * w / 2.0;
    const double L = spec.entrance_length;
    for (int i = 0; i < n; ++i) {
        Lane lane;
        lane.name = "road.in." + std::to_string(i);
        lane.width = w;
        lane.kind = LaneKind::ApproachIn;
        lane.arm = 0;
        const double y = half - (i + 0.5) * w;
        append_piece(lane, make_line({0.0, y}, {L, y}));
        finish_lane(net, lane);
        net.spawn_points.push_back({static_cast<int>(net.lanes.size()) - 1, kSpawnOffset});
        net.destinations.push_back({static_cast<int>(net.lanes.size()) - 1, L - kSpawnOffset});
    }
    net.boundaries.push_back({{0.0, -half}, {L, -half}, {L, half}, {0.0, half}});
    return net;
}

RoadNetwork build_intersection(const ScenarioSpec& spec, const std::vector<double>& arm_angles_deg) {
    RoadNetwork net;
    net.kind = spec.kind;
    const int n = spec.lanes_per_approach;
    const double w = spec.lane_width;
    const double rw = n * w;                   // half road width (n lanes per direction)
    const double box = rw + kJunctionMargin;   // junction half size
    const double La = spec.entrance_length;

    std::vector<ArmFrame> arms;
    for (double a : arm_angles_deg) arms.push_back(arm_frame(a));

    std::vector<std::vector<int>> in_lane(arms.size()), out_lane(arms.size());
    for (std::size_t a = 0; a < arms.size(); ++a) {
        const ArmFrame& f = arms[a];
        for (int i = 0; i < n; ++i) {
            const double o = (i + 0.5) * w;
            Lane in;
            in.name = "arm" + std::to_string(a) + ".in." + std::to_string(i);
            in.width = w;
            in.kind = LaneKind::ApproachIn;
            in.arm = static_cast<int>(a);
            append_piece(in, make_line(f.u * (box + La) + f.eta * o, f.u * box + f.eta * o));
            in_lane[a].push_back(static_cast<int>(net.lanes.size()));
            finish_lane(net, in);

            Lane out;
            out.name = "arm" + std::to_string(a) + ".out." + std::to_string(i);
            out.width = w;
            out.kind = LaneKind::ApproachOut;
            out.arm = static_cast<int>(a);
            append_piece(out, make_line(f.u * box - f.eta * o, f.u * (box + La) - f.eta * o));
            out_lane[a].push_back(static_cast<int>(net.lanes.size()));
            finish_lane(net, out);
        }
    }

    // one connector per inbound lane: inner lane turns left, outer turns
    // right, middle goes straight; missing exits fall back in the order
    // straight, right, left. Exit lane index mirrors the entry index.
    for (std::size_t a = 0; a < arms.size(); ++a) {
        for (int i = 0; i < n; ++i) {
            Movement preferred = Movement::Straight;
            if (n >= 2 && i == 0) preferred = Movement::Left;
            if (n >= 2 && i == n - 1) preferred = Movement::Right;
            const Movement order[4] = {preferred, Movement::Straight, Movement::Right,
                                       Movement::Left};
            int exit_arm = -1;
            for (Movement m : order) {
                exit_arm = movement_exit(arms, static_cast<int>(a), m);
                if (exit_arm >= 0) break;
            }
            if (exit_arm < 0) continue;

            const int in_id = in_lane[a][i];
            const int out_id = out_lane[exit_arm][i];
            Lane conn;
            conn.name = "conn.arm" + std::to_string(a) + "." + std::to_string(i);
            conn.width = w;
            conn.kind = LaneKind::Connector;
            conn.arm = static_cast<int>(a);
            const Lane& in = net.lanes[in_id];
            const Lane& out = net.lanes[out_id];
            append_fillet(conn, in.point_at(in.length), in.heading_at(in.length),
                          out.point_at(0.0), out.heading_at(0.0));
            const int conn_id = static_cast<int>(net.lanes.size());
            finish_lane(net, conn);
            net.lanes[in_id].successors.push_back(conn_id);
            net.lanes[conn_id].successors.push_back(out_id);
        }
    }

    for (std::size_t a = 0; a < arms.size(); ++a) {
        for (int i = 0; i < n; ++i) {
            net.spawn_points.push_back({in_lane[a][i], kSpawnOffset});
            net.destinations.push_back({out_lane[a][i], net.lanes[out_lane[a][i]].length - kSpawnOffset});
        }
    }

    // outer boundary: arms in CCW order with box corners between them
    std::vector<std::size_t> order(arms.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return wrap_positive(arms[x].angle) < wrap_positive(arms[y].angle);
    });
    std::vector<Point2> loop;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const ArmFrame& f = arms[order[k]];
        loop.push_back(f.u * box - f.eta * rw);
        loop.push_back(f.u * (box + La) - f.eta * rw);
        loop.push_back(f.u * (box + La) + f.eta * rw);
        loop.push_back(f.u * box + f.eta * rw);
        const double a0 = wrap_positive(arms[order[k]].angle);
        double a1 = wrap_positive(arms[order[(k + 1) % order.size()]].angle);
        if (a1 <= a0) a1 += kTwoPi;
        for (int c = 0; c < 8; ++c) {
            const double corner = kPi / 4.0 + c * kPi / 2.0;
            if (corner > a0 + 1e-9 && corner < a1 - 1e-9) {
                loop.push_back({box * (std::cos(corner) > 0 ? 1.0 : -1.0),
                                box * (std::sin(corner) > 0 ? 1.0 : -1.0)});
            }
        }
    }
    net.boundaries.push_back(std::move(loop));
    return net;
}

RoadNetwork build_roundabout(const ScenarioSpec& spec) {
    RoadNetwork net;
    net.kind = spec.kind;
    const int n = spec.lanes_per_approach;
    const double w = spec.lane_width;
    const double rw = n * w;
    const double La = spec.entrance_length;
    const double R = kRingRadius;

    std::vector<ArmFrame> arms = {arm_frame(0), arm_frame(90), arm_frame(180), arm_frame(270)};

    std::vector<std::vector<int>> in_lane(arms.size()), out_lane(arms.size());
    for (std::size_t a = 0; a < arms.size(); ++a) {
        const ArmFrame& f = arms[a];
        for (int i = 0; i < n; ++i) {
            const double o = (i + 0.5) * w;
            Lane in;
            in.name = "arm" + std::to_string(a) + ".in." + std::to_string(i);
            in.width = w;
            in.kind = LaneKind::ApproachIn;
            in.arm = static_cast<int>(a);
            append_piece(in, make_line(f.u * (kRingArmStart + La) + f.eta * o,
                                       f.u * kRingArmStart + f.eta * o));
            in_lane[a].push_back(static_cast<int>(net.lanes.size()));
            finish_lane(net, in);

            Lane out;
            out.name = "arm" + std::to_string(a) + ".out." + std::to_string(i);
            out.width = w;
            out.kind = LaneKind::ApproachOut;
            out.arm = static_cast<int>(a);
            append_piece(out, make_line(f.u * kRingArmStart - f.eta * o,
                                        f.u * (kRingArmStart + La) - f.eta * o));
            out_lane[a].push_back(static_cast<int>(net.lanes.size()));
            finish_lane(net, out);
        }
    }

    struct RingNode {
        double angle;
        bool is_entry;
        int arm;
        int lane_idx;
    };
    std::vector<RingNode> nodes;
    for (std::size_t a = 0; a < arms.size(); ++a) {
        for (int i = 0; i < n; ++i) {
            const double o = (i + 0.5) * w;
            const double cross_angle = std::asin(o / R);
            nodes.push_back({wrap_positive(arms[a].angle + cross_angle + kRingMergeMargin), true,
                             static_cast<int>(a), i});
            nodes.push_back({wrap_positive(arms[a].angle - cross_angle - kRingMergeMargin), false,
                             static_cast<int>(a), i});
        }
    }
    std::sort(nodes.begin(), nodes.end(),
              [](const RingNode& x, const RingNode& y) { return x.angle < y.angle; });

    // ring arcs between consecutive nodes, traveling counterclockwise
    std::vector<int> arc_id(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double a0 = nodes[k].angle;
        double a1 = nodes[(k + 1) % nodes.size()].angle;
        if (a1 <= a0) a1 += kTwoPi;
        Lane ring;
        ring.name = "ring." + std::to_string(k);
        ring.width = w;
        ring.kind = LaneKind::Ring;
        append_piece(ring, make_arc({0.0, 0.0}, R, a0, a1 - a0));
        arc_id[k] = static_cast<int>(net.lanes.size());
        finish_lane(net, ring);
    }
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        net.lanes[arc_id[k]].successors.push_back(arc_id[(k + 1) % nodes.size()]);
    }

    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const RingNode& nd = nodes[k];
        const Point2 pos = Point2{R * std::cos(nd.angle), R * std::sin(nd.angle)};
        const double tangent = nd.angle + kPi / 2.0;
        if (nd.is_entry) {
            const int in_id = in_lane[nd.arm][nd.lane_idx];
            const Lane& in = net.lanes[in_id];
            Lane conn;
            conn.name = "enter.arm" + std::to_string(nd.arm) + "." + std::to_string(nd.lane_idx);
            conn.width = w;
            conn.kind = LaneKind::Connector;
            conn.arm = nd.arm;
            append_fillet(conn, in.point_at(in.length), in.heading_at(in.length), pos, tangent);
            const int conn_id = static_cast<int>(net.lanes.size());
            finish_lane(net, conn);
            net.lanes[in_id].successors.push_back(conn_id);
            net.lanes[conn_id].successors.push_back(arc_id[k]);  // arc starting at this node
        } else {
            const int out_id = out_lane[nd.arm][nd.lane_idx];
            const Lane& out = net.lanes[out_id];
            Lane conn;
            conn.name = "exit.arm" + std::to_string(nd.arm) + "." + std::to_string(nd.lane_idx);
            conn.width = w;
            conn.kind = LaneKind::Connector;
            conn.arm = nd.arm;
            append_fillet(conn, pos, tangent, out.point_at(0.0), out.heading_at(0.0));
            const int conn_id = static_cast<int>(net.lanes.size());
            finish_lane(net, conn);
            // the arc that ends at this node branches into the exit
            const std::size_t prev = (k + nodes.size() - 1) % nodes.size();
            net.lanes[arc_id[prev]].successors.push_back(conn_id);
            net.lanes[conn_id].successors.push_back(out_id);
        }
    }

    for (std::size_t a = 0; a < arms.size(); ++a) {
        for (int i = 0; i < n; ++i) {
            net.spawn_points.push_back({in_lane[a][i], kSpawnOffset});
            net.destinations.push_back({out_lane[a][i], net.lanes[out_lane[a][i]].length - kSpawnOffset});
        }
    }

    // outer boundary: arm rectangles joined by chamfer arcs through the
    // arm-corner radius; inner island bounds the ring from below
    const double rho = std::hypot(kRingArmStart, rw);
    std::vector<Point2> loop;
    for (std::size_t k = 0; k < arms.size(); ++k) {
        const ArmFrame& f = arms[k];
        loop.push_back(f.u * kRingArmStart - f.eta * rw);
        loop.push_back(f.u * (kRingArmStart + La) - f.eta * rw);
        loop.push_back(f.u * (kRingArmStart + La) + f.eta * rw);
        const Point2 left_near = f.u * kRingArmStart + f.eta * rw;
        loop.push_back(left_near);
        const ArmFrame& g = arms[(k + 1) % arms.size()];
        const Point2 next_right = g.u * kRingArmStart - g.eta * rw;
        const double c0 = std::atan2(left_near.y, left_near.x);
        const double c1 = std::atan2(next_right.y, next_right.x);
        auto arc = sample_circle_arc({0.0, 0.0}, rho, c0, c1);
        loop.insert(loop.end(), arc.begin() + 1, arc.end() - 1);
    }
    net.boundaries.push_back(std::move(loop));

    const double island = R - w / 2.0 - 0.25;
    auto island_loop = sample_circle_arc({0.0, 0.0}, island, 0.0, kTwoPi);
    island_loop.pop_back();  // closed implicitly
    net.boundaries.push_back(std::move(island_loop));
    return net;
}

}  // namespace

// ---------------------------------------------------------------------------
// RoadNetwork

double RoadNetwork::total_lane_length() const {
    double total = 0.0;
    for (const auto& l : lanes) total += l.length;
    return total;
}

bool RoadNetwork::contains(Point2 p) const {
    if (boundaries.empty()) return false;
    if (!point_in_polygon(p, boundaries[0])) return false;
    for (std::size_t i = 1; i < boundaries.size(); ++i) {
        if (point_in_polygon(p, boundaries[i])) return false;
    }
    return true;
}

void RoadNetwork::finalize() {
    boundary_segs_.clear();
    for (const auto& loop : boundaries) {
        for (std::size_t i = 0; i < loop.size(); ++i) {
            boundary_segs_.push_back({loop[i], loop[(i + 1) % loop.size()]});
        }
    }

    predecessors.assign(lanes.size(), {});
    for (std::size_t l = 0; l < lanes.size(); ++l) {
        for (int succ : lanes[l].successors) predecessors[succ].push_back(static_cast<int>(l));
    }

    // centerline crossings between junction-area lanes, excluding lanes that
    // are graph neighbours and shared-origin divergences
    conflicts.assign(lanes.size(), {});
    auto cumulative = [](const Lane& l) {
        std::vector<double> cum(l.centerline.size(), 0.0);
        for (std::size_t i = 1; i < l.centerline.size(); ++i) {
            cum[i] = cum[i - 1] + distance(l.centerline[i - 1], l.centerline[i]);
        }
        return cum;
    };
    for (std::size_t a = 0; a < lanes.size(); ++a) {
        if (lanes[a].kind != LaneKind::Connector && lanes[a].kind != LaneKind::Ring) continue;
        const auto cum_a = cumulative(lanes[a]);
        for (std::size_t b = a + 1; b < lanes.size(); ++b) {
            if (lanes[b].kind != LaneKind::Connector && lanes[b].kind != LaneKind::Ring) continue;
            const auto& sa = lanes[a].successors;
            const auto& sb = lanes[b].successors;
            if (std::find(sa.begin(), sa.end(), static_cast<int>(b)) != sa.end()) continue;
            if (std::find(sb.begin(), sb.end(), static_cast<int>(a)) != sb.end()) continue;
            const auto cum_b = cumulative(lanes[b]);
            bool found = false;
            for (std::size_t i = 1; i < lanes[a].centerline.size() && !found; ++i) {
                for (std::size_t j = 1; j < lanes[b].centerline.size() && !found; ++j) {
                    double s = 0.0, t = 0.0;
                    if (!seg_seg_intersect(lanes[a].centerline[i - 1], lanes[a].centerline[i],
                                           lanes[b].centerline[j - 1], lanes[b].centerline[j], &s,
                                           &t)) {
                        continue;
                    }
                    const double s_a = cum_a[i - 1] + s * (cum_a[i] - cum_a[i - 1]);
                    const double s_b = cum_b[j - 1] + t * (cum_b[j] - cum_b[j - 1]);
                    if (s_a < 1.5 && s_b < 1.5) continue;  // shared origin, not a conflict
                    conflicts[a].push_back({static_cast<int>(b), s_a, s_b});
                    conflicts[b].push_back({static_cast<int>(a), s_b, s_a});
                    found = true;
                }
            }
        }
    }

    // Merging lanes meet tangentially at a shared endpoint, which the
    // crossing scan cannot see; register the merge point as a conflict at
    // the end of both lanes so one stream yields.
    for (std::size_t a = 0; a < lanes.size(); ++a) {
        for (std::size_t b = a + 1; b < lanes.size(); ++b) {
            bool shares = false;
            for (int sa : lanes[a].successors) {
                for (int sb : lanes[b].successors) shares |= sa == sb;
            }
            if (!shares) continue;
            bool already = false;
            for (const Conflict& c : conflicts[a]) already |= c.other == static_cast<int>(b);
            if (already) continue;
            conflicts[a].push_back({static_cast<int>(b), lanes[a].length, lanes[b].length, true});
            conflicts[b].push_back({static_cast<int>(a), lanes[b].length, lanes[a].length, true});
        }
    }
}

RoadNetwork build_scenario(const ScenarioSpec& spec) {
    spec.validate();
    RoadNetwork net;
    switch (spec.kind) {
        case ScenarioKind::StraightRoad:
            net = build_straight_road(spec);
            break;
        case ScenarioKind::TIntersection:
            net = build_intersection(spec, {0.0, 180.0, 270.0});
            break;
        case ScenarioKind::FourWayIntersection:
            net = build_intersection(spec, {0.0, 90.0, 180.0, 270.0});
            break;
        case ScenarioKind::Roundabout:
            net = build_roundabout(spec);
            break;
        default:
            throw Error(ErrorKind::Config, "unsupported scenario kind");
    }
    net.finalize();
    return net;
}

std::shared_ptr<const RoadNetwork> build_scenario_cached(const ScenarioSpec& spec) {
    static std::mutex mu;
    static std::map<std::string, std::shared_ptr<const RoadNetwork>> cache;
    std::ostringstream key;
    key.precision(17);
    key << scenario_kind_name(spec.kind) << '|' << spec.entrance_length << '|'
        << spec.lanes_per_approach << '|' << spec.lane_width;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key.str());
    if (it != cache.end()) return it->second;
    auto net = std::make_shared<RoadNetwork>(build_scenario(spec));
    cache[key.str()] = net;
    return net;
}

// ---------------------------------------------------------------------------
// Frenet

FrenetPose to_frenet(Point2 p, const RoadNetwork& net, int lane) {
    if (lane < 0 || lane >= static_cast<int>(net.lanes.size())) {
        throw Error(ErrorKind::Usage, "to_frenet: invalid lane index");
    }
    const Lane& l = net.lanes[lane];
    const LaneProjection pr = l.project(p);
    if (std::abs(pr.d) > 4.0 * l.width) {
        throw Error(ErrorKind::Geometry, "to_frenet: point outside the lane corridor");
    }
    return {lane, pr.s, pr.d};
}

Point2 from_frenet(const RoadNetwork& net, const FrenetPose& fp) {
    const Lane& l = net.lanes[fp.lane];
    const Point2 base = l.point_at(fp.s);
    const Point2 left = perp_left(heading_dir(l.heading_at(fp.s)));
    return base + left * fp.d;
}

// ---------------------------------------------------------------------------
// Route planning

Route plan_route(const RoadNetwork& net, LaneOffset spawn, LaneOffset dest,
                 double checkpoint_interval) {
    if (spawn.lane < 0 || spawn.lane >= static_cast<int>(net.lanes.size()) || dest.lane < 0 ||
        dest.lane >= static_cast<int>(net.lanes.size())) {
        throw Error(ErrorKind::Planning, "plan_route: invalid lane index");
    }
    const double inf = std::numeric_limits<double>::infinity();

    // direct same-lane candidate
    double best_total = inf;
    std::vector<int> best_path;
    if (spawn.lane == dest.lane && dest.s >= spawn.s - 1e-9) {
        best_total = dest.s - spawn.s;
        best_path = {spawn.lane};
    }

    // Dijkstra over the lane graph; dist[l] = arclength from the spawn point
    // to the start of lane l. kFromSource marks lanes entered directly from
    // the spawn lane so reconstruction terminates even on cyclic graphs.
    constexpr int kFromSource = -2;
    std::vector<double> dist(net.lanes.size(), inf);
    std::vector<int> parent(net.lanes.size(), -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    const double first_leg = net.lanes[spawn.lane].length - spawn.s;
    for (int succ : net.lanes[spawn.lane].successors) {
        if (first_leg < dist[succ]) {
            dist[succ] = first_leg;
            parent[succ] = kFromSource;
            pq.push({first_leg, succ});
        }
    }
    while (!pq.empty()) {
        auto [d, l] = pq.top();
        pq.pop();
        if (d > dist[l] + 1e-12) continue;
        const double through = d + net.lanes[l].length;
        for (int succ : net.lanes[l].successors) {
            if (through < dist[succ]) {
                dist[succ] = through;
                parent[succ] = l;
                pq.push({through, succ});
            }
        }
    }
    if (dist[dest.lane] < inf && dist[dest.lane] + dest.s < best_total) {
        best_total = dist[dest.lane] + dest.s;
        best_path.clear();
        for (int l = dest.lane; l != kFromSource; l = parent[l]) best_path.push_back(l);
        best_path.push_back(spawn.lane);
        std::reverse(best_path.begin(), best_path.end());
    }
    if (best_path.empty() || !std::isfinite(best_total)) {
        throw Error(ErrorKind::Planning, "plan_route: destination unreachable from spawn");
    }

    Route route;
    route.net = &net;
    route.lanes = best_path;
    route.length = best_total;
    route.entry_offset = spawn.s;
    route.dest_s = dest.s;
    route.lane_start_s.resize(best_path.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < best_path.size(); ++i) {
        route.lane_start_s[i] = acc;
        const double entry = i == 0 ? spawn.s : 0.0;
        acc += net.lanes[best_path[i]].length - entry;
    }

    if (checkpoint_interval <= 0.0) {
        throw Error(ErrorKind::Config, "checkpoint_interval must be > 0");
    }
    for (double s = checkpoint_interval; s < route.length - 1e-9; s += checkpoint_interval) {
        route.checkpoints.push_back(route.point_at(s));
    }
    route.checkpoints.push_back(route.point_at(route.length));
    return route;
}

std::vector<LaneOffset> reachable_destinations(const RoadNetwork& net, int lane, double s) {
    std::vector<char> seen(net.lanes.size(), 0);
    std::vector<int> stack = {lane};
    seen[lane] = 1;
    while (!stack.empty()) {
        const int l = stack.back();
        stack.pop_back();
        for (int succ : net.lanes[l].successors) {
            if (!seen[succ]) {
                seen[succ] = 1;
                stack.push_back(succ);
            }
        }
    }
    std::vector<LaneOffset> out;
    for (const LaneOffset& d : net.destinations) {
        if (d.lane == lane ? d.s >= s : seen[d.lane] != 0) out.push_back(d);
    }
    return out;
}

Point2 Route::point_at(double route_s) const {
    route_s = std::clamp(route_s, 0.0, length);
    std::size_t i = lanes.size() - 1;
    for (std::size_t k = 1; k < lanes.size(); ++k) {
        if (route_s < lane_start_s[k]) {
            i = k - 1;
            break;
        }
    }
    const double entry = i == 0 ? entry_offset : 0.0;
    return net->lanes[lanes[i]].point_at(entry + route_s - lane_start_s[i]);
}

// ---------------------------------------------------------------------------
// RouteTracker

RouteTracker::RouteTracker(const Route* route, double capture_radius)
    : route_(route), capture_radius_(capture_radius) {}

NavFeatures RouteTracker::navigation_features(Point2 position, double heading) {
    while (next_checkpoint_ + 1 < route_->checkpoints.size() &&
           distance(position, route_->checkpoints[next_checkpoint_]) < capture_radius_) {
        ++next_checkpoint_;
    }
    const Point2 target = route_->checkpoints[next_checkpoint_];
    const Point2 rel = target - position;
    NavFeatures out;
    out.distance = norm(rel);
    out.direction = wrap_angle(std::atan2(rel.y, rel.x) - heading);
    return out;
}

double RouteTracker::progress(Point2 position) {
    const auto& lanes = route_->lanes;
    const std::size_t lo = lane_cursor_ > 0 ? lane_cursor_ - 1 : 0;
    const std::size_t hi = std::min(lane_cursor_ + 1, lanes.size() - 1);
    double best_dist = std::numeric_limits<double>::infinity();
    std::size_t best_i = lane_cursor_;
    double best_s = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) {
        const LaneProjection pr = route_->net->lanes[lanes[i]].project(position);
        if (pr.dist < best_dist) {
            best_dist = pr.dist;
            best_i = i;
            best_s = pr.s;
        }
    }
    lane_cursor_ = best_i;
    const double entry = best_i == 0 ? route_->entry_offset : 0.0;
    return std::clamp(route_->lane_start_s[best_i] + best_s - entry, 0.0, route_->length);
}

// ---------------------------------------------------------------------------
// Boundary queries

BoundaryDistance distance_to_boundary(const RoadNetwork& net, Point2 position, double heading) {
    const Point2 h = heading_dir(heading);
    double left = std::numeric_limits<double>::infinity();
    double right = std::numeric_limits<double>::infinity();
    for (const Seg& seg : net.boundary_segments()) {
        const Point2 cp = closest_point_on_segment(position, seg.a, seg.b);
        const double d = distance(position, cp);
        const double side = cross(h, cp - position);
        if (side >= 0.0 && d < left) left = d;
        if (side <= 0.0 && d < right) right = d;
    }
    const double nearest = std::min(left, right);
    const bool inside = nearest < 1e-9 || net.contains(position);
    const double sign = inside ? 1.0 : -1.0;
    return {sign * left, sign * right};
}

// ---------------------------------------------------------------------------
// Serialization

std::string network_to_json(const RoadNetwork& net) {
    nlohmann::json doc;
    doc["schema_version"] = 1;
    doc["kind"] = scenario_kind_name(net.kind);
    auto lane_kind_name = [](LaneKind k) {
        switch (k) {
            case LaneKind::ApproachIn: return "approach_in";
            case LaneKind::ApproachOut: return "approach_out";
            case LaneKind::Connector: return "connector";
            case LaneKind::Ring: return "ring";
        }
        return "unknown";
    };
    nlohmann::json lanes = nlohmann::json::array();
    for (const auto& l : net.lanes) {
        nlohmann::json jl;
        jl["id"] = l.name;
        jl["width"] = l.width;
        jl["length"] = l.length;
        jl["kind"] = lane_kind_name(l.kind);
        jl["arm"] = l.arm;
        nlohmann::json succ = nlohmann::json::array();
        for (int s : l.successors) succ.push_back(net.lanes[s].name);
        jl["successors"] = succ;
        nlohmann::json line = nlohmann::json::array();
        for (const auto& p : l.centerline) line.push_back({p.x, p.y});
        jl["centerline"] = line;
        lanes.push_back(jl);
    }
    doc["lanes"] = lanes;
    nlohmann::json bounds = nlohmann::json::array();
    for (const auto& loop : net.boundaries) {
        nlohmann::json jl = nlohmann::json::array();
        for (const auto& p : loop) jl.push_back({p.x, p.y});
        bounds.push_back(jl);
    }
    doc["boundaries"] = bounds;
    auto offsets = [&](const std::vector<LaneOffset>& v) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& o : v) arr.push_back({{"lane", net.lanes[o.lane].name}, {"s", o.s}});
        return arr;
    };
    doc["spawn_points"] = offsets(net.spawn_points);
    doc["destinations"] = offsets(net.destinations);
    return doc.dump(2);
}

}  // namespace avsim
