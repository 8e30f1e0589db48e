#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "avsim/errors.hpp"
#include "avsim/map.hpp"
#include "avsim/rng.hpp"

using namespace avsim;

namespace {

ScenarioSpec spec_of(ScenarioKind kind, double entrance = 50.0) {
    ScenarioSpec s;
    s.kind = kind;
    s.entrance_length = entrance;
    return s;
}

int count_kind(const RoadNetwork& net, LaneKind k) {
    int n = 0;
    for (const auto& l : net.lanes) n += l.kind == k ? 1 : 0;
    return n;
}

// dense-sampling projection oracle with parabolic refinement
LaneProjection dense_projection(const Lane& lane, Point2 p, int samples) {
    double best = std::numeric_limits<double>::infinity();
    int best_i = 0;
    std::vector<double> d2(samples + 1);
    for (int i = 0; i <= samples; ++i) {
        const double s = lane.length * i / samples;
        const Point2 q = lane.point_at(s);
        d2[i] = norm2(p - q);
        if (d2[i] < best) {
            best = d2[i];
            best_i = i;
        }
    }
    const double h = lane.length / samples;
    double s_star = lane.length * best_i / samples;
    if (best_i > 0 && best_i < samples) {
        const double denom = d2[best_i - 1] - 2.0 * d2[best_i] + d2[best_i + 1];
        if (std::abs(denom) > 1e-30) {
            s_star += 0.5 * h * (d2[best_i - 1] - d2[best_i + 1]) / denom;
        }
    }
    LaneProjection out;
    out.s = s_star;
    const Point2 q = lane.point_at(s_star);
    out.dist = distance(p, q);
    const double side = cross(heading_dir(lane.heading_at(s_star)), p - q);
    out.d = side >= 0 ? out.dist : -out.dist;
    return out;
}

// independent shortest-path oracle over the lane graph
double dijkstra_route_length(const RoadNetwork& net, LaneOffset spawn, LaneOffset dest) {
    const double inf = std::numeric_limits<double>::infinity();
    if (spawn.lane == dest.lane && dest.s >= spawn.s) return dest.s - spawn.s;
    std::vector<double> dist(net.lanes.size(), inf);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    for (int succ : net.lanes[spawn.lane].successors) {
        dist[succ] = net.lanes[spawn.lane].length - spawn.s;
        pq.push({dist[succ], succ});
    }
    while (!pq.empty()) {
        auto [d, l] = pq.top();
        pq.pop();
        if (d > dist[l]) continue;
        for (int succ : net.lanes[l].successors) {
            const double nd = d + net.lanes[l].length;
            if (nd < dist[succ]) {
                dist[succ] = nd;
                pq.push({nd, succ});
            }
        }
    }
    return dist[dest.lane] + dest.s;
}

// winding-number point-in-region oracle (outer loop minus holes)
bool winding_contains(const RoadNetwork& net, Point2 p) {
    auto winding = [](Point2 q, const std::vector<Point2>& loop) {
        double angle = 0.0;
        for (std::size_t i = 0; i < loop.size(); ++i) {
            const Point2 a = loop[i] - q;
            const Point2 b = loop[(i + 1) % loop.size()] - q;
            angle += std::atan2(cross(a, b), dot(a, b));
        }
        return std::abs(angle) > kPi;
    };
    if (!winding(p, net.boundaries[0])) return false;
    for (std::size_t i = 1; i < net.boundaries.size(); ++i) {
        if (winding(p, net.boundaries[i])) return false;
    }
    return true;
}

}  // namespace

TEST_SUITE_BEGIN("map");

TEST_CASE("t-intersection arms and entrance length") {
    const RoadNetwork net = build_scenario(spec_of(ScenarioKind::TIntersection));
    CHECK(count_kind(net, LaneKind::ApproachIn) == 9);
    CHECK(count_kind(net, LaneKind::ApproachOut) == 9);
    for (const Lane& l : net.lanes) {
        if (l.kind == LaneKind::ApproachIn || l.kind == LaneKind::ApproachOut) {
            CHECK(l.length == doctest::Approx(50.0));
        }
    }
    // three distinct arms
    std::vector<int> arms;
    for (const Lane& l : net.lanes) {
        if (l.kind == LaneKind::ApproachIn) arms.push_back(l.arm);
    }
    std::sort(arms.begin(), arms.end());
    arms.erase(std::unique(arms.begin(), arms.end()), arms.end());
    CHECK(arms.size() == 3);
}

TEST_CASE("four-way intersection has 12 connectors, one per inbound lane") {
    const RoadNetwork net = build_scenario(spec_of(ScenarioKind::FourWayIntersection));
    CHECK(count_kind(net, LaneKind::Connector) == 12);
    for (const Lane& l : net.lanes) {
        if (l.kind == LaneKind::ApproachIn) {
            REQUIRE(l.successors.size() == 1);
            const Lane& conn = net.lanes[l.successors[0]];
            CHECK(conn.kind == LaneKind::Connector);
            REQUIRE(conn.successors.size() == 1);
            CHECK(net.lanes[conn.successors[0]].kind == LaneKind::ApproachOut);
        }
    }
}

TEST_CASE("build_scenario is deterministic node by node") {
    for (ScenarioKind kind : {ScenarioKind::TIntersection, ScenarioKind::FourWayIntersection,
                              ScenarioKind::Roundabout, ScenarioKind::StraightRoad}) {
        ScenarioSpec a = spec_of(kind);
        ScenarioSpec b = spec_of(kind);
        a.seed = 1;
        b.seed = 999;  // seed affects traffic, not geometry
        CHECK(network_to_json(build_scenario(a)) == network_to_json(build_scenario(b)));
    }
}

TEST_CASE("unsupported scenario kind is a configuration error") {
    CHECK_THROWS_AS(scenario_kind_from_name("cloverleaf"), Error);
    ScenarioSpec bad = spec_of(ScenarioKind::TIntersection);
    bad.traffic_density = -1.0;
    CHECK_THROWS_AS(build_scenario(bad), Error);
}

TEST_CASE("to_frenet on a straight lane") {
    ScenarioSpec s = spec_of(ScenarioKind::StraightRoad, 100.0);
    const RoadNetwork net = build_scenario(s);
    const int lane = 1;  // middle
    const Point2 mid = net.lanes[lane].point_at(50.0);
    FrenetPose fp = to_frenet(mid, net, lane);
    CHECK(fp.s == doctest::Approx(50.0));
    CHECK(fp.d == doctest::Approx(0.0));

    const Point2 left = mid + perp_left(heading_dir(net.lanes[lane].heading_at(50.0)));
    fp = to_frenet(left, net, lane);
    CHECK(fp.s == doctest::Approx(50.0));
    CHECK(fp.d == doctest::Approx(1.0));

    const Point2 far = mid + perp_left(heading_dir(0.0)) * 30.0;
    CHECK_THROWS_AS(to_frenet(far, net, lane), Error);
}

TEST_CASE("arc lane projection matches the dense-sampling oracle") {
    const RoadNetwork net = build_scenario(spec_of(ScenarioKind::FourWayIntersection));
    // pick a pure-arc left-turn connector
    const Lane* arc_lane = nullptr;
    for (const Lane& l : net.lanes) {
        if (l.kind == LaneKind::Connector && l.pieces.size() == 1 &&
            l.pieces[0].type == LanePiece::Type::Arc && l.pieces[0].radius > 10.0) {
            arc_lane = &l;
            break;
        }
    }
    REQUIRE(arc_lane != nullptr);
    Rng rng(5);
    for (int k = 0; k < 40; ++k) {
        const double s = rng.uniform(0.5, arc_lane->length - 0.5);
        const double d = rng.uniform(-1.6, 1.6);
        const Point2 p = arc_lane->point_at(s) +
                         perp_left(heading_dir(arc_lane->heading_at(s))) * d;
        const LaneProjection mine = arc_lane->project(p);
        const LaneProjection oracle = dense_projection(*arc_lane, p, 100000);
        CHECK(std::abs(mine.s - oracle.s) < 1e-6);
        CHECK(std::abs(mine.d - oracle.d) < 1e-6);
    }
}

TEST_CASE("frenet round-trip is exact on analytic lanes") {
    for (ScenarioKind kind : {ScenarioKind::StraightRoad, ScenarioKind::FourWayIntersection,
                              ScenarioKind::Roundabout}) {
        const RoadNetwork net = build_scenario(spec_of(kind));
        Rng rng(11);
        for (const Lane& l : net.lanes) {
            for (int k = 0; k < 5; ++k) {
                FrenetPose fp;
                fp.lane = static_cast<int>(&l - net.lanes.data());
                fp.s = rng.uniform(0.01, l.length - 0.01);
                fp.d = rng.uniform(-0.49, 0.49) * l.width;
                const Point2 p = from_frenet(net, fp);
                const FrenetPose back = to_frenet(p, net, fp.lane);
                CHECK(std::abs(back.s - fp.s) < 1e-6);
                CHECK(std::abs(back.d - fp.d) < 1e-6);
            }
        }
    }
}

TEST_CASE("plan_route checkpoints on a straight road") {
    const RoadNetwork net = build_scenario(spec_of(ScenarioKind::StraightRoad, 50.0));
    const Route r = plan_route(net, {0, 0.0}, {0, 50.0}, 10.0);
    REQUIRE(r.checkpoints.size() == 5);
    CHECK(r.length == doctest::Approx(50.0));
    CHECK(distance(r.checkpoints.back(), net.lanes[0].point_at(50.0)) < 1e-12);

    const Route single = plan_route(net, {0, 20.0}, {0, 20.0}, 10.0);
    CHECK(single.checkpoints.size() == 1);
    CHECK(single.length == doctest::Approx(0.0));
}

TEST_CASE("route through the t-intersection matches the graph oracle") {
    const RoadNetwork net = build_scenario(spec_of(ScenarioKind::TIntersection));
    for (const LaneOffset& spawn : net.spawn_points) {
        const auto dests = reachable_destinations(net, spawn.lane, spawn.s);
        REQUIRE_FALSE(dests.empty());
        for (const LaneOffset& dest : dests) {
            const Route r = plan_route(net, spawn, dest, 10.0);
            CHECK(r.length == doctest::Approx(dijkstra_route_length(net, spawn, dest)));
            double sum = net.lanes[r.lanes.front()].length - spawn.s;
            for (std::size_t i = 1; i + 1 < r.lanes.size(); ++i) {
                sum += net.lanes[r.lanes[i]].length;
            }
            if (r.lanes.size() > 1) sum += dest.s;
            CHECK(r.length == doctest::Approx(sum));
        }
    }
    CHECK_THROWS_AS(plan_route(net, net.spawn_points[0], LaneOffset{net.spawn_points[3].lane, 1.0},
                               10.0),
                    Error);
}

TEST_CASE("navigation features in the ego frame") {
    const RoadNetwork net = build_scenario(spec_of(ScenarioKind::StraightRoad, 100.0));
    const Route r = plan_route(net, {1, 0.0}, {1, 100.0}, 10.0);

    RouteTracker tracker(&r, 2.0);
    const Point2 cp0 = r.checkpoints[0];
    NavFeatures nav = tracker.navigation_features(cp0 - Point2{10.0, 0.0}, 0.0);
    CHECK(nav.distance == doctest::Approx(10.0));
    CHECK(nav.direction == doctest::Approx(0.0));

    nav = tracker.navigation_features(cp0 + Point2{0.0, -5.0}, 0.0);
    CHECK(nav.distance == doctest::Approx(5.0));
    CHECK(nav.direction == doctest::Approx(kPi / 2.0));

    // passing within the capture radius consumes the checkpoint
    RouteTracker t2(&r, 2.0);
    t2.navigation_features(cp0 + Point2{1.0, 0.0}, 0.0);
    CHECK(t2.next_checkpoint() == 1);
    const NavFeatures next = t2.navigation_features(cp0 + Point2{1.0, 0.0}, 0.0);
    CHECK(next.distance == doctest::Approx(distance(cp0 + Point2{1.0, 0.0}, r.checkpoints[1])));

    // the last checkpoint persists once the route has been driven
    RouteTracker t3(&r, 2.0);
    for (double s = 0.0; s <= r.length; s += 0.5) t3.navigation_features(r.point_at(s), 0.0);
    const Point2 end = r.checkpoints.back();
    for (int i = 0; i < 3; ++i) {
        const NavFeatures last = t3.navigation_features(end, 0.0);
        CHECK(last.distance == doctest::Approx(0.0));
    }
    CHECK(t3.next_checkpoint() == r.checkpoints.size() - 1);
}

TEST_CASE("route monotonicity while traversing forward") {
    const RoadNetwork net = build_scenario(spec_of(ScenarioKind::TIntersection));
    const LaneOffset spawn = net.spawn_points[0];
    const auto dests = reachable_destinations(net, spawn.lane, spawn.s);
    const Route r = plan_route(net, spawn, dests[0], 10.0);
    RouteTracker tracker(&r, 2.0);
    double prev_progress = -1.0;
    std::size_t prev_cp = 0;
    std::vector<double> stations;
    for (double s = 0.0; s < r.length; s += 0.5) stations.push_back(s);
    stations.push_back(r.length);
    for (double s : stations) {
        const Point2 p = r.point_at(s);
        const double prog = tracker.progress(p);
        tracker.navigation_features(p, 0.0);
        CHECK(prog >= prev_progress - 1e-9);
        CHECK(tracker.next_checkpoint() >= prev_cp);
        prev_progress = prog;
        prev_cp = tracker.next_checkpoint();
    }
    CHECK(prev_progress == doctest::Approx(r.length).epsilon(1e-6));
}

TEST_CASE("distance to boundary on the straight road") {
    const RoadNetwork net = build_scenario(spec_of(ScenarioKind::StraightRoad, 100.0));
    const Point2 mid = net.lanes[1].point_at(50.0);  // middle lane center
    const BoundaryDistance bd = distance_to_boundary(net, mid, 0.0);
    CHECK(bd.left == doctest::Approx(5.25));
    CHECK(bd.right == doctest::Approx(5.25));

    const BoundaryDistance edge = distance_to_boundary(net, {50.0, -5.25}, 0.0);
    CHECK(edge.right == doctest::Approx(0.0));

    const BoundaryDistance outside = distance_to_boundary(net, {50.0, -8.0}, 0.0);
    CHECK(outside.left < 0.0);
    CHECK(outside.right < 0.0);
}

TEST_CASE("boundary distances match a brute-force oracle") {
    const RoadNetwork net = build_scenario(spec_of(ScenarioKind::TIntersection));
    Rng rng(3);
    for (int k = 0; k < 200; ++k) {
        const Point2 p{rng.uniform(-60.0, 60.0), rng.uniform(-60.0, 60.0)};
        const double heading = rng.uniform(-kPi, kPi);
        const BoundaryDistance bd = distance_to_boundary(net, p, heading);

        double left = std::numeric_limits<double>::infinity();
        double right = left;
        const Point2 h = heading_dir(heading);
        for (const Seg& seg : net.boundary_segments()) {
            // independent segment-distance formulation
            const Point2 ab = seg.b - seg.a;
            const double t = std::clamp(dot(p - seg.a, ab) / norm2(ab), 0.0, 1.0);
            const Point2 cp = seg.a + ab * t;
            const double d = distance(p, cp);
            const double side = cross(h, cp - p);
            if (side >= 0.0) left = std::min(left, d);
            if (side <= 0.0) right = std::min(right, d);
        }
        const double sign = net.contains(p) || std::min(left, right) < 1e-9 ? 1.0 : -1.0;
        if (std::isfinite(left)) {
            CHECK(bd.left == doctest::Approx(sign * left).epsilon(1e-9));
        } else {
            CHECK_FALSE(std::isfinite(bd.left));
        }
        if (std::isfinite(right)) {
            CHECK(bd.right == doctest::Approx(sign * right).epsilon(1e-9));
        } else {
            CHECK_FALSE(std::isfinite(bd.right));
        }
    }
}

TEST_CASE("boundary sign agrees with a winding-number oracle") {
    for (ScenarioKind kind : {ScenarioKind::TIntersection, ScenarioKind::Roundabout}) {
        const RoadNetwork net = build_scenario(spec_of(kind));
        Rng rng(17);
        for (int k = 0; k < 400; ++k) {
            const Point2 p{rng.uniform(-80.0, 80.0), rng.uniform(-80.0, 80.0)};
            const BoundaryDistance bd = distance_to_boundary(net, p, 0.3);
            const bool inside = winding_contains(net, p);
            if (std::min(std::abs(bd.left), std::abs(bd.right)) < 1e-6) continue;  // on edge
            CHECK((bd.left >= 0.0) == inside);
            CHECK((bd.right >= 0.0) == inside);
        }
    }
}

TEST_CASE("boundaries enclose every lane corridor") {
    for (ScenarioKind kind : {ScenarioKind::StraightRoad, ScenarioKind::TIntersection,
                              ScenarioKind::FourWayIntersection, ScenarioKind::Roundabout}) {
        const RoadNetwork net = build_scenario(spec_of(kind));
        for (const Lane& l : net.lanes) {
            for (double s = 0.1; s < l.length; s += 1.0) {
                const Point2 c = l.point_at(s);
                const Point2 left = perp_left(heading_dir(l.heading_at(s)));
                CHECK(net.contains(c));
                CHECK(net.contains(c + left * (0.45 * l.width)));
                CHECK(net.contains(c - left * (0.45 * l.width)));
            }
        }
    }
}

TEST_CASE("roundabout ring is connected and exits reachable") {
    const RoadNetwork net = build_scenario(spec_of(ScenarioKind::Roundabout));
    CHECK(count_kind(net, LaneKind::Ring) == 24);
    for (const Lane& l : net.lanes) {
        if (l.kind != LaneKind::ApproachOut) CHECK_FALSE(l.successors.empty());
    }
    for (const LaneOffset& spawn : net.spawn_points) {
        const auto dests = reachable_destinations(net, spawn.lane, spawn.s);
        CHECK(dests.size() == net.destinations.size());  // every exit reachable via the ring
        const Route r = plan_route(net, spawn, dests[5], 10.0);
        CHECK(r.length > 0.0);
    }
}

TEST_CASE("junction conflict table sees crossing connectors") {
    const RoadNetwork net = build_scenario(spec_of(ScenarioKind::FourWayIntersection));
    long crossings = 0;
    for (const auto& per_lane : net.conflicts) crossings += static_cast<long>(per_lane.size());
    CHECK(crossings > 0);
    for (std::size_t l = 0; l < net.conflicts.size(); ++l) {
        for (const auto& c : net.conflicts[l]) {
            CHECK(c.s_self >= 0.0);
            CHECK(c.s_self <= net.lanes[l].length + 1e-9);
            const Point2 mine = net.lanes[l].point_at(c.s_self);
            const Point2 theirs = net.lanes[c.other].point_at(c.s_other);
            CHECK(distance(mine, theirs) < 0.75);  // same crossing point up to sampling
        }
    }
}

TEST_CASE("network cache returns the shared instance") {
    ScenarioSpec a = spec_of(ScenarioKind::TIntersection);
    a.seed = 1;
    ScenarioSpec b = spec_of(ScenarioKind::TIntersection);
    b.seed = 2;
    CHECK(build_scenario_cached(a).get() == build_scenario_cached(b).get());
}

TEST_SUITE_END();
