#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "avsim/geometry.hpp"

namespace avsim {

enum class ScenarioKind {
    TIntersection,
    FourWayIntersection,
    Roundabout,
    StraightRoad,  // single-direction road used by the goal-reaching toy task
};

const char* scenario_kind_name(ScenarioKind k);
ScenarioKind scenario_kind_from_name(const std::string& name);

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::TIntersection;
    std::uint64_t seed = 0;           // affects traffic placement, not geometry
    double traffic_density = 0.1;     // vehicles per 10 m of lane
    double entrance_length = 50.0;    // arm length; road length for StraightRoad
    int lanes_per_approach = 3;
    double speed_limit = 80.0 / 3.6;  // m/s
    double lane_width = 3.5;

    void validate() const;  // throws Error(Config)
};

// Analytic centerline piece. Frenet projection, point and tangent lookups
// are exact on these; the sampled polyline is only used for boundaries,
// crossing detection and serialization.
struct LanePiece {
    enum class Type { Line, Arc } type = Type::Line;
    Point2 a, b;          // Line endpoints
    Point2 center;        // Arc
    double radius = 0.0;  // Arc
    double a0 = 0.0;      // Arc start angle
    double sweep = 0.0;   // Arc signed sweep; positive = counterclockwise
    double s0 = 0.0;      // arclength of the piece start within the lane
    double len = 0.0;

    Point2 point_at(double s_local) const;
    double heading_at(double s_local) const;
};

struct LaneProjection {
    double s = 0.0;     // arclength of the closest centerline point
    double d = 0.0;     // signed lateral offset, positive left of travel
    double dist = 0.0;  // Euclidean distance to the closest centerline point
};

enum class LaneKind { ApproachIn, ApproachOut, Connector, Ring };

struct Lane {
    std::string name;
    std::vector<LanePiece> pieces;
    std::vector<Point2> centerline;  // sampled at <= 0.5 m
    double width = 3.5;
    double length = 0.0;
    std::vector<int> successors;
    LaneKind kind = LaneKind::ApproachIn;
    int arm = -1;

    Point2 point_at(double s) const;
    double heading_at(double s) const;
    LaneProjection project(Point2 p) const;
};

struct FrenetPose {
    int lane = -1;
    double s = 0.0;
    double d = 0.0;
};

struct LaneOffset {
    int lane = -1;
    double s = 0.0;
};

struct RoadNetwork {
    ScenarioKind kind = ScenarioKind::TIntersection;
    std::vector<Lane> lanes;
    // boundaries[0] is the outer drivable loop; any further loops are holes
    // (e.g. the roundabout island). All loops are closed polylines.
    std::vector<std::vector<Point2>> boundaries;
    std::vector<LaneOffset> spawn_points;   // entry ends of inbound lanes
    std::vector<LaneOffset> destinations;   // far ends of outbound lanes

    // lanes whose centerlines cross or merge; used for junction yielding
    struct Conflict {
        int other = -1;
        double s_self = 0.0;
        double s_other = 0.0;
        bool merge = false;  // tangential merge into a shared successor
    };
    std::vector<std::vector<Conflict>> conflicts;
    std::vector<std::vector<int>> predecessors;  // inverse of successors

    double total_lane_length() const;
    bool contains(Point2 p) const;
    const std::vector<Seg>& boundary_segments() const { return boundary_segs_; }

    void finalize();  // builds segment cache and the conflict table

private:
    std::vector<Seg> boundary_segs_;
};

// Deterministic function of the structural parameters; the seed plays no role.
RoadNetwork build_scenario(const ScenarioSpec& spec);

// Shared immutable network cache keyed by structural parameters.
std::shared_ptr<const RoadNetwork> build_scenario_cached(const ScenarioSpec& spec);

// Exact projection onto one lane. Throws Error(Geometry) when the point is
// farther than 4 lane widths from the centerline.
FrenetPose to_frenet(Point2 p, const RoadNetwork& net, int lane);
Point2 from_frenet(const RoadNetwork& net, const FrenetPose& fp);

struct Route {
    std::vector<int> lanes;
    std::vector<Point2> checkpoints;  // every interval along the route, plus the destination
    double length = 0.0;
    double entry_offset = 0.0;              // s on the first lane where the route starts
    std::vector<double> lane_start_s;       // route arclength at each lane's route entry
    double dest_s = 0.0;                    // s on the last lane

    Point2 point_at(double route_s) const;
    const RoadNetwork* net = nullptr;
};

// Shortest-arclength lane sequence with checkpoints. Throws Error(Planning)
// when no lane path connects spawn to dest.
Route plan_route(const RoadNetwork& net, LaneOffset spawn, LaneOffset dest,
                 double checkpoint_interval);

// Destinations reachable through the successor graph from (lane, s).
std::vector<LaneOffset> reachable_destinations(const RoadNetwork& net, int lane, double s);

struct NavFeatures {
    double distance = 0.0;
    double direction = 0.0;  // bearing in the ego frame, positive left
};

// Mutable route-following state: checkpoint consumption and longitudinal
// route progress for the displacement reward.
class RouteTracker {
public:
    RouteTracker() = default;
    RouteTracker(const Route* route, double capture_radius);

    NavFeatures navigation_features(Point2 position, double heading);
    double progress(Point2 position);  // longitudinal route arclength at `position`
    std::size_t next_checkpoint() const { return next_checkpoint_; }
    double remaining(Point2 position) { return route_->length - progress(position); }

private:
    const Route* route_ = nullptr;
    double capture_radius_ = 2.0;
    std::size_t next_checkpoint_ = 0;
    std::size_t lane_cursor_ = 0;
};

struct BoundaryDistance {
    double left = 0.0;
    double right = 0.0;
};

// Distance from the reference point to the nearest boundary on each side of
// the heading axis; both components are negated when the point lies outside
// the drivable area.
BoundaryDistance distance_to_boundary(const RoadNetwork& net, Point2 position, double heading);

// Documented JSON schema (lanes, polylines, boundaries, spawns, destinations).
std::string network_to_json(const RoadNetwork& net);

}  // namespace avsim
