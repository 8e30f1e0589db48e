#include "doctest.h"

#include <cmath>
#include <limits>

#include "avsim/errors.hpp"
#include "avsim/sensing.hpp"

using namespace avsim;

namespace {

LidarConfig quiet_lidar() {
    LidarConfig cfg;
    cfg.noise_sigma = 0.0;
    return cfg;
}

// independent ray-segment formulation: Cramer solve of o + t d = a + u (b-a)
bool oracle_ray_hit(Point2 o, Point2 d, Point2 a, Point2 b, double* t_out) {
    const double a11 = d.x, a12 = a.x - b.x;
    const double a21 = d.y, a22 = a.y - b.y;
    const double det = a11 * a22 - a12 * a21;
    if (std::abs(det) < 1e-15) return false;
    const double rx = a.x - o.x, ry = a.y - o.y;
    const double t = (rx * a22 - a12 * ry) / det;
    const double u = (a11 * ry - rx * a21) / det;
    if (t < 0.0 || u < 0.0 || u > 1.0) return false;
    *t_out = t;
    return true;
}

LidarScan oracle_scan(const SensorScene& scene, const VehicleState& ego, const LidarConfig& cfg) {
    LidarScan scan;
    scan.ranges.assign(cfg.beam_count, 1.0);
    std::vector<Seg> segs;
    if (scene.boundaries) segs = *scene.boundaries;
    for (const VehicleState& v : scene.vehicles) {
        Point2 c[4];
        vehicle_corners(v, c);
        for (int i = 0; i < 4; ++i) segs.push_back({c[i], c[(i + 1) % 4]});
    }
    for (int i = 0; i < cfg.beam_count; ++i) {
        const Point2 dir = heading_dir(ego.heading + i * cfg.angular_resolution());
        double best = cfg.max_range;
        for (const Seg& s : segs) {
            double t = 0.0;
            if (oracle_ray_hit(ego.position, dir, s.a, s.b, &t) && t < best) best = t;
        }
        scan.ranges[i] = best / cfg.max_range;
    }
    return scan;
}

}  // namespace

TEST_SUITE_BEGIN("sensing");

TEST_CASE("lidar config invariant") {
    LidarConfig cfg;
    CHECK(cfg.beam_count == 240);
    CHECK(cfg.angular_resolution() == doctest::Approx(1.5 * kPi / 180.0));
    CHECK(cfg.beam_count * cfg.angular_resolution() == doctest::Approx(kTwoPi));
    cfg.beam_count = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("empty scene reads max range on every beam") {
    SensorScene scene;
    VehicleState ego;
    Rng rng(1);
    const LidarScan scan = raycast(scene, ego, quiet_lidar(), rng);
    REQUIRE(scan.ranges.size() == 240);
    for (double r : scan.ranges) CHECK(r == 1.0);
}

TEST_CASE("wall at half range reads 0.5 on the forward beam") {
    std::vector<Seg> walls = {{{25.0, -5.0}, {25.0, 5.0}}};
    SensorScene scene;
    scene.boundaries = &walls;
    VehicleState ego;
    Rng rng(1);
    const LidarScan scan = raycast(scene, ego, quiet_lidar(), rng);
    CHECK(scan.ranges[0] == doctest::Approx(0.5).epsilon(1e-12));
    // wall beyond max range clips to 1
    std::vector<Seg> far = {{{80.0, -5.0}, {80.0, 5.0}}};
    scene.boundaries = &far;
    const LidarScan scan2 = raycast(scene, ego, quiet_lidar(), rng);
    CHECK(scan2.ranges[0] == 1.0);
}

TEST_CASE("raycast matches the brute-force oracle over random scenes") {
    Rng rng(77);
    LidarConfig cfg = quiet_lidar();
    for (int scene_i = 0; scene_i < 500; ++scene_i) {
        std::vector<Seg> segs;
        const int n_segs = 3 + static_cast<int>(rng.uniform_index(10));
        for (int k = 0; k < n_segs; ++k) {
            const Point2 a{rng.uniform(-45, 45), rng.uniform(-45, 45)};
            const Point2 b = a + Point2{rng.uniform(-20, 20), rng.uniform(-20, 20)};
            segs.push_back({a, b});
        }
        SensorScene scene;
        scene.boundaries = &segs;
        const int n_veh = static_cast<int>(rng.uniform_index(5));
        for (int k = 0; k < n_veh; ++k) {
            VehicleState v;
            v.position = {rng.uniform(-30, 30), rng.uniform(-30, 30)};
            v.heading = rng.uniform(-kPi, kPi);
            scene.vehicles.push_back(v);
        }
        VehicleState ego;
        ego.heading = rng.uniform(-kPi, kPi);
        Rng noise(1);
        const LidarScan mine = raycast(scene, ego, cfg, noise);
        const LidarScan oracle = oracle_scan(scene, ego, cfg);
        for (int b = 0; b < cfg.beam_count; ++b) {
            CHECK(std::abs(mine.ranges[b] - oracle.ranges[b]) < 1e-9);
        }
    }
}

TEST_CASE("rotating the scene circularly shifts the scan") {
    Rng rng(5);
    LidarConfig cfg = quiet_lidar();
    std::vector<Seg> segs;
    for (int k = 0; k < 8; ++k) {
        const Point2 a{rng.uniform(-40, 40), rng.uniform(-40, 40)};
        segs.push_back({a, a + Point2{rng.uniform(-15, 15), rng.uniform(-15, 15)}});
    }
    SensorScene scene;
    scene.boundaries = &segs;
    VehicleState v;
    v.position = {12.0, 3.0};
    scene.vehicles.push_back(v);

    const double theta = 45.0 * kPi / 180.0;  // 30 beams at 1.5 degrees
    const int shift = 30;
    std::vector<Seg> rot_segs;
    for (const Seg& s : segs) rot_segs.push_back({rotated(s.a, theta), rotated(s.b, theta)});
    SensorScene rot_scene;
    rot_scene.boundaries = &rot_segs;
    VehicleState rv = v;
    rv.position = rotated(v.position, theta);
    rv.heading = wrap_angle(v.heading + theta);
    rot_scene.vehicles.push_back(rv);

    VehicleState ego;  // at the origin, heading unchanged
    Rng noise(1);
    const LidarScan base = raycast(scene, ego, cfg, noise);
    const LidarScan rot = raycast(rot_scene, ego, cfg, noise);
    for (int i = 0; i < cfg.beam_count; ++i) {
        CHECK(rot.ranges[(i + shift) % cfg.beam_count] ==
              doctest::Approx(base.ranges[i]).epsilon(1e-9));
    }
}

TEST_CASE("adding an obstacle never increases a reading") {
    Rng rng(31);
    LidarConfig cfg = quiet_lidar();
    std::vector<Seg> segs = {{{20, -30}, {20, 30}}, {{-35, -10}, {-15, 25}}};
    SensorScene scene;
    scene.boundaries = &segs;
    VehicleState ego;
    Rng noise(1);
    const LidarScan before = raycast(scene, ego, cfg, noise);
    VehicleState obstacle;
    obstacle.position = {10.0, 2.0};
    scene.vehicles.push_back(obstacle);
    const LidarScan after = raycast(scene, ego, cfg, noise);
    for (int i = 0; i < cfg.beam_count; ++i) CHECK(after.ranges[i] <= before.ranges[i] + 1e-12);
}

TEST_CASE("per-beam noise sigma matches the configured value") {
    std::vector<Seg> walls = {{{25.0, -200.0}, {25.0, 200.0}}};
    SensorScene scene;
    scene.boundaries = &walls;
    VehicleState ego;
    LidarConfig cfg;
    cfg.noise_sigma = 0.01;
    Rng rng(123);
    const int draws = 10000;
    double sum = 0.0, sum2 = 0.0;
    for (int k = 0; k < draws; ++k) {
        const LidarScan scan = raycast(scene, ego, cfg, rng);
        sum += scan.ranges[0];
        sum2 += scan.ranges[0] * scan.ranges[0];
    }
    const double mean = sum / draws;
    const double stddev = std::sqrt(sum2 / draws - mean * mean);
    CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
    CHECK(stddev == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("v2x pads empty scenes") {
    SensorScene scene;
    VehicleState ego;
    const V2XObservation obs = v2x_query(scene, ego);
    for (const V2XReport& r : obs.reports) {
        CHECK_FALSE(r.present);
        CHECK(r.dx == 0.0);
        CHECK(r.dy == 0.0);
        CHECK(r.speed == 0.0);
    }
}

TEST_CASE("v2x single vehicle dead ahead") {
    SensorScene scene;
    VehicleState v;
    v.position = {10.0, 0.0};
    v.speed = 5.0;
    scene.vehicles.push_back(v);
    VehicleState ego;
    const V2XObservation obs = v2x_query(scene, ego);
    CHECK(obs.reports[0].present);
    CHECK(obs.reports[0].dx == doctest::Approx(10.0));
    CHECK(obs.reports[0].dy == doctest::Approx(0.0));
    CHECK(obs.reports[0].speed == doctest::Approx(5.0));
    CHECK(obs.reports[0].relative_heading == doctest::Approx(0.0));
    for (int i = 1; i < 4; ++i) CHECK_FALSE(obs.reports[i].present);
}

TEST_CASE("v2x selects the four nearest with deterministic ties") {
    SensorScene scene;
    const double dists[6] = {30.0, 5.0, 12.0, 40.0, 8.0, 19.0};
    for (int i = 0; i < 6; ++i) {
        VehicleState v;
        v.position = {dists[i], 0.0};
        v.speed = i;
        scene.vehicles.push_back(v);
    }
    VehicleState ego;
    const V2XObservation obs = v2x_query(scene, ego);
    // sorted distances: 5 (veh1), 8 (veh4), 12 (veh2), 19 (veh5)
    CHECK(obs.reports[0].dx == doctest::Approx(5.0));
    CHECK(obs.reports[1].dx == doctest::Approx(8.0));
    CHECK(obs.reports[2].dx == doctest::Approx(12.0));
    CHECK(obs.reports[3].dx == doctest::Approx(19.0));

    // equidistant vehicles resolve to the lower scene index
    SensorScene tie;
    VehicleState a, b;
    a.position = {7.0, 0.0};
    a.speed = 1.0;
    b.position = {0.0, 7.0};
    b.speed = 2.0;
    tie.vehicles = {a, b};
    const V2XObservation tobs = v2x_query(tie, ego);
    CHECK(tobs.reports[0].speed == doctest::Approx(1.0));
    CHECK(tobs.reports[1].speed == doctest::Approx(2.0));
}

TEST_CASE("v2x reports an occluded vehicle the lidar cannot see") {
    SensorScene scene;
    VehicleState occluder, hidden;
    occluder.position = {10.0, 0.0};
    hidden.position = {20.0, 0.0};
    hidden.speed = 4.0;
    scene.vehicles = {occluder, hidden};
    VehicleState ego;

    Rng rng(1);
    const LidarScan scan = raycast(scene, ego, quiet_lidar(), rng);
    // the forward beam stops at the occluder's near face
    CHECK(scan.ranges[0] * 50.0 == doctest::Approx(10.0 - occluder.length / 2.0).epsilon(1e-9));
    CHECK(scan.ranges[0] * 50.0 < 20.0 - hidden.length / 2.0);

    const V2XObservation obs = v2x_query(scene, ego);
    bool saw_hidden = false;
    for (const V2XReport& r : obs.reports) {
        if (r.present && std::abs(r.dx - 20.0) < 1e-9) saw_hidden = true;
    }
    CHECK(saw_hidden);
}

TEST_SUITE_END();
