#include "avsim/sensing.hpp"

#include <algorithm>
#include <cmath>

#include "avsim/errors.hpp"

namespace avsim {

void LidarConfig::validate() const {
    if (beam_count <= 0) throw Error(ErrorKind::Config, "lidar beam_count must be > 0");
    if (max_range <= 0.0) throw Error(ErrorKind::Config, "lidar max_range must be > 0");
    if (noise_sigma < 0.0) throw Error(ErrorKind::Config, "lidar noise_sigma must be >= 0");
    if (fov_deg <= 0.0 || fov_deg > 360.0) throw Error(ErrorKind::Config, "lidar fov out of range");
}

LidarScan raycast(const SensorScene& scene, const VehicleState& ego, const LidarConfig& cfg,
                  Rng& rng) {
    LidarScan scan;
    scan.ranges.assign(cfg.beam_count, 1.0);

    // flatten obstacle segments once per scan
    std::vector<Seg> segs;
    if (scene.boundaries) segs = *scene.boundaries;
    for (const VehicleState& v : scene.vehicles) {
        Point2 c[4];
        vehicle_corners(v, c);
        for (int i = 0; i < 4; ++i) segs.push_back({c[i], c[(i + 1) % 4]});
    }

    const double step = cfg.angular_resolution();
    for (int i = 0; i < cfg.beam_count; ++i) {
        const Point2 dir = heading_dir(ego.heading + i * step);
        double best = cfg.max_range;
        for (const Seg& s : segs) {
            double t = 0.0;
            if (ray_segment_hit(ego.position, dir, s.a, s.b, &t) && t < best) best = t;
        }
        double reading = best / cfg.max_range;
        if (cfg.noise_sigma > 0.0) reading += cfg.noise_sigma * rng.normal();
        scan.ranges[i] = std::clamp(reading, 0.0, 1.0);
    }
    return scan;
}

V2XObservation v2x_query(const SensorScene& scene, const VehicleState& ego) {
    V2XObservation out;
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(scene.vehicles.size());
    for (std::size_t i = 0; i < scene.vehicles.size(); ++i) {
        order.push_back({distance(scene.vehicles[i].position, ego.position), i});
    }
    std::sort(order.begin(), order.end());

    const std::size_t k = std::min<std::size_t>(out.reports.size(), order.size());
    for (std::size_t slot = 0; slot < k; ++slot) {
        const VehicleState& v = scene.vehicles[order[slot].second];
        const Point2 rel = rotated(v.position - ego.position, -ego.heading);
        V2XReport& r = out.reports[slot];
        r.dx = rel.x;
        r.dy = rel.y;
        r.speed = v.speed;
        r.relative_heading = wrap_angle(v.heading - ego.heading);
        r.present = true;
    }
    return out;
}

}  // namespace avsim
