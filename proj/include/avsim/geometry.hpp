#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace avsim {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(Point2 a, double s) { return {a.x * s, a.y * s}; }
inline Point2 operator*(double s, Point2 a) { return a * s; }

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm2(Point2 a) { return dot(a, a); }
inline double norm(Point2 a) { return std::sqrt(norm2(a)); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

inline Point2 normalized(Point2 a) {
    const double n = norm(a);
    return n > 0.0 ? Point2{a.x / n, a.y / n} : Point2{0.0, 0.0};
}

// +90 degree rotation; the left normal of a direction vector
inline Point2 perp_left(Point2 a) { return {-a.y, a.x}; }

inline Point2 rotated(Point2 a, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {a.x * c - a.y * s, a.x * s + a.y * c};
}

inline Point2 heading_dir(double heading) { return {std::cos(heading), std::sin(heading)}; }

// wrap to (-pi, pi]
inline double wrap_angle(double a) {
    a = std::fmod(a, kTwoPi);
    if (a <= -kPi) a += kTwoPi;
    if (a > kPi) a -= kPi * 2.0;
    return a;
}

// wrap to [0, 2pi)
inline double wrap_positive(double a) {
    a = std::fmod(a, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    return a;
}

struct Seg {
    Point2 a;
    Point2 b;
};

// closest point on segment [a, b]; t_out gets the clamped parameter in [0, 1]
inline Point2 closest_point_on_segment(Point2 p, Point2 a, Point2 b, double* t_out = nullptr) {
    const Point2 ab = b - a;
    const double len2 = norm2(ab);
    double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
    t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
    if (t_out) *t_out = t;
    return a + ab * t;
}

inline double point_segment_distance(Point2 p, Point2 a, Point2 b) {
    return distance(p, closest_point_on_segment(p, a, b));
}

// ray from `origin` along unit `dir` against segment [a, b]; returns hit
// distance >= 0 through t_out, false on miss. Parallel rays count as misses.
inline bool ray_segment_hit(Point2 origin, Point2 dir, Point2 a, Point2 b, double* t_out) {
    const Point2 ab = b - a;
    const double denom = cross(dir, ab);
    if (std::abs(denom) < 1e-15) return false;
    const Point2 ao = a - origin;
    const double t = cross(ao, ab) / denom;
    const double u = cross(ao, dir) / denom;
    if (t < 0.0 || u < 0.0 || u > 1.0) return false;
    if (t_out) *t_out = t;
    return true;
}

// proper or touching intersection of segments [p1,p2] and [q1,q2]
inline bool seg_seg_intersect(Point2 p1, Point2 p2, Point2 q1, Point2 q2,
                              double* s_out = nullptr, double* t_out = nullptr) {
    const Point2 r = p2 - p1, s = q2 - q1;
    const double denom = cross(r, s);
    if (std::abs(denom) < 1e-15) return false;
    const Point2 qp = q1 - p1;
    const double t = cross(qp, s) / denom;
    const double u = cross(qp, r) / denom;
    if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) return false;
    if (s_out) *s_out = t;
    if (t_out) *t_out = u;
    return true;
}

inline double polyline_length(const std::vector<Point2>& pts) {
    double len = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) len += distance(pts[i - 1], pts[i]);
    return len;
}

// crossing-number test on a closed loop (last->first edge implied)
inline bool point_in_polygon(Point2 p, const std::vector<Point2>& loop) {
    bool inside = false;
    const std::size_t n = loop.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point2 a = loop[j], b = loop[i];
        if ((b.y > p.y) != (a.y > p.y)) {
            const double x = b.x + (p.y - b.y) / (a.y - b.y) * (a.x - b.x);
            if (p.x < x) inside = !inside;
        }
    }
    return inside;
}

inline double point_polyline_distance(Point2 p, const std::vector<Point2>& pts, bool closed) {
    double best = 1e300;
    const std::size_t n = pts.size();
    if (n == 1) return distance(p, pts[0]);
    for (std::size_t i = 1; i < n; ++i) {
        const double d = point_segment_distance(p, pts[i - 1], pts[i]);
        if (d < best) best = d;
    }
    if (closed && n > 2) {
        const double d = point_segment_distance(p, pts[n - 1], pts[0]);
        if (d < best) best = d;
    }
    return best;
}

}  // namespace avsim
