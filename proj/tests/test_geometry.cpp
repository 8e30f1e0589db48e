#include "doctest.h"

#include <cmath>

#include "avsim/geometry.hpp"
#include "avsim/rng.hpp"

using namespace avsim;

TEST_SUITE_BEGIN("geometry");

TEST_CASE("wrap_angle maps into (-pi, pi]") {
    CHECK(wrap_angle(0.0) == doctest::Approx(0.0));
    CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(kTwoPi + 0.25) == doctest::Approx(0.25));
    CHECK(wrap_angle(-kTwoPi - 0.25) == doctest::Approx(-0.25));
}

TEST_CASE("closest point on segment clamps to endpoints") {
    const Point2 a{0, 0}, b{10, 0};
    double t = -1;
    Point2 cp = closest_point_on_segment({5, 3}, a, b, &t);
    CHECK(cp.x == doctest::Approx(5));
    CHECK(cp.y == doctest::Approx(0));
    CHECK(t == doctest::Approx(0.5));
    cp = closest_point_on_segment({-4, 2}, a, b, &t);
    CHECK(cp.x == doctest::Approx(0));
    CHECK(t == doctest::Approx(0));
    cp = closest_point_on_segment({14, -2}, a, b, &t);
    CHECK(cp.x == doctest::Approx(10));
    CHECK(t == doctest::Approx(1));
}

TEST_CASE("ray-segment intersection") {
    double t = 0;
    CHECK(ray_segment_hit({0, 0}, {1, 0}, {5, -1}, {5, 1}, &t));
    CHECK(t == doctest::Approx(5.0));
    CHECK_FALSE(ray_segment_hit({0, 0}, {-1, 0}, {5, -1}, {5, 1}, &t));  // behind
    CHECK_FALSE(ray_segment_hit({0, 0}, {1, 0}, {5, 1}, {5, 3}, &t));    // above
    CHECK_FALSE(ray_segment_hit({0, 0}, {1, 0}, {2, 0}, {9, 0}, &t));    // parallel
}

TEST_CASE("segment-segment intersection with parameters") {
    double s = 0, t = 0;
    CHECK(seg_seg_intersect({0, 0}, {10, 0}, {5, -5}, {5, 5}, &s, &t));
    CHECK(s == doctest::Approx(0.5));
    CHECK(t == doctest::Approx(0.5));
    CHECK_FALSE(seg_seg_intersect({0, 0}, {10, 0}, {11, -5}, {11, 5}));
}

TEST_CASE("point in polygon, square") {
    const std::vector<Point2> square = {{0, 0}, {4, 0}, {4, 4}, {0, 4}};
    CHECK(point_in_polygon({2, 2}, square));
    CHECK_FALSE(point_in_polygon({5, 2}, square));
    CHECK_FALSE(point_in_polygon({-1, -1}, square));
}

TEST_CASE("rng determinism and normal statistics") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    bool differs = false;
    Rng a2(42);
    for (int i = 0; i < 10; ++i) differs |= a2.next_u64() != c.next_u64();
    CHECK(differs);

    Rng n(7);
    double mean = 0.0, var = 0.0;
    const int k = 100000;
    std::vector<double> xs(k);
    for (int i = 0; i < k; ++i) {
        xs[i] = n.normal();
        mean += xs[i];
    }
    mean /= k;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= k;
    CHECK(std::abs(mean) < 0.02);
    CHECK(var == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("rng serialization round-trip") {
    Rng a(99);
    for (int i = 0; i < 17; ++i) a.normal();
    const std::string s = a.serialize();
    Rng b(0);
    b.deserialize(s);
    for (int i = 0; i < 50; ++i) {
        CHECK(a.normal() == b.normal());
        CHECK(a.next_u64() == b.next_u64());
    }
}

TEST_SUITE_END();
