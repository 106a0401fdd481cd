#include <doctest.h>

#include "rnoid/geometry.hpp"
#include "rnoid/mesher.hpp"

#include <cmath>
#include <map>
#include <set>

using namespace rnoid;

namespace {

double smallest_angle_deg(const mesher::Output& out)
{
    double m = 180.0;
    for (const auto& t : out.triangles)
        m = std::min(m, min_angle<double>(out.points[t[0]], out.points[t[1]], out.points[t[2]]) * 180.0 / M_PI);
    return m;
}

double total_area(const mesher::Output& out)
{
    double a = 0.0;
    for (const auto& t : out.triangles) a += signed_area<double>(out.points[t[0]], out.points[t[1]], out.points[t[2]]);
    return a;
}

} // namespace

TEST_CASE("square is triangulated with good angles")
{
    mesher::Input in;
    in.points = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    in.segments = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    mesher::Options opts;
    opts.size = [](const Point&) { return 0.1; };
    const auto out = mesher::triangulate(in, opts);
    CHECK(out.triangles.size() > 100);
    CHECK(total_area(out) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(smallest_angle_deg(out) > 20.0);
    for (const auto& t : out.triangles) CHECK(orient(out.points[t[0]], out.points[t[1]], out.points[t[2]]) > 0.0);
}

TEST_CASE("hole and interior slit")
{
    mesher::Input in;
    in.points = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
    in.segments = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    const int n = 16;
    const double eps = 0.05;
    for (int k = 0; k < n; ++k) in.points.emplace_back(eps * std::cos(2 * M_PI * k / n), eps * std::sin(2 * M_PI * k / n));
    for (int k = 0; k < n; ++k) in.segments.push_back({4 + k, 4 + (k + 1) % n, 1});
    in.segments.push_back({4, 1, 2});   // slit from the hole to a corner
    in.holes.push_back({0, 0});
    mesher::Options opts;
    opts.size = [&](const Point& x) { return std::min(0.15, 0.01 + 0.25 * x.norm()); };
    const auto out = mesher::triangulate(in, opts);
    CHECK(smallest_angle_deg(out) > 20.0);
    CHECK(total_area(out) == doctest::Approx(4.0 - 0.5 * n * eps * eps * std::sin(2 * M_PI / n)).epsilon(1e-10));
    // the slit is a chain of subsegments covering [0, 1]
    double covered = 0.0;
    for (const auto& s : out.subsegments)
        if (s.segment == 16) covered += s.t1 - s.t0;
    CHECK(covered == doctest::Approx(1.0));
}

TEST_CASE("partner segments are split identically")
{
    mesher::Input in;
    // wedge with two straight sides from a small arc; sides mirrored by rotation
    const double phi = 2 * M_PI / 5;
    const double eps = 0.05;
    in.points = {{eps, 0}, {1, 0}, {std::cos(phi), std::sin(phi)}, {eps * std::cos(phi), eps * std::sin(phi)}};
    in.segments = {{0, 1, 1}, {1, 2, 2}, {3, 2, 3, 0}, {3, 0, 4}};
    mesher::Options opts;
    opts.size = [](const Point& x) { return 0.01 + 0.2 * x.norm(); };
    const auto out = mesher::triangulate(in, opts);
    std::vector<double> t1, t2;
    for (const auto& s : out.subsegments) {
        if (s.segment == 0) t1.push_back(s.t0);
        if (s.segment == 2) t2.push_back(s.t0);
    }
    REQUIRE(t1.size() == t2.size());
    for (std::size_t i = 0; i < t1.size(); ++i) CHECK(t1[i] == doctest::Approx(t2[i]).epsilon(1e-14));
    CHECK(smallest_angle_deg(out) > 20.0);
}
