#include <doctest.h>

#include "rnoid/errors.hpp"
#include "rnoid/polygon.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace rnoid;

namespace {

FluxPolygon unit_square(const Point& anchor = Point::Zero())
{
    return from_edge_vectors({{1, 0}, {0, 1}, {-1, 0}, {0, -1}}, anchor);
}

// Points on an ellipse at sorted random angles give a strictly convex polygon.
FluxPolygon random_convex(std::mt19937& rng, int r)
{
    std::uniform_real_distribution<double> angle(0.0, 2 * M_PI), axis(0.5, 2.0);
    std::vector<double> t(r);
    for (double& a : t) a = angle(rng);
    std::sort(t.begin(), t.end());
    const double ax = axis(rng), ay = axis(rng);
    std::vector<Point> pts;
    for (double a : t) pts.emplace_back(ax * std::cos(a), ay * std::sin(a));
    std::vector<Point> edges;
    for (int i = 0; i < r; ++i) edges.push_back(pts[(i + 1) % r] - pts[i]);
    // Make the closure exact so the sum test sees no rounding.
    edges.back() = -std::accumulate(edges.begin(), edges.end() - 1, Point(Point::Zero()));
    return from_edge_vectors(edges, pts.front());
}

} // namespace

TEST_CASE("vertices follow the edge vectors")
{
    const FluxPolygon sq = unit_square(Point(2, -1));
    REQUIRE(sq.r() == 4);
    CHECK((sq.vertex(0) - Point(2, -1)).norm() == 0.0);
    CHECK((sq.vertex(2) - Point(3, 0)).norm() == 0.0);
    CHECK((sq.vertex(4) - sq.vertex(0)).norm() == 0.0);
    CHECK((sq.vertex(-1) - Point(2, 0)).norm() == 0.0);
    CHECK(sq.diameter() == doctest::Approx(std::sqrt(2.0)));
    CHECK((sq.centroid() - Point(2.5, -0.5)).norm() < 1e-15);
    CHECK(sq.min_edge_length() == 1.0);
    CHECK(sq.max_edge_length() == 1.0);
    CHECK(sq.is_convex());
}

TEST_CASE("invalid edge lists")
{
    CHECK_THROWS_AS(from_edge_vectors({{1, 0}, {-1, 0}}), polygon_errors::TooFewEdges);
    CHECK_THROWS_AS(from_edge_vectors({{1, 0}, {0, 0}, {-1, 0}}), polygon_errors::DegenerateEdge);
    CHECK_THROWS_AS(from_edge_vectors({{1, 0}, {0, 1}, {-1, 0}}), polygon_errors::ClosureViolation);
    CHECK_THROWS_AS(from_edge_vectors({{1, 0}, {-1, 0}, {1, 0}, {-1, 0}}), polygon_errors::DegenerateEdge);
    CHECK_FALSE(from_edge_vectors({{1, 0}, {0, 1}, {0, 1}, {-1, 0}, {0, -2}}).is_convex());
    CHECK_FALSE(from_edge_vectors({{0, 1}, {1, 0}, {0, -1}, {-1, 0}}).is_convex());
}

TEST_CASE("angles and normals of the square")
{
    const FluxPolygon sq = unit_square();
    for (double a : interior_angles(sq)) CHECK(a == doctest::Approx(M_PI / 2));
    const Point expected[4] = {{0, -1}, {1, 0}, {0, 1}, {-1, 0}};
    for (int i = 0; i < 4; ++i) CHECK((outward_normal(sq, i) - expected[i]).norm() < 1e-15);
}

TEST_CASE("containment")
{
    const FluxPolygon sq = unit_square();
    const Containment mid = contains(sq, Point(0.5, 0.5));
    CHECK(mid.inside);
    CHECK(mid.distance == doctest::Approx(0.5));
    CHECK(contains(sq, Point(0.1, 0.7)).distance == doctest::Approx(0.1));
    const Containment out = contains(sq, Point(1.5, 0.5));
    CHECK_FALSE(out.inside);
    CHECK(out.distance == doctest::Approx(-0.5));
    CHECK_FALSE(contains(sq, Point(1.0, 0.5)).inside);
    CHECK_FALSE(contains(sq, Point(0.0, 0.0)).inside);
}

TEST_CASE("star polygons")
{
    CHECK_THROWS_AS(validate_star({4, 2}), polygon_errors::InvalidStar);
    CHECK_THROWS_AS(validate_star({6, 3}), polygon_errors::InvalidStar);
    CHECK_THROWS_AS(validate_star({2, 1}), polygon_errors::InvalidStar);
    CHECK_THROWS_AS(validate_star({7, 0}), polygon_errors::InvalidStar);
    CHECK_NOTHROW(validate_star({7, 3}));

    for (const StarSpec s : {StarSpec{3, 1}, StarSpec{4, 1}, StarSpec{5, 2}, StarSpec{7, 3}, StarSpec{8, 3}}) {
        CAPTURE(s.r);
        CAPTURE(s.q);
        const FluxPolygon p = star_polygon(s);
        CHECK(p.r() == s.r);
        // Equal chords of the unit circle subtending 2 pi q / r.
        for (const Point& v : p.edges()) CHECK(v.norm() == doctest::Approx(2 * std::sin(M_PI * s.q / s.r)));
        for (const Point& v : p.vertices()) CHECK(v.norm() == doctest::Approx(1.0));
        // The edges turn q full times.
        double turning = 0.0;
        for (double a : interior_angles(p)) turning += M_PI - a;
        CHECK(turning == doctest::Approx(2 * M_PI * s.q));
        CHECK(p.is_convex() == (s.q == 1));
        const double diam = s.r % 2 == 0 ? 2.0 : 2 * std::cos(M_PI / (2 * s.r));
        CHECK(p.diameter() == doctest::Approx(diam));
        CHECK(p.centroid().norm() < 1e-14);
    }
}

TEST_CASE("symmetry detection")
{
    const double rot = 0.4, scale = 2.5;
    const Point shift(1.0, -3.0);
    for (const StarSpec s : {StarSpec{3, 1}, StarSpec{5, 2}, StarSpec{7, 2}}) {
        const FluxPolygon base = star_polygon(s);
        std::vector<Point> edges;
        const Eigen::Matrix2d S = scale * Eigen::Rotation2Dd(rot).toRotationMatrix();
        for (const Point& v : base.edges()) edges.push_back(S * v);
        const FluxPolygon moved = from_edge_vectors(edges, shift + S * base.vertex(0));
        Symmetry sym;
        REQUIRE(detect_symmetry(moved, sym));
        CHECK(sym.spec.r == s.r);
        CHECK(sym.spec.q == s.q);
        CHECK((sym.center - shift).norm() < 1e-12);
        CHECK(sym.radius == doctest::Approx(scale));
        CHECK(sym.phase == doctest::Approx(rot));
    }
    Symmetry sym;
    CHECK_FALSE(detect_symmetry(from_edge_vectors({{-1.3, 0.8}, {-0.4, -1.6}, {1.7, 0.8}}), sym));
    CHECK_FALSE(detect_symmetry(from_edge_vectors({{2, 0}, {0, 1}, {-2, 0}, {0, -1}}), sym));
}

TEST_CASE("random convex polygons")
{
    std::mt19937 rng(20261016);
    for (int trial = 0; trial < 200; ++trial) {
        const int r = 3 + trial % 8;
        const FluxPolygon p = random_convex(rng, r);
        if (p.min_edge_length() < 1e-3) continue;
        CAPTURE(trial);
        CHECK(p.is_convex());
        const auto alpha = interior_angles(p);
        CHECK(std::accumulate(alpha.begin(), alpha.end(), 0.0) == doctest::Approx((r - 2) * M_PI));
        for (double a : alpha) CHECK((a > 0.0 && a < M_PI));
        CHECK(contains(p, p.centroid()).inside);
        for (int i = 0; i < r; ++i) {
            // The outward normal points away from every other vertex.
            const Point n = outward_normal(p, i);
            for (int j = 0; j < r; ++j)
                if (j != i && j != p.wrap(i + 1)) CHECK(n.dot(p.vertex(j) - p.vertex(i)) < 0.0);
        }
    }
}
