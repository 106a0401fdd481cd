#include <doctest.h>

#include "rnoid/errors.hpp"
#include "rnoid/period.hpp"

#include <cmath>
#include <complex>
#include <cstring>
#include <filesystem>

using namespace rnoid;

namespace {

FluxPolygon equilateral()
{
    return from_edge_vectors({{1, 0}, {-0.5, std::sqrt(3.0) / 2}, {-0.5, -std::sqrt(3.0) / 2}});
}

FluxPolygon unit_square() { return from_edge_vectors({{1, 0}, {0, 1}, {-1, 0}, {0, -1}}); }

PeriodOptions coarse()
{
    PeriodOptions o;
    o.mesh.h = 0.1;
    return o;
}

bool same_bits(const PeriodSample& a, const PeriodSample& b)
{
    auto eq = [](double x, double y) { return std::memcmp(&x, &y, sizeof x) == 0; };
    return eq(a.raw.x(), b.raw.x()) && eq(a.raw.y(), b.raw.y()) && eq(a.third, b.third) && eq(a.c, b.c) &&
           a.newton_iters == b.newton_iters;
}

// Values of f on the boundary of the square [x0, x0 + s] x [y0, y0 + s], counterclockwise.
template <class F>
std::vector<Point> square_loop(F f, double x0, double y0, double s, int per_side = 16)
{
    std::vector<Point> out;
    const Point corners[4] = {{x0, y0}, {x0 + s, y0}, {x0 + s, y0 + s}, {x0, y0 + s}};
    for (int k = 0; k < 4; ++k)
        for (int j = 0; j < per_side; ++j) {
            const double t = static_cast<double>(j) / per_side;
            out.push_back(f((1 - t) * corners[k] + t * corners[(k + 1) % 4]));
        }
    return out;
}

Point product_field(const Point& A)
{
    // Zeros at 0.3 + 0.3i and 0.7 + 0.6i, each of index +1.
    const std::complex<double> z(A.x(), A.y());
    const std::complex<double> w = (z - std::complex<double>(0.3, 0.3)) * (z - std::complex<double>(0.7, 0.6));
    return Point(w.real(), w.imag());
}

double signed_area(const std::vector<LoopPoint>& loop)
{
    double a = 0.0;
    for (std::size_t k = 0; k < loop.size(); ++k) {
        const Point& p = loop[k].A;
        const Point& q = loop[(k + 1) % loop.size()].A;
        a += p.x() * q.y() - p.y() * q.x();
    }
    return 0.5 * a;
}

const VertexCurve& triangle_curve()
{
    static const VertexCurve c = extract_vertex_curve(equilateral(), 0, coarse());
    return c;
}

} // namespace

TEST_CASE("renormalization")
{
    CHECK((renormalize(Point(0.3, 0.4)) - Point(0.3, 0.4)).norm() == 0.0);
    CHECK((renormalize(Point(3, 4)) - Point(0.6, 0.8)).norm() < 1e-15);
    for (const Point& raw : {Point(-7, 2), Point(0.01, -0.02), Point(1e6, 1e-3)}) {
        const Point r = renormalize(raw);
        CHECK(r.norm() <= 1.0 + 1e-15);
        CHECK(r.dot(raw) > 0.0);
        CHECK(std::abs(r.x() * raw.y() - r.y() * raw.x()) <= 1e-12 * raw.norm());
    }
}

TEST_CASE("edge limits are the outward normals")
{
    const FluxPolygon sq = unit_square();
    CHECK((edge_limit(sq, 0, 0.5) - Point(0, -1)).norm() == 0.0);
    CHECK((edge_limit(sq, 0, 0.25) - Point(0, -1)).norm() == 0.0);
    const FluxPolygon tri = equilateral();
    const Point v = tri.edge(1);
    CHECK((edge_limit(tri, 1, 0.3) - Point(v.y(), -v.x()) / v.norm()).norm() < 1e-15);
}

TEST_CASE("normal parametrization of a circle arc")
{
    const Point centre(0.5, -1.0);
    std::vector<Point> arc;
    for (int k = 0; k <= 200; ++k) {
        const double phi = -0.3 + (M_PI / 2) * k / 200.0;
        arc.push_back(centre + 2.0 * Point(std::cos(phi), std::sin(phi)));
    }
    const NormalCurve g = normal_parametrize(arc);
    CHECK(g.turning() == doctest::Approx(M_PI / 2).epsilon(0.02));
    for (double b = g.begin() + 0.05; b < g.end() - 0.05; b += 0.1)
        CHECK((g(b) - (centre + 2.0 * Point(std::sin(b), -std::cos(b)))).norm() < 1e-3);
    for (std::size_t k = 1; k < g.beta.size(); ++k) CHECK(g.beta[k] > g.beta[k - 1]);

    CHECK_THROWS_AS(normal_parametrize({{0, 0}, {1, 0}, {2, 0}, {3, 0}}), period_errors::NotStrictlyConvex);
    CHECK_THROWS_AS(normal_parametrize({{0, 0}, {1, 0}, {2, 1}, {3, 0}}), period_errors::NotStrictlyConvex);
}

TEST_CASE("winding numbers of synthetic fields")
{
    std::vector<Point> constant(32, Point(1, 0));
    CHECK(winding_number(constant) == 0);

    const Point A0(0.2, -0.1);
    std::vector<Point> identity;
    for (int k = 0; k < 32; ++k) {
        const double t = 2 * M_PI * k / 32;
        identity.push_back(A0 + 0.3 * Point(std::cos(t), std::sin(t)) - A0);
    }
    CHECK(winding_number(identity) == 1);
    std::vector<Point> reversed(identity.rbegin(), identity.rend());
    CHECK(winding_number(reversed) == -1);

    std::vector<Point> coarse_loop = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    CHECK_THROWS_AS(winding_number(coarse_loop), period_errors::Undersampled);
    identity[5] = Point(0, 1e-9);
    CHECK_THROWS_AS(winding_number(identity), period_errors::ZeroOnLoop);
}

TEST_CASE("winding is additive over quadtree children and unchanged by renormalization")
{
    const int parent = winding_number(square_loop(product_field, 0.0, 0.0, 1.0, 64));
    CHECK(parent == 2);
    int sum = 0;
    for (double x : {0.0, 0.5})
        for (double y : {0.0, 0.5}) sum += winding_number(square_loop(product_field, x, y, 0.5, 64));
    CHECK(sum == parent);
    auto clamped = [](const Point& A) { return renormalize(product_field(A)); };
    CHECK(winding_number(square_loop(clamped, 0.0, 0.0, 1.0, 64)) == parent);
}

TEST_CASE("boundary loops")
{
    const FluxPolygon tri = equilateral();
    const auto loop = boundary_loop(tri, 0.05, 48);
    CHECK(loop.size() == 48);
    CHECK(signed_area(loop) > 0.0);
    int arcs = 0;
    for (const auto& p : loop) {
        CHECK(contains(tri, p.A).inside);
        CHECK(contains(tri, p.A).distance > 0.0);
        arcs += p.on_arc ? 1 : 0;
    }
    CHECK(arcs == 24);
    CHECK_THROWS_AS(boundary_loop(tri, 0.05, 3), period_errors::TooFewSamples);
    CHECK_THROWS_AS(boundary_loop(tri, 0.2, 48), period_errors::InsetTooLarge);
}

TEST_CASE("vertex limits")
{
    const VertexCurve& c = triangle_curve();
    CHECK(c.alpha == doctest::Approx(M_PI / 3));
    CHECK(c.gamma.turning() == doctest::Approx(c.alpha + M_PI).epsilon(0.02));
    CHECK((vertex_limit(c, 0.0) - Point(0, -1)).norm() == 0.0);
    CHECK((vertex_limit(c, c.alpha) - Point(-std::sin(c.alpha), std::cos(c.alpha))).norm() == 0.0);

    SUBCASE("chord direction turns monotonically and faces the tangent")
    {
        double prev = -std::numeric_limits<double>::infinity();
        for (int k = 0; k <= 40; ++k) {
            const double theta = c.alpha * k / 40.0;
            const Point v = vertex_limit(c, theta);
            CHECK(v.norm() <= 1.0 + 1e-12);
            CHECK(v.dot(Point(std::cos(theta), std::sin(theta))) >= -1e-9);
            double angle = std::atan2(v.y(), v.x());
            while (angle < prev - M_PI) angle += 2 * M_PI;
            CHECK(angle >= prev - 1e-9);
            prev = angle;
        }
    }
    SUBCASE("vertex frame")
    {
        const FluxPolygon tri = equilateral();
        const Point e = vertex_frame_to_plane(tri, 0, Point(1, 0));
        CHECK((e - tri.edge(0).normalized()).norm() < 1e-15);
    }
}

TEST_CASE("star specs")
{
    CHECK_THROWS_AS(symmetric_zero(StarSpec{4, 2}, coarse()), polygon_errors::InvalidStar);
    const SymmetricResult s = symmetric_zero(StarSpec{4, 1}, coarse());
    CHECK(s.period.head<2>().norm() <= 1e-6 * star_polygon(StarSpec{4, 1}).diameter());
    CHECK(s.A.norm() < 1e-15);
    CHECK(s.surface.welded);
}

TEST_CASE("period map samples are reproducible and cached")
{
    const FluxPolygon tri = equilateral();
    const Point A(0.45, 0.3);
    PeriodMap a(tri, coarse()), b(tri, coarse());
    const PeriodSample sa = a(A), sb = b(A);
    CHECK(same_bits(sa, sb));
    CHECK(sa.renormalized == renormalize(sa.raw));
    a(A);
    CHECK(a.solves() == 1);

    const auto dir = std::filesystem::temp_directory_path() / "rnoid-period-test";
    std::filesystem::remove_all(dir);
    PeriodOptions cached = coarse();
    cached.cache_dir = dir;
    PeriodMap first(tri, cached);
    const auto s1 = first.evaluate({A, Point(0.5, 0.2)}, 2);
    PeriodMap second(tri, cached);
    const auto s2 = second.evaluate({A, Point(0.5, 0.2)});
    CHECK(second.solves() == 0);
    CHECK(same_bits(s1[0], s2[0]));
    CHECK(same_bits(s1[1], s2[1]));
    CHECK(same_bits(s1[0], sa));
    std::filesystem::remove_all(dir);
}

TEST_CASE("near-edge samples point along the outward normal")
{
    const FluxPolygon tri = equilateral();
    PeriodMap m(tri, coarse());
    const Point A = 0.5 * (tri.vertex(0) + tri.vertex(1)) - 0.05 * tri.diameter() * outward_normal(tri, 0);
    CHECK((m(A).renormalized - edge_limit(tri, 0, 0.5)).norm() <= 0.15);
}
