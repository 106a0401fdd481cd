#include <doctest.h>

#include "rnoid/domain.hpp"
#include "rnoid/errors.hpp"

#include <cmath>
#include <map>
#include <set>
#include <sstream>

using namespace rnoid;

namespace {

FluxPolygon equilateral()
{
    return from_edge_vectors({{1, 0}, {-0.5, std::sqrt(3.0) / 2}, {-0.5, -std::sqrt(3.0) / 2}});
}

FluxPolygon unit_square() { return from_edge_vectors({{1, 0}, {0, 1}, {-1, 0}, {0, -1}}); }

std::map<std::string, int> tag_counts(const DomainMesh& m)
{
    std::map<std::string, int> c;
    for (const auto& b : m.boundary) ++c[tag_name(b.tag, b.index)];
    return c;
}

} // namespace

TEST_CASE("cut domain of the equilateral triangle")
{
    const auto poly = equilateral();
    const Point A(0.5, std::sqrt(3.0) / 6);
    const CutDomain d = build_cut_domain(poly, A, 8.0);
    CHECK(d.polygon.r() == 3);
    CHECK((d.polygon.vertex(0) - Point(0, 0)).norm() < 1e-15);
    CHECK((*d.puncture - A).norm() < 1e-15);
    CHECK_THROWS_AS(build_cut_domain(poly, Point(0.5, 0.0), 8.0), domain_errors::PunctureTooClose);
    CHECK_THROWS_AS(build_cut_domain(poly, Point(0.5, -0.2), 8.0), domain_errors::PunctureTooClose);
}

TEST_CASE("triangulated cut domain satisfies the mesh contract")
{
    const auto poly = equilateral();
    const Point A(0.5, std::sqrt(3.0) / 6);
    MeshParams p;
    p.h = 0.1;
    const DomainMesh m = triangulate(build_cut_domain(poly, A, 8.0), p);
    const MeshQuality q = mesh_quality(m);
    CHECK(q.min_angle_deg >= 20.0);
    CHECK(q.consistent_orientation);
    CHECK(q.euler_characteristic == 1);
    REQUIRE(m.has_cut());
    for (const auto& [a, b] : m.cut_pairing) {
        CHECK(a != b);
        CHECK((m.nodes[a] - m.nodes[b]).norm() <= 1e-12);
    }
    // pairing ordered from the puncture to P_1
    CHECK(m.cut_pairing.back().first == m.vertex_node[0]);
    CHECK(m.cut_pairing.back().second == m.vertex_minus_node);
    const auto c = tag_counts(m);
    for (int i = 1; i <= 3; ++i) {
        CHECK(c.count("STRIP_PLUS(" + std::to_string(i) + ")"));
        CHECK(c.count("STRIP_MINUS(" + std::to_string(i) + ")"));
        CHECK(c.count("STRIP_CAP(" + std::to_string(i) + ")"));
    }
    CHECK(c.at("CUT_PLUS") == c.at("CUT_MINUS"));
    CHECK(c.count("PUNCTURE"));
    // wall chains lie on the lines through P_i along the strip directions
    for (const auto& b : m.boundary) {
        if (b.tag != EdgeTag::StripPlus && b.tag != EdgeTag::StripMinus) continue;
        const int strip = b.tag == EdgeTag::StripPlus ? b.index : poly.wrap(b.index - 1);
        const Point n = outward_normal(poly, strip);
        const Point P = poly.vertex(b.index);
        for (int v : {b.a, b.b}) CHECK(std::abs(cross2<double>(m.nodes[v] - P, n)) < 1e-12);
    }
    // the plus copy of P_1 touches strip 1, the minus copy touches strip r
    std::set<int> plus_regions, minus_regions;
    for (std::size_t t = 0; t < m.triangles.size(); ++t)
        for (int v : m.triangles[t]) {
            if (v == m.vertex_node[0]) plus_regions.insert(m.tri_region[t]);
            if (v == m.vertex_minus_node) minus_regions.insert(m.tri_region[t]);
        }
    CHECK(plus_regions.count(0));
    CHECK(!plus_regions.count(2));
    CHECK(minus_regions.count(2));
    CHECK(!minus_regions.count(0));
}

TEST_CASE("refinement sweep increases node count with bounded angles")
{
    const auto poly = equilateral();
    const Point A(0.5, std::sqrt(3.0) / 6);
    std::size_t last = 0;
    for (double h : {0.2, 0.1, 0.05}) {
        MeshParams p;
        p.h = h;
        const DomainMesh m = triangulate(build_cut_domain(poly, A, 8.0, h), p);
        CHECK(m.node_count() > last);
        CHECK(mesh_quality(m).min_angle_deg >= 20.0);
        last = m.node_count();
    }
    MeshParams bad;
    bad.h = 0.0;
    CHECK_THROWS_AS(triangulate(build_cut_domain(poly, A, 8.0), bad), domain_errors::MeshFailure);
}

TEST_CASE("genus zero domain has only strip tags")
{
    MeshParams p;
    p.h = 0.1;
    const DomainMesh m = genus0_domain(unit_square(), 8.0, p);
    CHECK(!m.has_cut());
    CHECK(mesh_quality(m).euler_characteristic == 1);
    int walls = 0;
    std::set<std::pair<int, int>> chains;
    for (const auto& b : m.boundary) {
        CHECK((b.tag == EdgeTag::StripPlus || b.tag == EdgeTag::StripMinus || b.tag == EdgeTag::StripCap));
        if (b.tag != EdgeTag::StripCap) chains.insert({static_cast<int>(b.tag), b.index});
    }
    walls = static_cast<int>(chains.size());
    CHECK(walls == 8);
}

TEST_CASE("star sector and its replication")
{
    for (StarSpec spec : {StarSpec{3, 1}, StarSpec{5, 2}}) {
        MeshParams p;
        p.h = 0.1;
        const double L = 10.0 * star_polygon(spec).max_edge_length();
        const DomainMesh s = triangulate(build_star_domain(spec, L), p);
        CHECK(s.sector);
        CHECK(mesh_quality(s).min_angle_deg >= 20.0);
        CHECK(s.pairing_rotation == doctest::Approx(2 * M_PI * spec.q / spec.r));
        for (const auto& [a, b] : s.cut_pairing)
            CHECK((rotate(s.nodes[a], s.pairing_rotation) - s.nodes[b]).norm() < 1e-12);
        const Replication rep = replicate_sector(s, spec.r);
        const DomainMesh& m = rep.mesh;
        const MeshQuality q = mesh_quality(m);
        CHECK(q.consistent_orientation);
        CHECK(q.euler_characteristic == 1);
        CHECK(m.has_cut());
        for (const auto& [a, b] : m.cut_pairing) CHECK((m.nodes[a] - m.nodes[b]).norm() < 1e-12);
        const auto c = tag_counts(m);
        for (int i = 1; i <= spec.r; ++i) {
            CHECK(c.count("STRIP_PLUS(" + std::to_string(i) + ")"));
            CHECK(c.count("STRIP_MINUS(" + std::to_string(i) + ")"));
        }
        CHECK(!c.count("SECTOR_START"));
        CHECK((m.nodes[m.vertex_minus_node] - m.nodes[m.vertex_node[0]]).norm() < 1e-12);
    }
}

TEST_CASE("morphing a fan-constrained mesh moves the puncture")
{
    const auto poly = equilateral();
    const Point A0(0.5, std::sqrt(3.0) / 6);
    CutDomain d = build_cut_domain(poly, A0, 8.0);
    d.fan_constraints = true;
    MeshParams p;
    p.h = 0.1;
    const DomainMesh ref = triangulate(d, p);
    const DomainMesh m = morph_puncture(ref, Point(0.55, 0.3));
    CHECK(mesh_quality(m).consistent_orientation);
    for (int v : m.vertex_node) CHECK((m.nodes[v] - ref.nodes[v]).norm() == 0.0);
    const DomainMesh back = morph_puncture(m, A0);
    double err = 0.0;
    for (std::size_t i = 0; i < ref.nodes.size(); ++i) err = std::max(err, (back.nodes[i] - ref.nodes[i]).norm());
    CHECK(err < 1e-12);
}

TEST_CASE("mesh dump round trip")
{
    MeshParams p;
    p.h = 0.2;
    const DomainMesh m = triangulate(build_cut_domain(unit_square(), Point(0.5, 0.5), 4.0), p);
    std::stringstream ss;
    write_mesh(ss, m);
    const DomainMesh back = read_mesh(ss);
    CHECK(back.nodes.size() == m.nodes.size());
    CHECK(back.triangles == m.triangles);
    CHECK(back.cut_pairing == m.cut_pairing);
    REQUIRE(back.boundary.size() == m.boundary.size());
    for (std::size_t i = 0; i < m.boundary.size(); ++i) {
        CHECK(back.boundary[i].tag == m.boundary[i].tag);
        CHECK(back.boundary[i].index == m.boundary[i].index);
    }
    for (std::size_t i = 0; i < m.nodes.size(); ++i) CHECK(back.nodes[i] == m.nodes[i]);
}

TEST_CASE("polar meshes")
{
    const DomainMesh m = polar_mesh(0.2, 1.0, 0.0, M_PI, 0.1);
    const MeshQuality q = mesh_quality(m);
    CHECK(q.consistent_orientation);
    CHECK(q.min_angle_deg > 40.0);
    CHECK(q.euler_characteristic == 1);
    const DomainMesh s = polar_mesh(0.2, 1.0, 0.0, 2 * M_PI, 0.1, true);
    CHECK(s.has_cut());
    CHECK(mesh_quality(s).euler_characteristic == 1);
}
