#include <doctest.h>

#include "rnoid/conjugate.hpp"
#include "rnoid/errors.hpp"
#include "rnoid/period.hpp"
#include "rnoid/validate.hpp"

#include <cmath>
#include <sstream>

using namespace rnoid;

namespace {

FluxPolygon equilateral()
{
    return from_edge_vectors({{1, 0}, {-0.5, std::sqrt(3.0) / 2}, {-0.5, -std::sqrt(3.0) / 2}});
}

const SymmetricResult& trinoid(double h)
{
    static std::map<double, SymmetricResult> cache;
    auto it = cache.find(h);
    if (it == cache.end()) {
        PeriodOptions o;
        o.mesh.h = h;
        it = cache.emplace(h, symmetric_zero(StarSpec{3, 1}, o)).first;
    }
    return it->second;
}

double worst_flux_deviation(const SurfaceMesh& s)
{
    double worst = 0.0;
    for (int i = 0; i < static_cast<int>(s.end_paths.size()); ++i) {
        const double target = 2.0 * s.end_flux_hint[i].norm();
        worst = std::max(worst, std::abs(end_flux(s, i).head<2>().norm() / target - 1.0));
    }
    return worst;
}

struct CutSolve {
    DomainMesh mesh;
    SolutionField field;
    PsiField psi;
};

CutSolve triangle_solve(double h)
{
    const FluxPolygon poly = equilateral();
    MeshParams p;
    p.h = h;
    CutSolve s;
    s.mesh = triangulate(build_cut_domain(poly, poly.centroid(), 10.0, h), p);
    s.field = solve(s.mesh, BoundaryData{});
    s.psi = psi_field(gradient_frame(s.mesh, s.field));
    return s;
}

} // namespace

TEST_CASE("end fluxes of the trinoid")
{
    const SurfaceMesh& s = trinoid(0.1).surface;
    REQUIRE(s.end_paths.size() == 3);
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (int i = 0; i < 3; ++i) {
        const Eigen::Vector3d F = end_flux(s, i);
        const Point target = 2.0 * s.end_flux_hint[i];
        CHECK(std::abs(F.head<2>().norm() - target.norm()) <= 0.05);
        const double angle = std::acos(std::clamp(F.head<2>().normalized().dot(target.normalized()), -1.0, 1.0));
        CHECK(angle * 180.0 / M_PI <= 2.0);
        CHECK(std::abs(F.z()) <= 0.02);
        sum += F;
    }
    CHECK(sum.head<2>().norm() <= 0.02);
    CHECK_THROWS_AS(end_flux(s, 7), validate_errors::MissingEndMetadata);
}

TEST_CASE("flux error decreases under refinement")
{
    CHECK(worst_flux_deviation(trinoid(0.05).surface) < worst_flux_deviation(trinoid(0.1).surface));
}

TEST_CASE("total curvature of symmetric surfaces")
{
    CHECK(total_curvature(trinoid(0.1).surface) == doctest::Approx(12 * M_PI).epsilon(0.05));
    PeriodOptions o;
    o.mesh.h = 0.1;
    const SymmetricResult five = symmetric_zero(StarSpec{5, 2}, o);
    CHECK(total_curvature(five.surface) == doctest::Approx(20 * M_PI).epsilon(0.05));
    CHECK_THROWS_AS(total_curvature(trinoid(0.1).half), validate_errors::OpenSurface);
}

TEST_CASE("flat sheet has no curvature")
{
    const DomainMesh m = square_mesh(6);
    SurfaceMesh s;
    for (const Point& p : m.nodes) s.vertices.emplace_back(p.x(), p.y(), 0.0);
    for (const auto& t : m.triangles) s.triangles.push_back({t[0], t[1], t[2]});
    s.welded = true;
    CHECK(total_curvature(s) == doctest::Approx(0.0));
}

TEST_CASE("strip bounds in the triangle solve")
{
    const CutSolve s = triangle_solve(0.1);
    for (int i = 0; i < 3; ++i) {
        const JenkinsReport j = jenkins_check(s.mesh, s.field, i);
        CHECK(j.elements > 0);
        CHECK(j.pass);
        CHECK(j.worst_p_margin >= 0.0);
        CHECK(j.worst_q_margin >= 0.0);
    }
}

TEST_CASE("psi invariants")
{
    SUBCASE("triangle solve at h = 0.05")
    {
        const CutSolve s = triangle_solve(0.05);
        const PsiReport r = psi_invariants(s.mesh, s.psi, 5e-3);
        CHECK(r.checks.size() == 5);
        for (const auto& c : r.checks) {
            INFO(c.name << " " << c.value);
            CHECK(c.pass);
        }
    }
    SUBCASE("flat field")
    {
        const DomainMesh m = square_mesh(4);
        SolutionField f;
        f.u = Eigen::VectorXd::Zero(m.nodes.size());
        const PsiField psi = psi_field(gradient_frame(m, f));
        CHECK(all_pass(psi_invariants(m, psi).checks));
    }
    SUBCASE("a corrupted field breaks the Lipschitz bound")
    {
        CutSolve s = triangle_solve(0.1);
        s.field.u[s.mesh.nodes.size() / 2] += 1.0;
        const PsiField psi = psi_field(gradient_frame(s.mesh, s.field));
        const PsiReport r = psi_invariants(s.mesh, psi, 5e-3);
        bool lipschitz = true;
        for (const auto& c : r.checks)
            if (c.name == "psi_lipschitz") lipschitz = c.pass;
        CHECK_FALSE(lipschitz);
    }
}

TEST_CASE("closure gaps")
{
    CHECK(closure_check(trinoid(0.1).half) <= 1e-3);

    const FluxPolygon poly = equilateral();
    MeshParams p;
    p.h = 0.1;
    const DomainMesh m = triangulate(build_cut_domain(poly, Point(0.6, 0.2), 8.0, 0.1), p);
    const SolutionField f = solve(m, BoundaryData{});
    const GradientFrame frame = gradient_frame(m, f);
    ConjugateOptions open;
    open.allow_open = true;
    const SurfaceMesh half = conjugate_surface(frame, f, psi_field(frame), open);
    CHECK(closure_check(half) == doctest::Approx(half.period.head<2>().norm()).epsilon(1e-8));

    std::vector<Eigen::Vector3d> a, b;
    for (int k = 0; k < 10; ++k) {
        a.emplace_back(std::cos(0.3 * k), std::sin(0.3 * k), 0.1 * k);
        b.push_back(a.back() + Eigen::Vector3d(0.2, 0.0, 0.0));
    }
    CHECK(closure_gap(a, b) == doctest::Approx(0.2));
}

TEST_CASE("construction report of the trinoid")
{
    const SymmetricResult& t = trinoid(0.05);
    const SurfaceMesh before = t.surface;
    const DomainMesh& mesh = t.replicated.mesh;
    const Report r = construction_report(mesh, t.field, psi_field(gradient_frame(mesh, t.field)), t.half, t.surface);
    CHECK(all_pass(r));
    CHECK(before.vertices == t.surface.vertices);

    std::ostringstream os;
    write_report(os, r);
    std::istringstream is(os.str());
    std::string name, verdict;
    double value = 0.0, bound = 0.0;
    std::size_t lines = 0;
    while (is >> name >> value >> bound >> verdict) {
        CHECK(verdict == "PASS");
        ++lines;
    }
    CHECK(lines == r.size());
}
