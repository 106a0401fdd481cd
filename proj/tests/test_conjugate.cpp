#include <doctest.h>

#include "rnoid/conjugate.hpp"
#include "rnoid/domain.hpp"
#include "rnoid/errors.hpp"
#include "rnoid/solver.hpp"

#include <cmath>
#include <sstream>

using namespace rnoid;

namespace {

FluxPolygon equilateral()
{
    return from_edge_vectors({{1, 0}, {-0.5, std::sqrt(3.0) / 2}, {-0.5, -std::sqrt(3.0) / 2}});
}

SolutionField affine(const DomainMesh& m, double a, double b)
{
    SolutionField f;
    f.u.resize(m.nodes.size());
    for (std::size_t v = 0; v < m.nodes.size(); ++v) f.u[v] = a * m.nodes[v].x() + b * m.nodes[v].y();
    return f;
}

Point centroid(const DomainMesh& m, int t)
{
    const auto& tr = m.triangles[t];
    return (m.nodes[tr[0]] + m.nodes[tr[1]] + m.nodes[tr[2]]) / 3.0;
}

struct Solved {
    DomainMesh mesh;
    SolutionField field;
    GradientFrame frame;
    PsiField psi;
};

Solved triangle_solve(const Point& A, double h = 0.1)
{
    MeshParams p;
    p.h = h;
    Solved s;
    s.mesh = triangulate(build_cut_domain(equilateral(), A, 8.0, h), p);
    s.field = solve(s.mesh, BoundaryData{});
    s.frame = gradient_frame(s.mesh, s.field);
    s.psi = psi_field(s.frame);
    return s;
}

const Solved& centred()
{
    static const Solved s = triangle_solve(equilateral().centroid());
    return s;
}

} // namespace

TEST_CASE("gradient frame of simple fields")
{
    const DomainMesh m = square_mesh(4);
    const GradientFrame zero = gradient_frame(m, affine(m, 0, 0));
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        CHECK(zero.grad[t].norm() == 0.0);
        CHECK(zero.W[t] == 1.0);
    }
    const GradientFrame x = gradient_frame(m, affine(m, 1, 0));
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        CHECK((x.grad[t] - Point(1, 0)).norm() < 1e-13);
        CHECK(x.W[t] == doctest::Approx(std::sqrt(2.0)));
    }
    CHECK_THROWS_AS(gradient_frame(m, SolutionField{}), conjugate_errors::DimensionMismatch);
}

TEST_CASE("helicoid gradient and radial third form")
{
    // u = atan2(y, x): p = -y / rho^2, q = x / rho^2 and dX3* = -drho / sqrt(rho^2 + 1).
    double prev_grad = 0.0, prev_form = 0.0;
    for (double h : {0.1, 0.05}) {
        const DomainMesh m = polar_mesh(0.2, 1.0, 0.0, M_PI, h);
        const GradientFrame f = gradient_frame(m, helicoid_field(m));
        const auto x3 = one_form(f, FormId::X3);
        double eg = 0.0, ef = 0.0;
        for (std::size_t t = 0; t < m.triangles.size(); ++t) {
            const Point c = centroid(m, static_cast<int>(t));
            const double r2 = c.squaredNorm(), r = std::sqrt(r2);
            eg = std::max(eg, (f.grad[t] - Point(-c.y() / r2, c.x() / r2)).norm() * r2);
            ef = std::max(ef, (x3[t] + c / (r * std::sqrt(r2 + 1.0))).norm());
        }
        if (prev_grad > 0.0) {
            CHECK(prev_grad / eg > 1.7);
            CHECK(prev_form / ef > 1.7);
        }
        CHECK(eg < 0.1);
        prev_grad = eg;
        prev_form = ef;
    }
}

TEST_CASE("one forms of u = 0 and u = x")
{
    CHECK((form_coefficients(Point(0, 0), FormId::X1) - Point(0, 1)).norm() == 0.0);
    CHECK((form_coefficients(Point(0, 0), FormId::X2) - Point(-1, 0)).norm() == 0.0);
    CHECK(form_coefficients(Point(0, 0), FormId::X3).norm() == 0.0);
    const double s = std::sqrt(2.0);
    CHECK((form_coefficients(Point(1, 0), FormId::X1) - Point(0, 1 / s)).norm() < 1e-15);
    CHECK((form_coefficients(Point(1, 0), FormId::X2) - Point(-s, 0)).norm() < 1e-15);
    CHECK((form_coefficients(Point(1, 0), FormId::X3) - Point(0, 1 / s)).norm() < 1e-15);
    CHECK(parse_form("X1*") == FormId::X1);
    CHECK(parse_form("X2") == FormId::X2);
    CHECK(parse_form("X3*") == FormId::X3);
    CHECK_THROWS_AS(parse_form("X4*"), conjugate_errors::UnknownForm);
}

TEST_CASE("the three forms pull back the graph metric")
{
    // With J the 3 x 2 matrix of the form coefficients, J^T J = I + grad u grad u^T.
    for (const Point& g : {Point(0.3, -0.2), Point(5.0, 1.0), Point(-40.0, 70.0)}) {
        Eigen::Matrix<double, 3, 2> J;
        J.row(0) = form_coefficients(g, FormId::X1).transpose();
        J.row(1) = form_coefficients(g, FormId::X2).transpose();
        J.row(2) = form_coefficients(g, FormId::X3).transpose();
        const Eigen::Matrix2d metric = Eigen::Matrix2d::Identity() + g * g.transpose();
        CHECK((J.transpose() * J - metric).norm() < 1e-12 * metric.norm());
    }
}

TEST_CASE("psi of the helicoid")
{
    const DomainMesh m = polar_mesh(0.2, 1.0, 0.0, M_PI, 0.05);
    const PsiField psi = psi_field(gradient_frame(m, helicoid_field(m)), 0);
    REQUIRE(m.nodes[0].norm() == doctest::Approx(0.2));
    CHECK(psi.nodal[0] == 0.0);
    double worst = 0.0;
    for (std::size_t v = 0; v < m.nodes.size(); ++v)
        worst = std::max(worst, std::abs(psi.nodal[v] - (std::asinh(0.2) - std::asinh(m.nodes[v].norm()))));
    CHECK(worst < 5e-3);
}

TEST_CASE("psi of a flat field vanishes")
{
    const DomainMesh m = square_mesh(5);
    const PsiField psi = psi_field(gradient_frame(m, affine(m, 0, 0)));
    CHECK(psi.nodal.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("line integrals")
{
    const int n = 4;
    const DomainMesh m = square_mesh(n);
    const GradientFrame flat = gradient_frame(m, affine(m, 0, 0));
    std::vector<int> bottom;
    for (int i = 0; i <= n; ++i) bottom.push_back(i);
    CHECK(line_integral(flat, FormId::X2, bottom) == doctest::Approx(-1.0));
    CHECK(line_integral(flat, FormId::X1, bottom) == doctest::Approx(0.0));
    const auto& t = m.triangles[3];
    const GradientFrame tilted = gradient_frame(m, affine(m, 0.4, -2.0));
    for (FormId f : {FormId::X1, FormId::X2, FormId::X3})
        CHECK(std::abs(line_integral(tilted, f, {t[0], t[1], t[2], t[0]})) < 1e-14);
    CHECK_THROWS_AS(line_integral(flat, FormId::X1, {0, 2 * (n + 1) + 2}), conjugate_errors::PathNotInMesh);
}

TEST_CASE("period vector of the centred triangle")
{
    const Solved& s = centred();
    const int levels = max_loop_level(s.mesh);
    REQUIRE(levels >= 4);
    const Eigen::Vector3d mid = period_vector(s.frame);
    CHECK(mid.head<2>().norm() < 5e-3);
    for (int l = 1; l <= levels / 2; ++l) {
        const Eigen::Vector3d v = period_vector(s.frame, l);
        CHECK(std::abs(v.z()) < 1e-8);
        CHECK((v - mid).head<2>().norm() < 2e-3);
    }
    CHECK(s.psi.third_period < 1e-8);
}

TEST_CASE("an off-centre puncture leaves the surface open")
{
    const Solved s = triangle_solve(Point(0.6, 0.2));
    const Eigen::Vector3d v = period_vector(s.frame);
    CHECK(v.head<2>().norm() > 0.05);
    CHECK_THROWS_AS(conjugate_surface(s.frame, s.field, s.psi), conjugate_errors::PeriodNotClosed);
    ConjugateOptions open;
    open.allow_open = true;
    const SurfaceMesh half = conjugate_surface(s.frame, s.field, s.psi, open);
    CHECK_THROWS_AS(reflect_and_glue(half), conjugate_errors::WeldGap);
}

TEST_CASE("conjugate half surface of the centred triangle")
{
    const Solved& s = centred();
    ConjugateOptions open;
    open.allow_open = true;
    const SurfaceMesh half = conjugate_surface(s.frame, s.field, s.psi, open);
    CHECK(half.symmetry_curves.size() >= 3);
    double zmin = 0.0;
    for (const auto& v : half.vertices) zmin = std::min(zmin, v.z());
    CHECK(zmin > -5e-3);
    // The curves are the rings about the P_i and the puncture circle, within h / 8 of z = 0.
    double zmax = 0.0;
    for (const auto& curve : half.symmetry_curves)
        for (int v : curve) zmax = std::max(zmax, std::abs(half.vertices[v].z()));
    CHECK(zmax < 0.25 * s.mesh.h);
    // Conjugation is an isometry; the vertex fans left out carry little area.
    const double a = surface_area(half), g = graph_area(s.mesh, s.field.u);
    CHECK(std::abs(a - g) < 0.01 * g);

    const SurfaceMesh twice = reflect(reflect(half));
    REQUIRE(twice.vertices.size() == half.vertices.size());
    for (std::size_t v = 0; v < half.vertices.size(); ++v)
        CHECK((twice.vertices[v] - half.vertices[v]).norm() < 1e-12);
}

TEST_CASE("flat field maps to a rotated sheet")
{
    const DomainMesh m = square_mesh(4);
    const SolutionField f = affine(m, 0, 0);
    const GradientFrame frame = gradient_frame(m, f);
    const SurfaceMesh s = conjugate_surface(frame, f, psi_field(frame));
    REQUIRE_FALSE(s.vertices.empty());
    const Eigen::Vector3d offset =
        s.vertices[0] - Eigen::Vector3d(m.nodes[s.source_node[0]].y(), -m.nodes[s.source_node[0]].x(), 0.0);
    for (std::size_t v = 0; v < s.vertices.size(); ++v) {
        const Point x = m.nodes[s.source_node[v]];
        CHECK((s.vertices[v] - Eigen::Vector3d(x.y(), -x.x(), 0.0) - offset).norm() < 1e-13);
    }
}

TEST_CASE("surface export")
{
    const Solved& s = centred();
    ConjugateOptions open;
    open.allow_open = true;
    const SurfaceMesh half = conjugate_surface(s.frame, s.field, s.psi, open);
    std::ostringstream os;
    write_surface(os, half);
    std::istringstream is(os.str());
    std::string line;
    std::size_t v = 0, f = 0;
    while (std::getline(is, line)) {
        if (line.rfind("v ", 0) == 0) ++v;
        if (line.rfind("f ", 0) == 0) ++f;
    }
    CHECK(v == half.vertices.size());
    CHECK(f == half.triangles.size());
}
