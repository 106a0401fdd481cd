#include <doctest.h>

#include "rnoid/conjugate.hpp"
#include "rnoid/domain.hpp"
#include "rnoid/errors.hpp"
#include "rnoid/solver.hpp"

#include <cmath>
#include <set>
#include <sstream>

using namespace rnoid;

namespace {

FluxPolygon equilateral()
{
    return from_edge_vectors({{1, 0}, {-0.5, std::sqrt(3.0) / 2}, {-0.5, -std::sqrt(3.0) / 2}});
}

DomainMesh triangle_mesh(double h, double L = 8.0)
{
    const FluxPolygon poly = equilateral();
    MeshParams p;
    p.h = h;
    return triangulate(build_cut_domain(poly, poly.centroid(), L, h), p);
}

std::set<int> boundary_nodes(const DomainMesh& m)
{
    std::set<int> out;
    for (const auto& e : m.boundary) {
        out.insert(e.a);
        out.insert(e.b);
    }
    return out;
}

BoundaryData helicoid_data(const DomainMesh& m, double shift = 0.0)
{
    const SolutionField exact = helicoid_field(m);
    BoundaryData bc;
    for (int v : boundary_nodes(m)) bc.fixed_values[v] = exact.u[v] + shift;
    return bc;
}

} // namespace

TEST_CASE("planes have zero residual")
{
    const DomainMesh m = square_mesh(8);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(m.nodes.size());
    CHECK(mse_residual(m, u).cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t v = 0; v < m.nodes.size(); ++v) u[v] = 0.7 * m.nodes[v].x() - 1.3 * m.nodes[v].y() + 2.0;
    const std::set<int> bnd = boundary_nodes(m);
    const Eigen::VectorXd R = mse_residual(m, u);
    for (std::size_t v = 0; v < m.nodes.size(); ++v)
        if (!bnd.count(static_cast<int>(v))) CHECK(std::abs(R[v]) < 1e-14);
    CHECK_THROWS_AS(mse_residual(m, Eigen::VectorXd::Zero(3)), solver_errors::DimensionMismatch);
}

TEST_CASE("residual of x^2 matches the divergence")
{
    // Weak residual at an interior node is -div(grad u / W) times the hat integral h^2.
    const int n = 40;
    const double h = 1.0 / n;
    const DomainMesh m = square_mesh(n);
    Eigen::VectorXd u(m.nodes.size());
    for (std::size_t v = 0; v < m.nodes.size(); ++v) u[v] = m.nodes[v].x() * m.nodes[v].x();
    const Eigen::VectorXd R = mse_residual(m, u);
    const std::set<int> bnd = boundary_nodes(m);
    double worst = 0.0;
    for (std::size_t v = 0; v < m.nodes.size(); ++v) {
        if (bnd.count(static_cast<int>(v))) continue;
        const double x = m.nodes[v].x();
        const double div = 2.0 / std::pow(1.0 + 4.0 * x * x, 1.5);
        CHECK(R[v] < 0.0);
        worst = std::max(worst, std::abs(R[v] / (h * h) + div));
    }
    CHECK(worst < 0.01);
}

TEST_CASE("helicoid is recovered at second order")
{
    double prev = 0.0;
    for (double h : {0.1, 0.05}) {
        const DomainMesh m = polar_mesh(0.2, 1.0, 0.0, M_PI, h);
        const SolutionField f = solve(m, helicoid_data(m));
        const double err = (f.u - helicoid_field(m).u).cwiseAbs().maxCoeff();
        if (prev > 0.0) CHECK(prev / err > 3.4);
        prev = err;
    }
}

TEST_CASE("helicoid residual decays with the mesh size")
{
    double prev = 0.0;
    for (double h : {0.1, 0.05}) {
        const DomainMesh m = polar_mesh(0.2, 1.0, 0.0, M_PI, h);
        const std::set<int> bnd = boundary_nodes(m);
        const Eigen::VectorXd R = mse_residual(m, helicoid_field(m));
        double sup = 0.0;
        for (std::size_t v = 0; v < m.nodes.size(); ++v)
            if (!bnd.count(static_cast<int>(v))) sup = std::max(sup, std::abs(R[v]));
        if (prev > 0.0) CHECK(prev / sup > 3.4);
        prev = sup;
    }
}

TEST_CASE("shifting the boundary data shifts the solution")
{
    const DomainMesh m = polar_mesh(0.2, 1.0, 0.0, M_PI, 0.1);
    const SolutionField a = solve(m, helicoid_data(m));
    const SolutionField b = solve(m, helicoid_data(m, 3.0));
    CHECK(((b.u - a.u).array() - 3.0).abs().maxCoeff() < 1e-8);
}

TEST_CASE("helicoid on a slit annulus with its jump imposed")
{
    // Two sheets of u = theta glued across the slit with jump 2 pi.
    double prev = 0.0;
    for (double h : {0.1, 0.05}) {
        const DomainMesh m = polar_mesh(0.2, 1.0, 0.0, 2 * M_PI, h, true);
        const SolutionField exact = helicoid_field(m);
        BoundaryData bc;
        for (const auto& e : m.boundary)
            if (e.tag == EdgeTag::Fixed) {
                bc.fixed_values[e.a] = exact.u[e.a];
                bc.fixed_values[e.b] = exact.u[e.b];
            }
        bc.fixed_jump = 2 * M_PI;
        const SolutionField f = solve(m, bc);
        REQUIRE(f.has_jump);
        CHECK(f.c == doctest::Approx(2 * M_PI).epsilon(1e-14));
        for (const auto& [p, q] : m.cut_pairing) CHECK(std::abs(f.u[q] - f.u[p] - f.c) < 1e-10);
        const double err = (f.u - exact.u).cwiseAbs().maxCoeff();
        if (prev > 0.0) CHECK(prev / err > 3.4);
        prev = err;
    }
}

TEST_CASE("triangle solve has a negative jump")
{
    const DomainMesh m = triangle_mesh(0.1);
    BoundaryData bc;
    const SolutionField f = solve(m, bc);
    CHECK(f.has_jump);
    CHECK(f.c < -1e-4);
    CHECK(f.residual_norm <= SolveOptions{}.tol);
    for (const auto& [p, q] : m.cut_pairing) CHECK(std::abs(f.u[q] - f.u[p] - f.c) < 1e-10);

    SUBCASE("maximum principle")
    {
        std::vector<std::set<int>> nbr(m.nodes.size());
        for (const auto& t : m.triangles)
            for (int a : t)
                for (int b : t)
                    if (a != b) nbr[a].insert(b);
        const std::set<int> bnd = boundary_nodes(m);
        for (std::size_t v = 0; v < m.nodes.size(); ++v) {
            if (bnd.count(static_cast<int>(v))) continue;
            bool above = true, below = true;
            for (int w : nbr[v]) {
                above = above && f.u[v] > f.u[w];
                below = below && f.u[v] < f.u[w];
            }
            CHECK_FALSE(above);
            CHECK_FALSE(below);
        }
    }

    SUBCASE("larger caps raise the solution near the plus walls")
    {
        BoundaryData big;
        big.M = 40.0;
        const SolutionField g = solve(m, big, {}, nullptr);
        // Strip nodes away from the disk and the cap, in the quarter of the width next to a wall.
        const FluxPolygon& poly = m.polygon;
        std::set<int> strip_nodes[3];
        for (std::size_t t = 0; t < m.triangles.size(); ++t)
            if (m.tri_region[t] >= 0)
                for (int v : m.triangles[t]) strip_nodes[m.tri_region[t]].insert(v);
        const std::set<int> bnd = boundary_nodes(m);
        int checked = 0;
        for (int i = 0; i < 3; ++i) {
            const double a = poly.edge(i).norm();
            for (int v : strip_nodes[i]) {
                if (bnd.count(v)) continue;
                const Point s = strip_coordinates(poly, i, m.nodes[v]);
                if (s.y() < a || s.y() > m.L - 2 * a) continue;
                if (s.x() < 0.25 * a) {
                    CHECK(g.u[v] >= f.u[v]);
                    ++checked;
                } else if (s.x() > 0.75 * a) {
                    CHECK(g.u[v] <= f.u[v]);
                    ++checked;
                }
            }
        }
        CHECK(checked > 0);
    }
}

TEST_CASE("genus zero solve has no jump")
{
    MeshParams p;
    p.h = 0.1;
    const DomainMesh m = genus0_domain(equilateral(), 8.0, p);
    const SolutionField f = solve(m, BoundaryData{});
    CHECK_FALSE(f.has_jump);
    CHECK(f.c == 0.0);
}

TEST_CASE("solver input errors")
{
    CHECK_THROWS_AS(solve(DomainMesh{}, BoundaryData{}), solver_errors::DimensionMismatch);
    BoundaryData low;
    low.M = 2.0;
    CHECK_THROWS_AS(solve(triangle_mesh(0.2), low), solver_errors::InvalidData);
    SolveOptions tight;
    tight.max_iters = 1;
    CHECK_THROWS_AS(solve(triangle_mesh(0.2), BoundaryData{}, tight), solver_errors::NoConvergence);
}

TEST_CASE("continuation over the cap")
{
    Schedule s;
    s.M = {10, 20, 40};
    s.L = {8};
    s.h = {0.1};
    const ContinuationResult res = continuation_solve([](double L, double h) { return triangle_mesh(h, L); }, s);
    REQUIRE(res.table.size() == 3);
    const double d0 = std::abs(res.table[1].c - res.table[0].c), d1 = std::abs(res.table[2].c - res.table[1].c);
    CHECK(d1 < d0);
    CHECK(res.table[0].nodes == res.table[2].nodes);

    Schedule one;
    one.M = {20};
    one.L = {8};
    one.h = {0.1};
    const ContinuationResult single = continuation_solve([](double L, double h) { return triangle_mesh(h, L); }, one);
    CHECK(single.table.size() == 1);
    CHECK(single.c_extrapolated == single.field.c);

    CHECK_THROWS_AS(continuation_solve([](double L, double h) { return triangle_mesh(h, L); }, Schedule{}),
                    solver_errors::InvalidData);
}

TEST_CASE("field dump round trip")
{
    const DomainMesh m = triangle_mesh(0.2);
    const SolutionField f = solve(m, BoundaryData{});
    std::stringstream ss;
    write_field(ss, f);
    const SolutionField g = read_field(ss);
    CHECK(g.c == f.c);
    CHECK(g.u == f.u);
}
