#include "rnoid/validate.hpp"

#include "rnoid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <ostream>
#include <set>

namespace rnoid {

namespace {

constexpr double pi = std::numbers::pi;

using DirectedEdges = std::map<std::pair<int, int>, int>;

DirectedEdges directed_edges(const SurfaceMesh& s)
{
    DirectedEdges out;
    for (std::size_t t = 0; t < s.triangles.size(); ++t)
        for (int k = 0; k < 3; ++k) out[{s.triangles[t][k], s.triangles[t][(k + 1) % 3]}] = static_cast<int>(t);
    return out;
}

Eigen::Vector3d unit_normal(const SurfaceMesh& s, int t)
{
    const auto& tri = s.triangles[t];
    const Eigen::Vector3d& a = s.vertices[tri[0]];
    return (s.vertices[tri[1]] - a).cross(s.vertices[tri[2]] - a).normalized();
}

// Corner angles of triangle t, from the stored metric when there is one.
std::array<double, 3> corner_angles(const SurfaceMesh& s, std::size_t t)
{
    std::array<double, 3> out{};
    if (!s.edge_lengths.empty()) {
        const auto& l = s.edge_lengths[t];
        for (int k = 0; k < 3; ++k) {
            const double a = l[k], b = l[(k + 1) % 3], c = l[(k + 2) % 3];
            out[k] = std::acos(std::clamp((b * b + c * c - a * a) / (2.0 * b * c), -1.0, 1.0));
        }
        return out;
    }
    const auto& tri = s.triangles[t];
    for (int k = 0; k < 3; ++k) {
        const Eigen::Vector3d& x = s.vertices[tri[k]];
        const Eigen::Vector3d e1 = s.vertices[tri[(k + 1) % 3]] - x;
        const Eigen::Vector3d e2 = s.vertices[tri[(k + 2) % 3]] - x;
        out[k] = std::atan2(e1.cross(e2).norm(), e1.dot(e2));
    }
    return out;
}

// Piecewise linear interpolation in a table sorted by its first entry.
double interpolate(const std::vector<std::pair<double, double>>& table, double x)
{
    auto it = std::lower_bound(table.begin(), table.end(), std::make_pair(x, -1e300));
    if (it == table.begin()) return it->second;
    if (it == table.end()) return table.back().second;
    const auto& [x1, y1] = *it;
    const auto& [x0, y0] = *(it - 1);
    return x1 > x0 ? y0 + (y1 - y0) * (x - x0) / (x1 - x0) : y1;
}

} // namespace

bool all_pass(const Report& report)
{
    return std::all_of(report.begin(), report.end(), [](const Check& c) { return c.pass; });
}

void write_report(std::ostream& os, const Report& report)
{
    char buf[256];
    for (const auto& c : report) {
        std::snprintf(buf, sizeof buf, "%s %.10g %.10g %s\n", c.name.c_str(), c.value, c.bound, c.pass ? "PASS" : "FAIL");
        os << buf;
    }
}

Eigen::Vector3d end_flux(const SurfaceMesh& surface, int end_index)
{
    if (end_index < 0 || end_index >= static_cast<int>(surface.end_paths.size()))
        throw validate_errors::MissingEndMetadata("no end path " + std::to_string(end_index));
    const auto& path = surface.end_paths[end_index];
    const DirectedEdges tris = directed_edges(surface);
    Eigen::Vector3d flux = Eigen::Vector3d::Zero();
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const int a = path[k], b = path[k + 1];
        auto it = tris.find({a, b});
        // On a boundary edge only the triangle on the right exists; its conormal points away.
        double sign = 1.0;
        if (it == tris.end()) {
            it = tris.find({b, a});
            sign = -1.0;
        }
        if (it == tris.end())
            throw validate_errors::MissingEndMetadata("end path leaves the mesh at vertex " + std::to_string(a));
        flux += sign * unit_normal(surface, it->second).cross(surface.vertices[b] - surface.vertices[a]);
    }
    return flux;
}

CurvatureSummary curvature_summary(const SurfaceMesh& surface, int patch_hops)
{
    if (!surface.welded) throw validate_errors::OpenSurface("total curvature needs a welded surface");
    const std::size_t n = surface.vertices.size();
    std::vector<double> angle(n, 0.0);
    std::vector<char> used(n, 0);
    std::map<std::pair<int, int>, int> count;
    for (std::size_t t = 0; t < surface.triangles.size(); ++t) {
        const auto& tri = surface.triangles[t];
        const auto a = corner_angles(surface, t);
        for (int k = 0; k < 3; ++k) {
            angle[tri[k]] += a[k];
            used[tri[k]] = 1;
            ++count[{tri[k], tri[(k + 1) % 3]}];
        }
    }
    std::map<int, int> next;   // boundary edges, oriented with the surface
    for (const auto& [e, c] : count)
        if (!count.count({e.second, e.first})) next[e.first] = e.second;

    CurvatureSummary out;
    out.intrinsic = !surface.edge_lengths.empty();
    std::vector<char> interior(n, 0);
    for (std::size_t v = 0; v < n; ++v) interior[v] = used[v] && !next.count(static_cast<int>(v));
    std::vector<std::vector<int>> adj(n);
    for (const auto& [e, c] : count) {
        adj[e.first].push_back(e.second);
        if (!count.count({e.second, e.first})) adj[e.second].push_back(e.first);
    }
    // Patches: each unassigned interior vertex in index order collects the unassigned
    // interior vertices within patch_hops edges.
    std::vector<int> patch(n, -1);
    std::vector<double> sum;
    for (std::size_t v = 0; v < n; ++v) {
        if (!interior[v] || patch[v] >= 0) continue;
        const int id = static_cast<int>(sum.size());
        sum.push_back(0.0);
        std::vector<int> front{static_cast<int>(v)};
        patch[v] = id;
        for (int hop = 0; hop < patch_hops && !front.empty(); ++hop) {
            std::vector<int> grown;
            for (int a : front)
                for (int b : adj[a])
                    if (interior[b] && patch[b] < 0) {
                        patch[b] = id;
                        grown.push_back(b);
                    }
            front = std::move(grown);
        }
    }
    for (std::size_t v = 0; v < n; ++v) {
        if (!interior[v]) continue;
        const double d = 2.0 * pi - angle[v];
        out.vertex_abs += std::abs(d);
        out.defects_signed += d;
        sum[patch[v]] += d;
    }
    for (double d : sum) out.defects_abs += std::abs(d);
    out.patches = static_cast<int>(sum.size());
    std::set<int> seen;
    for (const auto& [start, unused] : next) {
        if (seen.count(start)) continue;
        double turning = 0.0;
        for (int v = start; !seen.count(v);) {
            seen.insert(v);
            turning += pi - angle[v];
            const auto it = next.find(v);
            if (it == next.end()) break;
            v = it->second;
        }
        out.tails += 2.0 * pi - turning;
        ++out.boundary_loops;
    }
    out.total = out.defects_abs + out.tails;
    return out;
}

double total_curvature(const SurfaceMesh& surface, int patch_hops)
{
    return curvature_summary(surface, patch_hops).total;
}

JenkinsReport jenkins_check(const DomainMesh& mesh, const SolutionField& field, int strip, double eps)
{
    if (field.u.size() != static_cast<Eigen::Index>(mesh.nodes.size()))
        throw solver_errors::DimensionMismatch("field does not match the mesh");
    const FluxPolygon& poly = mesh.polygon;
    const double a = poly.edge(strip).norm();
    const Point e = poly.edge(strip) / a;
    const Point nrm = outward_normal(poly, strip);
    JenkinsReport out;
    out.worst_p_margin = out.worst_q_margin = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (mesh.tri_region[t] != poly.wrap(strip)) continue;
        const auto& tri = mesh.triangles[t];
        const Point c = (mesh.nodes[tri[0]] + mesh.nodes[tri[1]] + mesh.nodes[tri[2]]) / 3.0;
        const double y = strip_coordinates(poly, strip, c).y();
        if (y < 4.0 * a) continue;
        const auto g = hat_gradients(mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]);
        const Point du = p1_gradient(g, field.u[tri[0]], field.u[tri[1]], field.u[tri[2]]);
        const double W = std::sqrt(1.0 + du.squaredNorm());
        const double p = std::abs(du.dot(e)) / W, q = std::abs(du.dot(nrm)) / W;
        out.worst_p_margin = std::min(out.worst_p_margin, p - (1.0 - a * a / (y * y)));
        out.worst_q_margin = std::min(out.worst_q_margin, std::sqrt(2.0) * a / y - q);
        ++out.elements;
    }
    out.pass = out.elements == 0 || (out.worst_p_margin >= -eps && out.worst_q_margin >= -eps);
    return out;
}

PsiReport psi_invariants(const DomainMesh& mesh, const PsiField& psi, double tol)
{
    const Eigen::VectorXd& z = psi.nodal;
    if (z.size() != static_cast<Eigen::Index>(mesh.nodes.size()))
        throw conjugate_errors::DimensionMismatch("psi does not match the mesh");
    PsiReport out;
    out.basepoint_value = psi.basepoint >= 0 ? z[psi.basepoint] : 0.0;
    out.min_value = z.size() ? z.minCoeff() : 0.0;
    for (int v : mesh.vertex_node)
        if (v >= 0) out.vertex_max = std::max(out.vertex_max, std::abs(z[v]));
    if (mesh.vertex_minus_node >= 0) out.vertex_max = std::max(out.vertex_max, std::abs(z[mesh.vertex_minus_node]));
    auto mid = [&](int e) { return 0.5 * (mesh.nodes[psi.edges[e][0]] + mesh.nodes[psi.edges[e][1]]); };
    for (const auto& te : psi.tri_edges)
        for (int k = 0; k < 3; ++k) {
            const int a = te[k], b = te[(k + 1) % 3];
            const double len = (mid(a) - mid(b)).norm();
            if (len > 0.0)
                out.lipschitz = std::max(out.lipschitz, std::abs(psi.midpoint[a] - psi.midpoint[b]) / len);
        }

    // Walls of strip i: STRIP_PLUS i at P_i and STRIP_MINUS i+1 at P_i+1.
    const FluxPolygon& poly = mesh.polygon;
    std::map<std::pair<int, int>, int> edge_id;
    for (std::size_t e = 0; e < psi.edges.size(); ++e) edge_id[{psi.edges[e][0], psi.edges[e][1]}] = static_cast<int>(e);
    std::set<int> strips(mesh.tri_region.begin(), mesh.tri_region.end());
    for (int i : strips) {
        if (i < 0) continue;
        // Psi is compared on the edge midpoints of the two walls, where it is single valued.
        std::vector<std::pair<double, double>> plus, minus;
        for (const auto& e : mesh.boundary) {
            const bool p = e.tag == EdgeTag::StripPlus && e.index == i;
            const bool m = e.tag == EdgeTag::StripMinus && e.index == poly.wrap(i + 1);
            if (!p && !m) continue;
            const auto it = edge_id.find({std::min(e.a, e.b), std::max(e.a, e.b)});
            if (it == edge_id.end()) continue;
            const double y = strip_coordinates(poly, i, 0.5 * (mesh.nodes[e.a] + mesh.nodes[e.b])).y();
            (p ? plus : minus).push_back({y, psi.midpoint[it->second]});
        }
        if (plus.empty() || minus.empty()) continue;
        std::sort(plus.begin(), plus.end());
        std::sort(minus.begin(), minus.end());
        const double lo = std::max(plus.front().first, minus.front().first);
        const double hi = std::min(plus.back().first, minus.back().first);
        for (const auto& [y, value] : plus)
            if (y >= lo && y <= hi) out.foot_gap = std::max(out.foot_gap, std::abs(value - interpolate(minus, y)));
    }

    out.checks = {
        {"psi_basepoint", std::abs(out.basepoint_value), 0.0, out.basepoint_value == 0.0},
        {"psi_vertices", out.vertex_max, tol, out.vertex_max <= tol},
        {"psi_minimum", out.min_value, -tol, out.min_value >= -tol},
        {"psi_lipschitz", out.lipschitz, 1.0 + 2.0 * tol, out.lipschitz <= 1.0 + 2.0 * tol},
        {"psi_strip_feet", out.foot_gap, tol, out.foot_gap <= tol},
    };
    return out;
}

double closure_check(const SurfaceMesh& surface)
{
    double gap = 0.0;
    for (const auto& [p, q] : surface.cut_pairs)
        gap = std::max(gap, (surface.vertices[q] - surface.vertices[p]).norm());
    return gap;
}

double closure_gap(const std::vector<Eigen::Vector3d>& a, const std::vector<Eigen::Vector3d>& b)
{
    if (a.size() != b.size()) throw conjugate_errors::DimensionMismatch("curves differ in length");
    double gap = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) gap = std::max(gap, (a[k] - b[k]).norm());
    return gap;
}

Report construction_report(const DomainMesh& mesh, const SolutionField& field, const PsiField& psi,
                           const SurfaceMesh& half, const SurfaceMesh& welded)
{
    Report out;
    auto add = [&](std::string name, double value, double bound, bool pass) {
        out.push_back({std::move(name), value, bound, pass});
    };
    if (mesh.has_cut()) add("jump_sign", field.c, -1e-4, field.c < -1e-4);
    for (const Check& c : psi_invariants(mesh, psi).checks) out.push_back(c);
    const int r = mesh.polygon.r();
    for (int i = 0; i < r; ++i) {
        const JenkinsReport j = jenkins_check(mesh, field, i);
        if (j.elements == 0) continue;
        add("jenkins_p(" + std::to_string(i + 1) + ")", j.worst_p_margin, 0.0, j.worst_p_margin >= 0.0);
        add("jenkins_q(" + std::to_string(i + 1) + ")", j.worst_q_margin, 0.0, j.worst_q_margin >= 0.0);
    }
    if (!half.cut_pairs.empty()) {
        const double gap = closure_check(half);
        add("closure", gap, 1e-3, gap <= 1e-3);
    }
    if (!welded.welded) return out;
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    double scale = 0.0;
    const int ends = static_cast<int>(welded.end_paths.size());
    for (int i = 0; i < ends; ++i) {
        const Eigen::Vector3d F = end_flux(welded, i);
        const Point target = 2.0 * welded.end_flux_hint[i];
        const Point Fh = F.head<2>();
        sum += F;
        scale += target.norm() / ends;
        const double ratio = Fh.norm() / target.norm();
        const double angle = std::abs(std::atan2(cross2<double>(target, Fh), target.dot(Fh))) * 180.0 / pi;
        const std::string tag = "(" + std::to_string(i + 1) + ")";
        add("flux_norm" + tag, std::abs(ratio - 1.0), 0.025, std::abs(ratio - 1.0) <= 0.025);
        add("flux_angle_deg" + tag, angle, 2.0, angle <= 2.0);
        add("flux_vertical" + tag, std::abs(F.z()) / target.norm(), 0.01, std::abs(F.z()) <= 0.01 * target.norm());
    }
    if (ends > 0) add("flux_sum", sum.norm() / scale, 0.01, sum.norm() <= 0.01 * scale);
    const double K = total_curvature(welded);
    const double target = 4.0 * pi * r;
    const double rel = std::abs(K - target) / target;
    add("total_curvature_rel", rel, 0.05, rel <= 0.05);
    return out;
}

} // namespace rnoid
