#include "rnoid/conjugate.hpp"

#include "rnoid/errors.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <set>
#include <unordered_map>

namespace rnoid {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

struct EdgeIndex {
    std::vector<std::array<int, 2>> edges;
    std::vector<std::array<int, 3>> tri_edges;
    std::vector<std::array<int, 2>> edge_tris;   // -1 when absent
    std::unordered_map<long long, int> lookup;
    long long n = 0;

    int find(int a, int b) const
    {
        const auto it = lookup.find(std::min(a, b) * n + std::max(a, b));
        return it == lookup.end() ? -1 : it->second;
    }
};

EdgeIndex edge_index(const DomainMesh& mesh)
{
    EdgeIndex ix;
    ix.n = static_cast<long long>(mesh.nodes.size());
    ix.tri_edges.resize(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        for (int k = 0; k < 3; ++k) {
            const int a = tri[(k + 1) % 3], b = tri[(k + 2) % 3];
            const long long key = std::min(a, b) * ix.n + std::max(a, b);
            auto [it, fresh] = ix.lookup.emplace(key, static_cast<int>(ix.edges.size()));
            if (fresh) {
                ix.edges.push_back({std::min(a, b), std::max(a, b)});
                ix.edge_tris.push_back({static_cast<int>(t), -1});
            } else {
                ix.edge_tris[it->second][1] = static_cast<int>(t);
            }
            ix.tri_edges[t][k] = it->second;
        }
    }
    return ix;
}

Point midpoint(const DomainMesh& mesh, const std::array<int, 2>& e)
{
    return 0.5 * (mesh.nodes[e[0]] + mesh.nodes[e[1]]);
}

int default_basepoint(const DomainMesh& mesh)
{
    if (mesh.has_puncture && mesh.has_cut()) return mesh.cut_pairing.front().first;
    if (!mesh.vertex_node.empty() && mesh.vertex_node[0] >= 0) return mesh.vertex_node[0];
    return 0;
}

std::vector<int> boundary_nodes_with(const DomainMesh& mesh, EdgeTag tag, int index = -2)
{
    std::set<int> s;
    for (const auto& e : mesh.boundary)
        if (e.tag == tag && (index == -2 || e.index == index)) {
            s.insert(e.a);
            s.insert(e.b);
        }
    return {s.begin(), s.end()};
}

// Graph distance from the puncture ring, with the two copies of each cut node merged.
std::vector<int> puncture_distance(const DomainMesh& mesh)
{
    const int n = static_cast<int>(mesh.nodes.size());
    std::vector<int> rep(n);
    std::iota(rep.begin(), rep.end(), 0);
    for (const auto& [p, m] : mesh.cut_pairing) rep[m] = p;
    std::vector<std::vector<int>> adj(n);
    for (const auto& t : mesh.triangles)
        for (int k = 0; k < 3; ++k) {
            const int a = rep[t[k]], b = rep[t[(k + 1) % 3]];
            adj[a].push_back(b);
            adj[b].push_back(a);
        }
    std::vector<int> d(n, -1);
    std::deque<int> queue;
    for (int v : boundary_nodes_with(mesh, EdgeTag::Puncture))
        if (d[rep[v]] < 0) {
            d[rep[v]] = 0;
            queue.push_back(rep[v]);
        }
    if (queue.empty()) throw conjugate_errors::NoLoop("mesh has no puncture ring");
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        for (int w : adj[v])
            if (d[w] < 0) {
                d[w] = d[v] + 1;
                queue.push_back(w);
            }
    }
    for (int v = 0; v < n; ++v) d[v] = d[rep[v]];
    return d;
}

double polygon_scale(const DomainMesh& mesh)
{
    if (mesh.polygon.r() > 0) return mesh.polygon.diameter();
    Eigen::AlignedBox2d box;
    for (const auto& x : mesh.nodes) box.extend(x);
    return box.diagonal().norm();
}

std::vector<int> ring_chain(const DomainMesh& mesh, int v)
{
    std::unordered_map<int, int> next;
    std::set<int> targets;
    for (const auto& t : mesh.triangles)
        for (int k = 0; k < 3; ++k)
            if (t[k] == v) {
                next[t[(k + 1) % 3]] = t[(k + 2) % 3];
                targets.insert(t[(k + 2) % 3]);
            }
    int start = -1;
    for (const auto& [a, b] : next)
        if (!targets.count(a) && (start < 0 || a < start)) start = a;
    if (start < 0) start = std::min_element(next.begin(), next.end())->first;   // interior vertex
    std::vector<int> chain{start};
    while (next.count(chain.back()) && chain.size() <= next.size()) {
        const int w = next[chain.back()];
        if (w == start) break;
        chain.push_back(w);
    }
    return chain;
}

std::vector<int> dijkstra_path(const DomainMesh& mesh, const std::vector<char>& allowed, int from, int to)
{
    const int n = static_cast<int>(mesh.nodes.size());
    std::vector<std::vector<int>> adj(n);
    for (const auto& t : mesh.triangles)
        for (int k = 0; k < 3; ++k) {
            const int a = t[k], b = t[(k + 1) % 3];
            if (!allowed[a] || !allowed[b]) continue;
            adj[a].push_back(b);
            adj[b].push_back(a);
        }
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    std::vector<int> prev(n, -1);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[from] = 0.0;
    pq.push({0.0, from});
    while (!pq.empty()) {
        const auto [d, v] = pq.top();
        pq.pop();
        if (d > dist[v]) continue;
        if (v == to) break;
        for (int w : adj[v]) {
            const double nd = d + (mesh.nodes[w] - mesh.nodes[v]).norm();
            if (nd < dist[w]) {
                dist[w] = nd;
                prev[w] = v;
                pq.push({nd, w});
            }
        }
    }
    if (!std::isfinite(dist[to])) return {};
    std::vector<int> path;
    for (int v = to; v >= 0; v = prev[v]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    return path;
}

// Chain for end i: up the wall at P_i to depth L/2, across the strip, down the wall at P_i+1.
std::vector<int> end_chain(const DomainMesh& mesh, int i)
{
    const FluxPolygon& poly = mesh.polygon;
    const int r = poly.r();
    auto wall = [&](EdgeTag tag, int index) {
        std::vector<std::pair<double, int>> nodes;
        for (int v : boundary_nodes_with(mesh, tag, index)) {
            const double y = strip_coordinates(poly, i, mesh.nodes[v]).y();
            if (y > 1e-12) nodes.push_back({y, v});
        }
        std::sort(nodes.begin(), nodes.end());
        return nodes;
    };
    const auto plus = wall(EdgeTag::StripPlus, i);
    const auto minus = wall(EdgeTag::StripMinus, (i + 1) % r);
    if (plus.empty() || minus.empty()) return {};
    const double target = 0.5 * mesh.L;
    auto closest = [&](const std::vector<std::pair<double, int>>& w) {
        std::size_t best = 0;
        for (std::size_t k = 0; k < w.size(); ++k)
            if (std::abs(w[k].first - target) < std::abs(w[best].first - target)) best = k;
        return best;
    };
    const std::size_t ka = closest(plus), kb = closest(minus);

    std::vector<char> allowed(mesh.nodes.size(), 0);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        if (mesh.tri_region[t] == i)
            for (int v : mesh.triangles[t]) allowed[v] = 1;
    const auto across = dijkstra_path(mesh, allowed, plus[ka].second, minus[kb].second);
    if (across.empty()) return {};

    std::vector<int> chain;
    for (std::size_t k = 0; k < ka; ++k) chain.push_back(plus[k].second);
    chain.insert(chain.end(), across.begin(), across.end());
    for (std::size_t k = kb; k-- > 0;) chain.push_back(minus[k].second);
    return chain;
}

// Chain along the base of strip i, from the ring of P_i to the ring of P_i+1, off the walls.
std::vector<int> base_chain(const DomainMesh& mesh, int i)
{
    const int r = mesh.polygon.r();
    const int vi = mesh.vertex_node[i];
    const int vj = (i + 1 == r && mesh.vertex_minus_node >= 0) ? mesh.vertex_minus_node : mesh.vertex_node[(i + 1) % r];
    if (vi < 0 || vj < 0) return {};
    std::vector<char> allowed(mesh.nodes.size(), 0);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        if (mesh.tri_region[t] == i || mesh.tri_region[t] == -1)
            for (int v : mesh.triangles[t]) allowed[v] = 1;
    for (const auto& e : mesh.boundary) allowed[e.a] = allowed[e.b] = 0;
    const Point& Pi = mesh.polygon.vertex(i);
    const Point& Pj = mesh.polygon.vertex(i + 1);
    auto pick = [&](int v, const Point& toward) {
        int best = -1;
        for (int w : ring_chain(mesh, v))
            if (allowed[w] && (best < 0 || (mesh.nodes[w] - toward).norm() < (mesh.nodes[best] - toward).norm()))
                best = w;
        return best;
    };
    const int a = pick(vi, Pj), b = pick(vj, Pi);
    if (a < 0 || b < 0) return {};
    return dijkstra_path(mesh, allowed, a, b);
}

} // namespace

GradientFrame gradient_frame(const DomainMesh& mesh, const SolutionField& field)
{
    if (field.u.size() != static_cast<Eigen::Index>(mesh.nodes.size()))
        throw conjugate_errors::DimensionMismatch("field has " + std::to_string(field.u.size()) + " values for " +
                                                  std::to_string(mesh.nodes.size()) + " nodes");
    GradientFrame f;
    f.mesh = &mesh;
    f.grad.reserve(mesh.triangles.size());
    f.W.reserve(mesh.triangles.size());
    for (const auto& t : mesh.triangles) {
        const auto g = hat_gradients(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]);
        const Point du = p1_gradient(g, field.u[t[0]], field.u[t[1]], field.u[t[2]]);
        f.grad.push_back(du);
        f.W.push_back(std::sqrt(1.0 + du.squaredNorm()));
    }
    return f;
}

FormId parse_form(const std::string& name)
{
    std::string s = name;
    if (!s.empty() && s.back() == '*') s.pop_back();
    if (s == "X1") return FormId::X1;
    if (s == "X2") return FormId::X2;
    if (s == "X3") return FormId::X3;
    throw conjugate_errors::UnknownForm("unknown form '" + name + "'");
}

Point form_coefficients(const Point& grad, FormId form)
{
    const double p = grad.x(), q = grad.y();
    const double W = std::sqrt(1.0 + p * p + q * q);
    switch (form) {
    case FormId::X1: return Point(q * p, 1.0 + q * q) / W;
    case FormId::X2: return Point(-(1.0 + p * p), -p * q) / W;
    case FormId::X3: return Point(-q, p) / W;
    }
    return Point::Zero();
}

std::vector<Point> one_form(const GradientFrame& frame, FormId form)
{
    std::vector<Point> out;
    out.reserve(frame.grad.size());
    for (const auto& g : frame.grad) out.push_back(form_coefficients(g, form));
    return out;
}

PsiField psi_field(const GradientFrame& frame, int basepoint)
{
    const DomainMesh& mesh = *frame.mesh;
    const EdgeIndex ix = edge_index(mesh);
    const long long chi = static_cast<long long>(mesh.nodes.size()) - static_cast<long long>(ix.edges.size()) +
                          static_cast<long long>(mesh.triangles.size());
    if (chi != 1)
        throw conjugate_errors::NotSimplyConnected("mesh Euler characteristic is " + std::to_string(chi));
    if (basepoint < 0) basepoint = default_basepoint(mesh);

    const auto omega = one_form(frame, FormId::X3);
    const std::size_t ne = ix.edges.size();
    std::vector<Point> mid(ne);
    for (std::size_t e = 0; e < ne; ++e) mid[e] = midpoint(mesh, ix.edges[e]);

    int start = -1;
    for (std::size_t e = 0; e < ne && start < 0; ++e)
        if (ix.edges[e][0] == basepoint || ix.edges[e][1] == basepoint) start = static_cast<int>(e);
    if (start < 0) throw conjugate_errors::DimensionMismatch("basepoint is not a mesh node");

    Eigen::VectorXd val = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ne));
    std::vector<char> seen(ne, 0);
    std::deque<int> queue{start};
    seen[start] = 1;
    while (!queue.empty()) {
        const int e = queue.front();
        queue.pop_front();
        for (int t : ix.edge_tris[e]) {
            if (t < 0) continue;
            for (int f : ix.tri_edges[t])
                if (!seen[f]) {
                    seen[f] = 1;
                    val[f] = val[e] + omega[t].dot(mid[f] - mid[e]);
                    queue.push_back(f);
                }
        }
    }

    PsiField psi;
    psi.edges = ix.edges;
    psi.tri_edges = ix.tri_edges;
    psi.basepoint = basepoint;
    const std::size_t nt = mesh.triangles.size();
    for (std::size_t t = 0; t < nt; ++t)
        for (int k = 0; k < 3; ++k) {
            const int a = ix.tri_edges[t][k], b = ix.tri_edges[t][(k + 1) % 3];
            psi.loop_defect =
                std::max(psi.loop_defect, std::abs(val[b] - val[a] - omega[t].dot(mid[b] - mid[a])));
        }

    Eigen::VectorXd nodal = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.nodes.size()));
    std::vector<int> count(mesh.nodes.size(), 0);
    for (std::size_t t = 0; t < nt; ++t) {
        const auto& tri = mesh.triangles[t];
        const auto& te = ix.tri_edges[t];
        const double mean = (val[te[0]] + val[te[1]] + val[te[2]]) / 3.0;
        const Point centroid = (mesh.nodes[tri[0]] + mesh.nodes[tri[1]] + mesh.nodes[tri[2]]) / 3.0;
        for (int v : tri) {
            nodal[v] += mean + omega[t].dot(mesh.nodes[v] - centroid);
            ++count[v];
        }
    }
    // Psi has no period across the cut, so the two copies of a cut node share one value.
    for (const auto& [p, q] : mesh.cut_pairing) {
        nodal[p] = nodal[q] = nodal[p] + nodal[q];
        count[p] = count[q] = count[p] + count[q];
    }
    for (std::size_t v = 0; v < mesh.nodes.size(); ++v)
        if (count[v] > 0) nodal[static_cast<Eigen::Index>(v)] /= count[v];
    const double shift = nodal[basepoint];
    nodal.array() -= shift;
    val.array() -= shift;
    psi.nodal = nodal;
    psi.midpoint = val;

    for (std::size_t k = 0; k + 1 < mesh.cut_pairing.size(); ++k) {
        const int ep = ix.find(mesh.cut_pairing[k].first, mesh.cut_pairing[k + 1].first);
        const int em = ix.find(mesh.cut_pairing[k].second, mesh.cut_pairing[k + 1].second);
        if (ep >= 0 && em >= 0) psi.third_period = std::max(psi.third_period, std::abs(val[em] - val[ep]));
    }
    return psi;
}

double line_integral(const GradientFrame& frame, FormId form, const std::vector<int>& path)
{
    const DomainMesh& mesh = *frame.mesh;
    const EdgeIndex ix = edge_index(mesh);
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const int a = path[k], b = path[k + 1];
        const int e = (a >= 0 && b >= 0 && a < ix.n && b < ix.n) ? ix.find(a, b) : -1;
        if (e < 0)
            throw conjugate_errors::PathNotInMesh("no edge between nodes " + std::to_string(a) + " and " +
                                                  std::to_string(b));
        Point coef = Point::Zero();
        int count = 0;
        for (int t : ix.edge_tris[e])
            if (t >= 0) {
                coef += form_coefficients(frame.grad[t], form);
                ++count;
            }
        sum += (coef / count).dot(mesh.nodes[b] - mesh.nodes[a]);
    }
    return sum;
}

int max_loop_level(const DomainMesh& mesh)
{
    const auto d = puncture_distance(mesh);
    int outer = std::numeric_limits<int>::max();
    for (const auto& e : mesh.boundary) {
        if (e.tag == EdgeTag::Puncture || e.tag == EdgeTag::CutPlus || e.tag == EdgeTag::CutMinus) continue;
        outer = std::min({outer, d[e.a], d[e.b]});
    }
    for (int v : mesh.vertex_node)
        if (v >= 0) outer = std::min(outer, d[v]);
    if (outer == std::numeric_limits<int>::max()) {
        outer = 0;
        for (int x : d) outer = std::max(outer, x + 1);
    }
    return outer - 2;
}

PeriodLoop period_loop(const DomainMesh& mesh, int level)
{
    if (!mesh.has_cut()) throw conjugate_errors::NoLoop("mesh has no cut");
    const auto d = puncture_distance(mesh);
    const int kmax = max_loop_level(mesh);
    if (kmax < 0) throw conjugate_errors::NoLoop("puncture ring is too close to the boundary");
    if (level < 0) level = (kmax + 1) / 2;
    if (level > kmax)
        throw conjugate_errors::NoLoop("loop level " + std::to_string(level) + " exceeds " + std::to_string(kmax));

    const EdgeIndex ix = edge_index(mesh);
    auto crossing = [&](int e) {
        const int a = d[ix.edges[e][0]], b = d[ix.edges[e][1]];
        return std::min(a, b) <= level && std::max(a, b) >= level + 1;
    };
    std::set<int> minus_edges;
    int start = -1;
    for (const auto& b : mesh.boundary) {
        const int e = ix.find(b.a, b.b);
        if (e < 0 || !crossing(e)) continue;
        if (b.tag == EdgeTag::CutPlus && start < 0) start = e;
        if (b.tag == EdgeTag::CutMinus) minus_edges.insert(e);
    }
    if (start < 0 || minus_edges.empty()) throw conjugate_errors::NoLoop("contour does not meet the cut");

    PeriodLoop loop;
    loop.level = level;
    loop.points.push_back(midpoint(mesh, ix.edges[start]));
    int e = start;
    int t = ix.edge_tris[e][0];
    bool closed = false;
    for (std::size_t guard = 0; guard <= mesh.triangles.size() && !closed; ++guard) {
        int next = -1;
        for (int f : ix.tri_edges[t])
            if (f != e && crossing(f)) next = f;
        if (next < 0) throw conjugate_errors::NoLoop("contour is interrupted");
        loop.triangles.push_back(t);
        loop.points.push_back(midpoint(mesh, ix.edges[next]));
        if (minus_edges.count(next)) {
            closed = true;
            break;
        }
        const auto& et = ix.edge_tris[next];
        const int nt = et[0] == t ? et[1] : et[0];
        if (nt < 0) throw conjugate_errors::NoLoop("contour reaches the boundary");
        e = next;
        t = nt;
    }
    if (!closed) throw conjugate_errors::NoLoop("contour does not close");

    const Point c = mesh.has_puncture ? mesh.puncture : mesh.rotation_center;
    double winding = 0.0, radius = 0.0;
    for (std::size_t k = 0; k + 1 < loop.points.size(); ++k)
        winding += turn_angle<double>(loop.points[k] - c, loop.points[k + 1] - c);
    for (const auto& x : loop.points) radius += (x - c).norm();
    const double expected = mesh.sector ? mesh.pairing_rotation : 2 * M_PI * mesh.q;
    if (std::abs(winding - expected) > 1.0) throw conjugate_errors::NoLoop("contour does not wind once around A");
    loop.mean_radius = radius / loop.points.size();
    return loop;
}

Eigen::Vector3d period_vector(const GradientFrame& frame, const PeriodLoop& loop)
{
    Eigen::Vector3d per = Eigen::Vector3d::Zero();
    for (std::size_t k = 0; k < loop.triangles.size(); ++k) {
        const Point& g = frame.grad[loop.triangles[k]];
        const Point step = loop.points[k + 1] - loop.points[k];
        per.x() += form_coefficients(g, FormId::X1).dot(step);
        per.y() += form_coefficients(g, FormId::X2).dot(step);
        per.z() += form_coefficients(g, FormId::X3).dot(step);
    }
    return per;
}

Eigen::Vector3d period_vector(const GradientFrame& frame, int level)
{
    return period_vector(frame, period_loop(*frame.mesh, level));
}

SurfaceMesh conjugate_surface(const GradientFrame& frame, const SolutionField& field, const PsiField& psi,
                              const ConjugateOptions& opts)
{
    const DomainMesh& mesh = *frame.mesh;
    const int n = static_cast<int>(mesh.nodes.size());
    if (psi.nodal.size() != n || field.u.size() != n)
        throw conjugate_errors::DimensionMismatch("psi or field does not match the mesh");

    Eigen::Vector3d tau = Eigen::Vector3d::Zero();
    if (mesh.has_cut() && mesh.has_puncture) {
        tau = period_vector(frame, opts.loop_level);
        const double gap = tau.head<2>().norm();
        if (gap > opts.period_tol * polygon_scale(mesh) && !opts.allow_open) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "horizontal period %.3e exceeds %.3e", gap,
                          opts.period_tol * polygon_scale(mesh));
            throw conjugate_errors::PeriodNotClosed(buf);
        }
        tau.z() = 0.0;
    }

    std::vector<char> vertex(n, 0);
    for (int v : mesh.vertex_node)
        if (v >= 0) vertex[v] = 1;
    if (mesh.vertex_minus_node >= 0) vertex[mesh.vertex_minus_node] = 1;

    std::vector<int> kept;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        if (!vertex[tri[0]] && !vertex[tri[1]] && !vertex[tri[2]]) kept.push_back(static_cast<int>(t));
    }
    SurfaceMesh s;
    std::vector<int> id(n, -1);
    for (int t : kept)
        for (int v : mesh.triangles[t])
            if (id[v] < 0) {
                id[v] = static_cast<int>(s.source_node.size());
                s.source_node.push_back(v);
            }
    const int m = static_cast<int>(s.source_node.size());

    // Horizontal coordinates: weighted least-squares fit of dX1*, dX2* by P1 functions with
    // X(minus) = X(plus) + tau on the cut, weighted by the graph metric times W^-k.
    std::vector<int> var(m, -1);
    std::vector<Eigen::Vector2d> offset(m, Eigen::Vector2d::Zero());
    int pin = psi.basepoint >= 0 && id[psi.basepoint] >= 0 ? id[psi.basepoint] : 0;
    std::vector<int> master(m);
    std::iota(master.begin(), master.end(), 0);
    for (const auto& [p, q] : mesh.cut_pairing)
        if (id[p] >= 0 && id[q] >= 0) {
            master[id[q]] = id[p];
            offset[id[q]] = tau.head<2>();
            s.cut_pairs.push_back({id[p], id[q]});
        }
    int unknowns = 0;
    for (int k = 0; k < m; ++k)
        if (master[k] == k && k != pin) var[k] = unknowns++;
    for (int k = 0; k < m; ++k)
        if (master[k] != k) var[k] = var[master[k]];
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(unknowns, 2);
    for (int t : kept) {
        const auto& tri = mesh.triangles[t];
        const auto g = hat_gradients(mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]);
        const double area = signed_area(mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]])
                            * std::pow(frame.W[t], -opts.weight_exponent);
        const Point w1 = form_coefficients(frame.grad[t], FormId::X1);
        const Point w2 = form_coefficients(frame.grad[t], FormId::X2);
        const Point& du = frame.grad[t];
        const Eigen::Matrix2d metric = frame.W[t] * Eigen::Matrix2d::Identity() - du * du.transpose() / frame.W[t];
        for (int a = 0; a < 3; ++a) {
            const int ia = var[id[tri[a]]];
            if (ia < 0) continue;
            const Point ga = metric * g[a];
            rhs(ia, 0) += area * w1.dot(ga);
            rhs(ia, 1) += area * w2.dot(ga);
            for (int b = 0; b < 3; ++b) {
                const double k = area * ga.dot(g[b]);
                const int ib = var[id[tri[b]]];
                rhs.row(ia) -= k * offset[id[tri[b]]].transpose();
                if (ib >= 0) trip.emplace_back(ia, ib, k);
            }
        }
    }
    SpMat K(unknowns, unknowns);
    K.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<SpMat> ldlt(K);
    const Eigen::MatrixXd X = ldlt.solve(rhs);
    std::vector<Eigen::Vector3d> pos(m);
    for (int k = 0; k < m; ++k) {
        const Eigen::Vector2d xy = (var[k] >= 0 ? Eigen::Vector2d(X.row(var[k]).transpose()) : Eigen::Vector2d::Zero())
                                   + offset[k];
        pos[k] << xy, psi.nodal[s.source_node[k]];
    }
    const int base = psi.basepoint >= 0 && id[psi.basepoint] >= 0 ? id[psi.basepoint] : 0;
    const Eigen::Vector2d shift = pos[base].head<2>();
    s.vertices.resize(m);
    for (int k = 0; k < m; ++k) s.vertices[k] << pos[k].head<2>() - shift, pos[k].z();
    for (int t : kept) {
        const auto& tri = mesh.triangles[t];
        s.triangles.push_back({id[tri[0]], id[tri[1]], id[tri[2]]});
        std::array<double, 3> len{};
        for (int k = 0; k < 3; ++k) {
            const int a = tri[(k + 1) % 3], b = tri[(k + 2) % 3];
            const Point d = mesh.nodes[b] - mesh.nodes[a];
            const double du = field.u[b] - field.u[a];
            len[k] = std::sqrt(d.squaredNorm() + du * du);
        }
        s.edge_lengths.push_back(len);
    }
    s.period = tau;

    auto mapped = [&](const std::vector<int>& chain) {
        std::vector<int> out;
        for (int v : chain)
            if (id[v] >= 0) out.push_back(id[v]);
        return out;
    };
    if (mesh.has_puncture && mesh.has_cut()) {
        std::unordered_map<int, std::vector<int>> adj;
        for (const auto& e : mesh.boundary)
            if (e.tag == EdgeTag::Puncture) {
                adj[e.a].push_back(e.b);
                adj[e.b].push_back(e.a);
            }
        std::vector<int> ring{mesh.cut_pairing.front().first};
        std::set<int> visited{ring.back()};
        for (bool grew = true; grew;) {
            grew = false;
            for (int w : adj[ring.back()])
                if (!visited.count(w)) {
                    visited.insert(w);
                    ring.push_back(w);
                    grew = true;
                    break;
                }
        }
        s.symmetry_curves.push_back(mapped(ring));
    }
    for (int v = 0; v < n; ++v)
        if (vertex[v]) s.symmetry_curves.push_back(mapped(ring_chain(mesh, v)));

    const int r = mesh.polygon.r();
    for (int i = 0; i < r; ++i) {
        bool strip = false;
        for (int reg : mesh.tri_region) strip = strip || reg == i;
        if (!strip) continue;
        s.end_paths.push_back(mapped(opts.deep_end_paths ? end_chain(mesh, i) : base_chain(mesh, i)));
        s.end_flux_hint.push_back(mesh.polygon.edge(i));
    }
    return s;
}

SurfaceMesh reflect(const SurfaceMesh& surface)
{
    SurfaceMesh out = surface;
    for (auto& x : out.vertices) x.z() = -x.z();
    for (auto& t : out.triangles) std::swap(t[1], t[2]);
    for (auto& l : out.edge_lengths) std::swap(l[1], l[2]);
    out.period.z() = -out.period.z();
    out.reflected = !surface.reflected;
    return out;
}

SurfaceMesh reflect_and_glue(const SurfaceMesh& surface, double tol, double symmetry_tol)
{
    if (surface.welded) return surface;
    const int n = static_cast<int>(surface.vertices.size());
    std::vector<Eigen::Vector3d> pos = surface.vertices;
    std::vector<int> parent(2 * n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    auto unite = [&](int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    };

    for (const auto& curve : surface.symmetry_curves)
        for (int v : curve) {
            if (std::abs(pos[v].z()) > symmetry_tol) {
                char buf[128];
                std::snprintf(buf, sizeof buf, "symmetry vertex %d lies at height %.3e", v, pos[v].z());
                throw conjugate_errors::WeldGap(buf);
            }
            pos[v].z() = 0.0;
            unite(v, v + n);
        }
    if (!surface.cut_pairs.empty()) {
        double gap = 0.0;
        for (const auto& [p, q] : surface.cut_pairs) gap = std::max(gap, (pos[q] - pos[p]).norm());
        if (gap > tol) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "cut sides differ by %.3e (tolerance %.3e)", gap, tol);
            throw conjugate_errors::WeldGap(buf);
        }
        for (const auto& [p, q] : surface.cut_pairs) {
            unite(p, q);
            unite(p + n, q + n);
        }
    }

    std::vector<Eigen::Vector3d> all(2 * n);
    for (int v = 0; v < n; ++v) {
        all[v] = pos[v];
        all[v + n] = Eigen::Vector3d(pos[v].x(), pos[v].y(), -pos[v].z());
    }
    SurfaceMesh out;
    std::vector<int> id(2 * n, -1);
    for (int v = 0; v < 2 * n; ++v) {
        const int root = find(v);
        if (id[root] < 0) {
            id[root] = static_cast<int>(out.vertices.size());
            out.vertices.push_back(all[root]);
            out.source_node.push_back(surface.source_node[root % n]);
        }
        id[v] = id[root];
    }
    for (const auto& t : surface.triangles) {
        out.triangles.push_back({id[t[0]], id[t[1]], id[t[2]]});
        out.triangles.push_back({id[t[0] + n], id[t[2] + n], id[t[1] + n]});
    }
    for (const auto& l : surface.edge_lengths) {
        out.edge_lengths.push_back(l);
        out.edge_lengths.push_back({l[0], l[2], l[1]});
    }
    for (const auto& curve : surface.symmetry_curves) {
        std::vector<int> c;
        for (int v : curve) c.push_back(id[v]);
        out.symmetry_curves.push_back(c);
    }
    // Each end cycle: the half path followed by its mirror traversed backwards.
    for (const auto& path : surface.end_paths) {
        std::vector<int> cycle;
        for (int v : path) cycle.push_back(id[v]);
        for (std::size_t k = path.size(); k-- > 0;) {
            const int w = id[path[k] + n];
            if (w != cycle.back()) cycle.push_back(w);
        }
        out.end_paths.push_back(cycle);
    }
    out.end_flux_hint = surface.end_flux_hint;
    out.period = surface.period;
    out.reflected = true;
    out.welded = true;
    return out;
}

int euler_characteristic(const SurfaceMesh& surface)
{
    std::set<std::pair<int, int>> edges;
    std::set<int> verts;
    for (const auto& t : surface.triangles)
        for (int k = 0; k < 3; ++k) {
            const int a = t[k], b = t[(k + 1) % 3];
            edges.insert({std::min(a, b), std::max(a, b)});
            verts.insert(a);
        }
    return static_cast<int>(verts.size()) - static_cast<int>(edges.size()) + static_cast<int>(surface.triangles.size());
}

double surface_area(const SurfaceMesh& surface)
{
    double area = 0.0;
    for (const auto& t : surface.triangles) {
        const auto& a = surface.vertices[t[0]];
        area += 0.5 * (surface.vertices[t[1]] - a).cross(surface.vertices[t[2]] - a).norm();
    }
    return area;
}

void write_surface(std::ostream& os, const SurfaceMesh& surface)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, "# period %.17g %.17g %.17g\n", surface.period.x(), surface.period.y(),
                  surface.period.z());
    os << buf;
    for (const auto& x : surface.vertices) {
        std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", x.x(), x.y(), x.z());
        os << buf;
    }
    for (const auto& t : surface.triangles) os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

void write_symmetry_index(std::ostream& os, const SurfaceMesh& surface)
{
    for (std::size_t k = 0; k < surface.symmetry_curves.size(); ++k) {
        os << "s " << k;
        for (int v : surface.symmetry_curves[k]) os << ' ' << v + 1;
        os << '\n';
    }
    for (std::size_t k = 0; k < surface.end_paths.size(); ++k) {
        os << "e " << k;
        for (int v : surface.end_paths[k]) os << ' ' << v + 1;
        os << '\n';
    }
    for (const auto& [p, q] : surface.cut_pairs) os << "p " << p + 1 << ' ' << q + 1 << '\n';
}

} // namespace rnoid
