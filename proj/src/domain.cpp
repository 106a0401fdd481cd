#include "rnoid/domain.hpp"

#include "rnoid/errors.hpp"
#include "rnoid/mesher.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace rnoid {

namespace {

constexpr int kInterior = -1;

int encode(EdgeTag tag, int index) { return static_cast<int>(tag) * 65536 + (index + 1); }
EdgeTag decode_tag(int code) { return static_cast<EdgeTag>(code / 65536); }
int decode_index(int code) { return code % 65536 - 1; }

std::uint64_t ukey(int a, int b)
{
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

// Parameters 0 = t_0 < ... < t_n = 1 along [a, b] following the size function.
std::vector<double> graded_params(const Point& a, const Point& b, const std::function<double(const Point&)>& size)
{
    const int samples = 4000;
    const double len = (b - a).norm();
    std::vector<double> cum(samples + 1, 0.0);
    for (int k = 0; k < samples; ++k) {
        const double tm = (k + 0.5) / samples;
        cum[k + 1] = cum[k] + len / samples / size(a + tm * (b - a));
    }
    const int n = std::max(1, static_cast<int>(std::ceil(cum.back() - 1e-9)));
    std::vector<double> ts{0.0};
    int k = 0;
    for (int j = 1; j < n; ++j) {
        const double target = cum.back() * j / n;
        while (cum[k + 1] < target) ++k;
        const double f = (target - cum[k]) / (cum[k + 1] - cum[k]);
        ts.push_back((k + f) / samples);
    }
    ts.push_back(1.0);
    return ts;
}

// Polar refinement around a polygon vertex: rays every dtheta over the domain wedge and
// rings rho0 (1 + dtheta)^k up to rho_max.
struct Rosette {
    double rho0 = 0.0;
    double dtheta = 0.0;
    double rho_max = 0.0;

    std::vector<double> rings(double limit) const
    {
        std::vector<double> out;
        for (double rho = rho0; rho <= std::min(rho_max, limit); rho *= 1.0 + dtheta) out.push_back(rho);
        return out;
    }
};

struct Pslg {
    mesher::Input in;
    std::map<int, Rosette> rosettes;   // by point index

    int point(const Point& p)
    {
        in.points.push_back(p);
        return static_cast<int>(in.points.size()) - 1;
    }

    // Adds the chain ia -> ib split at the given parameters; returns the segment indices.
    std::vector<int> chain(int ia, int ib, const std::vector<double>& ts, int tag)
    {
        const Point a = in.points[ia], b = in.points[ib];
        std::vector<int> ids{ia};
        for (std::size_t k = 1; k + 1 < ts.size(); ++k) ids.push_back(point(a + ts[k] * (b - a)));
        ids.push_back(ib);
        std::vector<int> segs;
        for (std::size_t k = 0; k + 1 < ids.size(); ++k) {
            in.segments.push_back({ids[k], ids[k + 1], tag});
            segs.push_back(static_cast<int>(in.segments.size()) - 1);
        }
        return segs;
    }

    // Graded parameters along [ia, ib]; an end with a rosette gets one point per ring.
    std::vector<double> params(int ia, int ib, const std::function<double(const Point&)>& size) const
    {
        const Point a = in.points[ia], b = in.points[ib];
        const double len = (b - a).norm();
        const auto ra = rosettes.find(ia), rb = rosettes.find(ib);
        const std::vector<double> near_a = ra != rosettes.end() ? ra->second.rings(0.4 * len) : std::vector<double>{};
        const std::vector<double> near_b = rb != rosettes.end() ? rb->second.rings(0.4 * len) : std::vector<double>{};
        const double t0 = near_a.empty() ? 0.0 : near_a.back() / len;
        const double t1 = near_b.empty() ? 1.0 : 1.0 - near_b.back() / len;
        std::vector<double> ts;
        for (double rho : near_a) ts.push_back(rho / len);
        ts.insert(ts.begin(), 0.0);
        if (!near_a.empty()) ts.pop_back();
        for (double t : graded_params(a + t0 * (b - a), a + t1 * (b - a), size)) ts.push_back(t0 + t * (t1 - t0));
        for (auto it = near_b.rbegin(); it != near_b.rend(); ++it)
            if (it != near_b.rbegin()) ts.push_back(1.0 - *it / len);
        ts.push_back(1.0);
        ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
        return ts;
    }

    std::vector<int> graded_chain(int ia, int ib, int tag, const std::function<double(const Point&)>& size)
    {
        return chain(ia, ib, params(ia, ib, size), tag);
    }
};

// Points strictly beyond the line of edge i count as strip points.
int strip_of(const FluxPolygon& poly, const std::vector<int>& strips, const Point& x)
{
    int best = -1;
    double best_y = 0.0;
    for (int i : strips) {
        const Point sy = strip_coordinates(poly, i, x);
        const double a = poly.edge(i).norm();
        if (sy.y() > 1e-12 * a && sy.x() >= -1e-9 * a && sy.x() <= a * (1 + 1e-9) && sy.y() > best_y) {
            best = i;
            best_y = sy.y();
        }
    }
    return best;
}

struct SizeField {
    const FluxPolygon* poly = nullptr;
    std::vector<int> vertices;   // vertex indices present
    std::vector<int> strips;
    std::optional<Point> A;
    double eps = 0.0;
    double hole_spacing = 0.0;
    MeshParams p;

    double operator()(const Point& x) const
    {
        double s = p.h;
        const int strip = strip_of(*poly, strips, x);
        if (strip >= 0) {
            const double y = strip_coordinates(*poly, strip, x).y();
            s = std::min(p.h * p.strip_coarsening, p.h + p.strip_growth * y);
        }
        const double hv = p.h / p.grading;
        for (int i : vertices) s = std::min(s, hv + p.growth * (x - poly->vertex(i)).norm());
        if (A) s = std::min(s, hole_spacing + p.growth * std::max(0.0, (x - *A).norm() - eps));
        return s;
    }
};

void check_params(const MeshParams& p)
{
    if (!(p.h > 0.0) || !std::isfinite(p.h)) throw domain_errors::MeshFailure("mesh size h must be positive");
    if (!(p.grading >= 1.0)) throw domain_errors::MeshFailure("grading must be at least 1");
    if (p.hole_nodes < 8) throw domain_errors::MeshFailure("puncture needs at least 8 nodes");
    if (!(p.min_angle_deg >= 20.0 && p.min_angle_deg < 34.0))
        throw domain_errors::MeshFailure("minimum angle must lie in [20, 34) degrees");
}

// Node splitting along the cut. Triangles on the right of the directed cut (from the
// puncture toward P_1) receive the duplicated nodes.
struct CutSplit {
    std::vector<std::pair<int, int>> pairs;   // (plus, minus)
    std::unordered_map<int, int> dup;         // original -> duplicate
};

CutSplit split_cut(std::vector<Point>& nodes, std::vector<std::array<int, 3>>& tris,
                   const std::set<std::uint64_t>& cut_edges, const Point& from, const Point& to)
{
    std::set<int> cut_nodes;
    for (auto k : cut_edges) {
        cut_nodes.insert(static_cast<int>(k >> 32));
        cut_nodes.insert(static_cast<int>(k & 0xffffffffu));
    }
    std::unordered_map<int, std::vector<int>> fan;
    for (std::size_t t = 0; t < tris.size(); ++t)
        for (int v : tris[t])
            if (cut_nodes.count(v)) fan[v].push_back(static_cast<int>(t));

    CutSplit out;
    std::vector<std::array<int, 3>> original = tris;
    for (int v : cut_nodes) {
        const auto& ts = fan[v];
        // components of the fan glued across non-cut edges through v
        std::vector<int> comp(ts.size(), -1);
        int ncomp = 0;
        for (std::size_t s = 0; s < ts.size(); ++s) {
            if (comp[s] >= 0) continue;
            comp[s] = ncomp;
            std::vector<std::size_t> stack{s};
            while (!stack.empty()) {
                const std::size_t x = stack.back();
                stack.pop_back();
                for (std::size_t y = 0; y < ts.size(); ++y) {
                    if (comp[y] >= 0) continue;
                    // shared edge (v, w) not on the cut
                    for (int w : original[ts[x]]) {
                        if (w == v) continue;
                        const auto& ty = original[ts[y]];
                        if (std::find(ty.begin(), ty.end(), w) == ty.end()) continue;
                        if (cut_edges.count(ukey(v, w))) continue;
                        comp[y] = ncomp;
                        stack.push_back(y);
                        break;
                    }
                }
            }
            ++ncomp;
        }
        std::vector<int> side(ncomp, 0);
        for (std::size_t s = 0; s < ts.size(); ++s) {
            const auto& tv = original[ts[s]];
            for (int w : tv) {
                if (w == v || !cut_edges.count(ukey(v, w))) continue;
                int third = -1;
                for (int z : tv)
                    if (z != v && z != w) third = z;
                side[comp[s]] = orient(from, to, nodes[third]) > 0.0 ? 1 : -1;
            }
        }
        if (ncomp != 2 || side[0] == 0 || side[1] == 0 || side[0] == side[1])
            throw domain_errors::MeshFailure("could not separate the two sides of the cut");
        const int d = static_cast<int>(nodes.size());
        nodes.push_back(nodes[v]);
        out.dup[v] = d;
        out.pairs.push_back({v, d});
        for (std::size_t s = 0; s < ts.size(); ++s) {
            if (side[comp[s]] > 0) continue;
            for (int& z : tris[ts[s]])
                if (z == v) z = d;
        }
    }
    const Point dir = to - from;
    std::sort(out.pairs.begin(), out.pairs.end(), [&](const auto& a, const auto& b) {
        return (nodes[a.first] - from).dot(dir) < (nodes[b.first] - from).dot(dir);
    });
    return out;
}

// Boundary edges of a triangle list, oriented as in their triangle.
std::vector<std::pair<int, int>> boundary_edges(const std::vector<std::array<int, 3>>& tris)
{
    std::unordered_map<std::uint64_t, int> count;
    for (const auto& t : tris)
        for (int k = 0; k < 3; ++k) ++count[ukey(t[k], t[(k + 1) % 3])];
    std::vector<std::pair<int, int>> out;
    for (const auto& t : tris)
        for (int k = 0; k < 3; ++k)
            if (count[ukey(t[k], t[(k + 1) % 3])] == 1) out.push_back({t[k], t[(k + 1) % 3]});
    return out;
}

std::vector<int> all_indices(int r)
{
    std::vector<int> v(r);
    for (int i = 0; i < r; ++i) v[i] = i;
    return v;
}

// Appends the outer boundary of the strips on the listed edges. wall_plus[i] and
// wall_minus[i] receive the segment lists of the walls of strip i.
void add_strips(Pslg& g, const FluxPolygon& poly, const std::vector<int>& strips, const std::vector<int>& vnode,
                double L, const SizeField& size)
{
    for (int i : strips) {
        const Point n = outward_normal(poly, i);
        const int j = poly.wrap(i + 1);
        const int top_a = g.point(poly.vertex(i) + L * n);
        const int top_b = g.point(poly.vertex(j) + L * n);
        g.graded_chain(vnode[i], top_a, encode(EdgeTag::StripPlus, i), size);
        g.graded_chain(top_a, top_b, encode(EdgeTag::StripCap, i), size);
        g.graded_chain(top_b, vnode[j], encode(EdgeTag::StripMinus, j), size);
    }
}

double segment_distance(const Point& x, const Point& a, const Point& b)
{
    const Point d = b - a;
    const double t = std::clamp((x - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
    return (x - a - t * d).norm();
}

Rosette make_rosette(const FluxPolygon& poly, int i, const MeshParams& p)
{
    Rosette r;
    r.dtheta = (interior_angles(poly)[poly.wrap(i)] + M_PI) / p.rosette_rays;
    r.rho0 = p.h / p.grading;
    r.rho_max = std::min(0.2 * poly.min_edge_length(), p.h / r.dtheta);
    return r;
}

// Interior points of the rosette at P_i. Rays start at the wall of strip i; rays within half a
// step of a constraint through the centre are skipped, as are points outside the domain or
// next to other constraints.
void add_rosette_points(Pslg& g, const FluxPolygon& poly, int i, int center,
                        const std::function<bool(const Point&)>& inside)
{
    const auto found = g.rosettes.find(center);
    if (found == g.rosettes.end()) return;
    const Rosette& ros = found->second;
    const Point c = g.in.points[center];
    const Point n = outward_normal(poly, i);
    const double start = std::atan2(n.y(), n.x());
    const int rays = static_cast<int>(std::lround((interior_angles(poly)[poly.wrap(i)] + M_PI) / ros.dtheta));
    std::vector<Point> incident;
    std::vector<std::pair<Point, Point>> near;
    for (const auto& s : g.in.segments) {
        const Point& a = g.in.points[s.a];
        const Point& b = g.in.points[s.b];
        if (s.a == center) incident.push_back((b - a).normalized());
        if (s.b == center) incident.push_back((a - b).normalized());
        if (s.a != center && s.b != center && segment_distance(c, a, b) < 2.0 * ros.rho_max) near.push_back({a, b});
    }
    const std::vector<double> rings = ros.rings(ros.rho_max);
    for (int j = 1; j < rays; ++j) {
        const double th = start + j * ros.dtheta;
        const Point dir(std::cos(th), std::sin(th));
        bool free_ray = true;
        for (const Point& d : incident) free_ray = free_ray && std::abs(turn_angle<double>(d, dir)) > 0.5 * ros.dtheta;
        if (!free_ray) continue;
        for (double rho : rings) {
            const Point x = c + rho * dir;
            if (!inside(x)) continue;
            bool clear = true;
            for (const auto& [a, b] : near) clear = clear && segment_distance(x, a, b) > 0.5 * rho * ros.dtheta;
            if (clear) g.point(x);
        }
    }
}

std::vector<int> region_of_triangles(const std::vector<Point>& nodes, const std::vector<std::array<int, 3>>& tris,
                                     const FluxPolygon& poly, const std::vector<int>& strips)
{
    std::vector<int> region;
    region.reserve(tris.size());
    for (const auto& t : tris) {
        const Point g = (nodes[t[0]] + nodes[t[1]] + nodes[t[2]]) / 3.0;
        region.push_back(strip_of(poly, strips, g));
    }
    return region;
}

DomainMesh assemble(const mesher::Output& out, const MeshParams& params, bool with_cut, const Point& cut_from,
                    const Point& cut_to)
{
    DomainMesh m;
    m.nodes = out.points;
    m.triangles = out.triangles;
    m.h = params.h;
    std::unordered_map<std::uint64_t, int> tag_of;
    std::set<std::uint64_t> cut_edges;
    for (const auto& s : out.subsegments) {
        if (s.tag == kInterior) continue;
        tag_of[ukey(s.a, s.b)] = s.tag;
        if (decode_tag(s.tag) == EdgeTag::CutPlus) cut_edges.insert(ukey(s.a, s.b));
    }
    const int n_before = static_cast<int>(m.nodes.size());
    if (with_cut) {
        const CutSplit split = split_cut(m.nodes, m.triangles, cut_edges, cut_from, cut_to);
        m.cut_pairing = split.pairs;
    }
    std::unordered_map<int, int> orig;
    for (const auto& [p, q] : m.cut_pairing) orig[q] = p;
    auto base = [&](int v) {
        auto it = orig.find(v);
        return it == orig.end() ? v : it->second;
    };
    for (const auto& [a, b] : boundary_edges(m.triangles)) {
        auto it = tag_of.find(ukey(base(a), base(b)));
        if (it == tag_of.end()) throw domain_errors::MeshFailure("untagged boundary edge");
        EdgeTag tag = decode_tag(it->second);
        if (tag == EdgeTag::CutPlus && (a >= n_before || b >= n_before)) tag = EdgeTag::CutMinus;
        m.boundary.push_back({a, b, tag, decode_index(it->second)});
    }
    std::sort(m.boundary.begin(), m.boundary.end(), [](const BoundaryEdge& x, const BoundaryEdge& y) {
        return std::tie(x.tag, x.index, x.a, x.b) < std::tie(y.tag, y.index, y.a, y.b);
    });
    return m;
}

int node_at(const mesher::Output& out, int input_point)
{
    for (std::size_t i = 0; i < out.input_index.size(); ++i)
        if (out.input_index[i] == input_point) return static_cast<int>(i);
    throw domain_errors::MeshFailure("input point lost by the mesher");
}

std::vector<double> hole_angles(const Point& A, const std::vector<Point>& targets, double start, double span,
                                int n_full)
{
    // target directions sorted counterclockwise from start; the hole arc is subdivided so
    // that every target direction is a node
    std::vector<double> dirs;
    for (const auto& p : targets) {
        double a = std::atan2(p.y() - A.y(), p.x() - A.x()) - start;
        while (a < 0) a += 2 * M_PI;
        while (a >= 2 * M_PI) a -= 2 * M_PI;
        if (a > 1e-12 && a < span - 1e-12) dirs.push_back(a);
    }
    dirs.push_back(0.0);
    dirs.push_back(span);
    std::sort(dirs.begin(), dirs.end());
    std::vector<double> out;
    const double step = 2 * M_PI / n_full;
    for (std::size_t k = 0; k + 1 < dirs.size(); ++k) {
        const double gap = dirs[k + 1] - dirs[k];
        const int n = std::max(1, static_cast<int>(std::ceil(gap / step - 1e-9)));
        for (int j = 0; j < n; ++j) out.push_back(start + dirs[k] + gap * j / n);
    }
    out.push_back(start + span);
    return out;
}

} // namespace

std::string tag_name(EdgeTag tag, int index)
{
    const std::string i = "(" + std::to_string(index + 1) + ")";
    switch (tag) {
    case EdgeTag::StripPlus: return "STRIP_PLUS" + i;
    case EdgeTag::StripMinus: return "STRIP_MINUS" + i;
    case EdgeTag::StripCap: return "STRIP_CAP" + i;
    case EdgeTag::CutPlus: return "CUT_PLUS";
    case EdgeTag::CutMinus: return "CUT_MINUS";
    case EdgeTag::Puncture: return "PUNCTURE";
    case EdgeTag::SectorStart: return "SECTOR_START";
    case EdgeTag::SectorEnd: return "SECTOR_END";
    case EdgeTag::Fixed: return "FIXED";
    }
    return "UNKNOWN";
}

Point strip_coordinates(const FluxPolygon& poly, int strip, const Point& x)
{
    const Point e = poly.edge(strip).normalized();
    const Point d = x - poly.vertex(strip);
    return Point(d.dot(e), d.dot(outward_normal(poly, strip)));
}

double puncture_margin(double h) { return 0.25 * h; }

CutDomain build_cut_domain(const FluxPolygon& poly, const Point& A, double L, double h)
{
    if (!poly.is_convex()) throw domain_errors::NotConvex("only convex flux polygons bound a cut domain");
    const Containment c = contains(poly, A);
    if (!c.inside || c.distance < puncture_margin(h))
        throw domain_errors::PunctureTooClose("puncture at distance " + std::to_string(c.distance) +
                                              " from the boundary, needs " + std::to_string(puncture_margin(h)));
    if (!(L > 0.0)) throw domain_errors::InvalidStrip("strip length must be positive");
    // [A, P_1] stays in a convex disk; the check guards against numerically degenerate input
    for (int i = 1; i + 1 < poly.r(); ++i) {
        const Point& a = poly.vertex(i);
        const Point& b = poly.vertex(i + 1);
        if (orient(a, b, A) * orient(a, b, poly.vertex(0)) < 0.0 &&
            orient(A, poly.vertex(0), a) * orient(A, poly.vertex(0), b) < 0.0)
            throw domain_errors::CutCrossesBoundary("segment [A, P_1] leaves the disk");
    }
    CutDomain d;
    d.polygon = poly;
    d.puncture = A;
    d.puncture_radius = std::min(0.25 * h, 0.25 * c.distance);
    d.L = L;
    return d;
}

CutDomain build_star_domain(const StarSpec& spec, double L)
{
    CutDomain d;
    d.polygon = star_polygon(spec);
    d.puncture = Point::Zero();
    d.L = L;
    d.q = spec.q;
    d.sector = true;
    d.star = spec;
    return d;
}

namespace {

DomainMesh triangulate_convex(const CutDomain& dom, const MeshParams& params)
{
    const FluxPolygon& poly = dom.polygon;
    const int r = poly.r();
    SizeField size;
    size.poly = &poly;
    size.vertices = all_indices(r);
    size.strips = all_indices(r);
    size.p = params;
    Pslg g;
    std::vector<int> vnode;
    for (int i = 0; i < r; ++i) vnode.push_back(g.point(poly.vertex(i)));
    if (params.rosette_rays > 0)
        for (int i = 0; i < r; ++i) g.rosettes[vnode[i]] = make_rosette(poly, i, params);
    const bool punctured = dom.puncture.has_value();
    std::vector<int> hole;
    Point A = Point::Zero();
    double eps = dom.puncture_radius;
    if (punctured) {
        A = *dom.puncture;
        if (!(eps > 0.0)) eps = 0.25 * params.h;
        size.A = A;
        size.eps = eps;
        size.hole_spacing = 2 * M_PI * eps / params.hole_nodes;
        const Point d0 = poly.vertex(0) - A;
        const double start = std::atan2(d0.y(), d0.x());
        auto angles = hole_angles(A, poly.vertices(), start, 2 * M_PI, params.hole_nodes);
        angles.pop_back();
        for (double a : angles) hole.push_back(g.point(A + eps * Point(std::cos(a), std::sin(a))));
        for (std::size_t k = 0; k < hole.size(); ++k)
            g.in.segments.push_back({hole[k], hole[(k + 1) % hole.size()], encode(EdgeTag::Puncture, -1)});
        g.in.holes.push_back(A);
        g.graded_chain(hole[0], vnode[0], encode(EdgeTag::CutPlus, -1), size);
        if (dom.fan_constraints) {
            for (int i = 1; i < r; ++i) {
                const Point di = (poly.vertex(i) - A).normalized();
                int best = 0;
                for (std::size_t k = 0; k < hole.size(); ++k)
                    if ((g.in.points[hole[k]] - A).normalized().dot(di) >
                        (g.in.points[hole[best]] - A).normalized().dot(di))
                        best = static_cast<int>(k);
                g.graded_chain(hole[best], vnode[i], kInterior, size);
            }
            for (int i = 0; i < r; ++i) g.graded_chain(vnode[i], vnode[(i + 1) % r], kInterior, size);
        }
    }
    add_strips(g, poly, all_indices(r), vnode, dom.L, size);
    const double hole_clearance = eps + 2.0 * size.hole_spacing;
    auto inside = [&](const Point& x) {
        if (punctured && (x - A).norm() < hole_clearance) return false;
        return contains(poly, x).inside || strip_of(poly, all_indices(r), x) >= 0;
    };
    for (int i = 0; i < r; ++i) add_rosette_points(g, poly, i, vnode[i], inside);

    mesher::Options mo;
    mo.min_angle_deg = params.min_angle_deg;
    mo.size = std::ref(size);
    mo.apex_points = vnode;
    const mesher::Output out = mesher::triangulate(g.in, mo);

    DomainMesh m = assemble(out, params, punctured, punctured ? out.points[node_at(out, hole[0])] : A,
                            poly.vertex(0));
    m.polygon = poly;
    m.has_puncture = punctured;
    m.puncture = A;
    m.puncture_radius = punctured ? eps : 0.0;
    m.L = dom.L;
    for (int i = 0; i < r; ++i) m.vertex_node.push_back(node_at(out, vnode[i]));
    if (punctured) {
        for (const auto& [p, q] : m.cut_pairing)
            if (p == m.vertex_node[0]) m.vertex_minus_node = q;
    }
    m.tri_region = region_of_triangles(m.nodes, m.triangles, poly, all_indices(r));
    return m;
}

DomainMesh triangulate_sector(const CutDomain& dom, const MeshParams& params)
{
    const FluxPolygon& poly = dom.polygon;
    const int r = dom.star.r;
    const double phi = 2 * M_PI * dom.star.q / r;
    const double eps = dom.puncture_radius > 0.0 ? dom.puncture_radius : 0.25 * params.h;
    SizeField size;
    size.poly = &poly;
    size.vertices = {0, 1};
    size.strips = {0};
    size.A = Point::Zero();
    size.eps = eps;
    size.hole_spacing = 2 * M_PI * eps / params.hole_nodes;
    size.p = params;

    Pslg g;
    const int p1 = g.point(poly.vertex(0));
    const int p2 = g.point(poly.vertex(1));
    if (params.rosette_rays > 0) {
        g.rosettes[p1] = make_rosette(poly, 0, params);
        g.rosettes[p2] = make_rosette(poly, 1, params);
    }
    // hole arc from angle 0 to phi, nodes placed symmetrically about phi / 2
    const int n_arc = std::max(2, static_cast<int>(std::ceil(phi / (2 * M_PI / params.hole_nodes) - 1e-9)));
    std::vector<int> arc;
    for (int k = 0; k <= n_arc; ++k) {
        const double a = phi * k / n_arc;
        arc.push_back(g.point(eps * Point(std::cos(a), std::sin(a))));
    }
    for (int k = 0; k < n_arc; ++k) g.in.segments.push_back({arc[k], arc[k + 1], encode(EdgeTag::Puncture, -1)});
    const std::vector<double> ts = g.params(arc.front(), p1, size);
    const auto side1 = g.chain(arc.front(), p1, ts, encode(EdgeTag::SectorStart, -1));
    const auto side2 = g.chain(arc.back(), p2, ts, encode(EdgeTag::SectorEnd, -1));
    for (std::size_t k = 0; k < side1.size(); ++k) g.in.segments[side2[k]].partner = side1[k];
    std::vector<int> vnode(r, -1);
    vnode[0] = p1;
    vnode[1] = p2;
    add_strips(g, poly, {0}, vnode, dom.L, size);
    auto inside = [&](const Point& x) {
        if (strip_of(poly, {0}, x) == 0) return true;
        const Point& a = poly.vertex(0);
        const Point& b = poly.vertex(1);
        return orient(Point(Point::Zero()), a, x) > 0.0 && orient(a, b, x) > 0.0 &&
               orient(b, Point(Point::Zero()), x) > 0.0;
    };
    add_rosette_points(g, poly, 0, p1, inside);
    add_rosette_points(g, poly, 1, p2, inside);

    mesher::Options mo;
    mo.min_angle_deg = params.min_angle_deg;
    mo.size = std::ref(size);
    mo.apex_points = {p1, p2};
    const mesher::Output out = mesher::triangulate(g.in, mo);

    DomainMesh m = assemble(out, params, false, Point::Zero(), Point::Zero());
    m.polygon = poly;
    m.has_puncture = true;
    m.puncture = Point::Zero();
    m.puncture_radius = eps;
    m.L = dom.L;
    m.q = dom.q;
    m.sector = true;
    m.vertex_node.assign(r, -1);
    m.vertex_node[0] = node_at(out, p1);
    m.vertex_node[1] = node_at(out, p2);
    m.tri_region = region_of_triangles(m.nodes, m.triangles, poly, {0});
    // pair side1 with side2 by the shared parameter along the sides
    std::vector<std::pair<double, int>> s1, s2;
    for (const auto& s : out.subsegments) {
        if (s.tag == kInterior) continue;
        const EdgeTag t = decode_tag(s.tag);
        const int local = static_cast<int>(std::find(side1.begin(), side1.end(), s.segment) - side1.begin());
        const int local2 = static_cast<int>(std::find(side2.begin(), side2.end(), s.segment) - side2.begin());
        if (t == EdgeTag::SectorStart) {
            s1.push_back({local + s.t0, s.a});
            s1.push_back({local + s.t1, s.b});
        } else if (t == EdgeTag::SectorEnd) {
            s2.push_back({local2 + s.t0, s.a});
            s2.push_back({local2 + s.t1, s.b});
        }
    }
    auto uniq = [](std::vector<std::pair<double, int>>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second == b.second; }),
                v.end());
    };
    uniq(s1);
    uniq(s2);
    if (s1.size() != s2.size()) throw domain_errors::MeshFailure("sector sides are not split identically");
    for (std::size_t k = 0; k < s1.size(); ++k) {
        if (std::abs(s1[k].first - s2[k].first) > 1e-12)
            throw domain_errors::MeshFailure("sector sides are not split identically");
        m.cut_pairing.push_back({s1[k].second, s2[k].second});
        // exact rotated copy for the side2 nodes
        m.nodes[s2[k].second] = rotate(m.nodes[s1[k].second], phi);
    }
    m.nodes[m.vertex_node[1]] = poly.vertex(1);
    m.pairing_rotation = phi;
    m.rotation_center = Point::Zero();
    return m;
}

} // namespace

DomainMesh triangulate(const CutDomain& domain, const MeshParams& params)
{
    check_params(params);
    if (domain.sector) return triangulate_sector(domain, params);
    return triangulate_convex(domain, params);
}

DomainMesh genus0_domain(const FluxPolygon& poly, double L, const MeshParams& params)
{
    if (!poly.is_convex()) throw domain_errors::NotConvex("only convex flux polygons bound a genus-zero domain");
    if (!(L > 0.0)) throw domain_errors::InvalidStrip("strip length must be positive");
    CutDomain d;
    d.polygon = poly;
    d.L = L;
    check_params(params);
    return triangulate_convex(d, params);
}

DomainMesh morph_puncture(const DomainMesh& ref, const Point& A)
{
    const FluxPolygon& poly = ref.polygon;
    const Containment c = contains(poly, A);
    if (!c.inside || c.distance < puncture_margin(ref.h))
        throw domain_errors::PunctureTooClose("morph target too close to the boundary");
    DomainMesh m = ref;
    const Point A0 = ref.puncture;
    const int r = poly.r();
    for (auto& x : m.nodes) {
        if (!contains(poly, x).inside) continue;
        int best = -1;
        double best_min = -std::numeric_limits<double>::infinity();
        Eigen::Vector3d best_l;
        for (int i = 0; i < r; ++i) {
            const Point& b = poly.vertex(i);
            const Point& cc = poly.vertex(i + 1);
            const double area = orient(A0, b, cc);
            Eigen::Vector3d l(orient(x, b, cc) / area, orient(A0, x, cc) / area, orient(A0, b, x) / area);
            if (l.minCoeff() > best_min) {
                best_min = l.minCoeff();
                best = i;
                best_l = l;
            }
        }
        x = best_l[0] * A + best_l[1] * poly.vertex(best) + best_l[2] * poly.vertex(best + 1);
    }
    for (const auto& [p, q] : m.cut_pairing) m.nodes[q] = m.nodes[p];
    m.puncture = A;
    return m;
}

Replication replicate_sector(const DomainMesh& sector, int r)
{
    if (!sector.sector) throw domain_errors::InvalidStrip("replication needs a sector mesh");
    const int n = static_cast<int>(sector.nodes.size());
    std::vector<int> slave_of(n, -1);   // side2 node -> its side1 master
    for (const auto& [p, q] : sector.cut_pairing) slave_of[q] = p;
    Replication rep;
    rep.copies = r;
    DomainMesh& m = rep.mesh;
    // ids[k][v]: node of copy k for sector node v
    std::vector<std::vector<int>> ids(r, std::vector<int>(n, -1));
    for (int k = 0; k < r; ++k) {
        for (int v = 0; v < n; ++v) {
            if (slave_of[v] >= 0 && k + 1 < r) continue;
            ids[k][v] = static_cast<int>(m.nodes.size());
            m.nodes.push_back(rotate(sector.nodes[v], k * sector.pairing_rotation));
            rep.node_copy.push_back(k);
            rep.node_source.push_back(v);
        }
    }
    for (int k = 0; k + 1 < r; ++k)
        for (int v = 0; v < n; ++v)
            if (slave_of[v] >= 0) ids[k][v] = ids[k + 1][slave_of[v]];
    for (int k = 0; k < r; ++k) {
        for (std::size_t t = 0; t < sector.triangles.size(); ++t) {
            const auto& tv = sector.triangles[t];
            m.triangles.push_back({ids[k][tv[0]], ids[k][tv[1]], ids[k][tv[2]]});
            m.tri_region.push_back(sector.tri_region[t] < 0 ? -1 : k);
        }
        for (const auto& e : sector.boundary) {
            BoundaryEdge b{ids[k][e.a], ids[k][e.b], e.tag, e.index};
            if (e.tag == EdgeTag::SectorStart) {
                if (k != 0) continue;
                b.tag = EdgeTag::CutPlus;
            } else if (e.tag == EdgeTag::SectorEnd) {
                if (k != r - 1) continue;
                b.tag = EdgeTag::CutMinus;
            } else if (e.index >= 0) {
                b.index = (e.index + k) % r;
            }
            m.boundary.push_back(b);
        }
    }
    std::sort(m.boundary.begin(), m.boundary.end(), [](const BoundaryEdge& x, const BoundaryEdge& y) {
        return std::tie(x.tag, x.index, x.a, x.b) < std::tie(y.tag, y.index, y.a, y.b);
    });
    for (const auto& [p, q] : sector.cut_pairing) m.cut_pairing.push_back({ids[0][p], ids[r - 1][q]});
    m.h = sector.h;
    m.polygon = sector.polygon;
    m.has_puncture = true;
    m.puncture = sector.rotation_center;
    m.puncture_radius = sector.puncture_radius;
    m.L = sector.L;
    m.q = sector.q;
    m.sector = false;
    m.vertex_node.assign(r, -1);
    for (int k = 0; k < r; ++k) m.vertex_node[k] = ids[k][sector.vertex_node[0]];
    m.vertex_minus_node = ids[r - 1][sector.vertex_node[1]];
    return rep;
}

DomainMesh polar_mesh(double rho0, double rho1, double theta0, double theta1, double h, bool slit,
                      EdgeTag inner_tag)
{
    if (!(h > 0.0) || !(rho0 > 0.0) || !(rho1 > rho0) || !(theta1 > theta0))
        throw domain_errors::MeshFailure("invalid polar sector");
    const double span = theta1 - theta0;
    if (slit && std::abs(span - 2 * M_PI) > 1e-12) throw domain_errors::MeshFailure("a slit annulus spans 2 pi");
    // logarithmic radii give nearly square cells
    const int nt = std::max(2, static_cast<int>(std::ceil(span * rho1 / h - 1e-9)));
    const double dt = span / nt;
    const int nr = std::max(1, static_cast<int>(std::lround(std::log(rho1 / rho0) / dt)));
    DomainMesh m;
    auto id = [&](int i, int j) { return j * (nr + 1) + i; };
    for (int j = 0; j <= nt; ++j)
        for (int i = 0; i <= nr; ++i) {
            const double rho = rho0 * std::pow(rho1 / rho0, static_cast<double>(i) / nr);
            const double th = theta0 + dt * j;
            m.nodes.emplace_back(rho * std::cos(th), rho * std::sin(th));
        }
    for (int j = 0; j < nt; ++j)
        for (int i = 0; i < nr; ++i) {
            m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    for (int j = 0; j < nt; ++j) {
        m.boundary.push_back({id(nr, j), id(nr, j + 1), EdgeTag::Fixed, -1});
        m.boundary.push_back({id(0, j + 1), id(0, j), inner_tag, -1});
    }
    for (int i = 0; i < nr; ++i) {
        m.boundary.push_back({id(i + 1, 0), id(i, 0), slit ? EdgeTag::CutPlus : EdgeTag::Fixed, -1});
        m.boundary.push_back({id(i, nt), id(i + 1, nt), slit ? EdgeTag::CutMinus : EdgeTag::Fixed, -1});
    }
    if (slit)
        for (int i = 0; i <= nr; ++i) m.cut_pairing.push_back({id(i, 0), id(i, nt)});
    m.tri_region.assign(m.triangles.size(), -2);
    m.h = mesh_quality(m).max_edge;
    return m;
}

DomainMesh square_mesh(int n)
{
    if (n < 1) throw domain_errors::MeshFailure("square mesh needs at least one cell");
    DomainMesh m;
    auto id = [&](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) m.nodes.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    for (const auto& [a, b] : boundary_edges(m.triangles)) m.boundary.push_back({a, b, EdgeTag::Fixed, -1});
    m.tri_region.assign(m.triangles.size(), -2);
    m.h = std::sqrt(2.0) / n;
    return m;
}

MeshQuality mesh_quality(const DomainMesh& m)
{
    MeshQuality q;
    q.min_angle_deg = q.min_fan_angle_deg = 180.0;
    q.min_edge = std::numeric_limits<double>::infinity();
    std::set<int> apex(m.vertex_node.begin(), m.vertex_node.end());
    apex.insert(m.vertex_minus_node);
    std::set<std::uint64_t> edges;
    for (const auto& t : m.triangles) {
        const Point &a = m.nodes[t[0]], &b = m.nodes[t[1]], &c = m.nodes[t[2]];
        if (!(orient(a, b, c) > 0.0)) q.consistent_orientation = false;
        const bool fan = apex.count(t[0]) || apex.count(t[1]) || apex.count(t[2]);
        double& target = fan ? q.min_fan_angle_deg : q.min_angle_deg;
        target = std::min(target, min_angle(a, b, c) * 180.0 / M_PI);
        for (int k = 0; k < 3; ++k) {
            const double len = (m.nodes[t[k]] - m.nodes[t[(k + 1) % 3]]).norm();
            q.max_edge = std::max(q.max_edge, len);
            q.min_edge = std::min(q.min_edge, len);
            edges.insert(ukey(t[k], t[(k + 1) % 3]));
        }
    }
    std::set<int> used;
    for (const auto& t : m.triangles) used.insert(t.begin(), t.end());
    q.euler_characteristic = static_cast<int>(used.size()) - static_cast<int>(edges.size()) +
                             static_cast<int>(m.triangles.size());
    return q;
}

void write_mesh(std::ostream& os, const DomainMesh& m)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, "# h %.17g\n", m.h);
    os << buf;
    for (const auto& p : m.nodes) {
        std::snprintf(buf, sizeof buf, "n %.17g %.17g\n", p.x(), p.y());
        os << buf;
    }
    for (const auto& t : m.triangles) os << "t " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    for (const auto& b : m.boundary) os << "b " << b.a << ' ' << b.b << ' ' << tag_name(b.tag, b.index) << '\n';
    for (const auto& [p, q] : m.cut_pairing) os << "c " << p << ' ' << q << '\n';
}

DomainMesh read_mesh(std::istream& is)
{
    static const std::map<std::string, EdgeTag> names = {
        {"STRIP_PLUS", EdgeTag::StripPlus}, {"STRIP_MINUS", EdgeTag::StripMinus}, {"STRIP_CAP", EdgeTag::StripCap},
        {"CUT_PLUS", EdgeTag::CutPlus},     {"CUT_MINUS", EdgeTag::CutMinus},     {"PUNCTURE", EdgeTag::Puncture},
        {"SECTOR_START", EdgeTag::SectorStart}, {"SECTOR_END", EdgeTag::SectorEnd}, {"FIXED", EdgeTag::Fixed}};
    DomainMesh m;
    std::string line;
    int lineno = 0;
    auto fail = [&]() { throw domain_errors::MeshFailure("malformed mesh record at line " + std::to_string(lineno)); };
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string kind;
        ls >> kind;
        if (kind == "#") {
            std::string key;
            double v;
            if (ls >> key >> v && key == "h") m.h = v;
        } else if (kind == "n") {
            double x, y;
            if (!(ls >> x >> y)) fail();
            m.nodes.emplace_back(x, y);
        } else if (kind == "t") {
            std::array<int, 3> t;
            if (!(ls >> t[0] >> t[1] >> t[2])) fail();
            m.triangles.push_back(t);
        } else if (kind == "b") {
            BoundaryEdge b;
            std::string tag;
            if (!(ls >> b.a >> b.b >> tag)) fail();
            const auto open = tag.find('(');
            auto it = names.find(tag.substr(0, open));
            if (it == names.end()) fail();
            b.tag = it->second;
            if (open != std::string::npos) b.index = std::stoi(tag.substr(open + 1)) - 1;
            m.boundary.push_back(b);
        } else if (kind == "c") {
            int p, q;
            if (!(ls >> p >> q)) fail();
            m.cut_pairing.push_back({p, q});
        } else {
            fail();
        }
    }
    const int n = static_cast<int>(m.nodes.size());
    for (const auto& t : m.triangles)
        for (int v : t)
            if (v < 0 || v >= n) throw domain_errors::MeshFailure("triangle references a missing node");
    m.tri_region.assign(m.triangles.size(), -2);
    return m;
}

} // namespace rnoid
