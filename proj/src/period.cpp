#include "rnoid/period.hpp"

#include "rnoid/errors.hpp"
#include "rnoid/hash.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace rnoid {

namespace {

constexpr double kQuantum = 1e-9;

std::pair<long long, long long> quantize(const Point& A)
{
    return {std::llround(A.x() / kQuantum), std::llround(A.y() / kQuantum)};
}

double signed_gap(const Point& a, const Point& b) { return std::atan2(cross2<double>(a, b), a.dot(b)); }

// Largest inscribed circle of a convex polygon, by shrinking a search box around the best grid point.
double inradius(const FluxPolygon& poly)
{
    auto depth = [&](const Point& x) { return contains(poly, x).distance; };
    Point lo = poly.vertices().front(), hi = lo;
    for (const Point& p : poly.vertices()) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    Point best = poly.centroid();
    double best_d = depth(best);
    Point half = 0.5 * (hi - lo);
    for (int round = 0; round < 40; ++round) {
        const Point centre = best;
        for (int i = -4; i <= 4; ++i)
            for (int j = -4; j <= 4; ++j) {
                const Point x = centre + Point(half.x() * i / 4.0, half.y() * j / 4.0);
                const double d = depth(x);
                if (d > best_d) {
                    best_d = d;
                    best = x;
                }
            }
        half *= 0.6;
    }
    return best_d;
}

// Convex polygon of the points at distance >= d from every edge line.
std::vector<Point> inset_polygon(const FluxPolygon& poly, double d)
{
    std::vector<Point> out;
    for (int i = 0; i < poly.r(); ++i) {
        const Point n0 = -outward_normal(poly, i - 1);
        const Point n1 = -outward_normal(poly, i);
        out.push_back(poly.vertex(i) + d * (n0 + n1) / (1.0 + n0.dot(n1)));
    }
    return out;
}

// Sutherland-Hodgman clip of a polygon by a convex counterclockwise polygon.
std::vector<Point> clip(std::vector<Point> subject, const std::vector<Point>& convex)
{
    const std::size_t n = convex.size();
    for (std::size_t k = 0; k < n && !subject.empty(); ++k) {
        const Point& a = convex[k];
        const Point& b = convex[(k + 1) % n];
        std::vector<Point> out;
        for (std::size_t j = 0; j < subject.size(); ++j) {
            const Point& p = subject[j];
            const Point& q = subject[(j + 1) % subject.size()];
            const double sp = orient(a, b, p), sq = orient(a, b, q);
            if (sp >= 0.0) out.push_back(p);
            if ((sp >= 0.0) != (sq >= 0.0)) out.push_back(p + sp / (sp - sq) * (q - p));
        }
        subject = std::move(out);
    }
    return subject;
}

double polygon_area(const std::vector<Point>& p)
{
    double a = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) a += cross2<double>(p[k], p[(k + 1) % p.size()]);
    return 0.5 * a;
}

Point polygon_centroid(const std::vector<Point>& p)
{
    Point c = Point::Zero();
    double a = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double w = cross2<double>(p[k], p[(k + 1) % p.size()]);
        c += w * (p[k] + p[(k + 1) % p.size()]);
        a += w;
    }
    return c / (3.0 * a);
}

std::string hexfloat(double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", x);
    return buf;
}

} // namespace

Point renormalize(const Point& raw)
{
    const double n = raw.norm();
    return n <= 1.0 ? raw : Point(raw / n);
}

PeriodMap::PeriodMap(FluxPolygon poly, PeriodOptions opts) : poly_(std::move(poly)), opts_(std::move(opts))
{
    CutDomain dom = build_cut_domain(poly_, poly_.centroid(), opts_.strip_length(poly_), opts_.mesh.h);
    dom.fan_constraints = true;
    reference_ = triangulate(dom, opts_.mesh);
    BoundaryData bc;
    bc.M = opts_.M;
    reference_field_ = solve(reference_, bc, opts_.solve);
    level_ = opts_.loop_level >= 0 ? opts_.loop_level : max_loop_level(reference_) / 2;
    inradius_ = inradius(poly_);

    Hasher h;
    h.add(std::string_view("per-v1"));
    for (const Point& v : poly_.vertices()) h.add(v.x()).add(v.y());
    const MeshParams& mp = opts_.mesh;
    h.add(mp.h).add(mp.grading).add(mp.growth).add(mp.strip_growth).add(mp.strip_coarsening).add(mp.hole_nodes).add(mp.min_angle_deg);
    h.add(mp.rosette_rays);
    h.add(opts_.L_factor).add(opts_.M).add(level_).add(opts_.morph_depth);
    h.add(opts_.solve.tol).add(opts_.solve.max_iters).add(opts_.solve.damping).add(opts_.solve.min_M);
    key_ = h.value();
}

PeriodSample PeriodMap::compute(const Point& A) const
{
    BoundaryData bc;
    bc.M = opts_.M;
    DomainMesh m;
    SolutionField f;
    int level = level_;
    if (contains(poly_, A).distance >= opts_.morph_depth * inradius_) {
        m = morph_puncture(reference_, A);
        try {
            f = solve(m, bc, opts_.solve, &reference_field_);
        } catch (const solver_errors::NoConvergence&) {
            f = solve(m, bc, opts_.solve);
        }
    } else {
        m = triangulate(build_cut_domain(poly_, A, opts_.strip_length(poly_), opts_.mesh.h), opts_.mesh);
        f = solve(m, bc, opts_.solve);
        level = max_loop_level(m) / 2;
    }
    const GradientFrame frame = gradient_frame(m, f);
    const Eigen::Vector3d p = period_vector(frame, period_loop(m, level));
    PeriodSample s;
    s.A = A;
    s.raw = p.head<2>();
    s.renormalized = renormalize(s.raw);
    s.third = p.z();
    s.c = f.c;
    s.newton_iters = f.newton_iters;
    s.residual = f.residual_norm;
    return s;
}

std::optional<PeriodSample> PeriodMap::load(const Point& A) const
{
    if (!opts_.cache_dir) return std::nullopt;
    const auto [qx, qy] = quantize(A);
    Hasher h;
    h.add(key_).add(qx).add(qy);
    std::ifstream in(*opts_.cache_dir / ("per-" + h.hex() + ".txt"));
    if (!in) return std::nullopt;
    std::string line;
    std::getline(in, line);
    std::istringstream is(line);
    std::string ax, ay, rx, ry, third, c, iters, res;
    if (!(is >> ax >> ay >> rx >> ry >> third >> c >> iters >> res)) return std::nullopt;
    PeriodSample s;
    s.A = A;
    s.raw = Point(std::strtod(rx.c_str(), nullptr), std::strtod(ry.c_str(), nullptr));
    s.renormalized = renormalize(s.raw);
    s.third = std::strtod(third.c_str(), nullptr);
    s.c = std::strtod(c.c_str(), nullptr);
    s.newton_iters = std::stoi(iters);
    s.residual = std::strtod(res.c_str(), nullptr);
    return s;
}

void PeriodMap::store(const PeriodSample& s) const
{
    if (!opts_.cache_dir) return;
    std::filesystem::create_directories(*opts_.cache_dir);
    const auto [qx, qy] = quantize(s.A);
    Hasher h;
    h.add(key_).add(qx).add(qy);
    const auto path = *opts_.cache_dir / ("per-" + h.hex() + ".txt");
    const auto tmp = path.string() + ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
        std::ofstream out(tmp);
        out << hexfloat(s.A.x()) << ' ' << hexfloat(s.A.y()) << ' ' << hexfloat(s.raw.x()) << ' '
            << hexfloat(s.raw.y()) << ' ' << hexfloat(s.third) << ' ' << hexfloat(s.c) << ' ' << s.newton_iters << ' '
            << hexfloat(s.residual) << '\n';
    }
    std::filesystem::rename(tmp, path);
}

PeriodSample PeriodMap::operator()(const Point& A)
{
    const auto q = quantize(A);
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(q); it != cache_.end()) return it->second;
    }
    PeriodSample s;
    if (auto cached = load(A)) {
        s = *cached;
    } else {
        s = compute(A);
        store(s);
        std::lock_guard lock(mutex_);
        ++solves_;
    }
    std::lock_guard lock(mutex_);
    return cache_.emplace(q, s).first->second;
}

std::vector<PeriodSample> PeriodMap::evaluate(const std::vector<Point>& punctures, int jobs)
{
    std::vector<PeriodSample> out(punctures.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t k = next++; k < punctures.size(); k = next++) {
            try {
                out[k] = (*this)(punctures[k]);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    const int n = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(punctures.size(), 1)));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < n; ++k) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    return out;
}

PeriodSample per(const Point& A, const FluxPolygon& poly, const PeriodOptions& opts)
{
    PeriodMap map(poly, opts);
    return map(A);
}

Point edge_limit(const FluxPolygon& poly, int edge_index, double t)
{
    (void)t;
    return outward_normal(poly, edge_index);
}

Point NormalCurve::operator()(double b) const
{
    if (b <= beta.front()) return points.front();
    if (b >= beta.back()) return points.back();
    const auto it = std::upper_bound(beta.begin(), beta.end(), b);
    const std::size_t k = static_cast<std::size_t>(it - beta.begin());
    const double s = (b - beta[k - 1]) / (beta[k] - beta[k - 1]);
    return (1.0 - s) * points[k - 1] + s * points[k];
}

NormalCurve normal_parametrize(const std::vector<Point>& input)
{
    if (input.size() < 3) throw period_errors::NotStrictlyConvex("a convex curve needs at least three points");
    std::vector<Point> curve = input;
    double total = 0.0;
    for (std::size_t k = 1; k + 1 < curve.size(); ++k)
        total += signed_gap(curve[k] - curve[k - 1], curve[k + 1] - curve[k]);
    if (total < 0.0) std::reverse(curve.begin(), curve.end());

    NormalCurve g;
    double angle = 0.0;
    for (std::size_t k = 0; k + 1 < curve.size(); ++k) {
        const Point d = curve[k + 1] - curve[k];
        if (d.norm() == 0.0) throw period_errors::NotStrictlyConvex("repeated point on the curve");
        if (k == 0) {
            angle = std::atan2(d.y(), d.x());
        } else {
            const double turn = signed_gap(curve[k] - curve[k - 1], d);
            if (!(turn > 1e-12)) throw period_errors::NotStrictlyConvex("curvature vanishes or changes sign");
            angle += turn;
        }
        g.beta.push_back(angle);
        g.points.push_back(0.5 * (curve[k] + curve[k + 1]));
    }
    return g;
}

Point vertex_frame_to_plane(const FluxPolygon& poly, int vertex_index, const Point& local)
{
    const Point e = poly.edge(vertex_index).normalized();
    return local.x() * e + local.y() * perp<double>(e);
}

VertexCurve extract_vertex_curve(const FluxPolygon& poly, int vertex_index, const PeriodOptions& opts)
{
    const int i = poly.wrap(vertex_index);
    const DomainMesh mesh = genus0_domain(poly, opts.strip_length(poly), opts.mesh);
    BoundaryData bc;
    bc.M = opts.M;
    const SolutionField f = solve(mesh, bc, opts.solve);
    const GradientFrame frame = gradient_frame(mesh, f);
    const PsiField psi = psi_field(frame);
    const SurfaceMesh s = conjugate_surface(frame, f, psi);

    const int centre = mesh.vertex_node[i];
    std::set<int> link;
    for (const auto& t : mesh.triangles)
        for (int k = 0; k < 3; ++k)
            if (t[k] == centre) {
                link.insert(t[(k + 1) % 3]);
                link.insert(t[(k + 2) % 3]);
            }
    const std::vector<int>* chain = nullptr;
    for (const auto& c : s.symmetry_curves)
        if (!c.empty() && link.count(s.source_node[c.front()])) chain = &c;
    if (!chain) throw period_errors::CurveExtractionFailed("no symmetry curve around vertex " + std::to_string(i));

    const Point e = poly.edge(i).normalized();
    std::vector<Point> pts;
    for (int v : *chain) {
        const Point x(s.vertices[v].x(), s.vertices[v].y());
        pts.emplace_back(x.dot(e), x.dot(perp<double>(e)));
    }
    // mesh noise can leave a few reflex corners; drop them until the polyline turns left throughout
    double total = 0.0;
    for (std::size_t k = 1; k + 1 < pts.size(); ++k) total += signed_gap(pts[k] - pts[k - 1], pts[k + 1] - pts[k]);
    if (total < 0.0) std::reverse(pts.begin(), pts.end());
    for (bool changed = true; changed && pts.size() >= 3;) {
        changed = false;
        for (std::size_t k = 1; k + 1 < pts.size(); ++k)
            if (!(signed_gap(pts[k] - pts[k - 1], pts[k + 1] - pts[k]) > 1e-12) || (pts[k] - pts[k - 1]).norm() == 0.0) {
                pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(k));
                changed = true;
                break;
            }
    }
    VertexCurve vc;
    vc.vertex = i;
    vc.alpha = interior_angles(poly)[i];
    if (pts.size() < 8) throw period_errors::CurveExtractionFailed("symmetry curve too short after cleaning");
    vc.gamma = normal_parametrize(pts);
    if (vc.gamma.turning() < 0.5 * (vc.alpha + M_PI))
        throw period_errors::CurveExtractionFailed("symmetry curve turns by only " + std::to_string(vc.gamma.turning()));
    return vc;
}

Point vertex_limit(const VertexCurve& curve, double theta)
{
    const double a = curve.alpha;
    if (theta <= 0.0) return Point(0.0, -1.0);
    if (theta >= a) return Point(-std::sin(a), std::cos(a));
    return renormalize(curve.gamma(theta + M_PI / 2) - curve.gamma(theta - M_PI / 2));
}

Point vertex_limit(const FluxPolygon& poly, int vertex_index, double theta, const PeriodOptions& opts)
{
    const double a = interior_angles(poly)[poly.wrap(vertex_index)];
    if (theta <= 0.0) return Point(0.0, -1.0);
    if (theta >= a) return Point(-std::sin(a), std::cos(a));
    return vertex_limit(extract_vertex_curve(poly, vertex_index, opts), theta);
}

std::vector<LoopPoint> boundary_loop(const FluxPolygon& poly, double delta, int n_samples)
{
    const int r = poly.r();
    if (n_samples < 8 * r)
        throw period_errors::TooFewSamples(std::to_string(n_samples) + " samples, at least " + std::to_string(8 * r) +
                                           " needed");
    const double limit = std::min(inradius(poly), poly.min_edge_length()) / 4.0;
    if (!(delta > 0.0) || delta >= limit)
        throw period_errors::InsetTooLarge("inset " + std::to_string(delta) + " must lie in (0, " +
                                           std::to_string(limit) + ")");
    const std::vector<double> alpha = interior_angles(poly);
    const double theta0 = std::min(M_PI / 6, *std::min_element(alpha.begin(), alpha.end()) / 4);

    auto arc_point = [&](int i, double th) {
        const Point e = poly.edge(i).normalized();
        return Point(poly.vertex(i) + delta * (std::cos(th) * e + std::sin(th) * perp<double>(e)));
    };
    double arc_total = 0.0, run_total = 0.0;
    for (int i = 0; i < r; ++i) {
        arc_total += alpha[i] - 2 * theta0;
        run_total += (arc_point(i + 1, alpha[poly.wrap(i + 1)] - theta0) - arc_point(i, theta0)).norm();
    }
    const int arc_budget = n_samples / 2;
    const int run_budget = n_samples - arc_budget;

    std::vector<LoopPoint> loop;
    int used_arc = 0, used_run = 0;
    double acc_arc = 0.0, acc_run = 0.0;
    for (int i = 0; i < r; ++i) {
        acc_arc += alpha[i] - 2 * theta0;
        const int m = std::max(2, static_cast<int>(std::lround(arc_budget * acc_arc / arc_total)) - used_arc);
        used_arc += m;
        for (int k = 0; k < m; ++k) {
            const double th = (alpha[i] - theta0) - (alpha[i] - 2 * theta0) * k / (m - 1);
            loop.push_back({arc_point(i, th), true, i, th});
        }
        const Point a = arc_point(i, theta0);
        const Point b = arc_point(i + 1, alpha[poly.wrap(i + 1)] - theta0);
        acc_run += (b - a).norm();
        const int n = std::max(1, static_cast<int>(std::lround(run_budget * acc_run / run_total)) - used_run);
        used_run += n;
        for (int k = 1; k <= n; ++k) {
            const double t = static_cast<double>(k) / (n + 1);
            loop.push_back({a + t * (b - a), false, i, t});
        }
    }
    return loop;
}

int winding_number(const std::vector<Point>& values)
{
    if (values.empty()) return 0;
    double total = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        const Point& a = values[k];
        const Point& b = values[(k + 1) % values.size()];
        if (a.norm() < 1e-6) throw period_errors::ZeroOnLoop("sample " + std::to_string(k) + " vanishes");
        const double gap = signed_gap(a, b);
        if (std::abs(gap) >= M_PI / 2)
            throw period_errors::Undersampled("angular gap " + std::to_string(gap) + " after sample " +
                                              std::to_string(k));
        total += gap;
    }
    return static_cast<int>(std::lround(total / (2 * M_PI)));
}

namespace {

LoopPoint midpoint(const FluxPolygon& poly, const LoopPoint& a, const LoopPoint& b, double delta)
{
    if (a.on_arc && b.on_arc && a.index == b.index) {
        const double th = 0.5 * (a.param + b.param);
        const Point e = poly.edge(a.index).normalized();
        return {poly.vertex(a.index) + delta * (std::cos(th) * e + std::sin(th) * perp<double>(e)), true, a.index, th};
    }
    const int edge = !a.on_arc ? a.index : (!b.on_arc ? b.index : a.index);
    return {0.5 * (a.A + b.A), false, edge, 0.5 * (a.param + b.param)};
}

// Inserts midpoints into a closed path until consecutive renormalized samples are less than
// max_gap apart. Returns the number of insertions.
template<typename Node, typename Mid>
int refine_closed(std::vector<Node>& nodes, std::vector<PeriodSample>& samples, PeriodMap& map, const Mid& mid,
                  double max_gap, int max_inserted, int jobs)
{
    int inserted = 0;
    while (inserted < max_inserted) {
        std::vector<std::size_t> wide;
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            const Point& a = samples[k].renormalized;
            const Point& b = samples[(k + 1) % nodes.size()].renormalized;
            if (a.norm() > 0.0 && b.norm() > 0.0 && std::abs(signed_gap(a, b)) >= max_gap) wide.push_back(k);
        }
        if (wide.empty()) break;
        if (static_cast<int>(wide.size()) > max_inserted - inserted) wide.resize(max_inserted - inserted);
        std::vector<Node> fresh;
        std::vector<Point> where;
        for (std::size_t k : wide) {
            fresh.push_back(mid(nodes[k], nodes[(k + 1) % nodes.size()]));
            where.push_back(fresh.back().A);
        }
        const std::vector<PeriodSample> got = map.evaluate(where, jobs);
        for (std::size_t j = wide.size(); j-- > 0;) {
            nodes.insert(nodes.begin() + static_cast<std::ptrdiff_t>(wide[j] + 1), fresh[j]);
            samples.insert(samples.begin() + static_cast<std::ptrdiff_t>(wide[j] + 1), got[j]);
        }
        inserted += static_cast<int>(wide.size());
    }
    return inserted;
}

std::vector<Point> renormalized(const std::vector<PeriodSample>& s)
{
    std::vector<Point> v;
    for (const auto& x : s) v.push_back(x.renormalized);
    return v;
}

struct PathPoint {
    Point A;
};

} // namespace

DegreeResult degree(PeriodMap& per_map, double delta, int n_samples, int max_inserted, int jobs)
{
    DegreeResult out;
    out.loop = boundary_loop(per_map.polygon(), delta, n_samples);
    std::vector<Point> where;
    for (const auto& p : out.loop) where.push_back(p.A);
    out.samples = per_map.evaluate(where, jobs);
    out.inserted = refine_closed(
        out.loop, out.samples, per_map,
        [&](const LoopPoint& a, const LoopPoint& b) { return midpoint(per_map.polygon(), a, b, delta); }, M_PI / 2,
        max_inserted, jobs);
    out.winding = winding_number(renormalized(out.samples));
    return out;
}

namespace {

struct Cell {
    Point lo;
    double size = 0.0;
    std::vector<Point> region;   // cell clipped to the search polygon
};

// Winding of Per along the boundary of a convex region, sampled at spacing <= step and refined.
int region_winding(PeriodMap& map, const std::vector<Point>& region, double step, int jobs, int& budget)
{
    std::vector<PathPoint> nodes;
    for (std::size_t k = 0; k < region.size(); ++k) {
        const Point& a = region[k];
        const Point& b = region[(k + 1) % region.size()];
        const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / step)));
        for (int j = 0; j < n; ++j) nodes.push_back({a + (b - a) * (static_cast<double>(j) / n)});
    }
    std::vector<Point> where;
    for (const auto& p : nodes) where.push_back(p.A);
    const std::size_t before = map.solves();
    std::vector<PeriodSample> samples = map.evaluate(where, jobs);
    refine_closed(
        nodes, samples, map, [](const PathPoint& a, const PathPoint& b) { return PathPoint{0.5 * (a.A + b.A)}; },
        M_PI / 3, 32, jobs);
    budget -= static_cast<int>(map.solves() - before);
    return winding_number(renormalized(samples));
}

} // namespace

ZeroResult find_zero(PeriodMap& per_map, const FindZeroOptions& opts)
{
    const FluxPolygon& poly = per_map.polygon();
    const double diam = poly.diameter();
    const std::vector<Point> region = inset_polygon(poly, opts.inset * inradius(poly));
    int budget = opts.budget;
    const std::size_t start = per_map.solves();

    ZeroResult out;
    Point lo = region.front(), hi = lo;
    for (const Point& p : region) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double size = (hi - lo).maxCoeff();
    out.root_winding = region_winding(per_map, region, size / 8, opts.jobs, budget);
    if (out.root_winding == 0)
        throw period_errors::NoZeroFound("winding of Per around the search region is zero");

    std::vector<Cell> level{{lo, size, region}};
    while (level.front().size > opts.polish_size * diam) {
        std::vector<Cell> next;
        for (const Cell& c : level) {
            const double s = 0.5 * c.size;
            for (int j = 0; j < 2; ++j)
                for (int i = 0; i < 2; ++i) {
                    Cell child;
                    child.lo = c.lo + Point(i * s, j * s);
                    child.size = s;
                    const std::vector<Point> square{child.lo, child.lo + Point(s, 0), child.lo + Point(s, s),
                                                    child.lo + Point(0, s)};
                    child.region = clip(square, region);
                    if (child.region.size() < 3 || polygon_area(child.region) < 1e-12 * s * s) continue;
                    if (budget <= 0)
                        throw period_errors::NoZeroFound("budget exhausted with " + std::to_string(level.size()) +
                                                         " cells of size " + std::to_string(c.size) +
                                                         " carrying nonzero winding");
                    if (region_winding(per_map, child.region, s / 2, opts.jobs, budget) != 0) next.push_back(child);
                }
        }
        if (next.empty())
            throw period_errors::NoZeroFound("no child cell carries the winding of its parent; Per is too noisy at this mesh size");
        level = std::move(next);
    }
    for (std::size_t k = 1; k < level.size(); ++k) out.other_cells.push_back(polygon_centroid(level[k].region));

    // Broyden polish from the centre of the first cell
    const double tol = opts.tol * diam;
    const double cell = level.front().size;
    auto inside = [&](const Point& x) {
        for (std::size_t k = 0; k < region.size(); ++k)
            if (orient(region[k], region[(k + 1) % region.size()], x) < 0.0) return false;
        return true;
    };
    Point x = polygon_centroid(level.front().region);
    PeriodSample fx = per_map(x);
    const double hstep = cell / 4;
    Eigen::Matrix2d J;
    {
        const std::vector<PeriodSample> d =
            per_map.evaluate({x + Point(hstep, 0), x + Point(0, hstep)}, opts.jobs);
        J.col(0) = (d[0].raw - fx.raw) / hstep;
        J.col(1) = (d[1].raw - fx.raw) / hstep;
    }
    for (int it = 0; it < opts.polish_iters && fx.raw.norm() > tol; ++it) {
        Point dx = -J.colPivHouseholderQr().solve(fx.raw);
        if (dx.norm() > cell) dx *= cell / dx.norm();
        while (!inside(x + dx) && dx.norm() > 1e-12) dx *= 0.5;
        const PeriodSample fn = per_map(x + dx);
        const Point dF = fn.raw - fx.raw;
        J += (dF - J * dx) * dx.transpose() / dx.squaredNorm();
        if (fn.raw.norm() < fx.raw.norm() || it == 0) {
            x += dx;
            fx = fn;
        } else {
            x += 0.5 * dx;
            fx = per_map(x);
        }
    }
    out.evaluations = static_cast<int>(per_map.solves() - start);
    if (fx.raw.norm() > tol) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "polish stopped at (%.6f, %.6f) with |Per| = %.3e > %.3e; root winding %d",
                      x.x(), x.y(), fx.raw.norm(), tol, out.root_winding);
        throw period_errors::NoZeroFound(buf);
    }
    out.A = x;
    out.sample = fx;
    return out;
}

SymmetricResult symmetric_zero(const StarSpec& spec, const PeriodOptions& opts, double tol)
{
    SymmetricResult out;
    out.spec = spec;
    const CutDomain dom = build_star_domain(spec, opts.strip_length(star_polygon(spec)));
    out.sector = triangulate(dom, opts.mesh);
    BoundaryData bc;
    bc.M = opts.M;
    out.sector_field = solve(out.sector, bc, opts.solve);
    out.replicated = replicate_sector(out.sector, spec.r);
    out.field = replicate_field(out.replicated, out.sector_field);
    const DomainMesh& mesh = out.replicated.mesh;
    const GradientFrame frame = gradient_frame(mesh, out.field);
    out.period = period_vector(frame, opts.loop_level);
    out.A = mesh.puncture;
    const double diam = mesh.polygon.diameter();
    if (out.period.head<2>().norm() > tol * diam) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "period %.3e on the symmetric discretization exceeds %.3e",
                      out.period.head<2>().norm(), tol * diam);
        throw period_errors::SymmetryViolation(buf);
    }
    const PsiField psi = psi_field(frame);
    ConjugateOptions co;
    co.loop_level = opts.loop_level;
    out.half = conjugate_surface(frame, out.field, psi, co);
    out.surface = reflect_and_glue(out.half);
    return out;
}

} // namespace rnoid
