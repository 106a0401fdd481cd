#include "rnoid/polygon.hpp"

#include "rnoid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rnoid {

double FluxPolygon::max_edge_length() const
{
    double m = 0.0;
    for (const auto& v : edges_) m = std::max(m, v.norm());
    return m;
}

double FluxPolygon::min_edge_length() const
{
    double m = edges_.empty() ? 0.0 : edges_.front().norm();
    for (const auto& v : edges_) m = std::min(m, v.norm());
    return m;
}

double FluxPolygon::diameter() const
{
    double d = 0.0;
    for (const auto& a : vertices_)
        for (const auto& b : vertices_) d = std::max(d, (a - b).norm());
    return d;
}

bool FluxPolygon::is_convex() const
{
    const double tiny = 1e-14 * max_edge_length() * max_edge_length();
    double total = 0.0;
    for (int i = 0; i < r(); ++i) {
        if (cross2(edge(i - 1), edge(i)) <= tiny) return false;
        total += turn_angle(edge(i - 1), edge(i));
    }
    return std::abs(total - 2.0 * M_PI) < 1e-9;
}

Point FluxPolygon::centroid() const
{
    Point c = Point::Zero();
    for (const auto& p : vertices_) c += p;
    return c / static_cast<double>(vertices_.size());
}

FluxPolygon from_edge_vectors(const std::vector<Point>& vectors, const Point& anchor)
{
    if (vectors.size() < 3)
        throw polygon_errors::TooFewEdges("a flux polygon needs at least 3 edges");
    double longest = 0.0;
    Point sum = Point::Zero();
    for (const auto& v : vectors) {
        if (!(v.norm() > 0.0)) throw polygon_errors::DegenerateEdge("edge vector of zero length");
        longest = std::max(longest, v.norm());
        sum += v;
    }
    if (sum.norm() > 1e-12 * longest)
        throw polygon_errors::ClosureViolation("edge vectors sum to (" + std::to_string(sum.x()) + ", " +
                                               std::to_string(sum.y()) + ")");
    FluxPolygon poly;
    poly.edges_ = vectors;
    poly.vertices_.reserve(vectors.size());
    Point p = anchor;
    for (const auto& v : vectors) {
        poly.vertices_.push_back(p);
        p += v;
    }
    for (int i = 0; i < poly.r(); ++i) {
        const double t = turn_angle(poly.edge(i - 1), poly.edge(i));
        if (std::abs(std::abs(t) - M_PI) < 1e-12)
            throw polygon_errors::DegenerateEdge("consecutive edges are anti-parallel at vertex " +
                                                 std::to_string(i + 1));
    }
    return poly;
}

void validate_star(const StarSpec& spec)
{
    if (spec.r < 3 || spec.q < 1 || std::gcd(spec.r, spec.q) != 1 || 2 * spec.q >= spec.r)
        throw polygon_errors::InvalidStar("star spec (r=" + std::to_string(spec.r) + ", q=" +
                                          std::to_string(spec.q) + ") needs gcd(q,r)=1 and 2q<r");
}

FluxPolygon star_polygon(const StarSpec& spec)
{
    validate_star(spec);
    std::vector<Point> pts;
    for (int i = 0; i < spec.r; ++i) {
        const double a = 2.0 * i * spec.q * M_PI / spec.r;
        pts.emplace_back(std::cos(a), std::sin(a));
    }
    std::vector<Point> edges;
    for (int i = 0; i < spec.r; ++i) edges.push_back(pts[(i + 1) % spec.r] - pts[i]);
    return from_edge_vectors(edges, pts.front());
}

std::vector<double> interior_angles(const FluxPolygon& poly)
{
    std::vector<double> alpha;
    for (int i = 0; i < poly.r(); ++i) alpha.push_back(M_PI - turn_angle(poly.edge(i - 1), poly.edge(i)));
    return alpha;
}

Point outward_normal(const FluxPolygon& poly, int edge_index)
{
    const Point v = poly.edge(edge_index).normalized();
    return Point(v.y(), -v.x());
}

Containment contains(const FluxPolygon& poly, const Point& A)
{
    double dist = std::numeric_limits<double>::infinity();
    bool inside = true;
    for (int i = 0; i < poly.r(); ++i) {
        const Point& a = poly.vertex(i);
        const Point& b = poly.vertex(i + 1);
        dist = std::min(dist, segment_distance(A, a, b));
        if (cross2<double>(b - a, A - a) <= 0.0) inside = false;
    }
    if (dist == 0.0) inside = false;
    return {inside, inside ? dist : -dist};
}

bool detect_symmetry(const FluxPolygon& poly, Symmetry& out, double tol)
{
    const int r = poly.r();
    const Point c = poly.centroid();
    const double R = (poly.vertex(0) - c).norm();
    if (R <= 0.0) return false;
    for (int i = 0; i < r; ++i)
        if (std::abs((poly.vertex(i) - c).norm() - R) > tol * R) return false;
    const double step = turn_angle<double>(poly.vertex(0) - c, poly.vertex(1) - c);
    if (step <= 0.0) return false;
    const double qf = step * r / (2.0 * M_PI);
    const int q = static_cast<int>(std::lround(qf));
    if (std::abs(qf - q) > tol * r) return false;
    StarSpec spec{r, q};
    if (q < 1 || std::gcd(r, q) != 1 || 2 * q >= r) return false;
    for (int i = 0; i < r; ++i) {
        const double s = turn_angle<double>(poly.vertex(i) - c, poly.vertex(i + 1) - c);
        if (std::abs(s - step) > tol) return false;
    }
    const Point d = poly.vertex(0) - c;
    out = {spec, c, R, std::atan2(d.y(), d.x())};
    return true;
}

} // namespace rnoid
