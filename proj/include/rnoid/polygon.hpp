#pragma once

#include "rnoid/geometry.hpp"

#include <vector>

namespace rnoid {

// Closed flux polygon: edges v_1..v_r and vertices P_{i+1} = P_i + v_i.
// Indices are zero based in code; P_i of the documentation is vertices[i-1].
class FluxPolygon {
public:
    FluxPolygon() = default;

    int r() const { return static_cast<int>(edges_.size()); }
    const std::vector<Point>& edges() const { return edges_; }
    const std::vector<Point>& vertices() const { return vertices_; }
    const Point& edge(int i) const { return edges_[wrap(i)]; }
    const Point& vertex(int i) const { return vertices_[wrap(i)]; }
    int wrap(int i) const { return ((i % r()) + r()) % r(); }

    double max_edge_length() const;
    double min_edge_length() const;
    double diameter() const;
    bool is_convex() const;     // strictly convex, counterclockwise
    Point centroid() const;     // vertex average

    friend FluxPolygon from_edge_vectors(const std::vector<Point>&, const Point&);

private:
    std::vector<Point> edges_;
    std::vector<Point> vertices_;
};

struct StarSpec {
    int r = 3;
    int q = 1;
};

struct Containment {
    bool inside = false;
    double distance = 0.0;   // signed: positive inside
};

FluxPolygon from_edge_vectors(const std::vector<Point>& vectors, const Point& anchor = Point::Zero());
FluxPolygon star_polygon(const StarSpec& spec);
void validate_star(const StarSpec& spec);

// alpha_i = pi minus the turning angle at P_i.
std::vector<double> interior_angles(const FluxPolygon& poly);
Point outward_normal(const FluxPolygon& poly, int edge_index);
Containment contains(const FluxPolygon& poly, const Point& A);

// Regular star polygon detection: returns true and fills spec and center when the
// polygon is a similarity image of star_polygon(spec).
struct Symmetry {
    StarSpec spec;
    Point center = Point::Zero();
    double radius = 0.0;
    double phase = 0.0;   // polar angle of P_1 about the center
};
bool detect_symmetry(const FluxPolygon& poly, Symmetry& out, double tol = 1e-9);

} // namespace rnoid
