#pragma once

#include "rnoid/geometry.hpp"
#include "rnoid/polygon.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rnoid {

enum class EdgeTag {
    StripPlus,     // wall of strip i at P_i, carries +M
    StripMinus,    // wall of strip i-1 at P_i, carries -M
    StripCap,      // truncation of strip i at depth L
    CutPlus,
    CutMinus,
    Puncture,      // small hole around A, natural boundary condition
    SectorStart,   // side [O, P_1] of a star sector
    SectorEnd,     // side [O, P_2] of a star sector
    Fixed,         // prescribed values (oracle meshes)
};

std::string tag_name(EdgeTag tag, int index);

struct BoundaryEdge {
    int a = 0;
    int b = 0;
    EdgeTag tag = EdgeTag::Fixed;
    int index = -1;   // strip or vertex index (zero based) for strip tags
};

struct MeshParams {
    double h = 0.05;             // target edge length in the disk
    double grading = 8.0;        // refinement factor at the vertices P_i
    double growth = 0.25;        // slope of the size function away from features
    double strip_growth = 0.1;   // the same along the strips
    double strip_coarsening = 4.0;   // max size in the strips, in units of h
    int hole_nodes = 24;         // nodes on the puncture circle
    double min_angle_deg = 25.0;
    int rosette_rays = 48;       // polar points around each P_i over its wedge; 0 disables
};

struct CutDomain {
    FluxPolygon polygon;
    std::optional<Point> puncture;
    double puncture_radius = 0.0;
    double L = 10.0;
    int q = 1;                   // cone angle 2 q pi at the puncture
    bool sector = false;         // fundamental sector of a star polygon
    StarSpec star;
    bool fan_constraints = false;   // constrain [A, P_i] so that the mesh can be morphed
};

struct DomainMesh {
    std::vector<Point> nodes;
    std::vector<std::array<int, 3>> triangles;
    std::vector<BoundaryEdge> boundary;
    // (plus, minus) node pairs, ordered from the puncture outward. The minus node is the
    // image of the plus node under the identification: a full turn around A for a cut,
    // the rotation by 2 pi q / r about the center for a star sector.
    std::vector<std::pair<int, int>> cut_pairing;
    double pairing_rotation = 0.0;
    Point rotation_center = Point::Zero();
    double h = 0.0;

    FluxPolygon polygon;
    bool has_puncture = false;
    Point puncture = Point::Zero();
    double puncture_radius = 0.0;
    double L = 0.0;
    int q = 1;
    bool sector = false;
    std::vector<int> vertex_node;   // node of P_i, -1 if absent; plus copy of P_1 on a cut
    int vertex_minus_node = -1;     // minus copy of P_1 on a cut
    std::vector<int> tri_region;    // -1 for the disk, i for strip i, -2 for other meshes

    std::size_t node_count() const { return nodes.size(); }
    bool has_cut() const { return !cut_pairing.empty(); }
};

struct MeshQuality {
    double min_angle_deg = 0.0;        // over triangles without a corner at a polygon vertex
    double min_fan_angle_deg = 0.0;    // over the fans of the polygon vertices
    double max_edge = 0.0;
    double min_edge = 0.0;
    bool consistent_orientation = true;
    int euler_characteristic = 0;
};

// Smallest distance from A to the polygon boundary allowed for a puncture at mesh size h.
double puncture_margin(double h);

CutDomain build_cut_domain(const FluxPolygon& poly, const Point& A, double L, double h = 0.05);
CutDomain build_star_domain(const StarSpec& spec, double L);
DomainMesh triangulate(const CutDomain& domain, const MeshParams& params);
DomainMesh genus0_domain(const FluxPolygon& poly, double L, const MeshParams& params);

// Moves the puncture of a fan-constrained cut mesh to A by the piecewise affine map that
// fixes the strips and sends each fan triangle (A0, P_i, P_i+1) to (A, P_i, P_i+1).
DomainMesh morph_puncture(const DomainMesh& reference, const Point& A);

// Full cut mesh assembled from r rotated copies of a star sector. node_copy and
// node_source record, per output node, the copy index and the sector node it came from.
struct Replication {
    DomainMesh mesh;
    std::vector<int> node_copy;
    std::vector<int> node_source;
    int copies = 0;
};
Replication replicate_sector(const DomainMesh& sector, int r);

// Structured mesh of the annular sector rho0 <= rho <= rho1, theta0 <= theta <= theta1.
// With slit = true the sector must be a full turn; the nodes at theta1 are distinct copies
// of those at theta0 and are recorded in cut_pairing. Tags: Fixed on the outer arc,
// inner arc tagged inner_tag, radial sides Fixed (or Cut tags when slit).
DomainMesh polar_mesh(double rho0, double rho1, double theta0, double theta1, double h, bool slit = false,
                      EdgeTag inner_tag = EdgeTag::Fixed);

// Structured mesh of the unit square [0,1]^2 with n cells per side, all boundary Fixed.
DomainMesh square_mesh(int n);

MeshQuality mesh_quality(const DomainMesh& mesh);

// Strip coordinates of a point: along the edge (s in [0, a]) and depth y >= 0.
Point strip_coordinates(const FluxPolygon& poly, int strip, const Point& x);

void write_mesh(std::ostream& os, const DomainMesh& mesh);
DomainMesh read_mesh(std::istream& is);

} // namespace rnoid
