#pragma once

#include "rnoid/domain.hpp"
#include "rnoid/solver.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <string>
#include <vector>

namespace rnoid {

struct GradientFrame {
    const DomainMesh* mesh = nullptr;
    std::vector<Point> grad;   // (p, q) per element
    std::vector<double> W;     // sqrt(1 + p^2 + q^2) per element
};

GradientFrame gradient_frame(const DomainMesh& mesh, const SolutionField& field);

enum class FormId { X1, X2, X3 };
FormId parse_form(const std::string& name);   // "X1*", "X2*", "X3*" (star optional)

// Coefficients (a, b) per element of the form a dx + b dy.
std::vector<Point> one_form(const GradientFrame& frame, FormId form);
Point form_coefficients(const Point& grad, FormId form);

// Conjugate function. Values live on edge midpoints (one per mesh edge, continuous across
// edges by construction); nodal values average the elementwise affine extensions.
struct PsiField {
    Eigen::VectorXd nodal;
    std::vector<std::array<int, 2>> edges;   // mesh edges
    Eigen::VectorXd midpoint;                // value per edge
    std::vector<std::array<int, 3>> tri_edges;   // edge opposite each local vertex
    int basepoint = -1;                      // node with psi = 0
    double loop_defect = 0.0;                // largest closure defect over non-tree adjacencies
    double third_period = 0.0;               // largest |psi(minus) - psi(plus)| over cut edges
};

// basepoint < 0 picks the plus copy of the puncture end of the cut, or P_1 without puncture.
PsiField psi_field(const GradientFrame& frame, int basepoint = -1);

// Integral of the form along a chain of mesh nodes; each edge uses the mean of its elements.
double line_integral(const GradientFrame& frame, FormId form, const std::vector<int>& path);

// Closed loop around the puncture through edge midpoints at graph distance level + 1/2 from
// the puncture ring, crossing the cut once, counterclockwise.
struct PeriodLoop {
    int level = 0;
    std::vector<Point> points;     // midpoints, first on CUT_PLUS, last on CUT_MINUS
    std::vector<int> triangles;    // element of each segment
    double mean_radius = 0.0;
};

// level < 0 picks the middle of the admissible range.
PeriodLoop period_loop(const DomainMesh& mesh, int level = -1);
int max_loop_level(const DomainMesh& mesh);
Eigen::Vector3d period_vector(const GradientFrame& frame, const PeriodLoop& loop);
Eigen::Vector3d period_vector(const GradientFrame& frame, int level = -1);

struct SurfaceMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> triangles;
    // Per triangle, length of the edge opposite each corner in the metric of the graph (the
    // conjugate is isometric to it). Empty when the surface was not built from a graph.
    std::vector<std::array<double, 3>> edge_lengths;
    std::vector<int> source_node;                 // domain node of each vertex (-1 if none)
    std::vector<std::vector<int>> symmetry_curves;   // vertex chains in the plane z = 0
    std::vector<std::vector<int>> end_paths;      // per end i: chain from the curve at P_i to the one at P_i+1
    std::vector<std::pair<int, int>> cut_pairs;   // vertices to be identified after translation by period
    Eigen::Vector3d period = Eigen::Vector3d::Zero();
    std::vector<Point> end_flux_hint;             // v_i per end, for reporting
    bool reflected = false;
    bool welded = false;
};

struct ConjugateOptions {
    double period_tol = 1e-3;     // on the horizontal period, relative to the polygon diameter
    bool allow_open = false;      // build even when the period does not vanish
    int loop_level = -1;
    double weight_exponent = 3.0;   // fit weight W^-k on top of the graph metric
    bool deep_end_paths = false;    // end paths at depth L/2 in the strips instead of near the disk
};

// Conjugate half-surface (X1*, X2*, psi). The fans of the vertex nodes P_i are left out:
// their images degenerate onto the symmetry curves, which are formed by the rings around P_i.
SurfaceMesh conjugate_surface(const GradientFrame& frame, const SolutionField& field, const PsiField& psi,
                              const ConjugateOptions& opts = {});

// Mirror image in the plane z = 0 with reversed orientation.
SurfaceMesh reflect(const SurfaceMesh& surface);

// Union of the half-surface and its mirror, welded along the symmetry curves and, when the
// period vanishes, along the two sides of the cut. Throws WeldGap when the sides do not match.
SurfaceMesh reflect_and_glue(const SurfaceMesh& surface, double tol = 1e-3, double symmetry_tol = 0.05);

int euler_characteristic(const SurfaceMesh& surface);
double surface_area(const SurfaceMesh& surface);

void write_surface(std::ostream& os, const SurfaceMesh& surface);
void write_symmetry_index(std::ostream& os, const SurfaceMesh& surface);

} // namespace rnoid
