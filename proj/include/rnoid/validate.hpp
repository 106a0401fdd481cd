#pragma once

#include "rnoid/conjugate.hpp"
#include "rnoid/domain.hpp"
#include "rnoid/solver.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <string>
#include <vector>

namespace rnoid {

struct Check {
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    bool pass = false;
};

using Report = std::vector<Check>;

bool all_pass(const Report& report);
void write_report(std::ostream& os, const Report& report);

// Flux of the surface along end path i: the integral of the unit conormal pointing into the
// triangles on the left of the path. For the ends of a welded surface this is 2 v_i.
Eigen::Vector3d end_flux(const SurfaceMesh& surface, int end_index);

struct CurvatureSummary {
    double total = 0.0;           // sum of |defect| over patches plus the tails
    double defects_abs = 0.0;     // sum over patches of |sum of defects|
    double vertex_abs = 0.0;      // sum over vertices of |defect|
    double defects_signed = 0.0;
    int patches = 0;
    double tails = 0.0;
    int boundary_loops = 0;
    bool intrinsic = false;       // angles from edge_lengths rather than positions
};

// Total absolute curvature of a welded surface. Angle defects are summed over patches of
// interior vertices (all vertices within patch_hops edges of a seed) before taking the
// magnitude; patch_hops = 0 sums per vertex. Each boundary loop is taken as the truncation of
// an end; the part of the end beyond it contributes 2 pi minus the geodesic curvature of
// the loop. Throws OpenSurface for a surface that has not been welded.
CurvatureSummary curvature_summary(const SurfaceMesh& surface, int patch_hops = 2);
double total_curvature(const SurfaceMesh& surface, int patch_hops = 2);

// Depth, across-slope |p|/W and along-slope |q|/W are measured in the frame of strip i.
struct JenkinsReport {
    int elements = 0;              // elements with depth >= 4a
    double worst_p_margin = 0.0;   // min of |p|/W - (1 - a^2/y^2)
    double worst_q_margin = 0.0;   // min of sqrt(2) a / y - |q|/W
    bool pass = false;
};
JenkinsReport jenkins_check(const DomainMesh& mesh, const SolutionField& field, int strip, double eps = 0.02);

struct PsiReport {
    double basepoint_value = 0.0;
    double vertex_max = 0.0;       // max |psi(P_i)|
    double min_value = 0.0;
    double lipschitz = 0.0;        // max difference quotient between edge midpoints of an element
    double foot_gap = 0.0;         // max |psi| difference between the walls of a strip at equal depth
    Report checks;
};
PsiReport psi_invariants(const DomainMesh& mesh, const PsiField& psi, double tol = 5e-3);

// Largest distance between the two sides of the cut of a half-surface.
double closure_check(const SurfaceMesh& surface);
double closure_gap(const std::vector<Eigen::Vector3d>& a, const std::vector<Eigen::Vector3d>& b);

// Every check above on one construction: the jump, the psi suite, the strip bounds, the
// closure of the half-surface, end fluxes against 2 v_i and total curvature against 4 pi r.
Report construction_report(const DomainMesh& mesh, const SolutionField& field, const PsiField& psi,
                           const SurfaceMesh& half, const SurfaceMesh& welded);

} // namespace rnoid
