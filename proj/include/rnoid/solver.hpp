#pragma once

#include "rnoid/domain.hpp"

#include <Eigen/Core>

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <vector>

namespace rnoid {

struct BoundaryData {
    double M = 20.0;                      // +M on STRIP_PLUS, -M on STRIP_MINUS, linear on caps
    std::map<int, double> fixed_values;   // values for nodes on FIXED edges
    std::optional<double> fixed_jump;     // impose u(minus) - u(plus) instead of solving for it
};

struct SolveOptions {
    double tol = 1e-10;   // on the gradient norm relative to the initial iterate
    int max_iters = 50;
    double damping = 1.0; // first trial step of the line search
    double min_M = 5.0;
};

struct SolutionField {
    Eigen::VectorXd u;
    double c = 0.0;
    bool has_jump = false;
    double residual_norm = 0.0;
    int newton_iters = 0;
    double M = 0.0;
    double L = 0.0;
    double h = 0.0;
};

// Weak-form residual R_j = sum_T |T| grad(u)/W . grad(phi_j) at every node.
Eigen::VectorXd mse_residual(const DomainMesh& mesh, const Eigen::VectorXd& u);
Eigen::VectorXd mse_residual(const DomainMesh& mesh, const SolutionField& field);

// Residual of the constrained problem: Dirichlet rows removed, paired rows summed, and the
// jump row (sum over minus nodes) appended when the jump is an unknown.
Eigen::VectorXd reduced_residual(const DomainMesh& mesh, const BoundaryData& bc, const SolutionField& field);

// Area of the graph of u.
double graph_area(const DomainMesh& mesh, const Eigen::VectorXd& u);

SolutionField solve(const DomainMesh& mesh, const BoundaryData& bc, const SolveOptions& opts = {},
                    const SolutionField* warm = nullptr);

// Harmonic function with the same constraints; the Newton start.
SolutionField harmonic_solve(const DomainMesh& mesh, const BoundaryData& bc);

struct ContinuationStep {
    double M = 0.0;
    double L = 0.0;
    double h = 0.0;
    std::size_t nodes = 0;
    double c = 0.0;
    int newton_iters = 0;
    Eigen::Vector2d metric = Eigen::Vector2d::Zero();
};

struct ContinuationResult {
    SolutionField field;
    DomainMesh mesh;
    std::vector<ContinuationStep> table;
    double c_extrapolated = 0.0;
    Eigen::Vector2d metric_extrapolated = Eigen::Vector2d::Zero();
};

struct Schedule {
    std::vector<double> M;
    std::vector<double> L;
    std::vector<double> h;
};

using MeshFactory = std::function<DomainMesh(double L, double h)>;
using FieldMetric = std::function<Eigen::Vector2d(const DomainMesh&, const SolutionField&)>;

// Solves along the schedule (lists are padded with their last entry). Warm starts reuse
// the previous field when the mesh is unchanged. Throws NonCauchy when successive jump
// differences fail to decrease.
ContinuationResult continuation_solve(const MeshFactory& make_mesh, const Schedule& schedule,
                                      const SolveOptions& opts = {}, const FieldMetric& metric = {});

// u = theta on a polar mesh; theta unwrapped from theta0, minus copies of a slit shifted by 2 pi.
SolutionField helicoid_field(const DomainMesh& mesh, double theta0 = 0.0);

// Field on the replicated mesh: copy k carries the sector values raised by k times the sector jump.
SolutionField replicate_field(const Replication& rep, const SolutionField& sector);

void write_field(std::ostream& os, const SolutionField& field);
SolutionField read_field(std::istream& is);

} // namespace rnoid
