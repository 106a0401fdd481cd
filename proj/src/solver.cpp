#include "rnoid/solver.hpp"

#include "rnoid/errors.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace rnoid {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

struct Element {
    std::array<int, 3> v;
    std::array<Point, 3> grad;
    double area;
};

std::vector<Element> elements(const DomainMesh& mesh)
{
    std::vector<Element> out;
    out.reserve(mesh.triangles.size());
    for (const auto& t : mesh.triangles) {
        const Point &a = mesh.nodes[t[0]], &b = mesh.nodes[t[1]], &c = mesh.nodes[t[2]];
        const double area = signed_area(a, b, c);
        if (!(area > 0.0)) throw solver_errors::InvalidData("inverted or degenerate triangle");
        out.push_back({t, hat_gradients(a, b, c), area});
    }
    return out;
}

// u_j = base_j + z[var_j] + cc_j * c, with c = z[jump] when the jump is an unknown.
struct Constraints {
    std::vector<int> var;
    std::vector<double> base;
    std::vector<double> cc;
    std::vector<bool> dirichlet;
    int unknowns = 0;
    int jump = -1;
    double fixed_jump = 0.0;
    bool has_jump = false;
};

Constraints build_constraints(const DomainMesh& mesh, const BoundaryData& bc)
{
    const int n = static_cast<int>(mesh.nodes.size());
    std::vector<std::optional<double>> g(n);
    std::set<int> vertices;
    for (int v : mesh.vertex_node)
        if (v >= 0) vertices.insert(v);
    if (mesh.vertex_minus_node >= 0) vertices.insert(mesh.vertex_minus_node);
    bool strips = false;
    for (const auto& e : mesh.boundary) {
        for (int v : {e.a, e.b}) {
            switch (e.tag) {
            case EdgeTag::StripPlus:
                strips = true;
                if (!vertices.count(v)) g[v] = bc.M;
                break;
            case EdgeTag::StripMinus:
                strips = true;
                if (!vertices.count(v)) g[v] = -bc.M;
                break;
            case EdgeTag::StripCap: {
                const double a = mesh.polygon.edge(e.index).norm();
                const double s = strip_coordinates(mesh.polygon, e.index, mesh.nodes[v]).x() / a;
                g[v] = bc.M * (1.0 - 2.0 * std::clamp(s, 0.0, 1.0));
                break;
            }
            case EdgeTag::Fixed: {
                auto it = bc.fixed_values.find(v);
                if (it == bc.fixed_values.end())
                    throw solver_errors::InvalidData("no value for fixed boundary node " + std::to_string(v));
                g[v] = it->second;
                break;
            }
            default: break;
            }
        }
    }
    if (strips && !(bc.M >= 5.0)) throw solver_errors::InvalidData("cap value M must be at least 5");

    Constraints c;
    c.var.assign(n, -1);
    c.base.assign(n, 0.0);
    c.cc.assign(n, 0.0);
    c.dirichlet.assign(n, false);
    for (int v = 0; v < n; ++v)
        if (g[v]) {
            c.base[v] = *g[v];
            c.dirichlet[v] = true;
        }
    std::vector<bool> done(n, false);
    bool coupled = false;
    for (const auto& [p, q] : mesh.cut_pairing) {
        done[p] = done[q] = true;
        if (g[p] && g[q]) continue;
        coupled = true;
        if (g[p]) {
            c.base[q] = *g[p];
            c.cc[q] = 1.0;
        } else if (g[q]) {
            c.base[p] = *g[q];
            c.cc[p] = -1.0;
        } else {
            c.var[p] = c.unknowns;
            c.var[q] = c.unknowns++;
            c.cc[q] = 1.0;
        }
    }
    for (int v = 0; v < n; ++v)
        if (!done[v] && !g[v]) c.var[v] = c.unknowns++;
    c.has_jump = !mesh.cut_pairing.empty();
    if (coupled && !bc.fixed_jump) c.jump = c.unknowns++;
    if (bc.fixed_jump) {
        c.fixed_jump = *bc.fixed_jump;
        for (int v = 0; v < n; ++v) c.base[v] += c.cc[v] * c.fixed_jump;
    }
    if (c.unknowns == 0) throw solver_errors::InvalidData("no free unknowns");
    return c;
}

Eigen::VectorXd expand(const Constraints& c, const Eigen::VectorXd& z)
{
    const int n = static_cast<int>(c.var.size());
    Eigen::VectorXd u(n);
    const double jump = c.jump >= 0 ? z[c.jump] : 0.0;
    for (int v = 0; v < n; ++v) {
        u[v] = c.base[v];
        if (c.var[v] >= 0) u[v] += z[c.var[v]];
        if (c.jump >= 0) u[v] += c.cc[v] * jump;
    }
    return u;
}

Eigen::VectorXd restrict_vector(const Constraints& c, const Eigen::VectorXd& R)
{
    Eigen::VectorXd g = Eigen::VectorXd::Zero(c.unknowns);
    for (int v = 0; v < static_cast<int>(c.var.size()); ++v) {
        if (c.var[v] >= 0) g[c.var[v]] += R[v];
        if (c.jump >= 0) g[c.jump] += c.cc[v] * R[v];
    }
    return g;
}

// Inverse of expand for a full nodal field that satisfies the constraints.
Eigen::VectorXd project(const Constraints& c, const Eigen::VectorXd& u, double jump)
{
    Eigen::VectorXd z = Eigen::VectorXd::Zero(c.unknowns);
    for (int v = 0; v < static_cast<int>(c.var.size()); ++v)
        if (c.var[v] >= 0 && c.cc[v] == 0.0) z[c.var[v]] = u[v] - c.base[v];
    if (c.jump >= 0) z[c.jump] = jump;
    return z;
}

double energy(const std::vector<Element>& els, const Eigen::VectorXd& u)
{
    double e = 0.0;
    for (const auto& el : els) {
        const Point g = p1_gradient(el.grad, u[el.v[0]], u[el.v[1]], u[el.v[2]]);
        e += el.area * std::sqrt(1.0 + g.squaredNorm());
    }
    return e;
}

Eigen::VectorXd nodal_residual(const std::vector<Element>& els, const Eigen::VectorXd& u)
{
    Eigen::VectorXd R = Eigen::VectorXd::Zero(u.size());
    for (const auto& el : els) {
        const Point g = p1_gradient(el.grad, u[el.v[0]], u[el.v[1]], u[el.v[2]]);
        const Point sigma = g / std::sqrt(1.0 + g.squaredNorm());
        for (int k = 0; k < 3; ++k) R[el.v[k]] += el.area * sigma.dot(el.grad[k]);
    }
    return R;
}

// Reduced matrix T^T K T where K_ab = sum_T |T| grad(phi_a)^T A grad(phi_b).
// With relax > 0 the rank-one term is scaled by (1 - relax); relax = 1 gives the
// lagged-diffusivity matrix, which majorizes the Hessian.
SpMat reduced_matrix(const std::vector<Element>& els, const Constraints& c, const Eigen::VectorXd* u,
                     double relax = 0.0)
{
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(els.size() * 9 * 2);
    for (const auto& el : els) {
        Eigen::Matrix2d A = Eigen::Matrix2d::Identity();
        if (u) {
            const Point g = p1_gradient(el.grad, (*u)[el.v[0]], (*u)[el.v[1]], (*u)[el.v[2]]);
            const double W = std::sqrt(1.0 + g.squaredNorm());
            const Point s = g / W;
            A = (Eigen::Matrix2d::Identity() - (1.0 - relax) * s * s.transpose()) / W;
        }
        for (int a = 0; a < 3; ++a) {
            const Point Ag = A * el.grad[a];
            for (int b = 0; b < 3; ++b) {
                const double k = el.area * Ag.dot(el.grad[b]);
                const int va = el.v[a], vb = el.v[b];
                const int ia[2] = {c.var[va], c.jump >= 0 && c.cc[va] != 0.0 ? c.jump : -1};
                const double ca[2] = {1.0, c.cc[va]};
                const int ib[2] = {c.var[vb], c.jump >= 0 && c.cc[vb] != 0.0 ? c.jump : -1};
                const double cb[2] = {1.0, c.cc[vb]};
                for (int x = 0; x < 2; ++x)
                    for (int y = 0; y < 2; ++y)
                        if (ia[x] >= 0 && ib[y] >= 0) trip.emplace_back(ia[x], ib[y], ca[x] * cb[y] * k);
            }
        }
    }
    SpMat H(c.unknowns, c.unknowns);
    H.setFromTriplets(trip.begin(), trip.end());
    return H;
}

// Norm of the reduced residual of a field whose element slopes all have unit length:
// the scale against which the relative residual is measured.
double residual_scale(const std::vector<Element>& els, const Constraints& c)
{
    Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c.var.size()));
    for (const auto& el : els)
        for (int k = 0; k < 3; ++k) s[el.v[k]] += el.area * el.grad[k].norm();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(c.unknowns);
    for (int v = 0; v < static_cast<int>(c.var.size()); ++v) {
        if (c.var[v] >= 0) g[c.var[v]] += s[v];
        if (c.jump >= 0) g[c.jump] += std::abs(c.cc[v]) * s[v];
    }
    return std::max(g.norm(), std::numeric_limits<double>::min());
}

SolutionField make_field(const DomainMesh& mesh, const Constraints& c, const Eigen::VectorXd& z,
                         const BoundaryData& bc)
{
    SolutionField f;
    f.u = expand(c, z);
    f.has_jump = c.has_jump;
    f.c = c.jump >= 0 ? z[c.jump] : (c.has_jump ? c.fixed_jump : 0.0);
    if (c.has_jump && c.jump < 0 && !mesh.cut_pairing.empty()) {
        const auto& [p, q] = mesh.cut_pairing.front();
        f.c = f.u[q] - f.u[p];
    }
    f.M = bc.M;
    f.L = mesh.L;
    f.h = mesh.h;
    return f;
}

} // namespace

Eigen::VectorXd mse_residual(const DomainMesh& mesh, const Eigen::VectorXd& u)
{
    if (mesh.nodes.empty() || u.size() != static_cast<Eigen::Index>(mesh.nodes.size()))
        throw solver_errors::DimensionMismatch("field has " + std::to_string(u.size()) + " values, mesh has " +
                                               std::to_string(mesh.nodes.size()) + " nodes");
    return nodal_residual(elements(mesh), u);
}

Eigen::VectorXd mse_residual(const DomainMesh& mesh, const SolutionField& field)
{
    return mse_residual(mesh, field.u);
}

Eigen::VectorXd reduced_residual(const DomainMesh& mesh, const BoundaryData& bc, const SolutionField& field)
{
    const Eigen::VectorXd R = mse_residual(mesh, field.u);
    return restrict_vector(build_constraints(mesh, bc), R);
}

double graph_area(const DomainMesh& mesh, const Eigen::VectorXd& u)
{
    if (u.size() != static_cast<Eigen::Index>(mesh.nodes.size()))
        throw solver_errors::DimensionMismatch("field does not match mesh");
    return energy(elements(mesh), u);
}

SolutionField harmonic_solve(const DomainMesh& mesh, const BoundaryData& bc)
{
    if (mesh.nodes.empty()) throw solver_errors::DimensionMismatch("empty mesh");
    const auto els = elements(mesh);
    const Constraints c = build_constraints(mesh, bc);
    const SpMat K = reduced_matrix(els, c, nullptr);
    // gradient of the Dirichlet energy at z = 0
    const Eigen::VectorXd u0 = expand(c, Eigen::VectorXd::Zero(c.unknowns));
    Eigen::VectorXd R = Eigen::VectorXd::Zero(u0.size());
    for (const auto& el : els) {
        const Point g = p1_gradient(el.grad, u0[el.v[0]], u0[el.v[1]], u0[el.v[2]]);
        for (int k = 0; k < 3; ++k) R[el.v[k]] += el.area * g.dot(el.grad[k]);
    }
    Eigen::SimplicialLDLT<SpMat> ldlt(K);
    if (ldlt.info() != Eigen::Success) throw solver_errors::NoConvergence("harmonic system is singular");
    const Eigen::VectorXd z = -ldlt.solve(restrict_vector(c, R));
    return make_field(mesh, c, z, bc);
}

namespace {

struct NewtonResult {
    Eigen::VectorXd z;
    double rel = 0.0;
    int iters = 0;
};

NewtonResult newton(const DomainMesh& mesh, const std::vector<Element>& els, const Constraints& c,
                    const SolveOptions& opts, Eigen::VectorXd z)
{
    (void)mesh;
    const double scale = residual_scale(els, c);
    Eigen::VectorXd u = expand(c, z);
    Eigen::VectorXd g = restrict_vector(c, nodal_residual(els, u));
    double E = energy(els, u);
    // Newton steps blended toward the lagged-diffusivity step: the blend grows after a
    // rejected full step and shrinks after an accepted one.
    static constexpr double kRelax[] = {0.0, 1e-3, 1e-2, 1e-1, 1.0};
    int level = 0;
    Eigen::SimplicialLDLT<SpMat> ldlt;
    bool analyzed = false;
    int it = 0;
    int solves = 0;
    double rel = g.norm() / scale;
    while (it < opts.max_iters && rel > opts.tol && solves < 4 * opts.max_iters) {
        const SpMat H = reduced_matrix(els, c, &u, kRelax[level]);
        if (!analyzed) {
            ldlt.analyzePattern(H);
            analyzed = true;
        }
        ldlt.factorize(H);
        ++solves;
        if (ldlt.info() != Eigen::Success) throw solver_errors::NoConvergence("Newton matrix factorization failed");
        const Eigen::VectorXd d = -ldlt.solve(g);
        const double slope = g.dot(d);
        const int tries = level == 4 ? 30 : 1;
        bool accepted = false;
        double t = opts.damping;
        for (int k = 0; k < tries && !accepted; ++k, t *= 0.5) {
            const Eigen::VectorXd zt = z + t * d;
            const Eigen::VectorXd ut = expand(c, zt);
            const double Et = energy(els, ut);
            bool ok = Et <= E + 1e-4 * t * slope;
            Eigen::VectorXd gt;
            if (!ok && std::abs(Et - E) <= 1e-13 * std::abs(E)) {
                // energy differences are below roundoff; fall back to the gradient norm
                gt = restrict_vector(c, nodal_residual(els, ut));
                ok = gt.norm() < g.norm();
            }
            if (ok) {
                z = zt;
                u = ut;
                E = Et;
                g = gt.size() ? gt : restrict_vector(c, nodal_residual(els, u));
                accepted = true;
            }
        }
        if (!accepted) {
            if (level == 4) break;
            ++level;
            continue;
        }
        level = std::max(0, level - 1);
        ++it;
        rel = g.norm() / scale;
    }
    return {z, rel, it};
}

bool has_strips(const DomainMesh& mesh)
{
    for (const auto& e : mesh.boundary)
        if (e.tag == EdgeTag::StripPlus || e.tag == EdgeTag::StripMinus || e.tag == EdgeTag::StripCap) return true;
    return false;
}

} // namespace

SolutionField solve(const DomainMesh& mesh, const BoundaryData& bc, const SolveOptions& opts,
                    const SolutionField* warm)
{
    if (mesh.nodes.empty() || mesh.triangles.empty()) throw solver_errors::DimensionMismatch("empty mesh");
    if (warm && warm->u.size() != static_cast<Eigen::Index>(mesh.nodes.size()))
        throw solver_errors::DimensionMismatch("warm start does not match the mesh");
    const auto els = elements(mesh);
    const Constraints c = build_constraints(mesh, bc);
    const bool scalable = has_strips(mesh) && bc.fixed_values.empty() && !bc.fixed_jump;

    Eigen::VectorXd z;
    int iters = 0;
    if (warm) {
        // all boundary data is proportional to M, so the previous field rescales
        const double ratio = scalable && warm->M > 0.0 ? bc.M / warm->M : 1.0;
        z = project(c, ratio * warm->u, ratio * warm->c);
    } else if (scalable && bc.M > 2.0 * opts.min_M) {
        // continuation in M from the smallest admissible cap
        double M = bc.M;
        std::vector<double> ladder;
        while (M > opts.min_M * (1.0 + 1e-12)) {
            ladder.push_back(M);
            M *= 0.5;
        }
        std::reverse(ladder.begin(), ladder.end());
        BoundaryData stage = bc;
        stage.M = std::max(ladder.front() * 0.5, opts.min_M);
        Constraints cs = build_constraints(mesh, stage);
        const SolutionField h0 = harmonic_solve(mesh, stage);
        NewtonResult r = newton(mesh, els, cs, opts, project(cs, h0.u, h0.c));
        iters += r.iters;
        double prevM = stage.M;
        Eigen::VectorXd u = expand(cs, r.z);
        double jump = cs.jump >= 0 ? r.z[cs.jump] : 0.0;
        for (std::size_t k = 0; k + 1 < ladder.size(); ++k) {
            stage.M = ladder[k];
            cs = build_constraints(mesh, stage);
            const double ratio = stage.M / prevM;
            r = newton(mesh, els, cs, opts, project(cs, ratio * u, ratio * jump));
            iters += r.iters;
            u = expand(cs, r.z);
            jump = cs.jump >= 0 ? r.z[cs.jump] : 0.0;
            prevM = stage.M;
        }
        const double ratio = bc.M / prevM;
        z = project(c, ratio * u, ratio * jump);
    } else {
        const SolutionField h0 = harmonic_solve(mesh, bc);
        z = project(c, h0.u, h0.c);
    }
    const NewtonResult res = newton(mesh, els, c, opts, z);
    iters += res.iters;
    const double rel = res.rel;
    if (rel > opts.tol) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "relative residual %.3e after %d iterations (tol %.1e)", rel, iters, opts.tol);
        throw solver_errors::NoConvergence(buf);
    }
    SolutionField f = make_field(mesh, c, res.z, bc);
    f.residual_norm = rel;
    f.newton_iters = iters;
    if (c.jump >= 0 && std::abs(f.c) < 1e-8)
        throw solver_errors::JumpDegenerate("jump constant vanishes: c = " + std::to_string(f.c));
    return f;
}

ContinuationResult continuation_solve(const MeshFactory& make_mesh, const Schedule& s, const SolveOptions& opts,
                                      const FieldMetric& metric)
{
    const std::size_t n = std::max({s.M.size(), s.L.size(), s.h.size()});
    if (n == 0 || s.M.empty() || s.L.empty() || s.h.empty())
        throw solver_errors::InvalidData("schedule lists must be non-empty");
    auto at = [](const std::vector<double>& v, std::size_t k) { return v[std::min(k, v.size() - 1)]; };
    ContinuationResult res;
    bool have_mesh = false;
    for (std::size_t k = 0; k < n; ++k) {
        const double M = at(s.M, k), L = at(s.L, k), h = at(s.h, k);
        const bool same = have_mesh && L == res.mesh.L && h == res.mesh.h;
        if (!same) {
            res.mesh = make_mesh(L, h);
            res.mesh.L = L;
            res.mesh.h = h;
            have_mesh = true;
        }
        BoundaryData bc;
        bc.M = M;
        const SolutionField prev = res.field;
        res.field = solve(res.mesh, bc, opts, same ? &prev : nullptr);
        ContinuationStep step{M, L, h, res.mesh.nodes.size(), res.field.c, res.field.newton_iters,
                              Eigen::Vector2d::Zero()};
        if (metric) step.metric = metric(res.mesh, res.field);
        res.table.push_back(step);
    }
    const auto& t = res.table;
    for (std::size_t k = 2; k < t.size(); ++k) {
        const double d1 = std::abs(t[k].c - t[k - 1].c), d0 = std::abs(t[k - 1].c - t[k - 2].c);
        if (d1 >= d0 && d0 > 0.0)
            throw solver_errors::NonCauchy("jump differences do not decrease at schedule step " + std::to_string(k));
    }
    res.c_extrapolated = t.back().c;
    res.metric_extrapolated = t.back().metric;
    if (t.size() >= 3) {
        auto aitken = [](double a, double b, double c) {
            const double den = (c - b) - (b - a);
            if (std::abs(den) < 1e-14 * (std::abs(a) + std::abs(b) + std::abs(c)) || std::abs(den) == 0.0) return c;
            return c - (c - b) * (c - b) / den;
        };
        const auto& a = t[t.size() - 3];
        const auto& b = t[t.size() - 2];
        const auto& c = t.back();
        res.c_extrapolated = aitken(a.c, b.c, c.c);
        for (int i = 0; i < 2; ++i) res.metric_extrapolated[i] = aitken(a.metric[i], b.metric[i], c.metric[i]);
    }
    return res;
}

SolutionField helicoid_field(const DomainMesh& mesh, double theta0)
{
    SolutionField f;
    const int n = static_cast<int>(mesh.nodes.size());
    f.u.resize(n);
    for (int v = 0; v < n; ++v) {
        double t = std::atan2(mesh.nodes[v].y(), mesh.nodes[v].x()) - theta0;
        while (t < -1e-9) t += 2 * M_PI;
        while (t >= 2 * M_PI - 1e-9) t -= 2 * M_PI;
        f.u[v] = theta0 + t;
    }
    for (const auto& [p, q] : mesh.cut_pairing) f.u[q] = f.u[p] + 2 * M_PI;
    f.has_jump = !mesh.cut_pairing.empty();
    f.c = f.has_jump ? 2 * M_PI : 0.0;
    f.h = mesh.h;
    return f;
}

SolutionField replicate_field(const Replication& rep, const SolutionField& sector)
{
    SolutionField out = sector;
    const auto n = static_cast<Eigen::Index>(rep.node_source.size());
    out.u.resize(n);
    for (Eigen::Index v = 0; v < n; ++v) {
        const int src = rep.node_source[v];
        if (src < 0 || src >= sector.u.size()) throw solver_errors::DimensionMismatch("field does not match the sector");
        out.u[v] = sector.u[src] + rep.node_copy[v] * sector.c;
    }
    out.c = rep.copies * sector.c;
    return out;
}

void write_field(std::ostream& os, const SolutionField& f)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, "# c %.17g M %.17g L %.17g h %.17g iters %d residual %.6e\n", f.c, f.M, f.L, f.h,
                  f.newton_iters, f.residual_norm);
    os << buf;
    for (Eigen::Index i = 0; i < f.u.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%ld %.17g\n", static_cast<long>(i), f.u[i]);
        os << buf;
    }
}

SolutionField read_field(std::istream& is)
{
    SolutionField f;
    std::string line;
    std::vector<double> vals;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        if (line[0] == '#') {
            std::string hash, key;
            ls >> hash;
            while (ls >> key) {
                if (key == "c") ls >> f.c;
                else if (key == "M") ls >> f.M;
                else if (key == "L") ls >> f.L;
                else if (key == "h") ls >> f.h;
                else if (key == "iters") ls >> f.newton_iters;
                else if (key == "residual") ls >> f.residual_norm;
            }
            continue;
        }
        long i;
        double v;
        if (!(ls >> i >> v) || i != static_cast<long>(vals.size()))
            throw solver_errors::DimensionMismatch("malformed field record: " + line);
        vals.push_back(v);
    }
    f.u = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
    f.has_jump = f.c != 0.0;
    return f;
}

} // namespace rnoid
