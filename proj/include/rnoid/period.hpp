#pragma once

#include "rnoid/conjugate.hpp"
#include "rnoid/domain.hpp"
#include "rnoid/polygon.hpp"
#include "rnoid/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace rnoid {

struct PeriodOptions {
    MeshParams mesh;
    double L_factor = 10.0;    // strip length in units of the longest edge
    double M = 20.0;
    SolveOptions solve;
    int loop_level = -1;       // level of the period loop on the reference mesh; -1 for the middle
    double morph_depth = 0.2;  // punctures closer to the boundary than this fraction of the inradius are remeshed
    std::optional<std::filesystem::path> cache_dir;

    double strip_length(const FluxPolygon& poly) const { return L_factor * poly.max_edge_length(); }
};

struct PeriodSample {
    Point A = Point::Zero();
    Point raw = Point::Zero();
    Point renormalized = Point::Zero();
    double third = 0.0;
    double c = 0.0;
    int newton_iters = 0;
    double residual = 0.0;
};

// raw if its norm is at most 1, raw / |raw| otherwise.
Point renormalize(const Point& raw);

// Per(A) for one polygon. Punctures away from the boundary share one reference mesh, cut from
// the centroid with the segments [A, P_i] constrained, which is morphed to each A; the period
// loop is the same combinatorial loop for every A, so Per is a smooth function of A there.
// Punctures near the boundary, where the morph would flatten the elements, get their own mesh.
// Samples are cached in memory by A quantized to 1e-9 and, when cache_dir is set, on disk.
class PeriodMap {
public:
    PeriodMap(FluxPolygon poly, PeriodOptions opts);

    PeriodSample operator()(const Point& A);
    std::vector<PeriodSample> evaluate(const std::vector<Point>& punctures, int jobs = 1);

    const FluxPolygon& polygon() const { return poly_; }
    const PeriodOptions& options() const { return opts_; }
    const DomainMesh& reference() const { return reference_; }
    int loop_level() const { return level_; }
    std::uint64_t key() const { return key_; }
    std::size_t solves() const { return solves_; }

private:
    PeriodSample compute(const Point& A) const;
    std::optional<PeriodSample> load(const Point& A) const;
    void store(const PeriodSample& s) const;

    FluxPolygon poly_;
    PeriodOptions opts_;
    DomainMesh reference_;
    SolutionField reference_field_;
    int level_ = 0;
    double inradius_ = 0.0;
    std::uint64_t key_ = 0;
    std::map<std::pair<long long, long long>, PeriodSample> cache_;
    std::size_t solves_ = 0;
    std::mutex mutex_;
};

PeriodSample per(const Point& A, const FluxPolygon& poly, const PeriodOptions& opts = {});

// Limit of the renormalized period at an interior point of edge i: its outward normal.
Point edge_limit(const FluxPolygon& poly, int edge_index, double t);

// Convex curve parametrized by the direction of its tangent, the curve being traversed so
// that it turns left: gamma(beta) is the point where the tangent is (cos beta, sin beta).
struct NormalCurve {
    std::vector<double> beta;     // increasing knots
    std::vector<Point> points;
    double begin() const { return beta.front(); }
    double end() const { return beta.back(); }
    double turning() const { return end() - begin(); }
    Point operator()(double b) const;   // clamped to [begin, end]
};

NormalCurve normal_parametrize(const std::vector<Point>& curve);

// Conjugate of the vertical line over P_i in the genus-0 surface of the polygon, in the frame
// of P_i (x along v_i, y towards the disk).
struct VertexCurve {
    int vertex = 0;
    double alpha = 0.0;
    NormalCurve gamma;
};

VertexCurve extract_vertex_curve(const FluxPolygon& poly, int vertex_index, const PeriodOptions& opts = {});

// Limit of Per at the blown-up vertex point (P_i, theta), in the frame of P_i.
Point vertex_limit(const VertexCurve& curve, double theta);
Point vertex_limit(const FluxPolygon& poly, int vertex_index, double theta, const PeriodOptions& opts = {});
// The same vector in the coordinates of the polygon.
Point vertex_frame_to_plane(const FluxPolygon& poly, int vertex_index, const Point& local);

struct LoopPoint {
    Point A = Point::Zero();
    bool on_arc = false;
    int index = 0;      // edge index on runs, vertex index on arcs
    double param = 0.0; // t along the edge, or theta at the vertex
};

// Counterclockwise loop inside the polygon: arcs of radius delta about each vertex, over
// theta in [theta0, alpha - theta0] with theta0 = min(pi/6, alpha/4), joined by runs parallel to
// the edges. Half of the samples go to the arcs.
std::vector<LoopPoint> boundary_loop(const FluxPolygon& poly, double delta, int n_samples);

// Total signed turning of the vectors around the closed sequence, in turns.
int winding_number(const std::vector<Point>& values);

struct DegreeResult {
    int winding = 0;
    std::vector<LoopPoint> loop;
    std::vector<PeriodSample> samples;
    int inserted = 0;   // samples added where consecutive directions were pi/2 or more apart
};

// Winding of the renormalized Per along boundary_loop, refining the loop where needed.
DegreeResult degree(PeriodMap& per_map, double delta, int n_samples, int max_inserted = 64, int jobs = 1);

struct FindZeroOptions {
    double tol = 1e-3;            // on |raw Per|, relative to the diameter
    double inset = 0.25;          // search region: polygon shrunk by this fraction of the inradius
    double polish_size = 0.08;    // cell size, relative to the diameter, at which Broyden takes over
    int budget = 400;             // Per evaluations
    int polish_iters = 20;
    int jobs = 1;
};

struct ZeroResult {
    Point A = Point::Zero();
    PeriodSample sample;
    int evaluations = 0;
    int root_winding = 0;
    std::vector<Point> other_cells;   // centres of further cells with nonzero winding
};

ZeroResult find_zero(PeriodMap& per_map, const FindZeroOptions& opts = {});

struct SymmetricResult {
    StarSpec spec;
    Point A = Point::Zero();
    Eigen::Vector3d period = Eigen::Vector3d::Zero();
    DomainMesh sector;
    SolutionField sector_field;
    Replication replicated;
    SolutionField field;
    SurfaceMesh half;
    SurfaceMesh surface;
};

// Solves on the fundamental sector of the star polygon with the puncture at its centre,
// replicates, checks the period, and builds the welded surface.
SymmetricResult symmetric_zero(const StarSpec& spec, const PeriodOptions& opts = {}, double tol = 1e-6);

} // namespace rnoid
