#pragma once

#include "rnoid/geometry.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

// Constrained Delaunay triangulation with Ruppert refinement.
namespace rnoid::mesher {

struct Segment {
    int a = 0;
    int b = 0;
    int tag = 0;
    // Index of a segment whose subdivision must mirror this one (same parameter
    // along a->b). Used for rotationally identified sides.
    int partner = -1;
};

struct Input {
    std::vector<Point> points;
    std::vector<Segment> segments;
    std::vector<Point> holes;   // seeds of bounded regions to remove
};

struct Options {
    double min_angle_deg = 25.0;
    std::function<double(const Point&)> size;   // target edge length at a point
    std::size_t max_points = 1500000;
    // Input points whose incident triangles are exempt from the angle criterion, so that
    // many rays may meet there.
    std::vector<int> apex_points;
};

struct Subsegment {
    int a = 0;
    int b = 0;           // oriented as the input segment
    int tag = 0;
    int segment = 0;     // input segment index
    double t0 = 0.0;     // parameter range on the input segment
    double t1 = 1.0;
};

struct Output {
    std::vector<Point> points;
    std::vector<std::array<int, 3>> triangles;   // counterclockwise
    std::vector<Subsegment> subsegments;          // sorted by (segment, t0)
    std::vector<int> input_index;                 // per output point, input point index or -1
    std::size_t unfixed = 0;                      // bad triangles left behind
};

// Throws domain.MeshFailure when the point budget is exhausted.
Output triangulate(const Input& input, const Options& opts);

} // namespace rnoid::mesher
