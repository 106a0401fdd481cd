#pragma once

#include "rnoid/period.hpp"
#include "rnoid/polygon.hpp"
#include "rnoid/solver.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rnoid {

struct RunConfig {
    std::vector<Point> edges;           // empty when a star is given
    Point anchor = Point::Zero();       // first vertex of an edge polygon
    std::optional<StarSpec> star;
    std::optional<Point> puncture;      // defaults to the centroid

    PeriodOptions period;               // mesh, strip length, cap and solver settings
    Schedule schedule;                  // continuation for the solve command; empty for one solve

    double delta = 0.05;                // inset of the degree loop
    int n_samples = 48;
    int max_inserted = 64;
    int grid_nx = 9;
    int grid_ny = 9;
    double grid_margin = 0.05;          // per-field grid keeps points this far (times the diameter) inside
    FindZeroOptions search;
    double symmetry_tol = 1e-6;
    bool allow_open = false;            // build-surface with a nonzero period

    std::filesystem::path out_dir = "out";
    bool cache = true;

    std::string canonical;              // normalized JSON of every setting
    std::string hash;                   // hash of canonical

    FluxPolygon polygon() const;
    Point puncture_or_centroid() const;
};

// Parses JSON with comments. Unknown keys, wrong types and violated invariants throw ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Cache root: $RNOID_CACHE when set, else <out>/cache; none when the cache is disabled.
std::optional<std::filesystem::path> cache_root(const RunConfig& config);

// Writes through a temporary file in the same directory and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

struct CommandOptions {
    int jobs = 1;
    std::optional<Point> at;   // overrides the configured puncture
};

// Each command writes its files under config.out_dir, every file starting with a comment that
// carries the config hash, and prints a short summary to log. Returns the process exit code.
int cmd_mesh(const RunConfig& config, const CommandOptions& opts, std::ostream& log);
int cmd_solve(const RunConfig& config, const CommandOptions& opts, std::ostream& log);
int cmd_per_field(const RunConfig& config, const CommandOptions& opts, std::ostream& log);
int cmd_degree(const RunConfig& config, const CommandOptions& opts, std::ostream& log);
int cmd_find_zero(const RunConfig& config, const CommandOptions& opts, std::ostream& log);
int cmd_build_surface(const RunConfig& config, const CommandOptions& opts, std::ostream& log);
int cmd_star(const RunConfig& config, const CommandOptions& opts, std::ostream& log);
int cmd_validate(const RunConfig& config, const CommandOptions& opts, std::ostream& log);

// Punctures of the per-field grid, row by row.
std::vector<Point> puncture_grid(const FluxPolygon& poly, int nx, int ny, double margin);

} // namespace rnoid
