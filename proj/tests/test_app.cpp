#include <doctest.h>

#include "rnoid/app.hpp"
#include "rnoid/errors.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rnoid;

namespace {

const char* kTriangle = R"({
  // unit equilateral triangle
  "polygon": {"edges": [[1, 0], [-0.5, 0.8660254037844386], [-0.5, -0.8660254037844386]]},
  "mesh": {"h": 0.1}
})";

std::filesystem::path scratch(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("rnoid-app-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig coarse_config(const std::filesystem::path& out)
{
    RunConfig c = parse_config(kTriangle);
    c.out_dir = out;
    c.cache = false;
    return c;
}

} // namespace

TEST_CASE("config defaults")
{
    const RunConfig c = parse_config(kTriangle);
    CHECK(c.edges.size() == 3);
    CHECK_FALSE(c.star);
    CHECK_FALSE(c.puncture);
    CHECK(c.period.mesh.h == 0.1);
    CHECK(c.period.mesh.grading == MeshParams{}.grading);
    CHECK(c.period.M == PeriodOptions{}.M);
    CHECK(c.delta == 0.05);
    CHECK(c.schedule.M.empty());
    CHECK(c.out_dir == "out");
    CHECK((c.puncture_or_centroid() - c.polygon().centroid()).norm() < 1e-15);
    CHECK(c.hash.size() == 16);
}

TEST_CASE("star and puncture settings")
{
    const RunConfig c = parse_config(R"({"polygon": {"star": {"r": 5, "q": 2}}, "puncture": [0.1, -0.2]})");
    REQUIRE(c.star);
    CHECK(c.star->r == 5);
    CHECK(c.star->q == 2);
    CHECK(c.polygon().vertices().size() == 5);
    CHECK((c.puncture_or_centroid() - Point(0.1, -0.2)).norm() == 0.0);
}

TEST_CASE("anchor places the first vertex")
{
    const RunConfig c = parse_config(R"({"polygon": {"edges": [[1, 0], [0, 1], [-1, 0], [0, -1]], "anchor": [2, 3]}})");
    CHECK((c.polygon().vertex(0) - Point(2, 3)).norm() == 0.0);
}

TEST_CASE("config errors")
{
    const char* bad[] = {
        "{",
        R"({})",
        R"({"polygon": {"edges": [[1, 0], [0, 1], [-1, -1]]}, "colour": 1})",
        R"({"polygon": {"edges": [[1, 0], [0, 1], [-1, -1]]}, "mesh": {"hh": 0.1}})",
        R"({"polygon": {"edges": [[1, 0], [0, 1], [-1, -1]]}, "mesh": {"h": "fine"}})",
        R"({"polygon": {"edges": [[1, 0], [0, 1], [-1, -1]]}, "mesh": {"h": -1}})",
        R"({"polygon": {"edges": [[1, 0], [0, 1], [-1, -1]], "star": {"r": 3}}})",
        R"({"polygon": {"edges": [[1, 0], [0, 1], [-1, 0]]}})",
        R"({"polygon": {"star": {"r": 4, "q": 2}}})",
        R"({"polygon": {"edges": [[1, 0], [0, 1], [-1, -1]]}, "solver": {"schedule": {"M": [20, 10]}}})",
        R"({"polygon": {"edges": [[1, 0], [0, 1], [-1, -1]]}, "solver": {"schedule": {"h": [0.05, 0.1]}}})",
        R"({"polygon": {"edges": [[1, 0], [0, 1], [-1, -1]]}, "period": {"search": {"inset": 1.5}}})",
        R"({"polygon": {"edges": [[1, 0], [0, 1], [-1, -1]]}, "puncture": [1]})",
    };
    for (const char* text : bad) {
        INFO(text);
        CHECK_THROWS_AS(parse_config(text), app_errors::ConfigError);
    }
    CHECK_THROWS_AS(load_config("/nonexistent/config.jsonc"), app_errors::ConfigError);
}

TEST_CASE("config hash")
{
    const RunConfig a = parse_config(kTriangle);
    // Formatting, comments and explicit defaults do not change the hash.
    const RunConfig b = parse_config(R"({"mesh": {"h": 0.10, "grading": 8},
        "polygon": {"edges": [[1.0, 0], [-0.5, 0.8660254037844386], [-0.5, -0.8660254037844386]]}})");
    const RunConfig c = parse_config(R"({"mesh": {"h": 0.05},
        "polygon": {"edges": [[1.0, 0], [-0.5, 0.8660254037844386], [-0.5, -0.8660254037844386]]}})");
    CHECK(a.hash == b.hash);
    CHECK(a.canonical == b.canonical);
    CHECK(a.hash != c.hash);
    CHECK(parse_config(a.canonical).hash == a.hash);
}

TEST_CASE("cache root")
{
    RunConfig c = parse_config(kTriangle);
    c.out_dir = "somewhere";
    unsetenv("RNOID_CACHE");
    CHECK(cache_root(c) == std::filesystem::path("somewhere/cache"));
    setenv("RNOID_CACHE", "/tmp/elsewhere", 1);
    CHECK(cache_root(c) == std::filesystem::path("/tmp/elsewhere"));
    unsetenv("RNOID_CACHE");
    c.cache = false;
    CHECK_FALSE(cache_root(c));
}

TEST_CASE("atomic writes")
{
    const auto dir = scratch("atomic");
    write_atomic(dir / "a.txt", "first\n");
    write_atomic(dir / "a.txt", "second\n");
    CHECK(slurp(dir / "a.txt") == "second\n");
    CHECK_FALSE(std::filesystem::exists(dir / "a.txt.tmp"));
    CHECK_THROWS_AS(write_atomic(dir / "missing" / "b.txt", "x"), app_errors::IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("puncture grid stays inside")
{
    const FluxPolygon tri = parse_config(kTriangle).polygon();
    const auto grid = puncture_grid(tri, 4, 4, 0.05);
    CHECK_FALSE(grid.empty());
    CHECK(grid.size() < 16);
    for (const Point& A : grid) CHECK(contains(tri, A).distance >= 0.05 * tri.diameter());
    CHECK(puncture_grid(tri, 1, 1, 0.05).size() == 1);
}

TEST_CASE("commands write headed files")
{
    const auto dir = scratch("commands");
    const RunConfig c = coarse_config(dir);
    std::ostringstream log;
    CHECK(cmd_mesh(c, {}, log) == 0);
    CHECK(cmd_solve(c, {}, log) == 0);
    const std::string header = "# rnoid mesh config " + c.hash + "\n";
    CHECK(slurp(dir / "mesh.txt").rfind(header, 0) == 0);
    CHECK(slurp(dir / "solve.txt").rfind("# rnoid solve config " + c.hash + "\n", 0) == 0);
    CHECK(std::filesystem::exists(dir / "field.txt"));
    CHECK_THROWS_AS(cmd_star(c, {}, log), app_errors::ConfigError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("validate exits 4 when a check fails")
{
    const auto dir = scratch("validate");
    RunConfig c = coarse_config(dir);
    CommandOptions off_centre;
    off_centre.at = Point(0.6, 0.2);
    std::ostringstream log;
    CHECK(cmd_validate(c, off_centre, log) == 4);
    CHECK(log.str().find("horizontal_period") != std::string::npos);
    CHECK(std::filesystem::exists(dir / "report.txt"));
    std::filesystem::remove_all(dir);
}
