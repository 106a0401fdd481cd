#include "rnoid/app.hpp"

#include "rnoid/conjugate.hpp"
#include "rnoid/domain.hpp"
#include "rnoid/errors.hpp"
#include "rnoid/hash.hpp"
#include "rnoid/validate.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace rnoid {

using json = nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw app_errors::ConfigError(what); }

// Reads known keys from an object and rejects the rest.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) config_error(path_ + " must be an object");
    }
    ~Section() noexcept(false)
    {
        if (std::uncaught_exceptions()) return;
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key)) config_error("unknown key " + path_ + "." + key);
    }

    bool has(const std::string& key) const { return j_.contains(key); }
    const json& raw(const std::string& key)
    {
        seen_.insert(key);
        return j_.at(key);
    }
    double number(const std::string& key, double fallback)
    {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number()) config_error(path_ + "." + key + " must be a number");
        return v.get<double>();
    }
    int integer(const std::string& key, int fallback)
    {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_number_integer()) config_error(path_ + "." + key + " must be an integer");
        return v.get<int>();
    }
    bool boolean(const std::string& key, bool fallback)
    {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_boolean()) config_error(path_ + "." + key + " must be true or false");
        return v.get<bool>();
    }
    std::string string(const std::string& key, const std::string& fallback)
    {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_string()) config_error(path_ + "." + key + " must be a string");
        return v.get<std::string>();
    }
    std::vector<double> numbers(const std::string& key)
    {
        if (!has(key)) return {};
        const json& v = raw(key);
        if (!v.is_array()) config_error(path_ + "." + key + " must be a list of numbers");
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number()) config_error(path_ + "." + key + " must be a list of numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }
    Section section(const std::string& key) { return Section(has(key) ? raw(key) : empty(), path_ + "." + key); }
    const std::string& path() const { return path_; }

private:
    static const json& empty()
    {
        static const json e = json::object();
        return e;
    }
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Point parse_point(const json& v, const std::string& where)
{
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        config_error(where + " must be a pair of numbers");
    return Point(v[0].get<double>(), v[1].get<double>());
}

void positive(double x, const std::string& name)
{
    if (!(x > 0.0)) config_error(name + " must be positive");
}

void monotone(const std::vector<double>& v, bool increasing, const std::string& name)
{
    for (std::size_t k = 1; k < v.size(); ++k)
        if (increasing ? !(v[k] > v[k - 1]) : !(v[k] < v[k - 1]))
            config_error(name + " must be strictly " + (increasing ? "increasing" : "decreasing"));
    for (double x : v) positive(x, name);
}

json canonical_json(const RunConfig& c)
{
    json j;
    if (c.star) {
        j["polygon"]["star"] = {{"r", c.star->r}, {"q", c.star->q}};
    } else {
        json edges = json::array();
        for (const Point& e : c.edges) edges.push_back({e.x(), e.y()});
        j["polygon"]["edges"] = edges;
        j["polygon"]["anchor"] = {c.anchor.x(), c.anchor.y()};
    }
    if (c.puncture) j["puncture"] = {c.puncture->x(), c.puncture->y()};
    const MeshParams& m = c.period.mesh;
    j["mesh"] = {{"h", m.h},         {"grading", m.grading},         {"growth", m.growth}, {"strip_growth", m.strip_growth},
                 {"strip_coarsening", m.strip_coarsening}, {"hole_nodes", m.hole_nodes},
                 {"min_angle_deg", m.min_angle_deg},       {"rosette_rays", m.rosette_rays}};
    j["solver"] = {{"M", c.period.M},
                   {"L_factor", c.period.L_factor},
                   {"tol", c.period.solve.tol},
                   {"max_iters", c.period.solve.max_iters},
                   {"damping", c.period.solve.damping},
                   {"min_M", c.period.solve.min_M},
                   {"schedule", {{"M", c.schedule.M}, {"L", c.schedule.L}, {"h", c.schedule.h}}}};
    j["period"] = {{"delta", c.delta},
                   {"n_samples", c.n_samples},
                   {"max_inserted", c.max_inserted},
                   {"loop_level", c.period.loop_level},
                   {"morph_depth", c.period.morph_depth},
                   {"symmetry_tol", c.symmetry_tol},
                   {"grid", {{"nx", c.grid_nx}, {"ny", c.grid_ny}, {"margin", c.grid_margin}}},
                   {"search",
                    {{"tol", c.search.tol},
                     {"inset", c.search.inset},
                     {"polish_size", c.search.polish_size},
                     {"budget", c.search.budget},
                     {"polish_iters", c.search.polish_iters}}}};
    j["surface"] = {{"allow_open", c.allow_open}};
    return j;
}

std::string header(const RunConfig& c, const std::string& command)
{
    return "# rnoid " + command + " config " + c.hash + "\n";
}

std::filesystem::path out_file(const RunConfig& c, const std::string& name)
{
    std::filesystem::create_directories(c.out_dir);
    return c.out_dir / name;
}

std::string fmt(const char* f, double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

std::string g17(double x) { return fmt("%.17g", x); }

PeriodOptions period_options(const RunConfig& c)
{
    PeriodOptions o = c.period;
    o.cache_dir = cache_root(c);
    return o;
}

std::string sample_row(const PeriodSample& s)
{
    return g17(s.A.x()) + "," + g17(s.A.y()) + "," + g17(s.raw.x()) + "," + g17(s.raw.y()) + "," +
           g17(s.renormalized.x()) + "," + g17(s.renormalized.y()) + "," + g17(s.third) + "," +
           std::to_string(s.newton_iters) + "\n";
}

const char* kSampleColumns = "Ax,Ay,rawX,rawY,renX,renY,third,newton_iters\n";

DomainMesh cut_mesh(const RunConfig& c, const Point& A, double L, double h)
{
    MeshParams p = c.period.mesh;
    p.h = h;
    return triangulate(build_cut_domain(c.polygon(), A, L, h), p);
}

struct Construction {
    DomainMesh mesh;
    SolutionField field;
    PsiField psi;
    SurfaceMesh half;
    SurfaceMesh welded;
};

void write_construction(const RunConfig& c, const std::string& command, const Construction& k, std::ostream& log)
{
    std::ostringstream surf, index, report;
    surf << header(c, command);
    write_surface(surf, k.welded.welded ? k.welded : k.half);
    index << header(c, command);
    write_symmetry_index(index, k.welded.welded ? k.welded : k.half);
    const Report checks = construction_report(k.mesh, k.field, k.psi, k.half, k.welded);
    report << header(c, command);
    write_report(report, checks);
    write_atomic(out_file(c, "surface.txt"), surf.str());
    write_atomic(out_file(c, "surface_index.txt"), index.str());
    write_atomic(out_file(c, "report.txt"), report.str());
    int failed = 0;
    for (const auto& chk : checks) failed += chk.pass ? 0 : 1;
    log << "surface: " << (k.welded.welded ? k.welded : k.half).vertices.size() << " vertices, "
        << (k.welded.welded ? "welded" : "half") << "; checks " << checks.size() - failed << "/" << checks.size()
        << " pass\n";
}

Construction star_construction(const RunConfig& c)
{
    const SymmetricResult s = symmetric_zero(*c.star, c.period, c.symmetry_tol);
    Construction k;
    k.mesh = s.replicated.mesh;
    k.field = s.field;
    const GradientFrame frame = gradient_frame(k.mesh, k.field);
    k.psi = psi_field(frame);
    k.half = s.half;
    k.welded = s.surface;
    return k;
}

Construction cut_construction(const RunConfig& c, const Point& A, bool allow_open)
{
    Construction k;
    const FluxPolygon poly = c.polygon();
    k.mesh = cut_mesh(c, A, c.period.strip_length(poly), c.period.mesh.h);
    BoundaryData bc;
    bc.M = c.period.M;
    k.field = solve(k.mesh, bc, c.period.solve);
    const GradientFrame frame = gradient_frame(k.mesh, k.field);
    k.psi = psi_field(frame);
    ConjugateOptions co;
    co.allow_open = allow_open;
    co.loop_level = c.period.loop_level;
    k.half = conjugate_surface(frame, k.field, k.psi, co);
    const double scale = poly.diameter();
    if (k.half.period.head<2>().norm() <= co.period_tol * scale) k.welded = reflect_and_glue(k.half);
    return k;
}

} // namespace

FluxPolygon RunConfig::polygon() const { return star ? star_polygon(*star) : from_edge_vectors(edges, anchor); }

Point RunConfig::puncture_or_centroid() const
{
    if (puncture) return *puncture;
    return star ? Point::Zero() : polygon().centroid();
}

RunConfig parse_config(const std::string& text)
{
    json j;
    try {
        j = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        config_error(std::string("unparseable config: ") + e.what());
    }
    RunConfig c;
    try {
        Section root(j, "config");
        {
            if (!root.has("polygon")) config_error("config.polygon is required");
            Section poly = root.section("polygon");
            if (poly.has("edges") == poly.has("star")) config_error("config.polygon needs exactly one of edges, star");
            if (poly.has("edges")) {
                const json& e = poly.raw("edges");
                if (!e.is_array()) config_error("config.polygon.edges must be a list of pairs");
                for (const auto& v : e) c.edges.push_back(parse_point(v, "config.polygon.edges[]"));
                if (poly.has("anchor")) c.anchor = parse_point(poly.raw("anchor"), "config.polygon.anchor");
            } else {
                Section star = poly.section("star");
                StarSpec s;
                s.r = star.integer("r", 3);
                s.q = star.integer("q", 1);
                c.star = s;
            }
        }
        if (root.has("puncture")) c.puncture = parse_point(root.raw("puncture"), "config.puncture");
        {
            Section mesh = root.section("mesh");
            MeshParams& m = c.period.mesh;
            m.h = mesh.number("h", m.h);
            m.grading = mesh.number("grading", m.grading);
            m.growth = mesh.number("growth", m.growth);
            m.strip_growth = mesh.number("strip_growth", m.strip_growth);
            m.strip_coarsening = mesh.number("strip_coarsening", m.strip_coarsening);
            m.hole_nodes = mesh.integer("hole_nodes", m.hole_nodes);
            m.min_angle_deg = mesh.number("min_angle_deg", m.min_angle_deg);
            m.rosette_rays = mesh.integer("rosette_rays", m.rosette_rays);
            positive(m.h, "mesh.h");
            if (!(m.grading >= 1.0)) config_error("mesh.grading must be at least 1");
            positive(m.growth, "mesh.growth");
            positive(m.strip_growth, "mesh.strip_growth");
            positive(m.strip_coarsening, "mesh.strip_coarsening");
            if (m.hole_nodes < 6) config_error("mesh.hole_nodes must be at least 6");
            if (!(m.min_angle_deg > 0.0 && m.min_angle_deg < 34.0)) config_error("mesh.min_angle_deg must lie in (0, 34)");
            if (m.rosette_rays < 0) config_error("mesh.rosette_rays must be non-negative");
        }
        {
            Section s = root.section("solver");
            c.period.M = s.number("M", c.period.M);
            c.period.L_factor = s.number("L_factor", c.period.L_factor);
            c.period.solve.tol = s.number("tol", c.period.solve.tol);
            c.period.solve.max_iters = s.integer("max_iters", c.period.solve.max_iters);
            c.period.solve.damping = s.number("damping", c.period.solve.damping);
            c.period.solve.min_M = s.number("min_M", c.period.solve.min_M);
            positive(c.period.M, "solver.M");
            positive(c.period.L_factor, "solver.L_factor");
            positive(c.period.solve.tol, "solver.tol");
            positive(c.period.solve.damping, "solver.damping");
            positive(c.period.solve.min_M, "solver.min_M");
            if (c.period.solve.max_iters < 1) config_error("solver.max_iters must be at least 1");
            Section sch = s.section("schedule");
            c.schedule.M = sch.numbers("M");
            c.schedule.L = sch.numbers("L");
            c.schedule.h = sch.numbers("h");
            monotone(c.schedule.M, true, "solver.schedule.M");
            monotone(c.schedule.L, true, "solver.schedule.L");
            monotone(c.schedule.h, false, "solver.schedule.h");
        }
        {
            Section p = root.section("period");
            c.delta = p.number("delta", c.delta);
            c.n_samples = p.integer("n_samples", c.n_samples);
            c.max_inserted = p.integer("max_inserted", c.max_inserted);
            c.period.loop_level = p.integer("loop_level", c.period.loop_level);
            c.period.morph_depth = p.number("morph_depth", c.period.morph_depth);
            c.symmetry_tol = p.number("symmetry_tol", c.symmetry_tol);
            positive(c.delta, "period.delta");
            positive(c.symmetry_tol, "period.symmetry_tol");
            if (c.n_samples < 3) config_error("period.n_samples must be at least 3");
            if (c.max_inserted < 0) config_error("period.max_inserted must be non-negative");
            if (!(c.period.morph_depth >= 0.0 && c.period.morph_depth < 1.0))
                config_error("period.morph_depth must lie in [0, 1)");
            Section g = p.section("grid");
            c.grid_nx = g.integer("nx", c.grid_nx);
            c.grid_ny = g.integer("ny", c.grid_ny);
            c.grid_margin = g.number("margin", c.grid_margin);
            if (c.grid_nx < 1 || c.grid_ny < 1) config_error("period.grid sizes must be at least 1");
            positive(c.grid_margin, "period.grid.margin");
            Section z = p.section("search");
            c.search.tol = z.number("tol", c.search.tol);
            c.search.inset = z.number("inset", c.search.inset);
            c.search.polish_size = z.number("polish_size", c.search.polish_size);
            c.search.budget = z.integer("budget", c.search.budget);
            c.search.polish_iters = z.integer("polish_iters", c.search.polish_iters);
            positive(c.search.tol, "period.search.tol");
            if (!(c.search.inset > 0.0 && c.search.inset < 1.0)) config_error("period.search.inset must lie in (0, 1)");
            positive(c.search.polish_size, "period.search.polish_size");
            if (c.search.budget < 1) config_error("period.search.budget must be at least 1");
            if (c.search.polish_iters < 1) config_error("period.search.polish_iters must be at least 1");
        }
        {
            Section s = root.section("surface");
            c.allow_open = s.boolean("allow_open", c.allow_open);
        }
        {
            Section o = root.section("output");
            c.out_dir = o.string("dir", c.out_dir.string());
            c.cache = o.boolean("cache", c.cache);
        }
    } catch (const json::exception& e) {
        config_error(std::string("bad config value: ") + e.what());
    }
    try {
        (void)c.polygon();
    } catch (const Error& e) {
        config_error("invalid polygon: " + e.code() + ": " + e.what());
    }
    c.canonical = canonical_json(c).dump();
    c.hash = Hasher().add(std::string_view(c.canonical)).hex();
    return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) config_error("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::optional<std::filesystem::path> cache_root(const RunConfig& config)
{
    if (!config.cache) return std::nullopt;
    if (const char* env = std::getenv("RNOID_CACHE"); env && *env) return std::filesystem::path(env);
    return config.out_dir / "cache";
}

void write_atomic(const std::filesystem::path& path, const std::string& content)
{
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw app_errors::IoError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw app_errors::IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw app_errors::IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::vector<Point> puncture_grid(const FluxPolygon& poly, int nx, int ny, double margin)
{
    Point lo = poly.vertices().front(), hi = lo;
    for (const Point& p : poly.vertices()) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double gap = margin * poly.diameter();
    std::vector<Point> out;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const Point A(lo.x() + (hi.x() - lo.x()) * (i + 0.5) / nx, lo.y() + (hi.y() - lo.y()) * (j + 0.5) / ny);
            if (contains(poly, A).distance >= gap) out.push_back(A);
        }
    return out;
}

int cmd_mesh(const RunConfig& c, const CommandOptions& opts, std::ostream& log)
{
    DomainMesh m;
    if (c.star) {
        m = triangulate(build_star_domain(*c.star, c.period.strip_length(c.polygon())), c.period.mesh);
    } else {
        const Point A = opts.at ? *opts.at : c.puncture_or_centroid();
        m = cut_mesh(c, A, c.period.strip_length(c.polygon()), c.period.mesh.h);
    }
    std::ostringstream os;
    os << header(c, "mesh");
    write_mesh(os, m);
    write_atomic(out_file(c, "mesh.txt"), os.str());
    const MeshQuality q = mesh_quality(m);
    log << "mesh: " << m.nodes.size() << " nodes, " << m.triangles.size() << " triangles, min angle "
        << fmt("%.2f", q.min_angle_deg) << " deg\n";
    return 0;
}

int cmd_solve(const RunConfig& c, const CommandOptions& opts, std::ostream& log)
{
    std::ostringstream diag;
    diag << header(c, "solve");
    SolutionField f;
    if (c.star) {
        DomainMesh m = triangulate(build_star_domain(*c.star, c.period.strip_length(c.polygon())), c.period.mesh);
        BoundaryData bc;
        bc.M = c.period.M;
        f = solve(m, bc, c.period.solve);
    } else if (c.schedule.M.empty() && c.schedule.L.empty() && c.schedule.h.empty()) {
        const Point A = opts.at ? *opts.at : c.puncture_or_centroid();
        DomainMesh m = cut_mesh(c, A, c.period.strip_length(c.polygon()), c.period.mesh.h);
        BoundaryData bc;
        bc.M = c.period.M;
        f = solve(m, bc, c.period.solve);
    } else {
        const Point A = opts.at ? *opts.at : c.puncture_or_centroid();
        Schedule s = c.schedule;
        if (s.M.empty()) s.M = {c.period.M};
        if (s.L.empty()) s.L = {c.period.strip_length(c.polygon())};
        if (s.h.empty()) s.h = {c.period.mesh.h};
        const auto res = continuation_solve([&](double L, double h) { return cut_mesh(c, A, L, h); }, s, c.period.solve,
                                            [](const DomainMesh& m, const SolutionField& f) {
                                                return Eigen::Vector2d(period_vector(gradient_frame(m, f)).head<2>());
                                            });
        diag << "# step M L h nodes c newton_iters perX perY\n";
        for (const auto& st : res.table)
            diag << g17(st.M) << ' ' << g17(st.L) << ' ' << g17(st.h) << ' ' << st.nodes << ' ' << g17(st.c) << ' '
                 << st.newton_iters << ' ' << g17(st.metric.x()) << ' ' << g17(st.metric.y()) << '\n';
        diag << "# extrapolated c " << g17(res.c_extrapolated) << " period " << g17(res.metric_extrapolated.x()) << ' '
             << g17(res.metric_extrapolated.y()) << '\n';
        f = res.field;
    }
    std::ostringstream field;
    field << header(c, "solve");
    write_field(field, f);
    write_atomic(out_file(c, "field.txt"), field.str());
    diag << "c " << g17(f.c) << "\nnewton_iters " << f.newton_iters << "\nresidual " << fmt("%.6e", f.residual_norm)
         << '\n';
    write_atomic(out_file(c, "solve.txt"), diag.str());
    log << "solve: c = " << fmt("%.10g", f.c) << ", " << f.newton_iters << " Newton iterations, residual "
        << fmt("%.3e", f.residual_norm) << '\n';
    return 0;
}

int cmd_per_field(const RunConfig& c, const CommandOptions& opts, std::ostream& log)
{
    if (c.star) config_error("per-field needs a polygon given by edges");
    PeriodMap map(c.polygon(), period_options(c));
    const auto grid = puncture_grid(c.polygon(), c.grid_nx, c.grid_ny, c.grid_margin);
    const auto samples = map.evaluate(grid, opts.jobs);
    std::string out = header(c, "per-field") + kSampleColumns;
    for (const auto& s : samples) out += sample_row(s);
    write_atomic(out_file(c, "per_field.csv"), out);
    log << "per-field: " << samples.size() << " samples, " << map.solves() << " solved\n";
    return 0;
}

int cmd_degree(const RunConfig& c, const CommandOptions& opts, std::ostream& log)
{
    if (c.star) config_error("degree needs a polygon given by edges");
    PeriodMap map(c.polygon(), period_options(c));
    const DegreeResult d = degree(map, c.delta, c.n_samples, c.max_inserted, opts.jobs);
    std::string out = header(c, "degree") + "# winding " + std::to_string(d.winding) + "\n" + kSampleColumns;
    for (const auto& s : d.samples) out += sample_row(s);
    write_atomic(out_file(c, "degree.csv"), out);
    log << d.winding << '\n';
    log << "# " << d.samples.size() << " samples (" << d.inserted << " inserted), r = " << c.polygon().r() << '\n';
    log << kSampleColumns;
    for (const auto& s : d.samples) log << sample_row(s);
    return 0;
}

int cmd_find_zero(const RunConfig& c, const CommandOptions& opts, std::ostream& log)
{
    if (c.star) config_error("find-zero needs a polygon given by edges; use star for symmetric polygons");
    PeriodMap map(c.polygon(), period_options(c));
    FindZeroOptions z = c.search;
    z.jobs = opts.jobs;
    const ZeroResult res = find_zero(map, z);
    std::string out = header(c, "find-zero");
    out += "A " + g17(res.A.x()) + " " + g17(res.A.y()) + "\n";
    out += "per " + g17(res.sample.raw.x()) + " " + g17(res.sample.raw.y()) + "\n";
    out += "norm " + g17(res.sample.raw.norm()) + "\n";
    out += "root_winding " + std::to_string(res.root_winding) + "\n";
    for (const Point& p : res.other_cells) out += "other_cell " + g17(p.x()) + " " + g17(p.y()) + "\n";
    write_atomic(out_file(c, "zero.txt"), out);
    log << "A* = (" << fmt("%.6f", res.A.x()) << ", " << fmt("%.6f", res.A.y()) << "), |Per| = "
        << fmt("%.3e", res.sample.raw.norm()) << ", " << res.evaluations << " evaluations";
    if (!res.other_cells.empty()) log << ", " << res.other_cells.size() << " further cells with nonzero winding";
    log << '\n';
    return 0;
}

int cmd_build_surface(const RunConfig& c, const CommandOptions& opts, std::ostream& log)
{
    const Construction k =
        c.star ? star_construction(c) : cut_construction(c, opts.at ? *opts.at : c.puncture_or_centroid(), c.allow_open);
    write_construction(c, "build-surface", k, log);
    return 0;
}

int cmd_star(const RunConfig& c, const CommandOptions&, std::ostream& log)
{
    if (!c.star) config_error("star needs polygon.star");
    const Construction k = star_construction(c);
    std::ostringstream mesh;
    mesh << header(c, "star");
    write_mesh(mesh, k.mesh);
    write_atomic(out_file(c, "mesh.txt"), mesh.str());
    write_construction(c, "star", k, log);
    log << "period at the centre: " << fmt("%.3e", k.half.period.head<2>().norm()) << '\n';
    return 0;
}

int cmd_validate(const RunConfig& c, const CommandOptions& opts, std::ostream& log)
{
    // An open surface is reported as a failed check rather than an error.
    const Construction k =
        c.star ? star_construction(c) : cut_construction(c, opts.at ? *opts.at : c.puncture_or_centroid(), true);
    Report checks = construction_report(k.mesh, k.field, k.psi, k.half, k.welded);
    const double open = k.half.period.head<2>().norm() / c.polygon().diameter();
    checks.insert(checks.begin(), Check{"horizontal_period", open, ConjugateOptions{}.period_tol,
                                        open <= ConjugateOptions{}.period_tol});
    std::ostringstream report;
    report << header(c, "validate");
    write_report(report, checks);
    write_atomic(out_file(c, "report.txt"), report.str());
    write_report(log, checks);
    return all_pass(checks) ? 0 : 4;
}

} // namespace rnoid
