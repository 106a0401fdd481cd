#include "rnoid/app.hpp"
#include "rnoid/errors.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <map>

namespace {

using Command = std::function<int(const rnoid::RunConfig&, const rnoid::CommandOptions&, std::ostream&)>;

std::optional<rnoid::Point> parse_at(const std::string& text)
{
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw rnoid::app_errors::ConfigError("--at expects x,y");
    try {
        std::size_t nx = 0, ny = 0;
        const std::string xs = text.substr(0, comma), ys = text.substr(comma + 1);
        const double x = std::stod(xs, &nx), y = std::stod(ys, &ny);
        if (nx != xs.size() || ny != ys.size()) throw std::invalid_argument(text);
        return rnoid::Point(x, y);
    } catch (const std::logic_error&) {
        throw rnoid::app_errors::ConfigError("--at expects x,y, got " + text);
    }
}

} // namespace

int main(int argc, char** argv)
{
    const std::map<std::string, std::pair<Command, std::string>> commands = {
        {"mesh", {rnoid::cmd_mesh, "triangulate the cut domain"}},
        {"solve", {rnoid::cmd_solve, "solve the minimal surface equation on it"}},
        {"per-field", {rnoid::cmd_per_field, "sample the period map on a grid of punctures"}},
        {"degree", {rnoid::cmd_degree, "winding number of the period map near the boundary"}},
        {"find-zero", {rnoid::cmd_find_zero, "locate a puncture with vanishing period"}},
        {"build-surface", {rnoid::cmd_build_surface, "conjugate surface and its checks"}},
        {"star", {rnoid::cmd_star, "symmetric surface of a star polygon"}},
        {"validate", {rnoid::cmd_validate, "run the checks; exit 4 if any fails"}},
    };

    CLI::App app{"Minimal surfaces with planar ends over a flux polygon"};
    app.require_subcommand(1);
    std::string config_path, out_dir, at;
    int jobs = 1;
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, entry] : commands) {
        CLI::App* sub = app.add_subcommand(name, entry.second);
        sub->add_option("--config", config_path, "JSON config (comments allowed)")->required();
        sub->add_option("--out", out_dir, "output directory, overrides output.dir");
        sub->add_option("--jobs", jobs, "worker threads for period evaluations")->check(CLI::Range(1, 256));
        sub->add_option("--at", at, "puncture x,y, overrides the config");
        subs[name] = sub;
    }
    CLI11_PARSE(app, argc, argv);

    try {
        rnoid::RunConfig config = rnoid::load_config(config_path);
        if (!out_dir.empty()) config.out_dir = out_dir;
        rnoid::CommandOptions opts;
        opts.jobs = jobs;
        if (!at.empty()) opts.at = parse_at(at);
        for (const auto& [name, sub] : subs)
            if (sub->parsed()) return commands.at(name).first(config, opts, std::cout);
    } catch (const rnoid::app_errors::ConfigError& e) {
        std::cerr << "error: " << e.code() << ": " << e.what() << '\n';
        return 2;
    } catch (const rnoid::Error& e) {
        std::cerr << "error: " << e.code() << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
