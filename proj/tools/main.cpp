#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "domkit/commands.hpp"

int main(int argc, char** argv) {
    using namespace domkit::cli;
    CLI::App app{"Dominance analysis of Lur'e systems"};
    app.require_subcommand(1);
    app.set_version_flag("--version", DOMKIT_VERSION);

    std::string spec_path;
    Options opt;
    std::string out_path;
    double indent = 0.0, tol = 0.0, from = 0.0, to = 0.0;
    int points = 0, steps = 0, p = 0;

    auto common = [&](CLI::App* sub) {
        sub->add_option("spec", spec_path, "System description (JSON)")->required();
        sub->add_option("--out", out_path, "Write the primary output to this path");
        sub->add_option("--indent-radius", indent, "Indent around boundary poles with this radius");
        sub->add_option("--grid-points", points, "Base frequency grid size");
        sub->add_option("--tol", tol, "Boundary tolerance for the shifted imaginary axis");
    };
    auto* analyze = app.add_subcommand("analyze", "Dominance verdict for the loop at the spec's rate");
    auto* nyquist = app.add_subcommand("nyquist", "Shifted Nyquist locus as CSV");
    auto* sim = app.add_subcommand("simulate", "Simulate the closed loop and label the attractor");
    auto* scan = app.add_subcommand("rate-scan", "p-passivity margin over a range of rates");
    for (auto* sub : {analyze, nyquist, sim, scan}) common(sub);
    scan->add_option("--from", from, "Smallest rate");
    scan->add_option("--to", to, "Largest rate");
    scan->add_option("--steps", steps, "Number of rates");
    scan->add_option("--p", p, "Required dominance degree (default: pole split at each rate)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : Exit::input_error;
    }

    auto given = [](CLI::App* sub, const char* name) { return sub->count(name) > 0; };
    CLI::App* active = app.get_subcommands().front();
    if (given(active, "--out")) opt.out = out_path;
    if (given(active, "--indent-radius")) opt.indent_radius = indent;
    if (given(active, "--grid-points")) opt.grid_points = points;
    if (given(active, "--tol")) opt.tol = tol;
    if (active == scan) {
        if (given(scan, "--from")) opt.lambda_from = from;
        if (given(scan, "--to")) opt.lambda_to = to;
        if (given(scan, "--steps")) opt.steps = steps;
        if (given(scan, "--p")) opt.p = p;
    }

    try {
        SystemSpec spec = load_spec(spec_path);
        if (active == analyze) return cmd_analyze(spec, opt, std::cout, std::cerr);
        if (active == nyquist) return cmd_nyquist(spec, opt, std::cout, std::cerr);
        if (active == sim) return cmd_simulate(spec, opt, std::cout, std::cerr);
        return cmd_rate_scan(spec, opt, std::cout, std::cerr);
    } catch (const domkit::Error& e) {
        std::cerr << "domkit: " << e.what() << "\n";
        return e.code() == domkit::ErrorCode::invalid_argument ? Exit::input_error : Exit::inconclusive;
    } catch (const std::exception& e) {
        std::cerr << "domkit: " << e.what() << "\n";
        return Exit::input_error;
    }
}
