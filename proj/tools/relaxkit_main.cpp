// relaxkit command-line runner: run / validate / list-presets.

#include <CLI11.hpp>
#include <iostream>

#include "relaxkit/scenario.hpp"

int main(int argc, char** argv) {
    CLI::App app{"relaxed-energy evaluators and recovery-sequence probes"};
    app.require_subcommand(1);

    std::string scenario_file;
    relaxkit::RunOptions opt;
    std::string out_dir = ".";
    int jobs = 1;
    bool svg = false;
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto* run = app.add_subcommand("run", "run a scenario file and write its reports");
    run->add_option("scenario", scenario_file, "scenario document")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--jobs", jobs, "parallelize independent tasks");
    run->add_flag("--svg", svg, "also write an SVG energy trace");
    run->add_option("--seed", seed, "override the scenario seed")->each([&](const std::string&) { seed_set = true; });

    auto* validate = app.add_subcommand("validate", "check a scenario file without running it");
    validate->add_option("scenario", scenario_file, "scenario document")->required();

    auto* list = app.add_subcommand("list-presets", "list available integrand presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            for (const auto& name : relaxkit::preset_names()) std::cout << name << "\n";
            return 0;
        }
        if (validate->parsed()) {
            auto s = relaxkit::parse_scenario(scenario_file);
            auto rep = relaxkit::validate_scenario(s);
            for (const auto& m : rep.messages) std::cout << (rep.ok ? "note: " : "issue: ") << m << "\n";
            std::cout << (rep.ok ? "OK" : "REJECTED") << "\n";
            return rep.ok ? 0 : 2;
        }
        opt.out_dir = out_dir;
        opt.jobs = jobs;
        opt.svg = svg;
        if (seed_set) opt.seed_override = seed;
        return relaxkit::run_scenario(scenario_file, opt, std::cout);
    } catch (const relaxkit::numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
