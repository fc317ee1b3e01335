// euler-lab: runs one experiment scenario from a config file.
//
//   euler-lab <scenario> --config <path> [--output <dir>] [--threads N]
//
// Exit codes: 0 success, 2 usage or config error, 3 numerical abort.

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "eulerlab/expcli/scenarios.hpp"

int main(int argc, char** argv)
{
    using namespace eulerlab;
    using namespace eulerlab::expcli;

    CLI::App app{"Lagrangian vortex-particle lab for axisymmetric Euler flow without swirl"};
    std::string scenario_name, config_path, output;
    int threads = -1;
    std::string names;
    for (const auto& [name, sc] : scenario_names())
        names += (names.empty() ? "" : ", ") + name;
    app.add_option("scenario", scenario_name, "one of: " + names)->required();
    app.add_option("--config", config_path, "config file (flat key = value)")->required()->check(CLI::ExistingFile);
    app.add_option("--output", output, "output directory (overrides output_dir)");
    app.add_option("--threads", threads, "worker threads, 0 = hardware")->check(CLI::NonNegativeNumber);
    app.set_version_flag("--version", version);
    CLI11_PARSE(app, argc, argv);

    try {
        const Scenario sc = parse_scenario(scenario_name);
        auto cfg = ExperimentConfig::from(KeyValueFile::load(config_path), sc);
        if (!output.empty())
            cfg.output_dir = output;
        if (threads >= 0)
            cfg.kernel.threads = threads;
        const auto summary = run_scenario(cfg, cfg.output_dir);
        std::cout << to_string(sc) << ": wrote " << cfg.output_dir << " in " << summary["wall_seconds"].get<double>()
                  << " s\n";
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalAbort& e) {
        std::cerr << "numerical abort: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
