#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "a2p/config.hpp"
#include "a2p/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"two-particle random operator laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::string run_dir;
    std::uint64_t seed_override = 0;
    int workers_override = -1;

    CLI::App* run = app.add_subcommand(
        "run", "execute an experiment config and write its run directory");
    run->add_option("config", config_path, "experiment config file")
        ->required()
        ->check(CLI::ExistingFile);
    CLI::Option* seed_opt =
        run->add_option("--seed", seed_override, "override the master seed");
    run->add_option("--workers", workers_override,
                    "override the worker count (0 picks the hardware count)");
    run->add_option("--out", out_override, "override the output directory");

    CLI::App* validate =
        app.add_subcommand("validate", "check a config without running anything");
    validate->add_option("config", config_path, "experiment config file")
        ->required()
        ->check(CLI::ExistingFile);

    CLI::App* report =
        app.add_subcommand("report", "re-render the report of a finished run");
    report->add_option("dir", run_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(run)) {
            a2p::Config c = a2p::Config::parse_file(config_path);
            if (seed_opt->count() > 0) c.set("seed", std::to_string(seed_override));
            if (workers_override >= 0)
                c.set("workers", std::to_string(workers_override));
            if (!out_override.empty()) c.set("out", out_override);
            const a2p::ExperimentConfig e = a2p::experiment_from(c);
            a2p::run_experiment(e);
            std::cout << "wrote " << e.out_dir << " (config " << e.config_hash
                      << ")\n";
        } else if (app.got_subcommand(validate)) {
            const a2p::ExperimentConfig e = a2p::load_experiment(config_path);
            std::cout << "ok: kind " << e.kind << ", config " << e.config_hash
                      << ", out " << e.out_dir << "\n";
        } else {
            std::cout << a2p::render_report(run_dir);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
