#include <CLI11.hpp>
#include <iostream>

#include "vexflow/scenario.hpp"

int main(int argc, char** argv) {
    CLI::App app{"vexflow: variable-exponent incompressible flow laboratory"};
    app.require_subcommand(1);

    std::string config_path, output_dir;
    long long seed = -1;
    int threads = 1;

    CLI::App* run = app.add_subcommand("run", "run a scenario and write reports");
    run->add_option("config", config_path, "scenario config (JSON)")->required();
    run->add_option("--output", output_dir, "output directory override");
    run->add_option("--seed", seed, "seed override");
    run->add_option("--threads", threads, "worker threads for convolutions");

    CLI::App* verify = app.add_subcommand("verify", "validate a scenario without stepping");
    verify->add_option("config", config_path, "scenario config (JSON)")->required();
    verify->add_option("--seed", seed, "seed override");

    CLI11_PARSE(app, argc, argv);

    try {
        vexflow::Scenario sc = vexflow::load_scenario(config_path);
        if (seed >= 0) sc.seed = static_cast<std::uint64_t>(seed);
        if (!output_dir.empty()) sc.output_dir = output_dir;
        if (threads > 0) sc.threads = threads;

        if (app.got_subcommand(verify)) {
            vexflow::VerifyReport rep = vexflow::verify_scenario(sc);
            std::cout << rep.text();
            return rep.pass ? 0 : 2;
        }
        int rc = vexflow::run_scenario(sc);
        std::cout << (rc == 0 ? "PASS" : "FAIL") << " " << sc.name << " -> " << sc.output_dir
                  << "\n";
        return rc;
    } catch (const vexflow::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return 1;
    }
}
