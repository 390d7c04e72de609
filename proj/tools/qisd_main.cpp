#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qisd/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Stochastic open-system dynamics: Langevin ensembles, phase-space "
                 "propagation, path weights, and influence-kernel construction"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed_override;
    int threads = 1;

    app.add_option("--config", config_path, "configuration file")->required();
    app.add_option("--seed", seed_override, "override the config seed");
    app.add_option("--threads", threads, "worker threads for ensembles")
        ->check(CLI::PositiveNumber);
    app.add_option("--out", out_dir, "output directory");

    for (const char* name : {"simulate", "wigner", "action", "inverse", "validate"})
        app.add_subcommand(name);

    CLI11_PARSE(app, argc, argv);
    const std::string subcommand = app.get_subcommands().front()->get_name();

    try {
        qisd::Config cfg = qisd::Config::parse_file(config_path);
        if (seed_override) cfg.set("seed", std::to_string(*seed_override));
        if (!cfg.has("seed"))
            throw qisd::ConfigError("seed is required (config key 'seed' or --seed)");
        qisd::RunContext ctx;
        ctx.out_dir = out_dir;
        ctx.threads = threads;
        return qisd::run_subcommand(subcommand, cfg, ctx);
    } catch (const qisd::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return qisd::exit_code_for(e.category());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
