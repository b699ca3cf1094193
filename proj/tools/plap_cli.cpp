#include "plap/cli/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    using namespace plap;
    CLI::App app{"Sobolev-quotient verification runner"};
    app.require_subcommand(0, 1);
    std::string config_path, out_dir;
    bool reproducible = false;
    int workers = 1;
    std::optional<double> tol;
    for (const char* name : {"constants", "sweep", "fit", "threshold", "dominance", "fem", "report"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON experiment config");
        sub->add_option("--out", out_dir, "output directory (overrides the config)");
        sub->add_flag("--reproducible", reproducible, "omit timings and host-dependent fields");
        sub->add_option("--workers", workers, "blocks run in parallel")->check(CLI::PositiveNumber);
        sub->add_option("--tol", tol, "relative tolerance of the adaptive quadrature")->check(CLI::PositiveNumber);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n' << cli::usage();
        return 2;
    }
    if (app.get_subcommands().empty() || config_path.empty()) {
        std::cerr << cli::usage();
        return 2;
    }
    const auto cmd = *cli::parse_command(app.get_subcommands().front()->get_name());
    try {
        const auto cfg = cli::load_config(config_path);
        if (cfg.empty()) {
            std::cerr << config_path << ": no blocks to run\n" << cli::usage();
            return 2;
        }
        cli::RunOptions ro;
        ro.out_dir = out_dir;
        ro.reproducible = reproducible;
        ro.workers = workers;
        ro.quadrature_tol = tol;
        const auto res = cli::run(cfg, cmd, ro);
        std::cout << res.summary;
        return res.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
