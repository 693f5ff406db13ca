#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hypolab/cli/config.hpp"
#include "hypolab/cli/experiment.hpp"
#include "hypolab/cli/report.hpp"

namespace cli = hypolab::cli;

int main(int argc, char** argv) {
    CLI::App app{"hypolab: hypocoercive decay lab for underdamped Langevin dynamics"};
    app.require_subcommand(1, 1);

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<double> gamma, eps;
    std::optional<int> nx, nv;

    for (const char* name : {"gap", "tune", "verify", "evolve", "sample", "sweep", "all"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "key = value configuration file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
        sub->add_option("--seed", seed, "top-level random seed");
        sub->add_option("--gamma", gamma, "friction override");
        sub->add_option("--eps", eps, "corrector weight override");
        sub->add_option("--nx", nx, "position grid size");
        sub->add_option("--nv", nv, "number of Hermite modes");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cli::exit_ok : cli::exit_config;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    cli::RunReport report;
    try {
        cli::ExperimentConfig cfg = cli::load_config(config_path);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (seed) cfg.seed = *seed;
        if (gamma) cfg.gamma = *gamma;
        if (eps) cfg.eps = *eps;
        if (nx) cfg.N_x = *nx;
        if (nv) cfg.N_v = *nv;
        cli::validate(cfg);
        report = cli::run_experiment(cli::parse_command(command), cfg);
    } catch (const hypolab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return cli::exit_config;
    } catch (const hypolab::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return cli::exit_io;
    } catch (const hypolab::Error& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return cli::exit_numerical;
    }

    try {
        cli::emit_report(report, report.config.output_dir);
    } catch (const hypolab::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return cli::exit_io;
    }

    for (const auto& v : report.verdicts) std::cout << cli::to_string(v.status) << "  " << v.name << '\n';
    std::cout << "report: " << report.config.output_dir << "/report.json\n";
    if (report.numerical_failure) {
        std::cerr << "numerical error: " << *report.numerical_failure << '\n';
        return cli::exit_numerical;
    }
    return report.any_failed() ? cli::exit_verdict_failed : cli::exit_ok;
}
