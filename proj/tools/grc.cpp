// Command-line front end: run one scenario, run the benchmark matrix, or
// sweep the robust term's dead-zone width. See README.md for the config
// schema and artifact formats.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grc/cli.hpp"

namespace {

std::string default_output_dir() {
    if (const char* env = std::getenv("GRC_OUTPUT_DIR")) return env;
    return "grc_out";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GP-based robust learning inverse-dynamics control simulator"};
    app.require_subcommand(0, 1);

    bool print_default = false;
    bool print_default_matrix = false;
    std::optional<std::uint64_t> seed;
    app.add_flag("--print-default-config", print_default,
                 "print the default scenario config and exit");
    app.add_flag("--print-default-matrix-config", print_default_matrix,
                 "print the default benchmark matrix config and exit");
    app.add_option("--seed", seed, "override the config seed");

    std::string run_config;
    std::string run_out = default_output_dir();
    auto* run = app.add_subcommand("run", "simulate one scenario");
    run->add_option("config", run_config, "scenario config (JSON)")->required();
    run->add_option("-o,--output", run_out, "output directory");

    std::string bench_matrix;
    std::string bench_out = default_output_dir();
    int jobs = 0;
    auto* bench = app.add_subcommand("benchmark", "run the uncertainty/variant matrix");
    bench->add_option("matrix", bench_matrix, "matrix config (JSON); built-in when omitted");
    bench->add_option("-o,--output", bench_out, "output directory");
    bench->add_option("--jobs", jobs, "parallel runs (0 = hardware threads)");

    std::string sweep_config;
    std::string sweep_out = default_output_dir();
    std::vector<double> eps;
    auto* sweep = app.add_subcommand("sweep-epsilon", "rerun a scenario over several epsilons");
    sweep->add_option("config", sweep_config, "scenario config (JSON)")->required();
    sweep->add_option("--eps", eps, "epsilon values")->required()->expected(-1);
    sweep->add_option("-o,--output", sweep_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : grc::cli::kExitConfig;
    }

    if (print_default) {
        std::cout << grc::cli::scenario_to_json_text(grc::cli::make_default_scenario());
        return 0;
    }
    if (print_default_matrix) {
        std::cout << grc::cli::matrix_to_json_text(grc::cli::make_default_matrix());
        return 0;
    }

    if (run->parsed()) {
        return grc::cli::cmd_run(run_config, run_out, seed, std::cerr);
    }
    if (bench->parsed()) {
        std::optional<std::string> matrix;
        if (!bench_matrix.empty()) matrix = bench_matrix;
        return grc::cli::cmd_benchmark(matrix, bench_out, jobs, seed, std::cout);
    }
    if (sweep->parsed()) {
        return grc::cli::cmd_sweep_epsilon(sweep_config, eps, sweep_out, seed, std::cout);
    }

    std::cout << app.help();
    return 0;
}
