#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tiebreak/io.hpp"

namespace {

struct CommonArgs {
    std::string config;
    std::string data;
    std::string out = ".";
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_data) {
    cmd->add_option("--config", args.config, "JSON run configuration")
        ->required()
        ->check(CLI::ExistingFile);
    auto* data = cmd->add_option("--data", args.data, "input CSV (header id,x1,...,xd)");
    if (needs_data) data->check(CLI::ExistingFile);
    cmd->add_option("--out", args.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Treatment-probability design for multivariate tie-breaker experiments"};
    app.require_subcommand(1);

    CommonArgs solve_args, curve_args, assign_args, simulate_args;
    auto* solve_cmd = app.add_subcommand("solve", "optimize treatment probabilities");
    auto* curve_cmd = app.add_subcommand("curve", "efficiency/gain tradeoff sweep");
    auto* assign_cmd = app.add_subcommand("assign", "realize treatment assignments");
    auto* simulate_cmd = app.add_subcommand("simulate", "synthetic data pipeline");
    add_common(solve_cmd, solve_args, true);
    add_common(curve_cmd, curve_args, true);
    add_common(assign_cmd, assign_args, false);
    add_common(simulate_cmd, simulate_args, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve_cmd->parsed()) {
            if (solve_args.data.empty()) throw tiebreak::ConfigError("solve requires --data");
            const auto cfg = tiebreak::io::load_config(solve_args.config);
            const auto data = tiebreak::io::ingest(solve_args.data);
            return tiebreak::io::cmd_solve(cfg, data, solve_args.out);
        }
        if (curve_cmd->parsed()) {
            if (curve_args.data.empty()) throw tiebreak::ConfigError("curve requires --data");
            const auto cfg = tiebreak::io::load_config(curve_args.config);
            const auto data = tiebreak::io::ingest(curve_args.data);
            return tiebreak::io::cmd_curve(cfg, data, curve_args.out);
        }
        if (assign_cmd->parsed()) {
            const auto cfg = tiebreak::io::load_config(assign_args.config);
            tiebreak::io::Dataset data;
            if (!assign_args.data.empty()) data = tiebreak::io::ingest(assign_args.data);
            return tiebreak::io::cmd_assign(cfg, data, assign_args.out);
        }
        const auto cfg = tiebreak::io::load_config(simulate_args.config);
        return tiebreak::io::cmd_simulate(cfg, simulate_args.out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
