#include <cstdint>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "trotter/cli_runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Trotter error and tunneling toolkit"};
    trotter::CliOptions opt;
    std::uint64_t seed = 0;
    int workers = 0;
    std::string out;

    app.add_option("command", opt.command, "Command to run")
        ->required()
        ->check(CLI::IsMember(trotter::known_commands()));
    app.add_option("--config", opt.config_path, "JSON run configuration (or a manifest.json to re-run)")
        ->check(CLI::ExistingFile);
    app.add_option("--set", opt.overrides, "Override a field, e.g. --set plan.dt=0.2 (repeatable)");
    auto* seed_opt = app.add_option("--seed", seed, "RNG seed");
    auto* workers_opt = app.add_option("--workers", workers, "Worker threads for sweeps (0: all cores)")
                            ->check(CLI::NonNegativeNumber);
    auto* out_opt = app.add_option("--out", out, "Output directory");
    app.set_version_flag("--version", trotter::code_version());

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    if (*seed_opt) opt.seed = seed;
    if (*workers_opt) opt.workers = workers;
    if (*out_opt) opt.out_dir = out;
    return trotter::run_cli(opt);
}
