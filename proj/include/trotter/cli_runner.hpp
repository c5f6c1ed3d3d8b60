#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "trotter/chain_model.hpp"
#include "trotter/rabi_experiment.hpp"
#include "trotter/trotter_engine.hpp"

namespace trotter {

// Exit status 1.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Exit status 2.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const std::vector<std::string>& known_commands();
std::string code_version();

struct PotentialConfig {
    std::string kind = "cosine";
    double P = 1.25;
    double alpha = 0.0;
    double w = 8.0;
    double dn = 0.0;
    double tilt_length = 0.0;
    std::vector<double> values;
    std::string file;  // one h_n per line; used by kind = custom when values is empty
};

struct ChainConfig {
    int L = 50;
    double J = 1.0;
    double a = 1.0;
    PotentialConfig potential;
};

struct PlanConfig {
    double dt = 0.1;
    std::string ordering = "even-odd-potential";
    double split_alpha = 0.5;
};

struct ExperimentSection {
    double P = 1.25;
    double w = 8.0;
    double dn = 0.0;
    double alpha = 0.0;
    double tilt_length = 0.0;
    int doublet_index = 10;
    double noise_level = 0.1;
    long M = 60000;
    long dM = 200;
    std::vector<double> dt_grid{0.5, 1.0, 1.5, 2.0, 2.4976};
    bool tune_alpha = false;
    double alpha_lo = -0.1;
    double alpha_hi = 0.1;
};

struct SemiclassicsSection {
    std::string kinetic = "bare";
    std::string boundary = "two_turning_points";
    double x_bottom = 0.0;          // 0: site of the global minimum of h
    double partner_x_bottom = 0.0;  // 0: no partner well
    double e_min = std::numeric_limits<double>::quiet_NaN();
    double e_max = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> energies;  // portrait energies
    int samples = 2000;
};

struct DefectSection {
    std::vector<int> levels{10};
    std::vector<double> dt_values{0.05, 0.1, 0.2, 0.3};
};

struct OverlapSection {
    double h_ref = 0.0;
};

struct NoiseSection {
    double dt = 0.5;
    double phase_sigma = 0.0;
    int trials = 20;
};

struct RunConfig {
    std::string command = "spectrum";
    std::string output_dir = "out";
    std::uint64_t seed = 1;
    int workers = 0;
    std::string operator_format = "text";  // text | binary
    ChainConfig chain;
    PlanConfig plan;
    ExperimentSection experiment;
    SemiclassicsSection semiclassics;
    DefectSection defect;
    OverlapSection overlap;
    NoiseSection noise;

    ChainSpec chain_spec() const;
    TrotterPlan trotter_plan() const;
    ExperimentConfig experiment_config() const;
};

// Strict: unknown keys or wrong types raise ConfigError naming the field.
RunConfig parse_config(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);

// "a.b.c=value"; the value is read as JSON when it parses, otherwise as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

struct Diagnostics {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    std::vector<std::string> advisories;
    bool ok() const { return errors.empty(); }
};

Diagnostics validate(const RunConfig& c);

struct RunResult {
    int exit_code = 0;
    std::string output_dir;
    std::vector<std::string> artifacts;
    std::vector<std::string> warnings;
};

// Runs the command and writes the artifact directory including manifest.json.
// Throws ConfigError or NumericalError.
RunResult run(const RunConfig& c);

struct CliOptions {
    std::string command;
    std::string config_path;  // empty: defaults only
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> out_dir;
};

// Full front end used by the executable: load, override, run. Returns the exit code
// and prints diagnostics to stderr.
int run_cli(const CliOptions& options);

}  // namespace trotter
