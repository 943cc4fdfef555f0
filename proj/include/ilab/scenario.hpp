#pragma once

// Scenario configuration (strict TOML), dispatch and reproducible emission.
//
// Every run writes its data files plus manifest.json holding the resolved parameters,
// seed, tool version and the SHA-256 of every emitted file. Identical config and seed
// give byte-identical data files.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ilab/kirchhoff.hpp"
#include "ilab/qtm.hpp"

namespace ilab::scenario {

enum class Kind { Fraunhofer, Kirchhoff, Ensemble, QtmPotential, QtmTrajectories, QtmAccumulate };

std::string_view kind_name(Kind kind);
std::optional<Kind> parse_kind(std::string_view name);

struct FraunhoferParams {
    double k = 10.0;
    double a = 1.0;
    double theta_min = -1.0;
    double theta_max = 1.0;
    std::size_t theta_count = 401;
    std::vector<double> alpha;  ///< radians; defaults to {0, pi/6, pi/4, pi/3, pi/2}
};

struct KirchhoffParams {
    double wavelength = 1.0;
    std::vector<kirchhoff::Rect> openings{{0.0, 0.0, 20.0, 20.0}};
    std::optional<double> source_z;  ///< point source at (0, 0, source_z); plane wave when absent
    double alpha = 0.0;
    double distance = 2.0e4;
    double screen_min = -2000.0;
    double screen_max = 2000.0;
    std::size_t screen_count = 401;
    kirchhoff::QuadratureSpec quadrature{};
};

struct EnsembleParams {
    double total_energy = 1.0;
    double potential = 0.0;
    double weight = 1.0;
    double mass = 1.0;
    double hbar = 1.0;
    bool unit_probability = false;
    double r_min = 0.0;
    double r_max = 20.0;
    std::size_t r_count = 401;
};

struct QtmPotentialParams {
    double x_min = -20.0;
    double x_max = 20.0;
    std::size_t x_count = 321;
    double t_min = 0.0;
    std::optional<double> t_max;  ///< defaults to the screen time
    std::size_t t_count = 161;
    qtm::QMethod method = qtm::QMethod::Analytic;
};

struct QtmTrajectoryParams {
    std::size_t count = 61;
    bool random = false;
    std::size_t samples = 400;
    double rel_tol = 1e-9;
};

struct QtmAccumulateParams {
    std::size_t count = 70000;
    std::vector<std::size_t> checkpoints = qtm::default_checkpoints;
    std::size_t bins = 200;
    double rel_tol = 1e-9;
};

using Params = std::variant<FraunhoferParams, KirchhoffParams, EnsembleParams, QtmPotentialParams,
                            QtmTrajectoryParams, QtmAccumulateParams>;

struct OutputSpec {
    std::filesystem::path dir = "out";
    bool csv = true;
    bool pgm = true;
};

struct ScenarioConfig {
    Kind kind = Kind::Fraunhofer;
    std::uint64_t seed = 0;
    OutputSpec output;
    qtm::TwoSlitSetup setup;  ///< used by the qtm-* kinds
    Params params;

    /// Fully resolved parameters, defaults included.
    nlohmann::ordered_json resolved() const;
};

/// Strict parse: unknown keys, wrong types and invalid values raise ConfigError naming the key.
ScenarioConfig parse_config(std::string_view toml_text, Kind kind);
ScenarioConfig parse_config_file(const std::filesystem::path& path, Kind kind);

/// Default configuration for a kind.
ScenarioConfig default_config(Kind kind);

struct RunReport {
    std::vector<std::filesystem::path> files;  ///< data files, manifest excluded
    std::filesystem::path manifest;
    std::vector<std::string> warnings;
    nlohmann::ordered_json diagnostics;
};

/// Validates through the module types, computes, and writes files into config.output.dir.
/// Throws ConfigError / DomainError (bad input) or ConvergenceError / StepUnderflowError (numerics).
RunReport run_scenario(const ScenarioConfig& config, unsigned threads = 0);

/// Recomputes every file hash listed in a manifest; returns the names that do not match.
std::vector<std::string> verify_manifest(const std::filesystem::path& manifest);

/// `ilab <scenario> --config <path> [--out <dir>] [--seed <u64>] [--threads <n>]`.
/// Exit 0 on success, 1 on configuration errors, 2 on numerical non-convergence.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ilab::scenario
