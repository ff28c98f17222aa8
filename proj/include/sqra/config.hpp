#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqra/physics.hpp"
#include "sqra/solver.hpp"

namespace sqra {

/// Declarative description of a scalar field. `kind` is one of
///   constant            value
///   affine              coeffs = [c0, c1, c2]  (c0 + c1 x1 + c2 x2)
///   box                 lo, hi, inside, outside
///   equilibrium-alpha   1 + exp(-(phi - z)/eps)
///   equilibrium-beta    exp(-(phi - z)/eps)
///   noneq-beta          1/10 + 4/5 (cos^2(3 pi x2 / 2) + (2 x2 - 1) sin(pi x1))
/// The equilibrium kinds depend on phi and eps and are resolved last.
struct FieldSpec {
    std::string kind = "constant";
    double value = 0.0;
    std::vector<double> coeffs;
    Point lo{0.0, 0.0};
    Point hi{0.0, 0.0};
    double inside = 1.0;
    double outside = 0.0;
    double z = 0.5;
};

struct MeshSource {
    enum class Kind { Uniform1d, File };
    Kind kind = Kind::Uniform1d;
    std::size_t cells = 100;
    double a = 0.0;
    double b = 1.0;
    std::filesystem::path path;  ///< resolved to an existing file for Kind::File
};

struct InitialSpec {
    bool equilibrium = false;  ///< rho0 = equilibrium_density(z) instead of `field`
    double z = 0.5;
    FieldSpec field;
};

struct ConvergenceSettings {
    std::vector<std::size_t> cells;
    std::size_t reference_cells = 0;
    std::vector<double> epsilons;
    unsigned threads = 0;  ///< 0 picks the hardware concurrency
};

struct SteadyStateSettings {
    enum class Reference { Equilibrium, Final };
    TimeSchedule schedule;
    Reference reference = Reference::Equilibrium;
    double z = 0.5;
    double fit_begin = 1.0;
    double fit_end = 50.0;
};

/// Fully resolved experiment description.
struct ExperimentConfig {
    std::string preset;
    MeshSource mesh;
    double epsilon = 1.0;
    FieldSpec phi;
    FieldSpec alpha;
    FieldSpec beta;
    InitialSpec initial;
    TimeSchedule schedule;
    NewtonConfig newton;
    std::filesystem::path output_dir = "out";
    std::vector<double> snapshot_times;
    ConvergenceSettings convergence;
    std::optional<SteadyStateSettings> steady_state;

    /// The merged JSON document the fields were read from.
    nlohmann::json document;

    /// 16 hex digits of the FNV-1a hash of the canonical document.
    std::string hash() const;
};

/// Command-line values that take precedence over the config file.
struct Overrides {
    std::optional<std::string> preset;
    std::optional<std::filesystem::path> config_file;
    std::optional<std::filesystem::path> output_dir;
    std::optional<double> epsilon;
    std::optional<double> tau;
    std::optional<double> final_time;
    std::vector<std::size_t> cells;
    std::optional<std::filesystem::path> mesh;
};

/// The subcommand a configuration is loaded for. It decides where --cells
/// and the schedule flags land: `run` takes a single cell count for the 1D
/// mesh, `convergence` a list of coarse cell counts, and `steady-state`
/// applies --tau/--final-time to its own schedule.
enum class Command { Run, Convergence, SteadyState };

std::vector<std::string> preset_names();
/// ConfigError for an unknown name.
nlohmann::json preset_document(const std::string& name);

/// Merges preset, config file and overrides (lowest precedence first), then
/// parses and validates. The environment variable SQRA_OUT_DIR, when set,
/// sits between the file and --out. --tau replaces the step of the first
/// phase and --final-time the end of the last one.
ExperimentConfig load_config(const Overrides& overrides, Command command = Command::Run);

/// Parses a complete document. Relative mesh paths are looked up in
/// `base_dir`, then the current directory, then $SQRA_DATA_DIR, then the
/// data directory shipped with the sources.
ExperimentConfig parse_config(const nlohmann::json& document, const std::filesystem::path& base_dir = {});

/// Finds a data file by the lookup rules of parse_config; IoError if absent.
std::filesystem::path resolve_data_file(const std::filesystem::path& path,
                                        const std::filesystem::path& base_dir = {});

/// FNV-1a 64-bit hash of `text` as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& text);

}  // namespace sqra
