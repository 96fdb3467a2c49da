#pragma once

#include "cawi/eval.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cawi::cli {

/// Everything a run needs. Built from an optional JSON config file, then
/// overridden by command-line flags.
struct RunConfig {
    std::vector<std::string> data;
    std::string label_col;               // name, zero-based index, or empty for the last column
    ArchKind arch = ArchKind::rvfl;
    std::size_t drvfl_layers = 3;
    BlsShape bls;
    std::vector<CopulaFamily> families = all_families();
    MarginalKind marginal = MarginalKind::uniform_pm1;
    std::size_t k = 5;
    std::vector<std::uint64_t> seeds{42};
    std::size_t m_cap = kDefaultMCap;
    std::vector<double> lambda_grid = default_lambda_grid();
    std::vector<std::size_t> nodes_grid = default_node_grid();
    std::vector<ActivationKind> activations = all_activations();
    std::filesystem::path out = "cawi_out";
    std::size_t threads = 1;
    bool all_layers = false;
    StdDenominator std_denominator = StdDenominator::population;
};

/// Throws std::invalid_argument on unknown keys or bad values.
void apply_config_json(RunConfig& cfg, const Json& j);
Json config_to_json(const RunConfig& cfg);
/// Checks the grid and architecture invariants before any work starts.
void validate(RunConfig& cfg);

GridSpec grid_of(const RunConfig& cfg);
EvalOptions options_of(const RunConfig& cfg, std::uint64_t seed);

std::string version_string();

/// Entry point shared by the executable and the tests. Returns the exit code:
/// 0 success, 1 runtime failure, 2 usage or validation error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cawi::cli
