#pragma once

#include "cawi/copula.hpp"
#include "cawi/dataset.hpp"
#include "cawi/init.hpp"
#include "cawi/io.hpp"
#include "cawi/rdnn.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cawi {

std::vector<double> default_lambda_grid();       // 10^-6 .. 10^6
std::vector<std::size_t> default_node_grid();    // 3, 23, ..., 203
std::vector<ActivationKind> all_activations();
std::vector<CopulaFamily> all_families();        // iid first, then the five copulas

struct GridSpec {
    std::vector<double> lambdas = default_lambda_grid();
    std::vector<std::size_t> node_counts = default_node_grid();
    std::vector<ActivationKind> activations = all_activations();
    std::vector<CopulaFamily> families = all_families();

    std::size_t points() const { return lambdas.size() * node_counts.size() * activations.size(); }
};

/// Rejects empty lists and non-positive entries; puts iid first if missing.
void normalize(GridSpec& grid);

struct GridPoint {
    double lambda = 1.0;
    std::size_t nodes = 0;
    ActivationKind activation = ActivationKind::sigmoid;
};

/// Enumeration order: lambda outer, nodes middle, activation inner.
GridPoint grid_point(const GridSpec& grid, std::size_t index);
std::size_t grid_index(const GridSpec& grid, std::size_t lambda_i, std::size_t node_i,
                       std::size_t act_i);

struct EvalOptions {
    ArchSpec arch;                 // kind and fixed shape; grid sets width/activation/lambda
    std::size_t drvfl_layers = 3;
    std::size_t k = 5;
    std::uint64_t seed = 42;
    MarginalKind marginal = MarginalKind::uniform_pm1;
    std::size_t m_cap = kDefaultMCap;
    CopulaFitOptions fit;
    StdDenominator std_denominator = StdDenominator::population;
    bool cawi_all_layers = false;
    std::size_t threads = 1;
};

/// Architecture used at one grid point (node count drives h, every dRVFL
/// layer width, or the BLS enhancement window size r).
ArchSpec arch_at(const EvalOptions& opts, const GridPoint& point);

/// Samples every random layer for `arch`. The first layer (every BLS feature
/// window) uses `model`; deeper layers are i.i.d. unless `all_layers` is set,
/// in which case a fresh copula of the same family is fitted to the previous
/// layer's training output.
std::vector<WeightInit> sample_arch_inits(const ArchSpec& arch, const CopulaModel& model,
                                          const Matrix& X_train, MarginalKind marginal,
                                          bool all_layers, std::size_t m_cap,
                                          const CopulaFitOptions& fit, RngStream stream);

struct FoldFit {
    ScalerParams scaler;
    CopulaModel model;
};

/// Standardizer and copula for one fold, computed from the training rows only.
FoldFit fit_fold(const Dataset& data, const FoldSplit& fold, CopulaFamily family,
                 const EvalOptions& opts);

struct FamilyResult {
    CopulaFamily family = CopulaFamily::independence;
    double mean_accuracy = 0.0;              // percent, mean over folds at the best point
    GridPoint best;
    std::size_t best_grid_index = 0;
    std::vector<double> fold_accuracies;     // percent, at the best point
    std::vector<std::string> failures;       // grid points skipped after an error
    bool clamped = false;
    bool subsampled = false;
    std::vector<FitDiagnostics> fold_diagnostics;
    double mean_train_time = 0.0;            // seconds per (fold, grid point); not deterministic
};

struct EvalReport {
    std::string dataset;
    ArchKind arch = ArchKind::rvfl;
    std::uint64_t seed = 0;
    std::size_t k = 0;
    std::size_t m = 0;
    std::size_t d = 0;
    int n_class = 0;
    bool undersized_class = false;
    GridSpec grid;
    std::vector<FamilyResult> families;
    CopulaFamily best_family = CopulaFamily::independence;
    double improvement = 0.0;   // best non-iid accuracy minus iid accuracy, percent

    const FamilyResult* find(CopulaFamily family) const;
};

/// Cross-validated grid search for one family.
FamilyResult run_cv_family(const Dataset& data, const std::vector<FoldSplit>& folds,
                           CopulaFamily family, const GridSpec& grid, const EvalOptions& opts);

/// Every family in grid.families over the same folds.
EvalReport run_cv(const Dataset& data, const GridSpec& grid, const EvalOptions& opts);

struct SeedSummaryRow {
    CopulaFamily family;
    double mean = 0.0;
    double sd = 0.0;   // sample standard deviation over seeds
};

struct MultiSeedResult {
    std::vector<EvalReport> reports;
    std::vector<SeedSummaryRow> summary;
};

/// Per-family mean and sample sd of mean_accuracy across reports (same families in each).
std::vector<SeedSummaryRow> seed_summary(std::span<const EvalReport> reports);

MultiSeedResult multi_seed(const Dataset& data, std::span<const std::uint64_t> seeds,
                           const GridSpec& grid, EvalOptions opts);

// Significance --------------------------------------------------------------

enum class Alternative { greater, less, two_sided };

struct WilcoxonResult {
    double w_plus = 0.0;
    std::size_t n_effective = 0;
    double p_value = 1.0;
    bool exact = false;
};

enum class WilcoxonMethod { automatic, exact, normal };

/// Signed-rank test on paired differences; zeros dropped, tied |d| get
/// midranks. `automatic` enumerates exactly for n <= 12 and otherwise uses
/// the normal approximation with tie and continuity corrections. Forcing
/// `exact` is limited to n <= 24.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> diffs,
                                    Alternative alternative = Alternative::greater,
                                    WilcoxonMethod method = WilcoxonMethod::automatic);

// Timing --------------------------------------------------------------------

struct TimingResult {
    CopulaFamily family;
    std::vector<double> seconds;  // timed repetitions (warm-up excluded)
    double mean = 0.0;
    double sd = 0.0;
};

/// Wall-clock of copula fit + weight sampling + training on the whole
/// (standardized) dataset at the architecture in opts.arch. One warm-up run
/// precedes `reps` timed runs.
std::vector<TimingResult> measure_timing(const Dataset& data, std::span<const CopulaFamily> families,
                                         std::size_t reps, const EvalOptions& opts);

// Reports -------------------------------------------------------------------

inline constexpr const char* kReportSchema = "cawi-report/1";

/// Deterministic JSON (no wall-clock values).
Json report_to_json(const EvalReport& report);
EvalReport report_from_json(const Json& j);
Json multi_seed_to_json(const MultiSeedResult& result);

std::string report_csv_header();
/// One row per family.
std::string report_csv_rows(const EvalReport& report);

/// Accuracy table: one row per report, family columns, improvement last.
std::string format_table(std::span<const EvalReport> reports);

std::string format_percent(double value);          // 4 decimals
std::string format_signed_percent(double value);   // +0.4762

// Synthetic data --------------------------------------------------------------

/// Classification set whose features carry the dependence of `model`
/// (normal marginals). Labels come from a noisy nonlinear score cut into
/// n_class equal-frequency bins.
Dataset synthetic_dataset(const CopulaModel& model, std::size_t m, int n_class,
                          std::uint64_t seed, const std::string& name);

}  // namespace cawi
