#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ndtx/dataset.hpp"
#include "ndtx/metrics.hpp"
#include "ndtx/mlp.hpp"
#include "ndtx/train.hpp"
#include "ndtx/tree.hpp"

namespace ndtx {

/// {9000, 8000, ..., 1000, 900, ..., 100, 90, ..., 10, 9, ..., 1}: 36 values.
std::vector<double> default_gamma_grid();

/// Throws ConfigError unless the grid is non-empty, positive and strictly decreasing.
void validate_gamma_grid(const std::vector<double>& grid);

enum class Diagnosis { relaxation_beneficial, rigid_sufficient, rigid_but_sensitive, inconclusive };

const char* diagnosis_name(Diagnosis d);

struct InterpretThresholds {
    double delta_gain = 0.01;          // minimal mean accuracy gain that counts
    double kappa_high = 0.8;           // agreement above which the NDT is "still a tree"
    double kappa_monotone_tol = 0.02;  // slack when testing that agreement only falls as gamma drops
};

struct ExploreConfig {
    std::optional<int> depth;  // nullopt: pick by cross-validation
    std::vector<int> depth_grid{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    int cv_folds = 5;
    int min_leaf = 1;
    std::vector<double> grid = default_gamma_grid();
    std::size_t n_reps = 30;
    TrainConfig train;
    SplitFractions fractions;
    std::uint64_t master_seed = 0;
    InterpretThresholds thresholds;
    double alpha = 0.05;
    bool nn_baseline = false;
    // Parallel width only; results do not depend on it.
    std::size_t workers = 1;
};

struct RunRecord {
    std::size_t repetition = 0;
    double gamma = 0.0;
    double gamma2 = 0.0;
    double dt_accuracy = 0.0;
    double ndt_accuracy = 0.0;
    double kappa = 0.0;
    bool kappa_degenerate = false;
    int best_epoch = 0;
    int stopped_epoch = 0;
    double best_valid_loss = 0.0;
    std::uint64_t train_seed = 0;
};

struct RepetitionSummary {
    std::size_t repetition = 0;
    std::uint64_t split_seed = 0;
    bool degenerate = false;  // single-leaf seed tree; no NDT runs
    double dt_accuracy = 0.0;
    std::size_t leaves = 0;
    int depth = 0;
};

struct GammaSummary {
    double gamma = 0.0;
    double gamma2 = 0.0;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;
    double mean_kappa = 0.0;
    double std_kappa = 0.0;
    std::size_t n = 0;
};

struct TestOutcome {
    std::string comparison;
    bool degenerate = false;  // every pair identical
    WilcoxonResult test;
    bool reject = false;
};

struct SignificanceReport {
    double alpha = 0.05;
    std::vector<TestOutcome> tests;
};

struct ArchitectureScore {
    MlpArchitecture arch;
    double mean_valid_accuracy = 0.0;
    double mean_test_accuracy = 0.0;
};

struct NnBaselineResult {
    std::vector<ArchitectureScore> scores;  // one per grid configuration
    MlpArchitecture best;
    double mean_test_accuracy = 0.0;
    std::vector<std::size_t> repetitions;
    std::vector<double> test_accuracy;      // best architecture, per repetition
};

struct ExplorationResult {
    ExploreConfig config;
    int depth = 0;
    std::optional<DepthSelection> depth_selection;
    std::vector<RepetitionSummary> repetitions;
    std::vector<RunRecord> records;  // repetition-major, grid order within a repetition
    std::vector<GammaSummary> per_gamma;
    double mean_dt_accuracy = 0.0;
    std::size_t degenerate_repetitions = 0;
    double gamma_star = 0.0;
    Diagnosis diagnosis = Diagnosis::inconclusive;
    SignificanceReport significance;
    std::optional<NnBaselineResult> nn;

    std::size_t usable_repetitions() const { return repetitions.size() - degenerate_repetitions; }
    const GammaSummary& summary_at(double gamma) const;
};

/// The gamma sweep over repeated stratified resamples, then aggregation, gamma*,
/// significance tests, diagnosis and (optionally) the NN baseline.
ExplorationResult run_exploration(const Dataset& d, const ExploreConfig& cfg);

/// Per-gamma means and sample standard deviations over the usable repetitions.
std::vector<GammaSummary> aggregate(const std::vector<RunRecord>& records, const std::vector<double>& grid);

/// Grid value with the highest mean NDT accuracy; ties go to the larger gamma.
double select_gamma_star(const ExplorationResult& r);

/// Wilcoxon tests on per-repetition accuracies: NDT(gamma*) vs DT, and when the
/// baseline ran, NDT vs NN and NN vs DT.
SignificanceReport significance_report(const ExplorationResult& r);

Diagnosis interpret(const ExplorationResult& r, const InterpretThresholds& th = {});

/// 3 depths x 6 widths x 2 activations.
std::vector<MlpArchitecture> nn_architecture_grid();

/// Trains every grid architecture on each repetition's split (same splits as the
/// exploration), picks the best mean validation accuracy, reports its test accuracy.
NnBaselineResult nn_baseline_cv(const Dataset& d, const TrainConfig& cfg, std::size_t n_reps,
                                std::uint64_t master_seed, std::size_t workers = 1,
                                const SplitFractions& fractions = {});

/// Artifacts. `run_config_json` is embedded verbatim (a JSON object) in every file.
std::string result_to_json(const ExplorationResult& r, const std::string& run_config_json);
std::string accuracy_series_csv(const ExplorationResult& r, const std::string& run_config_json);
std::string kappa_series_csv(const ExplorationResult& r, const std::string& run_config_json);
std::string report_text(const ExplorationResult& r, const std::string& run_config_json);

/// Writes result.json, accuracy_vs_gamma.csv, kappa_vs_gamma.csv and report.txt into
/// `out_dir` (created if needed). On failure every file written so far is removed.
void write_artifacts(const ExplorationResult& r, const std::string& run_config_json,
                     const std::string& out_dir);

}  // namespace ndtx
