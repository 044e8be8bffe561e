#pragma once

// Repeated train/holdout runs over a feature matrix, and the flip test.

#include "gazeclass/dataset.hpp"
#include "gazeclass/ensemble.hpp"
#include "gazeclass/eval.hpp"
#include "gazeclass/featurize.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gazeclass {

enum class SplitMode { Participant, Row };

struct ExperimentConfig {
    std::size_t runs = 1000;
    SplitSizes split;
    SplitMode mode = SplitMode::Participant;
    double row_holdout_fraction = 0.2;  // Row mode only
    EnsembleConfig ensemble;
    std::size_t jobs = 1;
};

// Rows of the listed classes only; standardization is refit.
FeatureMatrix restrict_classes(const FeatureMatrix& matrix, std::span<const Expertise> classes);

// Fits standardization on `train`, trains the ensemble on the selected
// columns with `labels` (one per matrix row) and predicts `holdout`.
std::vector<Expertise> train_and_predict(const FeatureMatrix& matrix, std::span<const Expertise> labels,
                                         std::span<const std::size_t> train, std::span<const std::size_t> holdout,
                                         std::span<const std::size_t> columns, const EnsembleConfig& config,
                                         std::uint64_t seed);

struct RunRecord {
    std::size_t run = 0;
    std::uint64_t seed = 0;
    std::size_t train_rows = 0;
    std::size_t holdout_rows = 0;
    ScoreReport score;
};

struct ExperimentResult {
    std::vector<RunRecord> runs;
    RunDistribution accuracy;
    RunDistribution macro_miss_rate;
    ConfusionMatrix pooled;  // summed over runs
};

// Run r uses derive_seed(seed, r); results do not depend on `jobs`.
ExperimentResult run_experiment(const FeatureMatrix& matrix, std::span<const std::size_t> columns,
                                const ExperimentConfig& config, std::uint64_t seed);

struct FlipTestConfig {
    std::size_t iterations = 100;
    std::size_t holdout_per_group = 2;
    EnsembleConfig ensemble;
    std::size_t jobs = 1;
};

struct FlipTestResult {
    RunDistribution flipped;                 // experts vs relabeled experts
    std::optional<RunDistribution> reference; // experts vs intermediates, when present
    std::size_t experts = 0;
    std::size_t flipped_per_iteration = 0;
    std::vector<std::string> warnings;
};

// Each iteration relabels a random floor(n/2) of the expert participants
// as intermediates, holds out `holdout_per_group` participants per group
// and records binary holdout accuracy. Needs at least four experts.
FlipTestResult flip_test(const FeatureMatrix& matrix, std::span<const std::size_t> columns,
                         const FlipTestConfig& config, std::uint64_t seed);

nlohmann::json to_json(const ExperimentResult& r);
nlohmann::json to_json(const FlipTestResult& r);

// One line per run: run,seed,train_rows,holdout_rows,accuracy,macro_miss_rate,miss_<class>...
void write_runs_csv(std::ostream& out, const std::string& label, const ExperimentResult& r, bool header);

}  // namespace gazeclass
