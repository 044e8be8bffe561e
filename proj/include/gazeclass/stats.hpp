#pragma once

// Mann-Whitney U test and the two feature-selection criteria built on
// top of it (significance filter, most-frequent features).

#include "gazeclass/dataset.hpp"
#include "gazeclass/ensemble.hpp"
#include "gazeclass/featurize.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gazeclass {

enum class UTestMethod { Exact, NormalApprox };

struct UTestResult {
    double u_statistic = 0.0;  // U of the first sample
    double p_value = 1.0;      // two-sided
    UTestMethod method = UTestMethod::Exact;
};

// Exact null distribution (ties handled through midranks) when both
// samples have at most 12 values, otherwise the normal approximation with
// tie and continuity correction.
UTestResult mann_whitney_u(std::span<const double> xs, std::span<const double> ys);

inline constexpr std::size_t kExactUMaxSize = 12;

// The two branches of mann_whitney_u, callable directly.
UTestResult mann_whitney_exact(std::span<const double> xs, std::span<const double> ys);
UTestResult mann_whitney_normal(std::span<const double> xs, std::span<const double> ys);

enum class SelectionCriterion { AllFeatures, Significant, MostFrequent };

std::string_view to_string(SelectionCriterion c);

struct FeatureSelection {
    SelectionCriterion criterion = SelectionCriterion::AllFeatures;
    std::vector<std::string> kept;           // canonical order
    std::map<std::string, double> evidence;  // p-value or frequency per feature
    std::vector<std::string> warnings;
};

inline constexpr double kDefaultAlpha = 0.0011;
inline constexpr double kAlternateAlpha = 0.011;

// Smallest pairwise-class p-value per feature. Flagged rows are left out;
// NaN values are dropped per column.
std::map<std::string, double> feature_pvalues(const FeatureMatrix& matrix, std::span<const std::size_t> rows);

// Keeps features whose p-value is below alpha.
FeatureSelection select_significant(const std::map<std::string, double>& pvalues, double alpha = kDefaultAlpha);

FeatureSelection significant_feature_filter(const FeatureMatrix& matrix, double alpha = kDefaultAlpha);

FeatureSelection all_features();

struct MffConfig {
    std::size_t runs = 1000;
    std::size_t top_m = 7;
    double min_frequency = 0.5;  // kept when frequency > min_frequency
    EnsembleConfig ensemble;
    SplitSizes split;
    std::size_t jobs = 1;
};

// Per run: participant-wise split, standardization fit on training rows,
// all-feature ensemble, top_m features by importance. Deterministic in seed.
FeatureSelection most_frequent_features(const FeatureMatrix& matrix, const MffConfig& config, std::uint64_t seed);

nlohmann::json to_json(const FeatureSelection& s);
FeatureSelection selection_from_json(const nlohmann::json& j);

// Column indices of the kept features.
std::vector<std::size_t> selected_columns(const FeatureSelection& s);

}  // namespace gazeclass
