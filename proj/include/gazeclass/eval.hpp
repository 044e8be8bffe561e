#pragma once

// Classification metrics and run-distribution summaries.

#include "gazeclass/types.hpp"

#include <json.hpp>

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace gazeclass {

// Rows are true classes, columns predicted, indexed by class_index.
// `classes` lists the classes seen in either truths or predictions.
struct ConfusionMatrix {
    std::array<std::array<std::size_t, kClassCount>, kClassCount> counts{};
    std::vector<Expertise> classes;

    std::size_t total() const;
    std::size_t row_sum(Expertise c) const;
    ConfusionMatrix& operator+=(const ConfusionMatrix& other);
};

// Two-class summary with the higher-ordered class as the positive class.
struct BinaryRates {
    Expertise positive = Expertise::Expert;
    Expertise negative = Expertise::Intermediate;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double false_positive_rate = 0.0;   // FP / (FP + TN)
    double false_negative_rate = 0.0;   // FN / (FN + TP)
    double false_omission_rate = 0.0;   // FN / (FN + TN)
};

struct ScoreReport {
    ConfusionMatrix confusion;
    double accuracy = 0.0;
    std::array<double, kClassCount> recall{};     // NaN when the class has no true samples
    std::array<double, kClassCount> miss_rate{};  // 1 - recall
    double macro_recall = 0.0;                    // over defined classes
    double macro_miss_rate = 0.0;
    std::optional<BinaryRates> binary;            // exactly two classes seen
};

ConfusionMatrix confusion_matrix(std::span<const Expertise> predictions, std::span<const Expertise> truths);
ScoreReport score(std::span<const Expertise> predictions, std::span<const Expertise> truths);
ScoreReport score(const ConfusionMatrix& confusion);

// Tukey boxplot statistics. Quartiles interpolate linearly between order
// statistics (position p (n - 1) in the sorted values). NaN values are
// ignored.
struct RunDistribution {
    std::vector<double> values;
    double median = 0.0, q1 = 0.0, q3 = 0.0;
    double lower_adjacent = 0.0, upper_adjacent = 0.0;
    double mean = 0.0;
};

RunDistribution summarize_runs(std::span<const double> values);

// Linear-interpolation quantile of sorted values, p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const ScoreReport& s);
nlohmann::json to_json(const RunDistribution& d);

}  // namespace gazeclass
