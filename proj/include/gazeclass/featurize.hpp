#pragma once

// The 46-column per-trial feature vector: 13 base eye-movement measures, of
// which the two frequencies carry one value and the remaining 11 carry
// average, standard deviation, minimum and maximum.

#include "gazeclass/event_detect.hpp"
#include "gazeclass/types.hpp"

#include <json.hpp>

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gazeclass {

enum class Measure : std::size_t {
    FixationFrequency,
    FixationDuration,
    FixationDispersion,
    SaccadeFrequency,
    SaccadeDuration,
    SaccadeAmplitude,
    SaccadeMeanAcceleration,
    SaccadePeakAcceleration,
    SaccadePeakDeceleration,
    SaccadeMeanVelocity,
    SaccadePeakVelocity,
    PursuitDuration,
    PursuitDispersion,
};
inline constexpr std::size_t kMeasureCount = 13;

enum class Derivation : std::size_t { Average, StdDev, Minimum, Maximum };

inline constexpr std::size_t kFeatureCount = 46;

std::string_view measure_name(Measure m);
bool is_frequency(Measure m);
const std::array<Measure, kMeasureCount>& all_measures();

// Canonical column order: measures in table order, each expanded to
// avg, std, min, max (frequencies contribute a single column).
const std::vector<std::string>& feature_names();
std::size_t feature_index(Measure m, Derivation d = Derivation::Average);
std::optional<std::size_t> feature_index(std::string_view name);

struct FeatureVector {
    std::string participant_id;
    Expertise class_label = Expertise::Novice;
    std::string trial_key;
    std::vector<double> values;  // kFeatureCount entries, NaN = missing
    bool flagged = false;        // some measure had no events

    bool operator==(const FeatureVector&) const = default;
};

// Per-column z-score parameters. Missing values are imputed with the column
// mean, i.e. standardize to 0.
struct Standardization {
    std::vector<double> mean;
    std::vector<double> scale;
    std::vector<std::size_t> constant_columns;  // scale forced to 1

    double apply(std::size_t column, double value) const;
};

struct FeatureMatrix {
    std::vector<std::string> feature_names;
    std::vector<FeatureVector> rows;
    Standardization standardization;  // fitted over all rows of this matrix

    std::size_t size() const { return rows.size(); }
};

// Statistics of the trial's cleaned events. Frequencies are events per
// second of trial time; standard deviations are population values.
FeatureVector featurize_trial(std::span<const GazeEvent> events, const TrialRecord& trial);

// Enforces canonical width and fits standardization over every row.
// Throws on an empty input.
FeatureMatrix build_matrix(std::vector<FeatureVector> vectors, std::vector<std::string>* warnings = nullptr);

// Fits over the given rows only (the training partition).
Standardization fit_standardization(const FeatureMatrix& matrix, std::span<const std::size_t> rows,
                                    std::vector<std::string>* warnings = nullptr);

// Standardized values of the selected rows and columns.
RowMatrix standardized_rows(const FeatureMatrix& matrix, const Standardization& scaling,
                            std::span<const std::size_t> rows, std::span<const std::size_t> columns);

void write_feature_csv(std::ostream& out, const FeatureMatrix& matrix);
FeatureMatrix read_feature_csv(std::istream& in);

nlohmann::json to_json(const Standardization& s);
Standardization standardization_from_json(const nlohmann::json& j);

}  // namespace gazeclass
