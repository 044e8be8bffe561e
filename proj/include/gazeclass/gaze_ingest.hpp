#pragma once

// Raw gaze log ingestion: CSV parsing into per-trial sample sequences,
// tracking ratio, and the trial-level quality gate.

#include "gazeclass/types.hpp"

#include <json.hpp>

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace gazeclass {

struct GazeSample {
    double t_ms = 0.0;
    double x_px = 0.0;
    double y_px = 0.0;
    bool valid = true;

    // The tracker encodes lost samples as (0, 0); those count as invalid
    // regardless of the validity flag.
    bool usable() const { return valid && !(x_px == 0.0 && y_px == 0.0); }

    bool operator==(const GazeSample&) const = default;
};

struct TrialRecord {
    std::string participant_id;
    Expertise class_label = Expertise::Novice;
    int stimulus_id = 0;
    int block = 0;
    std::vector<GazeSample> samples;
    double tracking_ratio = 0.0;

    // "participant:stimulus:block", unique within a dataset.
    std::string key() const;

    bool operator==(const TrialRecord&) const = default;
};

// Fraction of usable samples; 0 for an empty sequence.
double tracking_ratio(std::span<const GazeSample> samples);

struct DroppedTrial {
    std::string participant_id;
    int stimulus_id = 0;
    int block = 0;
    std::string reason;

    bool operator==(const DroppedTrial&) const = default;
};

struct DatasetManifest {
    std::vector<TrialRecord> trials;
    std::vector<DroppedTrial> dropped;

    bool operator==(const DatasetManifest&) const = default;
};

// Column names of the gaze CSV. Defaults match the header
// participant,class,stimulus,block,t_ms,x_px,y_px,valid
struct ColumnMapping {
    std::string participant = "participant";
    std::string class_label = "class";
    std::string stimulus = "stimulus";
    std::string block = "block";
    std::string time = "t_ms";
    std::string x = "x_px";
    std::string y = "y_px";
    std::string validity = "valid";
    char delimiter = ',';

    // Reads a sidecar like {"time": "Timestamp", "x": "GazeX", ...};
    // absent keys keep their defaults.
    static ColumnMapping from_json(const nlohmann::json& j);
};

struct RowError {
    std::size_t line = 0;
    std::string message;
};

struct ParseResult {
    std::vector<TrialRecord> trials;
    std::vector<DroppedTrial> rejected;  // e.g. "non-monotone time"
    std::vector<RowError> row_errors;
    std::vector<std::string> warnings;
};

inline constexpr double kNominalSamplePeriodMs = 4.0;  // 250 Hz

// Throws Error when the header lacks a mapped column. Malformed rows are
// skipped and reported with their 1-based line number.
ParseResult parse_gaze_log(std::istream& source, const ColumnMapping& schema = {});

inline constexpr double kDefaultMinTrackingRatio = 0.75;

// Trials strictly below min_ratio are dropped with reason "low tracking ratio".
DatasetManifest apply_quality_gate(std::vector<TrialRecord> trials,
                                   double min_ratio = kDefaultMinTrackingRatio);

// Writes trials with the default header. Floats use shortest round-trip form.
void write_gaze_csv(std::ostream& out, std::span<const TrialRecord> trials);

nlohmann::json to_json(const DatasetManifest& manifest);
DatasetManifest manifest_from_json(const nlohmann::json& j);

}  // namespace gazeclass
