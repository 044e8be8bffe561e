#pragma once

// Synthetic feature rows drawn from per-class aggregate statistics, and
// scripted raw gaze traces for detector fixtures.

#include "gazeclass/featurize.hpp"
#include "gazeclass/gaze_ingest.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace gazeclass {

struct MeasureStats {
    double average = 0.0;
    double std_dev = 0.0;
    double minimum = 0.0;
    double maximum = 0.0;
};

// Frequencies are published as averages only; their spread is taken as
// this fraction of the average, bounded below by 0 and unbounded above.
inline constexpr double kFrequencyStdFraction = 0.25;

struct ClassStats {
    std::map<Expertise, std::array<MeasureStats, kMeasureCount>> classes;

    const MeasureStats& at(Expertise c, Measure m) const;
    // Throws when min > max, std < 0 or the average lies outside [min, max].
    void validate() const;
};

ClassStats class_stats_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ClassStats& stats);

// The bundled transcription in data/class_stats.json.
const ClassStats& default_class_stats();

// Normal(mu, sigma) restricted to [lo, hi], sampled by inverting the CDF.
// Bounds may be infinite.
class TruncatedNormal {
public:
    TruncatedNormal(double mu, double sigma, double lo, double hi);

    double sample(std::mt19937_64& rng) const;
    double mean() const;

    // Location whose truncated mean equals `target`.
    static double location_for_mean(double target, double sigma, double lo, double hi);

private:
    double mu_, sigma_, lo_, hi_;
};

// Uniform in (0, 1) from the top 53 bits; stable across standard libraries.
double open_unit(std::mt19937_64& rng);
double standard_normal(std::mt19937_64& rng);

struct SynthConfig {
    std::array<std::size_t, kClassCount> participants{13, 10, 12};  // novice, intermediate, expert
    std::size_t trials_per_participant = 52;
    std::size_t events_per_trial = 10;
    double sigma_p = 2.0;  // participant offset scale, in units of the class std
    std::uint64_t seed = 0;

    void validate() const;
};

// Per participant and measure an offset sigma_p * std * z shifts the
// location; per trial `events_per_trial` draws from the truncated normal
// give avg/std/min/max. Frequencies get one draw per trial.
FeatureMatrix sample_feature_rows(const ClassStats& stats, const SynthConfig& config);

// One moving or stationary stretch of a scripted trace, linear in time.
struct TraceSegment {
    double start_ms = 0.0;
    double duration_ms = 0.0;
    double from_x = 0.0, from_y = 0.0;
    double to_x = 0.0, to_y = 0.0;
};

struct TraceScript {
    std::vector<TraceSegment> segments;  // ordered, non-overlapping
    double period_ms = 4.0;
    double jitter_px = 0.0;              // Gaussian noise per coordinate
    std::vector<std::size_t> zero_samples;  // planted (0, 0) dropouts
    std::string participant_id = "S01";
    Expertise class_label = Expertise::Novice;
    int stimulus_id = 1;
    int block = 1;
};

// Samples every period_ms from the first segment start through the last
// segment end. Between segments the gaze rests at the previous endpoint.
TrialRecord sample_gaze_trace(const TraceScript& script, std::uint64_t seed);

// Index range of samples whose timestamps fall in [start, end] of a segment.
std::pair<std::size_t, std::size_t> segment_sample_range(const TraceScript& script, std::size_t segment);

// Alternating fixations, saccades and occasional pursuits filling
// `duration_ms`, for end-to-end smoke data.
TraceScript random_trace_script(double duration_ms, std::mt19937_64& rng);

}  // namespace gazeclass
