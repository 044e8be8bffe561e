#pragma once

// Velocity-threshold segmentation of a trial into saccades, fixations,
// smooth pursuits and tracking gaps.

#include "gazeclass/gaze_ingest.hpp"

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace gazeclass {

enum class EventKind { Fixation, SmoothPursuit, Saccade, Gap };

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

inline constexpr double kNotApplicable = std::numeric_limits<double>::quiet_NaN();

struct GazeEvent {
    EventKind kind = EventKind::Fixation;
    std::size_t start_idx = 0;  // inclusive
    std::size_t end_idx = 0;    // inclusive
    double start_ms = 0.0;
    double duration_ms = 0.0;

    double dispersion_px = kNotApplicable;  // fixation / smooth pursuit

    // Saccade kinematics, degrees and seconds.
    double amplitude_deg = kNotApplicable;
    double mean_velocity = kNotApplicable;
    double peak_velocity = kNotApplicable;
    double mean_acceleration = kNotApplicable;
    double peak_acceleration = kNotApplicable;
    double peak_deceleration = kNotApplicable;  // <= 0

    bool samples_valid = true;  // no invalid sample inside [start_idx, end_idx]

    std::size_t sample_count() const { return end_idx - start_idx + 1; }
};

// Pixel-to-degree scale of the stimulus panorama. 2400 px span 225 degrees
// horizontally and 1000 px span 187.5 degrees vertically.
struct GeometryConfig {
    double px_per_deg_x = 2400.0 / 225.0;
    double px_per_deg_y = 1000.0 / 187.5;

    void validate() const;
};

enum class DispersionMetric { BoundingBoxDiagonal, MaxPairwiseDistance };

struct DetectionConfig {
    double peak_threshold_deg_s = 40.0;
    double min_fixation_ms = 50.0;
    double sp_dispersion_px = 100.0;  // strictly greater -> smooth pursuit
    DispersionMetric dispersion = DispersionMetric::BoundingBoxDiagonal;
};

// Angular distance of a pixel displacement.
double px_to_deg(double dx, double dy, const GeometryConfig& geom);

double dispersion_px(std::span<const GazeSample> samples, DispersionMetric metric);

struct SaccadeKinematics {
    double mean_velocity = 0.0;
    double peak_velocity = 0.0;
    double mean_acceleration = 0.0;  // mean over the accelerating part
    double peak_acceleration = 0.0;
    double mean_deceleration = 0.0;  // mean over the decelerating part, <= 0
    double peak_deceleration = 0.0;
    double amplitude = 0.0;          // mean velocity * duration
};

// Sample-to-sample kinematics over samples [start, end] using raw
// coordinates, including (0, 0) dropouts. Requires end > start.
SaccadeKinematics saccade_kinematics(std::span<const GazeSample> samples, std::size_t start, std::size_t end,
                                     const GeometryConfig& geom);

// Throws Error("too short") when the trial has fewer than two samples.
std::vector<GazeEvent> detect_events(const TrialRecord& trial, const GeometryConfig& geom,
                                     const DetectionConfig& config = {});

// Total path length of a saccade: mean sample-to-sample velocity times the
// event duration. Throws for non-saccades and single-sample events.
double saccade_amplitude(const GazeEvent& event, const TrialRecord& trial, const GeometryConfig& geom);

// Average deceleration of a saccade. Computable but not part of the
// canonical feature set.
double mean_deceleration(const GazeEvent& event, const TrialRecord& trial, const GeometryConfig& geom);

// Events CSV:
// trial_key,kind,start_ms,duration_ms,dispersion_px,amplitude_deg,mean_vel,peak_vel,mean_acc,peak_acc,peak_dec,valid
using EventsByTrial = std::map<std::string, std::vector<GazeEvent>>;

void write_events_csv(std::ostream& out, const EventsByTrial& events);

// Sample indices are recovered by timestamp lookup in the manifest's trials.
EventsByTrial read_events_csv(std::istream& in, const DatasetManifest& manifest);

}  // namespace gazeclass
