#pragma once

// Saccade validity rules:
//   1. the saccade starts on a (0, 0) sample,
//   2. some sample inside the saccade is invalid,
//   3. peak velocity, acceleration or deceleration exceeds physiological limits.
// Offending saccades are removed whole; nothing is interpolated.

#include "gazeclass/event_detect.hpp"

#include <json.hpp>

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace gazeclass {

struct PhysiologicalLimits {
    double max_velocity = 1000.0;         // deg/s
    double max_acceleration = 100000.0;   // deg/s^2
    double max_deceleration = 100000.0;   // deg/s^2, compared against |peak deceleration|
};

enum class CleaningRule : std::size_t { InvalidStart = 0, InvalidIntraSample = 1, KinematicLimit = 2 };
inline constexpr std::size_t kRuleCount = 3;

struct CleaningReport {
    std::size_t total_saccades = 0;
    std::array<std::size_t, kRuleCount> removed_by_rule{};  // rules overlap
    std::size_t removed_total = 0;                          // deduplicated
    std::size_t total_samples = 0;
    std::size_t removed_samples = 0;

    double removed_fraction() const;
    double sample_fraction_removed() const;

    bool operator==(const CleaningReport&) const = default;
};

// Rules the saccade violates; empty for non-saccades.
std::vector<CleaningRule> violated_rules(const GazeEvent& event, const TrialRecord& trial,
                                         const PhysiologicalLimits& limits = {});

struct CleanResult {
    std::vector<GazeEvent> events;
    CleaningReport report;
    std::vector<std::size_t> removed;  // indices into the input event list
};

CleanResult clean_saccades(std::span<const GazeEvent> events, const TrialRecord& trial,
                           const PhysiologicalLimits& limits = {});

CleaningReport summarize_cleaning(std::span<const CleaningReport> reports);

nlohmann::json to_json(const CleaningReport& report);

}  // namespace gazeclass
