#include "gazeclass/clean.hpp"

#include <algorithm>
#include <cmath>

namespace gazeclass {

double CleaningReport::removed_fraction() const {
    return total_saccades == 0 ? 0.0 : static_cast<double>(removed_total) / static_cast<double>(total_saccades);
}

double CleaningReport::sample_fraction_removed() const {
    return total_samples == 0 ? 0.0 : static_cast<double>(removed_samples) / static_cast<double>(total_samples);
}

std::vector<CleaningRule> violated_rules(const GazeEvent& event, const TrialRecord& trial,
                                         const PhysiologicalLimits& limits) {
    std::vector<CleaningRule> rules;
    if (event.kind != EventKind::Saccade) return rules;
    const auto& s = trial.samples;

    const GazeSample& first = s.at(event.start_idx);
    if (first.x_px == 0.0 && first.y_px == 0.0) rules.push_back(CleaningRule::InvalidStart);

    const bool any_invalid = std::any_of(s.begin() + static_cast<std::ptrdiff_t>(event.start_idx),
                                         s.begin() + static_cast<std::ptrdiff_t>(event.end_idx) + 1,
                                         [](const GazeSample& g) { return !g.usable(); });
    if (any_invalid) rules.push_back(CleaningRule::InvalidIntraSample);

    if (event.peak_velocity > limits.max_velocity || std::abs(event.peak_acceleration) > limits.max_acceleration ||
        std::abs(event.peak_deceleration) > limits.max_deceleration) {
        rules.push_back(CleaningRule::KinematicLimit);
    }
    return rules;
}

CleanResult clean_saccades(std::span<const GazeEvent> events, const TrialRecord& trial,
                           const PhysiologicalLimits& limits) {
    CleanResult out;
    out.report.total_samples = trial.samples.size();
    for (std::size_t i = 0; i < events.size(); ++i) {
        const GazeEvent& e = events[i];
        if (e.kind == EventKind::Saccade) ++out.report.total_saccades;
        const auto rules = violated_rules(e, trial, limits);
        if (rules.empty()) {
            out.events.push_back(e);
            continue;
        }
        for (auto r : rules) ++out.report.removed_by_rule[static_cast<std::size_t>(r)];
        ++out.report.removed_total;
        out.report.removed_samples += e.sample_count();
        out.removed.push_back(i);
    }
    return out;
}

CleaningReport summarize_cleaning(std::span<const CleaningReport> reports) {
    CleaningReport total;
    for (const auto& r : reports) {
        total.total_saccades += r.total_saccades;
        for (std::size_t k = 0; k < kRuleCount; ++k) total.removed_by_rule[k] += r.removed_by_rule[k];
        total.removed_total += r.removed_total;
        total.total_samples += r.total_samples;
        total.removed_samples += r.removed_samples;
    }
    return total;
}

nlohmann::json to_json(const CleaningReport& report) {
    return {{"total_saccades", report.total_saccades},
            {"removed_by_rule",
             {{"invalid_start", report.removed_by_rule[0]},
              {"invalid_intra_sample", report.removed_by_rule[1]},
              {"kinematic_limit", report.removed_by_rule[2]}}},
            {"removed_total", report.removed_total},
            {"removed_fraction", report.removed_fraction()},
            {"total_samples", report.total_samples},
            {"removed_samples", report.removed_samples},
            {"sample_fraction_removed", report.sample_fraction_removed()}};
}

}  // namespace gazeclass
