#include "gazeclass/clean.hpp"
#include "gazeclass/synth.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace gazeclass;

namespace {

const GeometryConfig kGeom;

TrialRecord flat_trial(std::size_t n) {
    TrialRecord t;
    t.participant_id = "p";
    for (std::size_t i = 0; i < n; ++i) t.samples.push_back({4.0 * i, 100.0 + i, 200.0, true});
    t.tracking_ratio = 1.0;
    return t;
}

GazeEvent saccade(std::size_t start, std::size_t end, double peak_v = 400, double peak_a = 50000, double peak_d = -40000) {
    GazeEvent e;
    e.kind = EventKind::Saccade;
    e.start_idx = start;
    e.end_idx = end;
    e.duration_ms = 4.0 * (end - start);
    e.mean_velocity = peak_v / 2;
    e.peak_velocity = peak_v;
    e.mean_acceleration = peak_a / 2;
    e.peak_acceleration = peak_a;
    e.peak_deceleration = peak_d;
    e.amplitude_deg = 5;
    return e;
}

bool has(const std::vector<CleaningRule>& rules, CleaningRule r) {
    return std::find(rules.begin(), rules.end(), r) != rules.end();
}

TraceScript zero_run_script() {
    TraceScript s;
    s.segments = {{0, 200, 1200, 500, 1200, 500}, {200, 100, 1200, 500, 1500, 500}, {300, 200, 1500, 500, 1500, 500}};
    for (std::size_t i : {7, 8, 14, 15, 16, 18, 19, 20}) s.zero_samples.push_back(50 + i);
    return s;
}

}  // namespace

TEST(Clean, SaccadeStartingAtOriginViolatesRuleOne) {
    TraceScript s;
    s.segments = {{0, 200, 500, 500, 500, 500}, {200, 40, 500, 500, 900, 500}, {240, 200, 900, 500, 900, 500}};
    s.zero_samples = {50};
    const auto trial = sample_gaze_trace(s, 1);
    const auto events = detect_events(trial, kGeom);
    const auto it = std::find_if(events.begin(), events.end(), [](const auto& e) { return e.kind == EventKind::Saccade; });
    ASSERT_NE(it, events.end());
    EXPECT_EQ(it->start_idx, 50u);
    EXPECT_TRUE(has(violated_rules(*it, trial), CleaningRule::InvalidStart));
    const auto r = clean_saccades(events, trial);
    EXPECT_EQ(r.report.removed_by_rule[0], 1u);
    EXPECT_EQ(r.report.removed_total, 1u);
}

TEST(Clean, PlausibleSaccadeIsKept) {
    const auto trial = flat_trial(30);
    const std::vector<GazeEvent> events{saccade(5, 15)};
    EXPECT_TRUE(violated_rules(events[0], trial).empty());
    const auto r = clean_saccades(events, trial);
    EXPECT_EQ(r.events.size(), 1u);
    EXPECT_EQ(r.report.removed_total, 0u);
}

TEST(Clean, InterleavedZeroRunHitsRulesTwoAndThreeOnce) {
    const auto trial = sample_gaze_trace(zero_run_script(), 1);
    const auto events = detect_events(trial, kGeom);
    const auto r = clean_saccades(events, trial);
    EXPECT_EQ(r.report.total_saccades, 1u);
    EXPECT_EQ(r.report.removed_by_rule[1], 1u);
    EXPECT_EQ(r.report.removed_by_rule[2], 1u);
    EXPECT_EQ(r.report.removed_total, 1u);
    // 2400 px in 4 ms, the size of a dropout jump, is far above the limit.
    const double oracle_velocity = 1200.0 / kGeom.px_per_deg_x / 0.004;
    EXPECT_GT(oracle_velocity, 1000.0);
    EXPECT_NEAR(2400.0 / kGeom.px_per_deg_x / 0.004, 56250.0, 1e-6);
    for (const auto& e : r.events) EXPECT_NE(e.kind, EventKind::Saccade);
}

TEST(Clean, KinematicLimitsAreStrict) {
    const auto trial = flat_trial(30);
    EXPECT_TRUE(violated_rules(saccade(1, 5, 1000, 100000, -100000), trial).empty());
    EXPECT_TRUE(has(violated_rules(saccade(1, 5, 1000.5), trial), CleaningRule::KinematicLimit));
    EXPECT_TRUE(has(violated_rules(saccade(1, 5, 400, 100001), trial), CleaningRule::KinematicLimit));
    EXPECT_TRUE(has(violated_rules(saccade(1, 5, 400, 500, -100001), trial), CleaningRule::KinematicLimit));
}

TEST(Clean, FixationsAreNeverRemoved) {
    auto trial = flat_trial(30);
    trial.samples[3] = {12, 0, 0, false};
    GazeEvent fix;
    fix.kind = EventKind::Fixation;
    fix.start_idx = 0;
    fix.end_idx = 20;
    const std::vector<GazeEvent> events{fix};
    EXPECT_EQ(clean_saccades(events, trial).events.size(), 1u);
}

TEST(Clean, EmptyInputGivesZeroCounts) {
    const auto r = clean_saccades({}, flat_trial(3));
    EXPECT_TRUE(r.events.empty());
    EXPECT_EQ(r.report.total_saccades, 0u);
    EXPECT_EQ(r.report.removed_fraction(), 0.0);
}

TEST(Clean, SummaryAddsCounts) {
    CleaningReport a, b;
    a.total_saccades = 10;
    a.removed_total = 1;
    b.total_saccades = 10;
    b.removed_total = 2;
    const std::vector<CleaningReport> both{a, b};
    const auto s = summarize_cleaning(both);
    EXPECT_EQ(s.total_saccades, 20u);
    EXPECT_EQ(s.removed_total, 3u);
    EXPECT_DOUBLE_EQ(s.removed_fraction(), 0.15);
    EXPECT_EQ(summarize_cleaning({}), CleaningReport{});
}

TEST(Clean, PlantedCorpusRemovesFivePointFivePercent) {
    // 40 trials x 25 saccades; 55 planted violators with overlapping rules.
    std::vector<CleaningReport> reports;
    std::size_t planted = 0;
    for (int t = 0; t < 40; ++t) {
        auto trial = flat_trial(25 * 12);
        std::vector<GazeEvent> events;
        for (std::size_t k = 0; k < 25; ++k) {
            GazeEvent e = saccade(12 * k + 1, 12 * k + 8);
            if (planted < 55 && (t * 25 + k) % 18 == 5) {
                ++planted;
                switch (planted % 3) {
                    case 0:  // rules 1 + 2
                        trial.samples[e.start_idx] = {trial.samples[e.start_idx].t_ms, 0, 0, true};
                        break;
                    case 1:  // rules 2 + 3
                        trial.samples[e.start_idx + 3] = {trial.samples[e.start_idx + 3].t_ms, 0, 0, false};
                        e.peak_velocity = 5000;
                        break;
                    default:  // rule 3 only
                        e.peak_acceleration = 250000;
                }
            }
            events.push_back(e);
        }
        reports.push_back(clean_saccades(events, trial).report);
    }
    ASSERT_EQ(planted, 55u);
    const auto s = summarize_cleaning(reports);
    EXPECT_EQ(s.total_saccades, 1000u);
    EXPECT_NEAR(s.removed_fraction(), 0.055, 0.001);
    EXPECT_LE(s.removed_total, s.removed_by_rule[0] + s.removed_by_rule[1] + s.removed_by_rule[2]);
    EXPECT_GT(s.removed_by_rule[0] + s.removed_by_rule[1] + s.removed_by_rule[2], s.removed_total);
}

TEST(Clean, IdempotentAndConsistentOnRandomTraces) {
    std::mt19937_64 rng(19);
    for (int round = 0; round < 30; ++round) {
        auto script = random_trace_script(3000, rng);
        for (int d = 0; d < 6; ++d) script.zero_samples.push_back(rng() % 700);
        std::sort(script.zero_samples.begin(), script.zero_samples.end());
        TrialRecord trial;
        try {
            trial = sample_gaze_trace(script, rng());
        } catch (const Error&) {
            continue;  // dropout index past the end
        }
        const auto events = detect_events(trial, kGeom);
        const auto once = clean_saccades(events, trial);
        const auto twice = clean_saccades(once.events, trial);
        EXPECT_EQ(twice.events.size(), once.events.size());
        EXPECT_EQ(twice.report.removed_total, 0u);
        for (const auto& e : once.events) EXPECT_TRUE(violated_rules(e, trial).empty());
        for (std::size_t i : once.removed) EXPECT_FALSE(violated_rules(events[i], trial).empty());
        EXPECT_LE(once.report.removed_total, once.report.total_saccades);
    }
}
