#include "gazeclass/featurize.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace gazeclass;

namespace {

TrialRecord span_trial(double duration_ms) {
    TrialRecord t;
    t.participant_id = "e01";
    t.class_label = Expertise::Expert;
    t.stimulus_id = 3;
    t.block = 1;
    t.samples = {{0, 1, 1, true}, {duration_ms, 1, 1, true}};
    return t;
}

GazeEvent fixation(double duration, double dispersion) {
    GazeEvent e;
    e.kind = EventKind::Fixation;
    e.duration_ms = duration;
    e.dispersion_px = dispersion;
    return e;
}

GazeEvent saccade(double duration, double amplitude) {
    GazeEvent e;
    e.kind = EventKind::Saccade;
    e.duration_ms = duration;
    e.amplitude_deg = amplitude;
    e.mean_velocity = amplitude / duration * 1000;
    e.peak_velocity = 2 * e.mean_velocity;
    e.mean_acceleration = 10 * e.mean_velocity;
    e.peak_acceleration = 20 * e.mean_velocity;
    e.peak_deceleration = -20 * e.mean_velocity;
    return e;
}

GazeEvent pursuit(double duration, double dispersion) {
    GazeEvent e;
    e.kind = EventKind::SmoothPursuit;
    e.duration_ms = duration;
    e.dispersion_px = dispersion;
    return e;
}

double at(const FeatureVector& v, Measure m, Derivation d = Derivation::Average) { return v.values[feature_index(m, d)]; }

std::vector<GazeEvent> mixed_events(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.5, 1.5);
    std::vector<GazeEvent> ev;
    for (int i = 0; i < 12; ++i) ev.push_back(fixation(200 * u(rng), 30 * u(rng)));
    for (int i = 0; i < 9; ++i) ev.push_back(saccade(40 * u(rng), 8 * u(rng)));
    for (int i = 0; i < 3; ++i) ev.push_back(pursuit(600 * u(rng), 300 * u(rng)));
    GazeEvent gap;
    gap.kind = EventKind::Gap;
    gap.duration_ms = 50;
    ev.push_back(gap);
    return ev;
}

}  // namespace

TEST(FeatureLayout, FortySixCanonicalColumns) {
    const auto& names = feature_names();
    ASSERT_EQ(names.size(), kFeatureCount);
    EXPECT_EQ(names.front(), "fixation_frequency");
    EXPECT_EQ(names.back(), "smooth_pursuit_dispersion_max");
    EXPECT_EQ(feature_index("saccade_frequency"), feature_index(Measure::SaccadeFrequency));
    EXPECT_EQ(feature_index(Measure::SaccadeFrequency, Derivation::Maximum), feature_index(Measure::SaccadeFrequency));
    EXPECT_FALSE(feature_index("nope").has_value());
    // 2 frequency columns + 11 measures x 4 derivations.
    EXPECT_EQ(2 + 11 * 4, static_cast<int>(kFeatureCount));
    for (std::size_t i = 0; i < names.size(); ++i) EXPECT_EQ(feature_index(names[i]), i);
}

TEST(FeaturizeTrial, DurationStatisticsAndFrequency) {
    const std::vector<GazeEvent> ev{fixation(200, 10), fixation(220, 20), fixation(240, 30)};
    const auto v = featurize_trial(ev, span_trial(10000));
    EXPECT_DOUBLE_EQ(at(v, Measure::FixationDuration), 220.0);
    EXPECT_NEAR(at(v, Measure::FixationDuration, Derivation::StdDev), std::sqrt(800.0 / 3.0), 1e-12);
    EXPECT_NEAR(at(v, Measure::FixationDuration, Derivation::StdDev), 16.33, 0.005);
    EXPECT_DOUBLE_EQ(at(v, Measure::FixationDuration, Derivation::Minimum), 200.0);
    EXPECT_DOUBLE_EQ(at(v, Measure::FixationDuration, Derivation::Maximum), 240.0);
    EXPECT_DOUBLE_EQ(at(v, Measure::FixationFrequency), 0.3);
    EXPECT_DOUBLE_EQ(at(v, Measure::SaccadeFrequency), 0.0);
    EXPECT_TRUE(v.flagged);  // no saccades or pursuits
    EXPECT_TRUE(std::isnan(at(v, Measure::SaccadeAmplitude)));
    EXPECT_EQ(v.trial_key, "e01:3:1");
}

TEST(FeaturizeTrial, SingletonHasZeroSpread) {
    const std::vector<GazeEvent> ev{fixation(300, 12), saccade(40, 5), pursuit(700, 250)};
    const auto v = featurize_trial(ev, span_trial(4000));
    EXPECT_FALSE(v.flagged);
    for (Measure m : all_measures()) {
        if (is_frequency(m)) continue;
        const double avg = at(v, m);
        EXPECT_DOUBLE_EQ(at(v, m, Derivation::StdDev), 0.0);
        EXPECT_DOUBLE_EQ(at(v, m, Derivation::Minimum), avg);
        EXPECT_DOUBLE_EQ(at(v, m, Derivation::Maximum), avg);
    }
}

TEST(FeaturizeTrial, PermutationInvariant) {
    std::mt19937_64 rng(5);
    auto ev = mixed_events(rng);
    const auto trial = span_trial(8000);
    const auto base = featurize_trial(ev, trial);
    for (int k = 0; k < 10; ++k) {
        std::shuffle(ev.begin(), ev.end(), rng);
        const auto v = featurize_trial(ev, trial);
        for (std::size_t c = 0; c < kFeatureCount; ++c) EXPECT_NEAR(v.values[c], base.values[c], 1e-9 * (1 + std::abs(base.values[c])));
    }
}

TEST(FeaturizeTrial, TimeScaling) {
    std::mt19937_64 rng(7);
    const auto ev = mixed_events(rng);
    const double k = 2.5;
    auto scaled = ev;
    for (auto& e : scaled) e.duration_ms *= k;
    const auto a = featurize_trial(ev, span_trial(8000));
    const auto b = featurize_trial(scaled, span_trial(8000 * k));
    EXPECT_NEAR(at(b, Measure::FixationFrequency), at(a, Measure::FixationFrequency) / k, 1e-12);
    EXPECT_NEAR(at(b, Measure::SaccadeFrequency), at(a, Measure::SaccadeFrequency) / k, 1e-12);
    for (Measure m : {Measure::FixationDuration, Measure::SaccadeDuration, Measure::PursuitDuration}) {
        for (auto d : {Derivation::Average, Derivation::StdDev, Derivation::Minimum, Derivation::Maximum}) {
            EXPECT_NEAR(at(b, m, d), k * at(a, m, d), 1e-9);
        }
    }
    EXPECT_DOUBLE_EQ(at(b, Measure::FixationDispersion), at(a, Measure::FixationDispersion));
}

TEST(Standardization, TwoRowsMapToPlusMinusOne) {
    std::vector<FeatureVector> rows(2);
    rows[0].values.assign(kFeatureCount, 1.0);
    rows[1].values.assign(kFeatureCount, 3.0);
    rows[0].values[5] = rows[1].values[5] = 7.0;  // constant column
    rows[1].values[6] = std::nan("");
    rows[0].participant_id = "n01";
    rows[1].participant_id = "n02";
    std::vector<std::string> warnings;
    const auto m = build_matrix(rows, &warnings);
    const std::vector<std::size_t> all{0, 1};
    const std::vector<std::size_t> cols{0, 5, 6};
    const auto z = standardized_rows(m, m.standardization, all, cols);
    EXPECT_DOUBLE_EQ(z(0, 0), -1.0);
    EXPECT_DOUBLE_EQ(z(1, 0), 1.0);
    EXPECT_DOUBLE_EQ(z(0, 1), 0.0);
    EXPECT_DOUBLE_EQ(z(1, 1), 0.0);
    EXPECT_DOUBLE_EQ(z(1, 2), 0.0);  // imputed
    EXPECT_FALSE(warnings.empty());

    const auto j = to_json(m.standardization);
    const auto back = standardization_from_json(j);
    EXPECT_EQ(back.mean, m.standardization.mean);
    EXPECT_EQ(back.scale, m.standardization.scale);
}

TEST(Standardization, FitOnSubsetOnly) {
    std::vector<FeatureVector> rows(3);
    for (int i = 0; i < 3; ++i) rows[i].values.assign(kFeatureCount, static_cast<double>(i * 10));
    const auto m = build_matrix(rows);
    const std::vector<std::size_t> train{0, 1};
    const auto s = fit_standardization(m, train);
    EXPECT_DOUBLE_EQ(s.mean[0], 5.0);
    EXPECT_DOUBLE_EQ(s.scale[0], 5.0);
    EXPECT_DOUBLE_EQ(s.apply(0, 20.0), 3.0);
}

TEST(BuildMatrix, ShapeAndErrors) {
    std::vector<FeatureVector> rows(810);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].participant_id = "p" + std::to_string(i % 30);
        rows[i].values.assign(kFeatureCount, static_cast<double>(i));
    }
    const auto m = build_matrix(rows);
    EXPECT_EQ(m.size(), 810u);
    EXPECT_EQ(m.feature_names.size(), 46u);
    for (const auto& r : m.rows) EXPECT_EQ(r.values.size(), 46u);
    EXPECT_THROW(build_matrix({}), Error);
}

TEST(FeatureCsv, RoundTrip) {
    std::mt19937_64 rng(11);
    std::vector<FeatureVector> rows;
    for (int i = 0; i < 6; ++i) {
        auto trial = span_trial(5000 + 100 * i);
        trial.participant_id = "i0" + std::to_string(i);
        trial.class_label = Expertise::Intermediate;
        auto ev = mixed_events(rng);
        if (i == 2) ev.erase(std::remove_if(ev.begin(), ev.end(), [](const auto& e) { return e.kind == EventKind::SmoothPursuit; }), ev.end());
        rows.push_back(featurize_trial(ev, trial));
    }
    const auto m = build_matrix(rows);
    std::stringstream ss;
    write_feature_csv(ss, m);
    const auto back = read_feature_csv(ss);
    ASSERT_EQ(back.size(), m.size());
    EXPECT_EQ(back.feature_names, m.feature_names);
    for (std::size_t r = 0; r < m.size(); ++r) {
        EXPECT_EQ(back.rows[r].participant_id, m.rows[r].participant_id);
        EXPECT_EQ(back.rows[r].class_label, m.rows[r].class_label);
        EXPECT_EQ(back.rows[r].trial_key, m.rows[r].trial_key);
        EXPECT_EQ(back.rows[r].flagged, m.rows[r].flagged);
        for (std::size_t c = 0; c < kFeatureCount; ++c) {
            const double a = m.rows[r].values[c], b = back.rows[r].values[c];
            if (std::isnan(a)) EXPECT_TRUE(std::isnan(b));
            else EXPECT_EQ(a, b);
        }
    }
    EXPECT_TRUE(back.rows[2].flagged);
}
