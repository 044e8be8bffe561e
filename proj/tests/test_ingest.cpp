#include "gazeclass/gaze_ingest.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>
#include <sstream>

using namespace gazeclass;

namespace {

const char* kHeader = "participant,class,stimulus,block,t_ms,x_px,y_px,valid\n";

std::string trial_rows(const std::string& participant, const std::string& cls, int stimulus, int block,
                       std::size_t samples, std::size_t invalid) {
    std::ostringstream s;
    for (std::size_t i = 0; i < samples; ++i) {
        const bool bad = i < invalid;
        s << participant << ',' << cls << ',' << stimulus << ',' << block << ',' << 4 * i << ','
          << (bad ? 0 : 500 + static_cast<int>(i)) << ',' << (bad ? 0 : 400) << ",1\n";
    }
    return s.str();
}

ParseResult parse(const std::string& text, const ColumnMapping& m = {}) {
    std::istringstream in(text);
    return parse_gaze_log(in, m);
}

}  // namespace

TEST(Ingest, ThreeValidRowsGiveOneTrialWithFullRatio) {
    const auto r = parse(std::string(kHeader) + trial_rows("p1", "expert", 1, 1, 3, 0));
    ASSERT_EQ(r.trials.size(), 1u);
    EXPECT_EQ(r.trials[0].samples.size(), 3u);
    EXPECT_DOUBLE_EQ(r.trials[0].tracking_ratio, 1.0);
    EXPECT_EQ(r.trials[0].class_label, Expertise::Expert);
}

TEST(Ingest, OneZeroSampleOfFourGivesThreeQuarters) {
    const auto r = parse(std::string(kHeader) + trial_rows("p1", "novice", 3, 2, 4, 1));
    ASSERT_EQ(r.trials.size(), 1u);
    EXPECT_DOUBLE_EQ(r.trials[0].tracking_ratio, 0.75);
}

TEST(Ingest, ValidFlagZeroCountsAsInvalid) {
    const auto r = parse(std::string(kHeader) + "p,expert,1,1,0,5,5,1\np,expert,1,1,4,5,5,0\n");
    ASSERT_EQ(r.trials.size(), 1u);
    EXPECT_DOUBLE_EQ(r.trials[0].tracking_ratio, 0.5);
}

TEST(Ingest, ParticipantWithElevenLowRatioTrialsKeepsFortyOne) {
    std::string text = kHeader;
    for (int t = 0; t < 52; ++t) {
        const int stimulus = t % 26 + 1, block = t / 26 + 1;
        text += trial_rows("p01", "expert", stimulus, block, 20, t < 11 ? 6 : 0);  // 14/20 = 0.7
    }
    const auto r = parse(text);
    ASSERT_EQ(r.trials.size(), 52u);
    const auto m = apply_quality_gate(r.trials);
    EXPECT_EQ(m.trials.size(), 41u);
    EXPECT_EQ(m.dropped.size(), 11u);
    for (const auto& d : m.dropped) EXPECT_EQ(d.reason, "low tracking ratio");
}

TEST(Ingest, QualityGateBoundaryIsStrict) {
    TrialRecord low, edge;
    low.tracking_ratio = 0.749;
    low.participant_id = "a";
    edge.tracking_ratio = 0.75;
    edge.participant_id = "b";
    const auto m = apply_quality_gate({low, edge});
    ASSERT_EQ(m.trials.size(), 1u);
    EXPECT_EQ(m.trials[0].participant_id, "b");
    ASSERT_EQ(m.dropped.size(), 1u);
    EXPECT_EQ(m.dropped[0].participant_id, "a");
}

TEST(Ingest, EmptyTrialListGivesEmptyManifest) {
    const auto m = apply_quality_gate({});
    EXPECT_TRUE(m.trials.empty());
    EXPECT_TRUE(m.dropped.empty());
}

TEST(Ingest, FleetWithFiftyEightPlantedLowTrialsKeeps1658) {
    // 33 participants x 52 trials = 1716; losses 11, 11, 35, 1.
    std::vector<TrialRecord> trials;
    const std::map<int, int> lost{{1, 11}, {8, 11}, {18, 35}, {33, 1}};
    for (int p = 1; p <= 33; ++p) {
        const int n_lost = lost.count(p) ? lost.at(p) : 0;
        for (int t = 0; t < 52; ++t) {
            TrialRecord tr;
            tr.participant_id = "p" + std::to_string(p);
            tr.stimulus_id = t % 26 + 1;
            tr.block = t / 26 + 1;
            tr.tracking_ratio = t < n_lost ? 0.6 : 0.95;
            trials.push_back(tr);
        }
    }
    ASSERT_EQ(trials.size(), 1716u);
    const auto m = apply_quality_gate(trials);
    EXPECT_EQ(m.trials.size(), 1658u);
    EXPECT_EQ(m.dropped.size(), 58u);
}

TEST(Ingest, MissingColumnIsFatal) {
    EXPECT_THROW(parse("participant,class,stimulus,block,t_ms,x_px,y_px\n"), Error);
}

TEST(Ingest, MalformedRowReportsLineNumber) {
    const auto r = parse(std::string(kHeader) + "p,expert,1,1,0,5,5,1\np,expert,1,1,oops,5,5,1\np,expert,1,1,8,5,5,1\n");
    ASSERT_EQ(r.row_errors.size(), 1u);
    EXPECT_EQ(r.row_errors[0].line, 3u);
    ASSERT_EQ(r.trials.size(), 1u);
    EXPECT_EQ(r.trials[0].samples.size(), 2u);
}

TEST(Ingest, NonMonotoneTrialIsRejected) {
    const auto r = parse(std::string(kHeader) + "p,expert,1,1,0,5,5,1\np,expert,1,1,8,5,5,1\np,expert,1,1,4,5,5,1\n" +
                         "p,expert,2,1,0,5,5,1\np,expert,2,1,4,5,5,1\n");
    ASSERT_EQ(r.trials.size(), 1u);
    EXPECT_EQ(r.trials[0].stimulus_id, 2);
    ASSERT_EQ(r.rejected.size(), 1u);
    EXPECT_EQ(r.rejected[0].reason, "non-monotone time");
}

TEST(Ingest, ColumnMappingSidecarRenamesColumns) {
    const auto m = ColumnMapping::from_json(
        nlohmann::json{{"time", "Timestamp"}, {"x", "GazeX"}, {"y", "GazeY"}, {"delimiter", ";"}});
    const auto r = parse("participant;class;stimulus;block;Timestamp;GazeX;GazeY;valid\np;N;1;1;0;1;2;1\np;N;1;1;4;1;2;1\n", m);
    ASSERT_EQ(r.trials.size(), 1u);
    EXPECT_EQ(r.trials[0].class_label, Expertise::Novice);
}

TEST(Ingest, OffNominalRateWarns) {
    const auto r = parse(std::string(kHeader) + "p,expert,1,1,0,5,5,1\np,expert,1,1,10,5,5,1\np,expert,1,1,20,5,5,1\n");
    EXPECT_FALSE(r.warnings.empty());
}

TEST(Ingest, ManifestRoundTripIsIdentity) {
    std::string text = kHeader;
    text += trial_rows("p1", "expert", 1, 1, 10, 3);
    text += trial_rows("p2", "novice", 4, 2, 12, 0);
    const auto first = parse(text);
    const auto manifest = apply_quality_gate(first.trials);

    std::ostringstream csv;
    write_gaze_csv(csv, manifest.trials);
    const auto second = parse(csv.str());
    EXPECT_EQ(second.trials, manifest.trials);

    const auto back = manifest_from_json(nlohmann::json::parse(to_json(manifest).dump()));
    EXPECT_EQ(back.trials, manifest.trials);
    EXPECT_EQ(back.dropped, manifest.dropped);
}

TEST(Ingest, KeptPlusDroppedEqualsInputAndRatioBounded) {
    std::mt19937 rng(5);
    for (int round = 0; round < 50; ++round) {
        std::vector<TrialRecord> trials(rng() % 30);
        for (auto& t : trials) {
            const std::size_t n = 1 + rng() % 20;
            for (std::size_t i = 0; i < n; ++i)
                t.samples.push_back({4.0 * i, rng() % 3 == 0 ? 0.0 : 10.0, 10.0, rng() % 5 != 0});
            t.tracking_ratio = tracking_ratio(t.samples);
            EXPECT_GE(t.tracking_ratio, 0.0);
            EXPECT_LE(t.tracking_ratio, 1.0);
        }
        const auto m = apply_quality_gate(trials);
        EXPECT_EQ(m.trials.size() + m.dropped.size(), trials.size());
    }
}
