#include "gazeclass/dataset.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

using namespace gazeclass;

namespace {

// Participants per class with a fixed number of rows each.
FeatureMatrix fleet(std::size_t experts, std::size_t intermediates, std::size_t novices, std::size_t rows_each) {
    std::vector<FeatureVector> rows;
    auto add = [&](Expertise cls, const char* prefix, std::size_t n) {
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t r = 0; r < rows_each; ++r) {
                FeatureVector v;
                v.participant_id = prefix + std::to_string(p);
                v.class_label = cls;
                v.trial_key = v.participant_id + ":" + std::to_string(r);
                v.values.assign(kFeatureCount, static_cast<double>(r));
                rows.push_back(std::move(v));
            }
        }
    };
    add(Expertise::Expert, "e", experts);
    add(Expertise::Intermediate, "i", intermediates);
    add(Expertise::Novice, "n", novices);
    return build_matrix(std::move(rows));
}

std::set<std::string> ids_of(const ParticipantsByClass& m) {
    std::set<std::string> out;
    for (const auto& [cls, ids] : m) out.insert(ids.begin(), ids.end());
    return out;
}

}  // namespace

TEST(Split, DefaultSizesGiveTwentyFourAndSix) {
    const auto m = fleet(12, 10, 13, 3);
    const auto plan = draw_split(participants_by_class(m), 42);
    std::size_t train = 0, hold = 0;
    for (const auto& [cls, ids] : plan.train) {
        EXPECT_EQ(ids.size(), 8u);
        train += ids.size();
    }
    for (const auto& [cls, ids] : plan.holdout) {
        EXPECT_EQ(ids.size(), 2u);
        hold += ids.size();
    }
    EXPECT_EQ(train, 24u);
    EXPECT_EQ(hold, 6u);
    const auto t = ids_of(plan.train), h = ids_of(plan.holdout);
    for (const auto& id : h) EXPECT_FALSE(t.contains(id));
    for (const auto& [cls, ids] : plan.train)
        for (const auto& id : ids) EXPECT_EQ(id[0], to_string(cls)[0]);
}

TEST(Split, DeterministicInSeed) {
    const auto p = participants_by_class(fleet(12, 10, 13, 1));
    EXPECT_EQ(draw_split(p, 7), draw_split(p, 7));
    bool differs = false;
    for (std::uint64_t s = 8; s < 20 && !differs; ++s) differs = !(draw_split(p, s).train == draw_split(p, 7).train);
    EXPECT_TRUE(differs);
}

TEST(Split, InsufficientParticipantsThrows) {
    const auto p = participants_by_class(fleet(9, 10, 13, 1));
    try {
        draw_split(p, 1);
        FAIL() << "expected throw";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("insufficient participants"), std::string::npos);
    }
    EXPECT_NO_THROW(draw_split(p, 1, {7, 2}));
}

TEST(Split, MaterializeRoutesEveryPlannedRow) {
    const auto m = fleet(12, 10, 13, 27);  // 35 participants
    const auto plan = draw_split(participants_by_class(m), 3);
    std::vector<std::string> warnings;
    const auto part = materialize(plan, m, &warnings);
    EXPECT_TRUE(warnings.empty());
    EXPECT_EQ(part.train.size() + part.holdout.size(), 30u * 27u);
    EXPECT_EQ(part.train.size(), 24u * 27u);
    std::set<std::string> tr, ho;
    for (auto r : part.train) tr.insert(m.rows[r].participant_id);
    for (auto r : part.holdout) ho.insert(m.rows[r].participant_id);
    for (const auto& id : ho) EXPECT_FALSE(tr.contains(id));
    EXPECT_EQ(tr, ids_of(plan.train));
    EXPECT_EQ(ho, ids_of(plan.holdout));
}

TEST(Split, ParticipantWithoutRowsWarnsAndLeavesHoldoutEmpty) {
    const auto m = fleet(3, 0, 0, 2);
    SplitPlan plan;
    plan.train[Expertise::Expert] = {"e0", "e1", "e2"};
    plan.holdout[Expertise::Expert] = {"ghost"};
    std::vector<std::string> warnings;
    const auto part = materialize(plan, m, &warnings);
    EXPECT_TRUE(part.holdout.empty());
    EXPECT_EQ(part.train.size(), 6u);
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_NE(warnings[0].find("ghost"), std::string::npos);
}

TEST(Split, OverlappingPlanThrows) {
    const auto m = fleet(3, 0, 0, 1);
    SplitPlan plan;
    plan.train[Expertise::Expert] = {"e0"};
    plan.holdout[Expertise::Expert] = {"e0"};
    EXPECT_THROW(materialize(plan, m), Error);
}

TEST(Split, DrawsAreRoughlyUniform) {
    const auto p = participants_by_class(fleet(12, 10, 10, 1));
    std::map<std::string, int> in_train;
    const int draws = 3000;
    for (int s = 0; s < draws; ++s) {
        const auto plan = draw_split(p, static_cast<std::uint64_t>(s));
        for (const auto& id : plan.train.at(Expertise::Expert)) ++in_train[id];
    }
    ASSERT_EQ(in_train.size(), 12u);
    for (const auto& [id, n] : in_train) EXPECT_NEAR(n / double(draws), 8.0 / 12.0, 0.04) << id;
}

TEST(Split, JsonRoundTrip) {
    const auto plan = draw_split(participants_by_class(fleet(12, 10, 13, 1)), 99);
    EXPECT_EQ(split_plan_from_json(to_json(plan)), plan);
}

TEST(RowSplit, FractionAndDisjointness) {
    const auto m = fleet(4, 4, 4, 10);
    const auto p = draw_row_split(m, 0.2, 5);
    EXPECT_EQ(p.holdout.size(), 24u);
    EXPECT_EQ(p.train.size(), 96u);
    std::set<std::size_t> all(p.train.begin(), p.train.end());
    for (auto r : p.holdout) EXPECT_TRUE(all.insert(r).second);
    EXPECT_EQ(all.size(), 120u);
}
