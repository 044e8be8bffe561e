#pragma once

// Participant-wise train/holdout assignment.

#include "gazeclass/featurize.hpp"
#include "gazeclass/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gazeclass {

using ParticipantsByClass = std::map<Expertise, std::vector<std::string>>;

struct SplitSizes {
    std::size_t train_per_class = 8;
    std::size_t holdout_per_class = 2;
};

struct SplitPlan {
    ParticipantsByClass train;
    ParticipantsByClass holdout;
    std::uint64_t seed = 0;

    bool operator==(const SplitPlan&) const = default;
};

// Participants that own at least one row, sorted per class.
ParticipantsByClass participants_by_class(const FeatureMatrix& matrix);

// Uniform draw of train participants per class, then holdout participants
// from the remainder. Deterministic in the seed. Throws
// "insufficient participants" when a class cannot fill both sets.
SplitPlan draw_split(const ParticipantsByClass& participants, std::uint64_t seed, const SplitSizes& sizes = {});

struct Partition {
    std::vector<std::size_t> train;    // row indices
    std::vector<std::size_t> holdout;
};

// Routes each row by its participant. Rows of participants in neither set
// are left out. Planned participants without rows produce a warning.
Partition materialize(const SplitPlan& plan, const FeatureMatrix& matrix, std::vector<std::string>* warnings = nullptr);

// Row-level random split that ignores participant identity. Only used to
// demonstrate identity leakage.
Partition draw_row_split(const FeatureMatrix& matrix, double holdout_fraction, std::uint64_t seed);

nlohmann::json to_json(const SplitPlan& plan);
SplitPlan split_plan_from_json(const nlohmann::json& j);

}  // namespace gazeclass
