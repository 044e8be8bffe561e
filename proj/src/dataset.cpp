#include "gazeclass/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

namespace gazeclass {

ParticipantsByClass participants_by_class(const FeatureMatrix& matrix) {
    std::map<Expertise, std::set<std::string>> sets;
    for (const auto& r : matrix.rows) sets[r.class_label].insert(r.participant_id);
    ParticipantsByClass out;
    for (auto& [cls, ids] : sets) out[cls].assign(ids.begin(), ids.end());
    return out;
}

SplitPlan draw_split(const ParticipantsByClass& participants, std::uint64_t seed, const SplitSizes& sizes) {
    SplitPlan plan;
    plan.seed = seed;
    std::mt19937_64 rng(seed);
    for (const auto& [cls, ids] : participants) {
        if (ids.size() < sizes.train_per_class + sizes.holdout_per_class) {
            throw Error("insufficient participants for class " + std::string(to_string(cls)) + ": have " +
                        std::to_string(ids.size()) + ", need " +
                        std::to_string(sizes.train_per_class + sizes.holdout_per_class));
        }
        std::vector<std::string> shuffled = ids;
        std::sort(shuffled.begin(), shuffled.end());
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        auto& train = plan.train[cls];
        auto& holdout = plan.holdout[cls];
        const auto t_end = shuffled.begin() + static_cast<std::ptrdiff_t>(sizes.train_per_class);
        train.assign(shuffled.begin(), t_end);
        holdout.assign(t_end, t_end + static_cast<std::ptrdiff_t>(sizes.holdout_per_class));
        std::sort(train.begin(), train.end());
        std::sort(holdout.begin(), holdout.end());
    }
    return plan;
}

Partition materialize(const SplitPlan& plan, const FeatureMatrix& matrix, std::vector<std::string>* warnings) {
    enum class Side { Train, Holdout };
    std::unordered_map<std::string, Side> side;
    for (const auto& [cls, ids] : plan.train)
        for (const auto& id : ids) side[id] = Side::Train;
    for (const auto& [cls, ids] : plan.holdout) {
        for (const auto& id : ids) {
            const auto [it, inserted] = side.emplace(id, Side::Holdout);
            if (!inserted) throw Error("split plan places participant " + id + " in both train and holdout");
        }
    }

    Partition p;
    std::unordered_map<std::string, std::size_t> row_counts;
    for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
        const auto it = side.find(matrix.rows[i].participant_id);
        if (it == side.end()) continue;
        ++row_counts[it->first];
        (it->second == Side::Train ? p.train : p.holdout).push_back(i);
    }
    if (warnings) {
        for (const auto& [id, s] : side) {
            if (!row_counts.contains(id)) warnings->push_back("participant " + id + " has no rows");
        }
        std::sort(warnings->begin(), warnings->end());
    }
    return p;
}

Partition draw_row_split(const FeatureMatrix& matrix, double holdout_fraction, std::uint64_t seed) {
    std::vector<std::size_t> idx(matrix.rows.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_hold = static_cast<std::size_t>(std::round(holdout_fraction * static_cast<double>(idx.size())));
    Partition p;
    p.holdout.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_hold));
    p.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_hold), idx.end());
    std::sort(p.train.begin(), p.train.end());
    std::sort(p.holdout.begin(), p.holdout.end());
    return p;
}

nlohmann::json to_json(const SplitPlan& plan) {
    auto side = [](const ParticipantsByClass& m) {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [cls, ids] : m) j[std::string(to_string(cls))] = ids;
        return j;
    };
    return {{"seed", plan.seed}, {"train", side(plan.train)}, {"holdout", side(plan.holdout)}};
}

SplitPlan split_plan_from_json(const nlohmann::json& j) {
    auto side = [](const nlohmann::json& js) {
        ParticipantsByClass m;
        for (const auto& [name, ids] : js.items()) {
            const auto cls = parse_expertise(name);
            if (!cls) throw Error("split plan: unknown class " + name);
            m[*cls] = ids.get<std::vector<std::string>>();
        }
        return m;
    };
    SplitPlan p;
    p.seed = j.at("seed").get<std::uint64_t>();
    p.train = side(j.at("train"));
    p.holdout = side(j.at("holdout"));
    return p;
}

}  // namespace gazeclass
