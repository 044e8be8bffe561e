#include "gazeclass/experiment.hpp"

#include "gazeclass/parallel.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

namespace gazeclass {

FeatureMatrix restrict_classes(const FeatureMatrix& matrix, std::span<const Expertise> classes) {
    std::vector<FeatureVector> kept;
    for (const auto& row : matrix.rows) {
        if (std::find(classes.begin(), classes.end(), row.class_label) != classes.end()) kept.push_back(row);
    }
    if (kept.empty()) throw Error("no rows of the requested classes");
    return build_matrix(std::move(kept));
}

std::vector<Expertise> train_and_predict(const FeatureMatrix& matrix, std::span<const Expertise> labels,
                                         std::span<const std::size_t> train, std::span<const std::size_t> holdout,
                                         std::span<const std::size_t> columns, const EnsembleConfig& config,
                                         std::uint64_t seed) {
    const Standardization scaling = fit_standardization(matrix, train);
    const RowMatrix x = standardized_rows(matrix, scaling, train, columns);
    std::vector<Expertise> y;
    std::vector<std::string> groups;
    for (std::size_t r : train) {
        y.push_back(labels[r]);
        groups.push_back(matrix.rows[r].participant_id);
    }
    const auto ens = cv_ensemble_train(x, y, groups, config, seed);
    const RowMatrix test = standardized_rows(matrix, scaling, holdout, columns);
    std::vector<Expertise> out;
    out.reserve(holdout.size());
    for (std::size_t i = 0; i < test.rows(); ++i) out.push_back(ensemble_predict(ens, test.row(i)).label);
    return out;
}

ExperimentResult run_experiment(const FeatureMatrix& matrix, std::span<const std::size_t> columns,
                                const ExperimentConfig& config, std::uint64_t seed) {
    if (config.runs == 0) throw Error("experiment: runs must be positive");
    if (columns.empty()) throw Error("experiment: no feature columns selected");
    const auto participants = participants_by_class(matrix);
    std::vector<Expertise> labels;
    for (const auto& row : matrix.rows) labels.push_back(row.class_label);

    ExperimentResult result;
    result.runs.resize(config.runs);
    parallel_for(config.runs, config.jobs, [&](std::size_t run) {
        const std::uint64_t run_seed = derive_seed(seed, run);
        Partition part;
        if (config.mode == SplitMode::Participant) {
            part = materialize(draw_split(participants, derive_seed(run_seed, 0), config.split), matrix);
        } else {
            part = draw_row_split(matrix, config.row_holdout_fraction, derive_seed(run_seed, 0));
        }
        if (part.holdout.empty()) throw Error("experiment: empty holdout partition");
        const auto preds =
            train_and_predict(matrix, labels, part.train, part.holdout, columns, config.ensemble, derive_seed(run_seed, 1));
        std::vector<Expertise> truths;
        for (std::size_t r : part.holdout) truths.push_back(labels[r]);
        auto& rec = result.runs[run];
        rec.run = run;
        rec.seed = run_seed;
        rec.train_rows = part.train.size();
        rec.holdout_rows = part.holdout.size();
        rec.score = score(preds, truths);
    });

    std::vector<double> acc, miss;
    for (const auto& rec : result.runs) {
        acc.push_back(rec.score.accuracy);
        miss.push_back(rec.score.macro_miss_rate);
        result.pooled += rec.score.confusion;
    }
    result.accuracy = summarize_runs(acc);
    result.macro_miss_rate = summarize_runs(miss);
    return result;
}

namespace {

// Binary holdout accuracy for one iteration. `positive` and `negative`
// hold participant ids; their rows get labels Expert and Intermediate.
double binary_holdout_accuracy(const FeatureMatrix& matrix, std::vector<std::string> positive,
                               std::vector<std::string> negative, std::span<const std::size_t> columns,
                               const FlipTestConfig& config, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::shuffle(positive.begin(), positive.end(), rng);
    std::shuffle(negative.begin(), negative.end(), rng);
    const std::size_t h = config.holdout_per_group;
    std::map<std::string, std::pair<Expertise, bool>> role;  // label, held out
    for (std::size_t i = 0; i < positive.size(); ++i) role[positive[i]] = {Expertise::Expert, i < h};
    for (std::size_t i = 0; i < negative.size(); ++i) role[negative[i]] = {Expertise::Intermediate, i < h};

    std::vector<Expertise> labels(matrix.size(), Expertise::Novice);
    std::vector<std::size_t> train, holdout;
    for (std::size_t r = 0; r < matrix.size(); ++r) {
        const auto it = role.find(matrix.rows[r].participant_id);
        if (it == role.end()) continue;
        labels[r] = it->second.first;
        (it->second.second ? holdout : train).push_back(r);
    }
    if (holdout.empty()) throw Error("flip test: held-out participants have no rows");
    const auto preds = train_and_predict(matrix, labels, train, holdout, columns, config.ensemble, derive_seed(seed, 1));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < holdout.size(); ++i) correct += preds[i] == labels[holdout[i]];
    return static_cast<double>(correct) / static_cast<double>(holdout.size());
}

}  // namespace

FlipTestResult flip_test(const FeatureMatrix& matrix, std::span<const std::size_t> columns,
                         const FlipTestConfig& config, std::uint64_t seed) {
    if (config.iterations == 0) throw Error("flip test: iterations must be positive");
    auto participants = participants_by_class(matrix);
    const auto experts = participants[Expertise::Expert];
    if (experts.size() < 4) throw Error("flip test: need at least 4 expert participants");

    FlipTestResult result;
    result.experts = experts.size();
    result.flipped_per_iteration = experts.size() / 2;
    if (experts.size() % 2 == 1) {
        result.warnings.push_back("odd expert count " + std::to_string(experts.size()) + "; flipping " +
                                  std::to_string(result.flipped_per_iteration));
    }
    const std::size_t smaller = experts.size() - result.flipped_per_iteration;
    if (config.holdout_per_group == 0 || config.holdout_per_group >= std::min(result.flipped_per_iteration, smaller)) {
        throw Error("flip test: holdout_per_group leaves no training participants");
    }
    const auto& intermediates = participants[Expertise::Intermediate];
    const bool with_reference = intermediates.size() > config.holdout_per_group;

    std::vector<double> flipped(config.iterations), reference(with_reference ? config.iterations : 0);
    parallel_for(config.iterations, config.jobs, [&](std::size_t it) {
        const std::uint64_t it_seed = derive_seed(seed, it);
        std::vector<std::string> shuffled = experts;
        std::mt19937_64 rng(derive_seed(it_seed, 0));
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const auto mid = shuffled.begin() + static_cast<std::ptrdiff_t>(result.flipped_per_iteration);
        std::vector<std::string> relabeled(shuffled.begin(), mid), kept(mid, shuffled.end());
        flipped[it] = binary_holdout_accuracy(matrix, kept, relabeled, columns, config, derive_seed(it_seed, 1));
        if (with_reference) {
            reference[it] =
                binary_holdout_accuracy(matrix, experts, intermediates, columns, config, derive_seed(it_seed, 2));
        }
    });
    result.flipped = summarize_runs(flipped);
    if (with_reference) result.reference = summarize_runs(reference);
    return result;
}

nlohmann::json to_json(const ExperimentResult& r) {
    return {{"runs", r.runs.size()},
            {"accuracy", to_json(r.accuracy)},
            {"macro_miss_rate", to_json(r.macro_miss_rate)},
            {"pooled", to_json(score(r.pooled))}};
}

nlohmann::json to_json(const FlipTestResult& r) {
    nlohmann::json j = {{"experts", r.experts},
                        {"flipped_per_iteration", r.flipped_per_iteration},
                        {"flipped", to_json(r.flipped)},
                        {"flipped_accuracies", r.flipped.values},
                        {"warnings", r.warnings}};
    j["reference"] = r.reference ? to_json(*r.reference) : nlohmann::json(nullptr);
    return j;
}

void write_runs_csv(std::ostream& out, const std::string& label, const ExperimentResult& r, bool header) {
    if (header) {
        out << "model,run,seed,train_rows,holdout_rows,accuracy,macro_miss_rate";
        for (Expertise c : kAllClasses) out << ",miss_" << to_string(c);
        out << '\n';
    }
    for (const auto& rec : r.runs) {
        out << label << ',' << rec.run << ',' << rec.seed << ',' << rec.train_rows << ',' << rec.holdout_rows << ','
            << detail::format_double(rec.score.accuracy) << ',' << detail::format_double(rec.score.macro_miss_rate);
        for (Expertise c : kAllClasses) out << ',' << detail::format_double(rec.score.miss_rate[class_index(c)]);
        out << '\n';
    }
}

}  // namespace gazeclass
