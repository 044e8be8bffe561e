#include "gazeclass/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace gazeclass {

MulticlassPrediction MulticlassModel::predict(std::span<const double> x) const {
    MulticlassPrediction p;
    for (const auto& m : machines) {
        const double d = m.model.decision(x);
        const Expertise winner = d > 0.0 ? m.positive : m.negative;
        ++p.votes[class_index(winner)];
        p.margin[class_index(winner)] += std::abs(d);
    }
    std::size_t best = class_index(classes.front());
    for (Expertise c : classes) {
        const std::size_t i = class_index(c);
        if (p.votes[i] > p.votes[best] || (p.votes[i] == p.votes[best] && p.margin[i] > p.margin[best])) best = i;
    }
    p.label = static_cast<Expertise>(best);
    return p;
}

namespace {

// Full-training alphas per class pair, indexed by training row.
using PairSeeds = std::map<std::pair<Expertise, Expertise>, std::vector<double>>;

PairSeeds seeds_from(const MulticlassModel& model, std::size_t rows) {
    PairSeeds seeds;
    for (const auto& m : model.machines) {
        auto& v = seeds[{m.positive, m.negative}];
        v.assign(rows, 0.0);
        for (std::size_t s = 0; s < m.model.support_indices.size(); ++s) v[m.model.support_indices[s]] = m.model.alphas[s];
    }
    return seeds;
}

MulticlassModel train_pairs(const std::shared_ptr<const RowMatrix>& training, const RowMatrix& gram,
                            std::span<const std::size_t> subset, std::span<const Expertise> labels, double C,
                            const KernelSpec& kernel, const SmoOptions& options, const PairSeeds* seeds) {
    std::set<Expertise> present;
    for (std::size_t r : subset) present.insert(labels[r]);
    if (present.size() < 2) throw Error("multiclass: need at least two classes");

    MulticlassModel model;
    model.classes.assign(present.begin(), present.end());
    std::vector<std::size_t> pair_rows;
    std::vector<int> pair_labels;
    std::vector<double> start;
    for (std::size_t a = 0; a < model.classes.size(); ++a) {
        for (std::size_t b = a + 1; b < model.classes.size(); ++b) {
            const Expertise pos = model.classes[a], neg = model.classes[b];
            pair_rows.clear();
            pair_labels.clear();
            for (std::size_t r : subset) {
                if (labels[r] == pos || labels[r] == neg) {
                    pair_rows.push_back(r);
                    pair_labels.push_back(labels[r] == pos ? 1 : -1);
                }
            }
            SmoOptions opt = options;
            if (seeds) {
                if (const auto it = seeds->find({pos, neg}); it != seeds->end()) {
                    start.clear();
                    for (std::size_t r : pair_rows) start.push_back(it->second[r]);
                    opt.initial_alpha = start;
                }
            }
            const auto sol = smo_solve(GramView(gram, pair_rows), pair_labels, C, opt);
            model.machines.push_back({pos, neg, make_model(training, pair_rows, pair_labels, sol, kernel, C)});
        }
    }
    return model;
}

}  // namespace

MulticlassModel multiclass_train(std::shared_ptr<const RowMatrix> training, const RowMatrix& gram,
                                 std::span<const std::size_t> subset, std::span<const Expertise> labels, double C,
                                 const KernelSpec& kernel, const SmoOptions& options) {
    return train_pairs(training, gram, subset, labels, C, kernel, options, nullptr);
}

MulticlassModel multiclass_train(const RowMatrix& rows, std::span<const Expertise> labels, double C,
                                 const KernelSpec& kernel, const SmoOptions& options) {
    if (labels.size() != rows.rows()) throw Error("multiclass: label count does not match rows");
    kernel.validate();
    auto training = std::make_shared<const RowMatrix>(rows);
    const RowMatrix gram = gram_matrix(*training, kernel);
    std::vector<std::size_t> all(rows.rows());
    std::iota(all.begin(), all.end(), 0);
    return multiclass_train(training, gram, all, labels, C, kernel, options);
}

namespace {

// Deal items round-robin over k folds after shuffling within each class,
// so every fold sees a balanced share of each class.
template <typename Item>
std::vector<std::vector<Item>> stratified_deal(std::map<Expertise, std::vector<Item>> by_class, std::size_t k,
                                               std::mt19937_64& rng) {
    std::vector<std::vector<Item>> folds(k);
    std::size_t next = 0;
    for (auto& [cls, items] : by_class) {
        std::shuffle(items.begin(), items.end(), rng);
        for (auto& it : items) {
            folds[next].push_back(it);
            next = (next + 1) % k;
        }
    }
    return folds;
}

}  // namespace

SvmEnsemble cv_ensemble_train(const RowMatrix& rows, std::span<const Expertise> labels,
                              std::span<const std::string> groups, const EnsembleConfig& config, std::uint64_t seed,
                              std::vector<std::string>* warnings) {
    const std::size_t n = rows.rows();
    if (labels.size() != n || groups.size() != n) throw Error("ensemble: rows, labels and groups differ in length");
    if (config.k < 2) throw Error("ensemble: k must be at least 2");
    if (n < config.k) throw Error("ensemble: fewer training rows than folds");
    config.kernel.validate();

    SvmEnsemble ens;
    ens.k = config.k;
    ens.C = config.C;
    ens.kernel = config.kernel;
    ens.training = std::make_shared<const RowMatrix>(rows);
    ens.fold_of_row.assign(n, 0);

    std::mt19937_64 rng(seed);
    std::map<std::string, Expertise> group_class;
    for (std::size_t r = 0; r < n; ++r) group_class.emplace(groups[r], labels[r]);

    if (group_class.size() >= config.k) {
        ens.participant_folds = true;
        std::map<Expertise, std::vector<std::string>> by_class;
        for (const auto& [g, c] : group_class) by_class[c].push_back(g);
        const auto folds = stratified_deal(std::move(by_class), config.k, rng);
        std::map<std::string, std::size_t> fold_of_group;
        for (std::size_t f = 0; f < folds.size(); ++f)
            for (const auto& g : folds[f]) fold_of_group[g] = f;
        for (std::size_t r = 0; r < n; ++r) ens.fold_of_row[r] = fold_of_group.at(groups[r]);
    } else {
        if (warnings) {
            warnings->push_back("k=" + std::to_string(config.k) + " exceeds the " +
                                std::to_string(group_class.size()) + " participant groups; using row-wise folds");
        }
        std::map<Expertise, std::vector<std::size_t>> by_class;
        for (std::size_t r = 0; r < n; ++r) by_class[labels[r]].push_back(r);
        const auto folds = stratified_deal(std::move(by_class), config.k, rng);
        for (std::size_t f = 0; f < folds.size(); ++f)
            for (std::size_t r : folds[f]) ens.fold_of_row[r] = f;
    }

    const RowMatrix gram = gram_matrix(*ens.training, config.kernel);
    // Each fold starts from the all-rows solution, which differs from the
    // fold optimum only around the held-out rows.
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    const PairSeeds seeds =
        seeds_from(train_pairs(ens.training, gram, all, labels, config.C, config.kernel, config.smo, nullptr), n);
    std::vector<std::size_t> out_of_fold;
    out_of_fold.reserve(n);
    for (std::size_t f = 0; f < config.k; ++f) {
        out_of_fold.clear();
        for (std::size_t r = 0; r < n; ++r)
            if (ens.fold_of_row[r] != f) out_of_fold.push_back(r);
        ens.folds.push_back(
            train_pairs(ens.training, gram, out_of_fold, labels, config.C, config.kernel, config.smo, &seeds));
        std::size_t correct = 0, total = 0;
        for (std::size_t r = 0; r < n; ++r) {
            if (ens.fold_of_row[r] != f) continue;
            ++total;
            if (ens.folds.back().predict(ens.training->row(r)).label == labels[r]) ++correct;
        }
        ens.fold_accuracy.push_back(total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total));
    }
    return ens;
}

EnsemblePrediction ensemble_predict(const SvmEnsemble& ensemble, std::span<const double> x) {
    EnsemblePrediction p;
    const double nf = static_cast<double>(ensemble.folds.size());
    for (const auto& model : ensemble.folds) {
        const auto mp = model.predict(x);
        p.vote_share[class_index(mp.label)] += 1.0 / nf;
        const double total = std::accumulate(mp.margin.begin(), mp.margin.end(), 0.0);
        for (std::size_t c = 0; c < kClassCount; ++c) {
            if (total > 0.0) p.margin_share[c] += mp.margin[c] / total / nf;
        }
    }
    std::size_t best = 0;
    bool found = false;
    for (const auto& model : ensemble.folds) {
        for (Expertise c : model.classes) {
            const std::size_t i = class_index(c);
            if (!found || p.vote_share[i] > p.vote_share[best] ||
                (p.vote_share[i] == p.vote_share[best] &&
                 (p.margin_share[i] > p.margin_share[best] || (p.margin_share[i] == p.margin_share[best] && i < best)))) {
                best = i;
                found = true;
            }
        }
        break;  // all folds share the class set
    }
    p.label = static_cast<Expertise>(best);
    return p;
}

namespace {

std::vector<FeatureWeight> rank(std::vector<double> weights, std::span<const std::string> names) {
    if (weights.size() != names.size()) throw Error("importance: feature name count does not match model width");
    std::vector<FeatureWeight> out;
    for (std::size_t j = 0; j < weights.size(); ++j) out.push_back({names[j], j, weights[j]});
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.weight > b.weight; });
    return out;
}

void accumulate_abs_weights(const MulticlassModel& model, std::vector<double>& acc) {
    for (const auto& m : model.machines) {
        if (m.model.kernel.kind != KernelKind::Linear) throw Error("importance defined for linear kernel only");
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += std::abs(m.model.weights[j]);
    }
}

}  // namespace

std::vector<FeatureWeight> feature_importance(const MulticlassModel& model, std::span<const std::string> names) {
    if (model.machines.empty()) throw Error("importance: empty model");
    std::vector<double> acc(model.machines.front().model.training->cols(), 0.0);
    accumulate_abs_weights(model, acc);
    return rank(std::move(acc), names);
}

std::vector<FeatureWeight> feature_importance(const SvmEnsemble& ensemble, std::span<const std::string> names) {
    if (ensemble.kernel.kind != KernelKind::Linear) throw Error("importance defined for linear kernel only");
    std::vector<double> acc(ensemble.training->cols(), 0.0);
    for (const auto& fold : ensemble.folds) accumulate_abs_weights(fold, acc);
    for (double& w : acc) w /= static_cast<double>(ensemble.folds.size());
    return rank(std::move(acc), names);
}

nlohmann::json to_json(const SvmEnsemble& ensemble) {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& fold : ensemble.folds) {
        nlohmann::json machines = nlohmann::json::array();
        for (const auto& m : fold.machines) {
            machines.push_back({{"positive", std::string(to_string(m.positive))},
                                {"negative", std::string(to_string(m.negative))},
                                {"support", m.model.support_indices},
                                {"alphas", m.model.alphas},
                                {"labels", m.model.labels},
                                {"bias", m.model.bias}});
        }
        nlohmann::json classes = nlohmann::json::array();
        for (Expertise c : fold.classes) classes.push_back(std::string(to_string(c)));
        folds.push_back({{"classes", std::move(classes)}, {"machines", std::move(machines)}});
    }
    const auto& t = *ensemble.training;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < t.rows(); ++r) {
        const auto row = t.row(r);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return {{"kernel", ensemble.kernel.kind == KernelKind::Linear ? "linear" : "rbf"},
            {"gamma", ensemble.kernel.gamma},
            {"C", ensemble.C},
            {"k", ensemble.k},
            {"participant_folds", ensemble.participant_folds},
            {"fold_of_row", ensemble.fold_of_row},
            {"fold_accuracy", ensemble.fold_accuracy},
            {"training_rows", std::move(rows)},
            {"folds", std::move(folds)}};
}

SvmEnsemble ensemble_from_json(const nlohmann::json& j) {
    SvmEnsemble ens;
    const auto kernel = j.at("kernel").get<std::string>();
    if (kernel != "linear" && kernel != "rbf") throw Error("model: unknown kernel " + kernel);
    ens.kernel.kind = kernel == "linear" ? KernelKind::Linear : KernelKind::Rbf;
    ens.kernel.gamma = j.at("gamma").get<double>();
    ens.C = j.at("C").get<double>();
    ens.k = j.at("k").get<std::size_t>();
    ens.participant_folds = j.at("participant_folds").get<bool>();
    ens.fold_of_row = j.at("fold_of_row").get<std::vector<std::size_t>>();
    ens.fold_accuracy = j.at("fold_accuracy").get<std::vector<double>>();
    RowMatrix rows;
    for (const auto& r : j.at("training_rows")) rows.append_row(r.get<std::vector<double>>());
    ens.training = std::make_shared<const RowMatrix>(std::move(rows));

    auto cls = [](const nlohmann::json& v) {
        const auto c = parse_expertise(v.get<std::string>());
        if (!c) throw Error("model: unknown class");
        return *c;
    };
    for (const auto& jf : j.at("folds")) {
        MulticlassModel fold;
        for (const auto& c : jf.at("classes")) fold.classes.push_back(cls(c));
        for (const auto& jm : jf.at("machines")) {
            BinaryMachine m;
            m.positive = cls(jm.at("positive"));
            m.negative = cls(jm.at("negative"));
            m.model.kernel = ens.kernel;
            m.model.C = ens.C;
            m.model.training = ens.training;
            m.model.support_indices = jm.at("support").get<std::vector<std::size_t>>();
            m.model.alphas = jm.at("alphas").get<std::vector<double>>();
            m.model.labels = jm.at("labels").get<std::vector<int>>();
            m.model.bias = jm.at("bias").get<double>();
            for (std::size_t idx : m.model.support_indices) {
                if (idx >= ens.training->rows()) throw Error("model: support index out of range");
            }
            refresh_weights(m.model);
            fold.machines.push_back(std::move(m));
        }
        ens.folds.push_back(std::move(fold));
    }
    return ens;
}

}  // namespace gazeclass
