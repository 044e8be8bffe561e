#pragma once

// One-vs-one multiclass reduction and the k-fold cross-validation ensemble.

#include "gazeclass/svm.hpp"
#include "gazeclass/types.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gazeclass {

// decision > 0 votes for `positive`, otherwise for `negative`.
struct BinaryMachine {
    Expertise positive = Expertise::Novice;
    Expertise negative = Expertise::Intermediate;
    SvmModel model;
};

struct MulticlassPrediction {
    Expertise label = Expertise::Novice;
    std::array<int, kClassCount> votes{};
    std::array<double, kClassCount> margin{};  // summed |decision| of contests won
};

// Majority vote over pairwise machines; ties go to the larger summed
// |decision|, then to the lower class index.
struct MulticlassModel {
    std::vector<Expertise> classes;  // ascending
    std::vector<BinaryMachine> machines;

    MulticlassPrediction predict(std::span<const double> x) const;
};

MulticlassModel multiclass_train(const RowMatrix& rows, std::span<const Expertise> labels, double C,
                                 const KernelSpec& kernel, const SmoOptions& options = {});

// Trains on the rows listed in `subset`, reusing a Gram matrix computed
// over all of *training. `labels` is indexed by training row.
MulticlassModel multiclass_train(std::shared_ptr<const RowMatrix> training, const RowMatrix& gram,
                                 std::span<const std::size_t> subset, std::span<const Expertise> labels, double C,
                                 const KernelSpec& kernel, const SmoOptions& options = {});

struct EnsembleConfig {
    std::size_t k = 50;
    double C = 1.0;
    KernelSpec kernel;
    SmoOptions smo;
};

struct SvmEnsemble {
    std::size_t k = 0;
    double C = 1.0;
    KernelSpec kernel;
    std::shared_ptr<const RowMatrix> training;
    std::vector<MulticlassModel> folds;
    std::vector<std::size_t> fold_of_row;  // in-fold assignment of each training row
    std::vector<double> fold_accuracy;     // on in-fold rows
    bool participant_folds = false;
};

struct EnsemblePrediction {
    Expertise label = Expertise::Novice;
    std::array<double, kClassCount> vote_share{};    // fraction of folds predicting each class
    std::array<double, kClassCount> margin_share{};  // mean |decision|-weighted vote share
};

// Model i trains on every row outside fold i and is validated on fold i.
// Folds are built from participant groups when there are at least k of
// them, otherwise row-wise (stratified by class, sizes within one).
SvmEnsemble cv_ensemble_train(const RowMatrix& rows, std::span<const Expertise> labels,
                              std::span<const std::string> groups, const EnsembleConfig& config, std::uint64_t seed,
                              std::vector<std::string>* warnings = nullptr);

// Averages vote shares over folds; ties in vote share are broken by the
// margin share, then by class order.
EnsemblePrediction ensemble_predict(const SvmEnsemble& ensemble, std::span<const double> x);

struct FeatureWeight {
    std::string feature;
    std::size_t column = 0;
    double weight = 0.0;
};

// |w_j| summed over the pairwise machines (and averaged over folds), sorted
// descending. Linear kernel only.
std::vector<FeatureWeight> feature_importance(const MulticlassModel& model, std::span<const std::string> names);
std::vector<FeatureWeight> feature_importance(const SvmEnsemble& ensemble, std::span<const std::string> names);

nlohmann::json to_json(const SvmEnsemble& ensemble);
SvmEnsemble ensemble_from_json(const nlohmann::json& j);

}  // namespace gazeclass
