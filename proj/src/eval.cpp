#include "gazeclass/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace gazeclass {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? kNaN : static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::json number_or_null(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

}  // namespace

std::size_t ConfusionMatrix::total() const {
    std::size_t t = 0;
    for (const auto& row : counts) t += std::accumulate(row.begin(), row.end(), std::size_t{0});
    return t;
}

std::size_t ConfusionMatrix::row_sum(Expertise c) const {
    const auto& row = counts[class_index(c)];
    return std::accumulate(row.begin(), row.end(), std::size_t{0});
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    for (std::size_t i = 0; i < kClassCount; ++i)
        for (std::size_t j = 0; j < kClassCount; ++j) counts[i][j] += other.counts[i][j];
    std::set<Expertise> seen(classes.begin(), classes.end());
    seen.insert(other.classes.begin(), other.classes.end());
    classes.assign(seen.begin(), seen.end());
    return *this;
}

ConfusionMatrix confusion_matrix(std::span<const Expertise> predictions, std::span<const Expertise> truths) {
    if (predictions.size() != truths.size()) throw Error("score: predictions and truths differ in length");
    if (truths.empty()) throw Error("score: empty input");
    ConfusionMatrix cm;
    std::set<Expertise> seen;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        ++cm.counts[class_index(truths[i])][class_index(predictions[i])];
        seen.insert(truths[i]);
        seen.insert(predictions[i]);
    }
    cm.classes.assign(seen.begin(), seen.end());
    return cm;
}

ScoreReport score(const ConfusionMatrix& cm) {
    ScoreReport s;
    s.confusion = cm;
    std::size_t correct = 0;
    for (std::size_t c = 0; c < kClassCount; ++c) correct += cm.counts[c][c];
    s.accuracy = ratio(correct, cm.total());

    double recall_sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t c = 0; c < kClassCount; ++c) {
        s.recall[c] = ratio(cm.counts[c][c], cm.row_sum(static_cast<Expertise>(c)));
        s.miss_rate[c] = 1.0 - s.recall[c];
        if (!std::isnan(s.recall[c])) {
            recall_sum += s.recall[c];
            ++defined;
        }
    }
    s.macro_recall = defined == 0 ? kNaN : recall_sum / static_cast<double>(defined);
    s.macro_miss_rate = 1.0 - s.macro_recall;

    if (cm.classes.size() == 2) {
        BinaryRates b;
        b.negative = cm.classes[0];
        b.positive = cm.classes[1];
        const std::size_t p = class_index(b.positive), n = class_index(b.negative);
        b.tp = cm.counts[p][p];
        b.fn = cm.counts[p][n];
        b.tn = cm.counts[n][n];
        b.fp = cm.counts[n][p];
        b.false_positive_rate = ratio(b.fp, b.fp + b.tn);
        b.false_negative_rate = ratio(b.fn, b.fn + b.tp);
        b.false_omission_rate = ratio(b.fn, b.fn + b.tn);
        s.binary = b;
    }
    return s;
}

ScoreReport score(std::span<const Expertise> predictions, std::span<const Expertise> truths) {
    return score(confusion_matrix(predictions, truths));
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw Error("quantile of empty sample");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

RunDistribution summarize_runs(std::span<const double> values) {
    RunDistribution d;
    for (double v : values)
        if (!std::isnan(v)) d.values.push_back(v);
    if (d.values.empty()) throw Error("summarize_runs: no values");
    std::vector<double> sorted = d.values;
    std::sort(sorted.begin(), sorted.end());
    d.q1 = quantile_sorted(sorted, 0.25);
    d.median = quantile_sorted(sorted, 0.5);
    d.q3 = quantile_sorted(sorted, 0.75);
    const double iqr = d.q3 - d.q1;
    const double low_fence = d.q1 - 1.5 * iqr, high_fence = d.q3 + 1.5 * iqr;
    d.lower_adjacent = *std::find_if(sorted.begin(), sorted.end(), [&](double v) { return v >= low_fence; });
    d.upper_adjacent = *std::find_if(sorted.rbegin(), sorted.rend(), [&](double v) { return v <= high_fence; });
    d.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
    return d;
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
    nlohmann::json classes = nlohmann::json::array();
    nlohmann::json rows = nlohmann::json::array();
    for (Expertise t : cm.classes) {
        classes.push_back(std::string(to_string(t)));
        nlohmann::json row = nlohmann::json::array();
        for (Expertise p : cm.classes) row.push_back(cm.counts[class_index(t)][class_index(p)]);
        rows.push_back(std::move(row));
    }
    return {{"classes", std::move(classes)}, {"counts", std::move(rows)}};
}

nlohmann::json to_json(const ScoreReport& s) {
    nlohmann::json recall = nlohmann::json::object(), miss = nlohmann::json::object();
    for (Expertise c : s.confusion.classes) {
        recall[std::string(to_string(c))] = number_or_null(s.recall[class_index(c)]);
        miss[std::string(to_string(c))] = number_or_null(s.miss_rate[class_index(c)]);
    }
    nlohmann::json j = {{"confusion", to_json(s.confusion)},
                        {"accuracy", number_or_null(s.accuracy)},
                        {"recall", std::move(recall)},
                        {"miss_rate", std::move(miss)},
                        {"macro_recall", number_or_null(s.macro_recall)},
                        {"macro_miss_rate", number_or_null(s.macro_miss_rate)}};
    if (s.binary) {
        const auto& b = *s.binary;
        j["binary"] = {{"positive", std::string(to_string(b.positive))},
                       {"negative", std::string(to_string(b.negative))},
                       {"tp", b.tp}, {"fp", b.fp}, {"tn", b.tn}, {"fn", b.fn},
                       {"false_positive_rate", number_or_null(b.false_positive_rate)},
                       {"false_negative_rate", number_or_null(b.false_negative_rate)},
                       {"false_omission_rate", number_or_null(b.false_omission_rate)}};
    }
    return j;
}

nlohmann::json to_json(const RunDistribution& d) {
    return {{"n", d.values.size()},       {"median", d.median},
            {"q1", d.q1},                 {"q3", d.q3},
            {"lower_adjacent", d.lower_adjacent}, {"upper_adjacent", d.upper_adjacent},
            {"mean", d.mean}};
}

}  // namespace gazeclass
