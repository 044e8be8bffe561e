#include "gazeclass/stats.hpp"

#include "gazeclass/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace gazeclass {

namespace {

struct Ranked {
    std::vector<long> doubled_ranks;  // 2 * midrank, always an integer
    double tie_term = 0.0;            // sum of t^3 - t over tie groups
};

Ranked rank_pooled(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t n = xs.size() + ys.size();
    std::vector<std::pair<double, std::size_t>> pooled;
    pooled.reserve(n);
    for (std::size_t i = 0; i < xs.size(); ++i) pooled.emplace_back(xs[i], i);
    for (std::size_t i = 0; i < ys.size(); ++i) pooled.emplace_back(ys[i], xs.size() + i);
    std::sort(pooled.begin(), pooled.end());

    Ranked r;
    r.doubled_ranks.assign(n, 0);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && pooled[j + 1].first == pooled[i].first) ++j;
        // ranks i+1 .. j+1 share the midrank (i + j + 2) / 2
        const long doubled = static_cast<long>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k) r.doubled_ranks[pooled[k].second] = doubled;
        const double t = static_cast<double>(j - i + 1);
        r.tie_term += t * t * t - t;
        i = j + 1;
    }
    return r;
}

void check_inputs(std::span<const double> xs, std::span<const double> ys) {
    if (xs.empty() || ys.empty()) throw Error("U test: both samples must be nonempty");
    for (double v : xs)
        if (!std::isfinite(v)) throw Error("U test: non-finite value");
    for (double v : ys)
        if (!std::isfinite(v)) throw Error("U test: non-finite value");
}

bool all_identical(std::span<const double> xs, std::span<const double> ys) {
    const double v = xs.front();
    return std::all_of(xs.begin(), xs.end(), [v](double x) { return x == v; }) &&
           std::all_of(ys.begin(), ys.end(), [v](double y) { return y == v; });
}

// 2 * U of the first sample.
long doubled_u(const Ranked& r, std::size_t n1) {
    const long rank_sum = std::accumulate(r.doubled_ranks.begin(), r.doubled_ranks.begin() + n1, 0L);
    return rank_sum - static_cast<long>(n1 * (n1 + 1));
}

}  // namespace

UTestResult mann_whitney_exact(std::span<const double> xs, std::span<const double> ys) {
    check_inputs(xs, ys);
    const std::size_t n1 = xs.size(), n2 = ys.size(), n = n1 + n2;
    const Ranked r = rank_pooled(xs, ys);
    const long u2 = doubled_u(r, n1);
    UTestResult out{static_cast<double>(u2) / 2.0, 1.0, UTestMethod::Exact};
    if (all_identical(xs, ys)) return out;

    // ways[k][s]: number of k-subsets of the pooled ranks with doubled rank sum s
    const long max_sum = std::accumulate(r.doubled_ranks.begin(), r.doubled_ranks.end(), 0L);
    std::vector<std::vector<double>> ways(n1 + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto w = static_cast<std::size_t>(r.doubled_ranks[i]);
        for (std::size_t k = std::min(i + 1, n1); k >= 1; --k) {
            auto& dst = ways[k];
            const auto& src = ways[k - 1];
            for (std::size_t s = dst.size() - 1; s + 1 > w; --s) dst[s] += src[s - w];
        }
    }

    // Compare |2U - n1 n2| on the doubled scale to stay in integers.
    const long centre = static_cast<long>(n1 * n2);
    const long observed = std::abs(u2 - centre);
    const long offset = static_cast<long>(n1 * (n1 + 1));
    double extreme = 0.0, total = 0.0;
    for (std::size_t s = 0; s < ways[n1].size(); ++s) {
        const double count = ways[n1][s];
        if (count == 0.0) continue;
        total += count;
        if (std::abs(static_cast<long>(s) - offset - centre) >= observed) extreme += count;
    }
    out.p_value = std::min(1.0, extreme / total);
    return out;
}

UTestResult mann_whitney_normal(std::span<const double> xs, std::span<const double> ys) {
    check_inputs(xs, ys);
    const double n1 = static_cast<double>(xs.size()), n2 = static_cast<double>(ys.size()), n = n1 + n2;
    const Ranked r = rank_pooled(xs, ys);
    const double u = static_cast<double>(doubled_u(r, xs.size())) / 2.0;
    UTestResult out{u, 1.0, UTestMethod::NormalApprox};
    const double variance = n1 * n2 / 12.0 * ((n + 1.0) - r.tie_term / (n * (n - 1.0)));
    if (variance <= 0.0) return out;
    const double z = std::max(0.0, std::abs(u - n1 * n2 / 2.0) - 0.5) / std::sqrt(variance);
    out.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    return out;
}

UTestResult mann_whitney_u(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() <= kExactUMaxSize && ys.size() <= kExactUMaxSize) return mann_whitney_exact(xs, ys);
    return mann_whitney_normal(xs, ys);
}

std::string_view to_string(SelectionCriterion c) {
    switch (c) {
        case SelectionCriterion::AllFeatures: return "all";
        case SelectionCriterion::Significant: return "significant";
        case SelectionCriterion::MostFrequent: return "most_frequent";
    }
    return "all";
}

std::map<std::string, double> feature_pvalues(const FeatureMatrix& matrix, std::span<const std::size_t> rows) {
    std::map<std::string, double> out;
    const std::size_t width = matrix.feature_names.size();
    std::array<std::vector<double>, kClassCount> groups;
    for (std::size_t col = 0; col < width; ++col) {
        for (auto& g : groups) g.clear();
        for (std::size_t r : rows) {
            const auto& row = matrix.rows[r];
            if (row.flagged || std::isnan(row.values[col])) continue;
            groups[class_index(row.class_label)].push_back(row.values[col]);
        }
        double best = 1.0;
        for (std::size_t a = 0; a < kClassCount; ++a) {
            for (std::size_t b = a + 1; b < kClassCount; ++b) {
                if (groups[a].empty() || groups[b].empty()) continue;
                best = std::min(best, mann_whitney_u(groups[a], groups[b]).p_value);
            }
        }
        out[matrix.feature_names[col]] = best;
    }
    return out;
}

FeatureSelection select_significant(const std::map<std::string, double>& pvalues, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("alpha must lie in (0, 1]");
    FeatureSelection s;
    s.criterion = SelectionCriterion::Significant;
    s.evidence = pvalues;
    for (const auto& name : feature_names()) {
        const auto it = pvalues.find(name);
        if (it != pvalues.end() && it->second < alpha) s.kept.push_back(name);
    }
    // names outside the canonical set keep insertion order after it
    for (const auto& [name, p] : pvalues) {
        if (!feature_index(name) && p < alpha) s.kept.push_back(name);
    }
    return s;
}

FeatureSelection significant_feature_filter(const FeatureMatrix& matrix, double alpha) {
    std::set<Expertise> present;
    for (const auto& row : matrix.rows) present.insert(row.class_label);
    if (present.size() < 2) throw Error("significance filter: need at least two classes");
    std::vector<std::size_t> rows(matrix.size());
    std::iota(rows.begin(), rows.end(), 0);
    return select_significant(feature_pvalues(matrix, rows), alpha);
}

FeatureSelection all_features() {
    FeatureSelection s;
    s.criterion = SelectionCriterion::AllFeatures;
    s.kept = feature_names();
    return s;
}

FeatureSelection most_frequent_features(const FeatureMatrix& matrix, const MffConfig& config, std::uint64_t seed) {
    if (config.runs == 0) throw Error("mff: runs must be positive");
    if (config.top_m == 0 || config.top_m > matrix.feature_names.size()) throw Error("mff: top_m out of range");
    FeatureSelection s;
    s.criterion = SelectionCriterion::MostFrequent;
    if (config.runs < 10) s.warnings.push_back("unstable selection: only " + std::to_string(config.runs) + " runs");

    const auto participants = participants_by_class(matrix);
    std::vector<std::size_t> all_columns(matrix.feature_names.size());
    std::iota(all_columns.begin(), all_columns.end(), 0);
    std::vector<std::vector<std::size_t>> top(config.runs);

    parallel_for(config.runs, config.jobs, [&](std::size_t run) {
        const std::uint64_t run_seed = derive_seed(seed, run);
        const SplitPlan plan = draw_split(participants, derive_seed(run_seed, 0), config.split);
        const Partition part = materialize(plan, matrix);
        const Standardization scaling = fit_standardization(matrix, part.train);
        const RowMatrix x = standardized_rows(matrix, scaling, part.train, all_columns);
        std::vector<Expertise> labels;
        std::vector<std::string> groups;
        for (std::size_t r : part.train) {
            labels.push_back(matrix.rows[r].class_label);
            groups.push_back(matrix.rows[r].participant_id);
        }
        const auto ens = cv_ensemble_train(x, labels, groups, config.ensemble, derive_seed(run_seed, 1));
        const auto ranking = feature_importance(ens, matrix.feature_names);
        for (std::size_t i = 0; i < config.top_m; ++i) top[run].push_back(ranking[i].column);
    });

    std::vector<std::size_t> counts(matrix.feature_names.size(), 0);
    for (const auto& cols : top)
        for (std::size_t c : cols) ++counts[c];
    for (std::size_t c = 0; c < counts.size(); ++c) {
        const double freq = static_cast<double>(counts[c]) / static_cast<double>(config.runs);
        s.evidence[matrix.feature_names[c]] = freq;
        if (freq > config.min_frequency) s.kept.push_back(matrix.feature_names[c]);
    }
    return s;
}

nlohmann::json to_json(const FeatureSelection& s) {
    nlohmann::json evidence = nlohmann::json::object();
    for (const auto& [name, v] : s.evidence) evidence[name] = v;
    return {{"criterion", std::string(to_string(s.criterion))},
            {"kept", s.kept},
            {"evidence", std::move(evidence)},
            {"warnings", s.warnings}};
}

FeatureSelection selection_from_json(const nlohmann::json& j) {
    FeatureSelection s;
    const auto c = j.at("criterion").get<std::string>();
    if (c == "all") s.criterion = SelectionCriterion::AllFeatures;
    else if (c == "significant") s.criterion = SelectionCriterion::Significant;
    else if (c == "most_frequent") s.criterion = SelectionCriterion::MostFrequent;
    else throw Error("selection: unknown criterion " + c);
    s.kept = j.at("kept").get<std::vector<std::string>>();
    for (const auto& [name, v] : j.at("evidence").items()) s.evidence[name] = v.get<double>();
    if (j.contains("warnings")) s.warnings = j.at("warnings").get<std::vector<std::string>>();
    return s;
}

std::vector<std::size_t> selected_columns(const FeatureSelection& s) {
    std::vector<std::size_t> cols;
    for (const auto& name : s.kept) {
        const auto idx = feature_index(name);
        if (!idx) throw Error("selection: unknown feature " + name);
        cols.push_back(*idx);
    }
    return cols;
}

}  // namespace gazeclass
