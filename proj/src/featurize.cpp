#include "gazeclass/featurize.hpp"

#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

namespace gazeclass {

namespace {

constexpr std::array<Measure, kMeasureCount> kMeasures{
    Measure::FixationFrequency,       Measure::FixationDuration,        Measure::FixationDispersion,
    Measure::SaccadeFrequency,        Measure::SaccadeDuration,         Measure::SaccadeAmplitude,
    Measure::SaccadeMeanAcceleration, Measure::SaccadePeakAcceleration, Measure::SaccadePeakDeceleration,
    Measure::SaccadeMeanVelocity,     Measure::SaccadePeakVelocity,     Measure::PursuitDuration,
    Measure::PursuitDispersion,
};

constexpr std::array<std::string_view, 4> kDerivationSuffix{"avg", "std", "min", "max"};

struct Layout {
    std::vector<std::string> names;
    std::array<std::size_t, kMeasureCount> first_column{};

    Layout() {
        for (Measure m : kMeasures) {
            first_column[static_cast<std::size_t>(m)] = names.size();
            if (is_frequency(m)) {
                names.emplace_back(measure_name(m));
            } else {
                for (auto suffix : kDerivationSuffix) names.push_back(std::string(measure_name(m)) + "_" + std::string(suffix));
            }
        }
    }
};

const Layout& layout() {
    static const Layout l;
    return l;
}

struct Summary {
    double avg, std, min, max;
};

std::optional<Summary> summarize(const std::vector<double>& v) {
    if (v.empty()) return std::nullopt;
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return Summary{mean, std::sqrt(ss / n), *lo, *hi};
}

}  // namespace

std::string_view measure_name(Measure m) {
    switch (m) {
        case Measure::FixationFrequency: return "fixation_frequency";
        case Measure::FixationDuration: return "fixation_duration";
        case Measure::FixationDispersion: return "fixation_dispersion";
        case Measure::SaccadeFrequency: return "saccade_frequency";
        case Measure::SaccadeDuration: return "saccade_duration";
        case Measure::SaccadeAmplitude: return "saccade_amplitude";
        case Measure::SaccadeMeanAcceleration: return "saccade_mean_acceleration";
        case Measure::SaccadePeakAcceleration: return "saccade_peak_acceleration";
        case Measure::SaccadePeakDeceleration: return "saccade_peak_deceleration";
        case Measure::SaccadeMeanVelocity: return "saccade_mean_velocity";
        case Measure::SaccadePeakVelocity: return "saccade_peak_velocity";
        case Measure::PursuitDuration: return "smooth_pursuit_duration";
        case Measure::PursuitDispersion: return "smooth_pursuit_dispersion";
    }
    return "unknown";
}

bool is_frequency(Measure m) { return m == Measure::FixationFrequency || m == Measure::SaccadeFrequency; }

const std::array<Measure, kMeasureCount>& all_measures() { return kMeasures; }

const std::vector<std::string>& feature_names() { return layout().names; }

std::size_t feature_index(Measure m, Derivation d) {
    const std::size_t base = layout().first_column[static_cast<std::size_t>(m)];
    return is_frequency(m) ? base : base + static_cast<std::size_t>(d);
}

std::optional<std::size_t> feature_index(std::string_view name) {
    const auto& names = feature_names();
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
}

double Standardization::apply(std::size_t column, double value) const {
    if (std::isnan(value)) return 0.0;
    return (value - mean[column]) / scale[column];
}

FeatureVector featurize_trial(std::span<const GazeEvent> events, const TrialRecord& trial) {
    FeatureVector fv;
    fv.participant_id = trial.participant_id;
    fv.class_label = trial.class_label;
    fv.trial_key = trial.key();
    fv.values.assign(kFeatureCount, std::nan(""));

    double trial_s = 0.0;
    if (trial.samples.size() >= 2) trial_s = (trial.samples.back().t_ms - trial.samples.front().t_ms) / 1000.0;

    std::array<std::vector<double>, kMeasureCount> per_measure;
    auto add = [&](Measure m, double v) { per_measure[static_cast<std::size_t>(m)].push_back(v); };
    std::size_t fixations = 0, saccades = 0;
    for (const auto& e : events) {
        switch (e.kind) {
            case EventKind::Fixation:
                ++fixations;
                add(Measure::FixationDuration, e.duration_ms);
                add(Measure::FixationDispersion, e.dispersion_px);
                break;
            case EventKind::SmoothPursuit:
                add(Measure::PursuitDuration, e.duration_ms);
                add(Measure::PursuitDispersion, e.dispersion_px);
                break;
            case EventKind::Saccade:
                ++saccades;
                add(Measure::SaccadeDuration, e.duration_ms);
                add(Measure::SaccadeAmplitude, e.amplitude_deg);
                add(Measure::SaccadeMeanAcceleration, e.mean_acceleration);
                add(Measure::SaccadePeakAcceleration, e.peak_acceleration);
                add(Measure::SaccadePeakDeceleration, e.peak_deceleration);
                add(Measure::SaccadeMeanVelocity, e.mean_velocity);
                add(Measure::SaccadePeakVelocity, e.peak_velocity);
                break;
            case EventKind::Gap: break;
        }
    }

    fv.values[feature_index(Measure::FixationFrequency)] =
        trial_s > 0.0 ? static_cast<double>(fixations) / trial_s : 0.0;
    fv.values[feature_index(Measure::SaccadeFrequency)] =
        trial_s > 0.0 ? static_cast<double>(saccades) / trial_s : 0.0;

    for (Measure m : kMeasures) {
        if (is_frequency(m)) continue;
        const auto summary = summarize(per_measure[static_cast<std::size_t>(m)]);
        if (!summary) {
            fv.flagged = true;
            continue;
        }
        fv.values[feature_index(m, Derivation::Average)] = summary->avg;
        fv.values[feature_index(m, Derivation::StdDev)] = summary->std;
        fv.values[feature_index(m, Derivation::Minimum)] = summary->min;
        fv.values[feature_index(m, Derivation::Maximum)] = summary->max;
    }
    return fv;
}

Standardization fit_standardization(const FeatureMatrix& matrix, std::span<const std::size_t> rows,
                                    std::vector<std::string>* warnings) {
    const std::size_t cols = matrix.feature_names.size();
    Standardization s;
    s.mean.assign(cols, 0.0);
    s.scale.assign(cols, 1.0);
    for (std::size_t c = 0; c < cols; ++c) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t r : rows) {
            const double v = matrix.rows[r].values[c];
            if (std::isnan(v)) continue;
            sum += v;
            ++n;
        }
        if (n == 0) {
            s.constant_columns.push_back(c);
            continue;
        }
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t r : rows) {
            const double v = matrix.rows[r].values[c];
            if (!std::isnan(v)) ss += (v - mean) * (v - mean);
        }
        const double sd = std::sqrt(ss / static_cast<double>(n));
        s.mean[c] = mean;
        if (sd > 0.0 && std::isfinite(sd)) {
            s.scale[c] = sd;
        } else {
            s.constant_columns.push_back(c);
        }
    }
    if (warnings && !s.constant_columns.empty() && rows.size() > 1) {
        warnings->push_back("constant column(s) standardized with scale 1: " +
                            std::to_string(s.constant_columns.size()));
    }
    return s;
}

FeatureMatrix build_matrix(std::vector<FeatureVector> vectors, std::vector<std::string>* warnings) {
    if (vectors.empty()) throw Error("build_matrix: no feature vectors");
    for (const auto& v : vectors) {
        if (v.values.size() != kFeatureCount) throw Error("build_matrix: feature vector width mismatch");
    }
    FeatureMatrix m;
    m.feature_names = feature_names();
    m.rows = std::move(vectors);
    std::vector<std::size_t> all(m.rows.size());
    std::iota(all.begin(), all.end(), 0);
    m.standardization = fit_standardization(m, all, warnings);
    return m;
}

RowMatrix standardized_rows(const FeatureMatrix& matrix, const Standardization& scaling,
                            std::span<const std::size_t> rows, std::span<const std::size_t> columns) {
    RowMatrix out(rows.size(), columns.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& values = matrix.rows[rows[i]].values;
        for (std::size_t j = 0; j < columns.size(); ++j) out(i, j) = scaling.apply(columns[j], values[columns[j]]);
    }
    return out;
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& matrix) {
    out << "participant,class,trial_key,flagged";
    for (const auto& n : matrix.feature_names) out << ',' << n;
    out << '\n';
    for (const auto& r : matrix.rows) {
        out << detail::csv_escape(r.participant_id) << ',' << to_string(r.class_label) << ','
            << detail::csv_escape(r.trial_key) << ',' << (r.flagged ? 1 : 0);
        for (double v : r.values) out << ',' << detail::format_double(v);
        out << '\n';
    }
}

FeatureMatrix read_feature_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error("feature csv: missing header");
    const auto header = detail::split_fields(line, ',');
    const auto& names = feature_names();
    if (header.size() != 4 + names.size() || !std::equal(names.begin(), names.end(), header.begin() + 4)) {
        throw Error("feature csv: header does not match the canonical feature order");
    }
    std::vector<FeatureVector> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto f = detail::split_fields(line, ',');
        if (f.size() != header.size()) throw Error("feature csv line " + std::to_string(line_no) + ": field count");
        FeatureVector v;
        v.participant_id = f[0];
        const auto cls = parse_expertise(f[1]);
        if (!cls) throw Error("feature csv line " + std::to_string(line_no) + ": unknown class");
        v.class_label = *cls;
        v.trial_key = f[2];
        v.flagged = f[3] == "1";
        v.values.reserve(names.size());
        for (std::size_t c = 4; c < f.size(); ++c) {
            const auto x = detail::parse_double(f[c]);
            if (!x) throw Error("feature csv line " + std::to_string(line_no) + ": bad number");
            v.values.push_back(*x);
        }
        rows.push_back(std::move(v));
    }
    return build_matrix(std::move(rows));
}

nlohmann::json to_json(const Standardization& s) {
    return {{"mean", s.mean}, {"scale", s.scale}, {"constant_columns", s.constant_columns}};
}

Standardization standardization_from_json(const nlohmann::json& j) {
    Standardization s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.scale = j.at("scale").get<std::vector<double>>();
    s.constant_columns = j.at("constant_columns").get<std::vector<std::size_t>>();
    return s;
}

}  // namespace gazeclass
