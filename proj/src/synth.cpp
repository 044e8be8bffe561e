#include "gazeclass/synth.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace gazeclass {

extern const char* const kBundledClassStats;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const boost::math::normal_distribution<double>& unit_normal() {
    static const boost::math::normal_distribution<double> n(0.0, 1.0);
    return n;
}

double phi(double z) { return std::isinf(z) ? 0.0 : boost::math::pdf(unit_normal(), z); }
double cdf(double z) { return z == -kInf ? 0.0 : z == kInf ? 1.0 : boost::math::cdf(unit_normal(), z); }
double upper(double z) {
    return z == -kInf ? 1.0 : z == kInf ? 0.0 : boost::math::cdf(boost::math::complement(unit_normal(), z));
}

MeasureStats frequency_stats(double average) {
    return {average, kFrequencyStdFraction * average, 0.0, kInf};
}

std::string participant_name(Expertise c, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%02zu", std::string(to_string(c)).front(), i + 1);
    return buf;
}

}  // namespace

const MeasureStats& ClassStats::at(Expertise c, Measure m) const {
    const auto it = classes.find(c);
    if (it == classes.end()) throw Error("class stats: no entry for class " + std::string(to_string(c)));
    return it->second[static_cast<std::size_t>(m)];
}

void ClassStats::validate() const {
    for (const auto& [c, measures] : classes) {
        for (Measure m : all_measures()) {
            const auto& s = measures[static_cast<std::size_t>(m)];
            const std::string where = std::string(to_string(c)) + " " + std::string(measure_name(m));
            if (s.minimum > s.maximum) throw Error("class stats: min > max for " + where);
            if (s.std_dev < 0.0) throw Error("class stats: negative std for " + where);
            if (s.average < s.minimum || s.average > s.maximum) throw Error("class stats: average outside range for " + where);
        }
    }
}

ClassStats class_stats_from_json(const nlohmann::json& j) {
    ClassStats stats;
    for (const auto& [name, measures] : j.at("classes").items()) {
        const auto c = parse_expertise(name);
        if (!c) throw Error("class stats: unknown class " + name);
        auto& row = stats.classes[*c];
        for (Measure m : all_measures()) {
            const auto& e = measures.at(std::string(measure_name(m)));
            const double avg = e.at("average").get<double>();
            if (is_frequency(m)) {
                row[static_cast<std::size_t>(m)] = frequency_stats(avg);
            } else {
                row[static_cast<std::size_t>(m)] = {avg, e.at("std").get<double>(), e.at("min").get<double>(),
                                                    e.at("max").get<double>()};
            }
        }
    }
    stats.validate();
    return stats;
}

nlohmann::json to_json(const ClassStats& stats) {
    nlohmann::json classes = nlohmann::json::object();
    for (const auto& [c, measures] : stats.classes) {
        nlohmann::json row = nlohmann::json::object();
        for (Measure m : all_measures()) {
            const auto& s = measures[static_cast<std::size_t>(m)];
            if (is_frequency(m)) row[std::string(measure_name(m))] = {{"average", s.average}};
            else
                row[std::string(measure_name(m))] = {
                    {"average", s.average}, {"std", s.std_dev}, {"min", s.minimum}, {"max", s.maximum}};
        }
        classes[std::string(to_string(c))] = std::move(row);
    }
    return {{"classes", std::move(classes)}};
}

const ClassStats& default_class_stats() {
    static const ClassStats stats = class_stats_from_json(nlohmann::json::parse(kBundledClassStats));
    return stats;
}

TruncatedNormal::TruncatedNormal(double mu, double sigma, double lo, double hi)
    : mu_(mu), sigma_(sigma), lo_(lo), hi_(hi) {
    if (!(lo <= hi)) throw Error("truncated normal: lo > hi");
    if (!(sigma >= 0.0)) throw Error("truncated normal: negative sigma");
}

double TruncatedNormal::sample(std::mt19937_64& rng) const {
    const double u = open_unit(rng);
    if (sigma_ == 0.0 || lo_ == hi_) return std::clamp(mu_, lo_, hi_);
    const double a = (lo_ - mu_) / sigma_, b = (hi_ - mu_) / sigma_;
    double z;
    if (a > 0.0) {
        // Both bounds in the upper tail: work with survival probabilities.
        const double qa = upper(a), qb = upper(b);
        if (!(qa > qb)) return lo_;
        z = boost::math::quantile(boost::math::complement(unit_normal(), qb + u * (qa - qb)));
    } else {
        const double pa = cdf(a), pb = cdf(b);
        if (!(pb > pa)) return hi_;
        z = boost::math::quantile(unit_normal(), pa + u * (pb - pa));
    }
    return std::clamp(mu_ + sigma_ * z, lo_, hi_);
}

double TruncatedNormal::mean() const {
    if (sigma_ == 0.0 || lo_ == hi_) return std::clamp(mu_, lo_, hi_);
    const double a = (lo_ - mu_) / sigma_, b = (hi_ - mu_) / sigma_;
    const double mass = a > 0.0 ? upper(a) - upper(b) : cdf(b) - cdf(a);
    if (!(mass > 0.0)) return a > 0.0 ? lo_ : hi_;
    return std::clamp(mu_ + sigma_ * (phi(a) - phi(b)) / mass, lo_, hi_);
}

double TruncatedNormal::location_for_mean(double target, double sigma, double lo, double hi) {
    if (sigma == 0.0) return target;
    if (!(target > lo && target < hi)) throw Error("truncated normal: target mean outside the open bounds");
    // The truncated mean increases with the location; 8 sigma beyond the
    // bounds keeps tail masses representable.
    double left = (std::isinf(lo) ? target : lo) - 8.0 * sigma;
    double right = (std::isinf(hi) ? target : hi) + 8.0 * sigma;
    for (int i = 0; i < 200 && right - left > 1e-12 * std::max(1.0, std::abs(target)); ++i) {
        const double mid = 0.5 * (left + right);
        if (TruncatedNormal(mid, sigma, lo, hi).mean() < target) left = mid;
        else right = mid;
    }
    return 0.5 * (left + right);
}

double open_unit(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng) { return boost::math::quantile(unit_normal(), open_unit(rng)); }

void SynthConfig::validate() const {
    for (std::size_t n : participants)
        if (n == 0) throw Error("synth: participants per class must be at least 1");
    if (trials_per_participant == 0 || trials_per_participant > 52) throw Error("synth: trials per participant must be in [1, 52]");
    if (events_per_trial == 0) throw Error("synth: events per trial must be at least 1");
    if (!(sigma_p >= 0.0)) throw Error("synth: sigma_p must be non-negative");
}

FeatureMatrix sample_feature_rows(const ClassStats& stats, const SynthConfig& config) {
    config.validate();
    stats.validate();
    std::mt19937_64 rng(config.seed);
    std::vector<FeatureVector> rows;
    std::vector<double> draws(config.events_per_trial);

    for (Expertise c : kAllClasses) {
        const std::size_t count = config.participants[class_index(c)];
        std::array<double, kMeasureCount> location{};
        for (Measure m : all_measures()) {
            const auto& s = stats.at(c, m);
            location[static_cast<std::size_t>(m)] =
                TruncatedNormal::location_for_mean(s.average, s.std_dev, s.minimum, s.maximum);
        }
        for (std::size_t p = 0; p < count; ++p) {
            const std::string id = participant_name(c, p);
            std::vector<TruncatedNormal> dist;
            dist.reserve(kMeasureCount);
            for (Measure m : all_measures()) {
                const auto& s = stats.at(c, m);
                const std::size_t i = static_cast<std::size_t>(m);
                const double offset = config.sigma_p * s.std_dev * standard_normal(rng);
                dist.emplace_back(location[i] + offset, s.std_dev, s.minimum, s.maximum);
            }
            for (std::size_t t = 0; t < config.trials_per_participant; ++t) {
                FeatureVector fv;
                fv.participant_id = id;
                fv.class_label = c;
                const int block = static_cast<int>(t / 26) + 1, stimulus = static_cast<int>(t % 26) + 1;
                fv.trial_key = id + ":" + std::to_string(stimulus) + ":" + std::to_string(block);
                fv.values.assign(kFeatureCount, 0.0);
                for (Measure m : all_measures()) {
                    const auto& d = dist[static_cast<std::size_t>(m)];
                    if (is_frequency(m)) {
                        fv.values[feature_index(m)] = d.sample(rng);
                        continue;
                    }
                    double sum = 0.0;
                    for (double& x : draws) {
                        x = d.sample(rng);
                        sum += x;
                    }
                    const double n = static_cast<double>(draws.size());
                    const double avg = sum / n;
                    double ss = 0.0;
                    for (double x : draws) ss += (x - avg) * (x - avg);
                    const auto [lo, hi] = std::minmax_element(draws.begin(), draws.end());
                    fv.values[feature_index(m, Derivation::Average)] = avg;
                    fv.values[feature_index(m, Derivation::StdDev)] = std::sqrt(ss / n);
                    fv.values[feature_index(m, Derivation::Minimum)] = *lo;
                    fv.values[feature_index(m, Derivation::Maximum)] = *hi;
                }
                rows.push_back(std::move(fv));
            }
        }
    }
    return build_matrix(std::move(rows));
}

TrialRecord sample_gaze_trace(const TraceScript& script, std::uint64_t seed) {
    if (script.segments.empty()) throw Error("trace script: no segments");
    if (!(script.period_ms > 0.0)) throw Error("trace script: period must be positive");
    for (std::size_t i = 0; i < script.segments.size(); ++i) {
        const auto& s = script.segments[i];
        if (!(s.duration_ms > 0.0)) throw Error("trace script: segment " + std::to_string(i) + " has no duration");
        if (i > 0) {
            const auto& prev = script.segments[i - 1];
            if (s.start_ms < prev.start_ms + prev.duration_ms - 1e-9) throw Error("trace script: overlapping segments");
        }
    }
    std::mt19937_64 rng(seed);
    TrialRecord trial;
    trial.participant_id = script.participant_id;
    trial.class_label = script.class_label;
    trial.stimulus_id = script.stimulus_id;
    trial.block = script.block;

    const double t0 = script.segments.front().start_ms;
    const double t_end = script.segments.back().start_ms + script.segments.back().duration_ms;
    std::size_t seg = 0;
    for (std::size_t k = 0;; ++k) {
        const double t = t0 + static_cast<double>(k) * script.period_ms;
        if (t > t_end + 1e-9) break;
        while (seg + 1 < script.segments.size() && t >= script.segments[seg + 1].start_ms - 1e-9) ++seg;
        const auto& s = script.segments[seg];
        const double f = std::clamp((t - s.start_ms) / s.duration_ms, 0.0, 1.0);
        GazeSample g{t, s.from_x + f * (s.to_x - s.from_x), s.from_y + f * (s.to_y - s.from_y), true};
        if (script.jitter_px > 0.0) {
            g.x_px += script.jitter_px * standard_normal(rng);
            g.y_px += script.jitter_px * standard_normal(rng);
        }
        trial.samples.push_back(g);
    }
    for (std::size_t idx : script.zero_samples) {
        if (idx >= trial.samples.size()) throw Error("trace script: dropout index out of range");
        trial.samples[idx].x_px = 0.0;
        trial.samples[idx].y_px = 0.0;
        trial.samples[idx].valid = false;
    }
    trial.tracking_ratio = tracking_ratio(trial.samples);
    return trial;
}

std::pair<std::size_t, std::size_t> segment_sample_range(const TraceScript& script, std::size_t segment) {
    if (segment >= script.segments.size()) throw Error("trace script: segment index out of range");
    const double t0 = script.segments.front().start_ms;
    const auto& s = script.segments[segment];
    const auto first = static_cast<std::size_t>(std::ceil((s.start_ms - t0) / script.period_ms - 1e-9));
    const auto last = static_cast<std::size_t>(std::floor((s.start_ms + s.duration_ms - t0) / script.period_ms + 1e-9));
    return {first, last};
}

TraceScript random_trace_script(double duration_ms, std::mt19937_64& rng) {
    TraceScript script;
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * open_unit(rng); };
    auto snap = [](double ms) { return 4.0 * std::max(1.0, std::round(ms / 4.0)); };
    double t = 0.0, x = uniform(400, 2000), y = uniform(200, 800);
    bool fixate = true;
    while (t < duration_ms) {
        TraceSegment s;
        s.start_ms = t;
        s.from_x = x;
        s.from_y = y;
        if (fixate) {
            // Pursuits stay well below the saccade velocity threshold.
            const bool pursuit = open_unit(rng) < 0.2;
            s.duration_ms = snap(pursuit ? uniform(500, 900) : uniform(120, 400));
            if (pursuit) {
                const double angle = uniform(0, 2 * M_PI), len = s.duration_ms * uniform(0.15, 0.3);
                x = std::clamp(x + len * std::cos(angle), 50.0, 2350.0);
                y = std::clamp(y + len * std::sin(angle), 50.0, 950.0);
            }
        } else {
            s.duration_ms = snap(uniform(20, 80));
            const double angle = uniform(0, 2 * M_PI), len = uniform(60, 500);
            x = std::clamp(x + len * std::cos(angle), 50.0, 2350.0);
            y = std::clamp(y + len * std::sin(angle), 50.0, 950.0);
        }
        s.to_x = x;
        s.to_y = y;
        script.segments.push_back(s);
        t += s.duration_ms;
        fixate = !fixate;
    }
    script.jitter_px = 0.1;
    return script;
}

}  // namespace gazeclass
