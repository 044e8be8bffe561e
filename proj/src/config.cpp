#include "gazeclass/config.hpp"

#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <sstream>

namespace gazeclass {

namespace {

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : "; ") + p;
    return out;
}

const ConfigKey* find_key(const std::string& key) {
    for (const auto& k : config_schema())
        if (k.key == key) return &k;
    return nullptr;
}

std::string unquote(std::string v) {
    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) return v.substr(1, v.size() - 2);
    return v;
}

// Strips a trailing comment that is not inside quotes.
std::string strip_comment(const std::string& line) {
    char quote = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quote) {
            if (ch == quote) quote = 0;
        } else if (ch == '"' || ch == '\'') {
            quote = ch;
        } else if (ch == '#') {
            return line.substr(0, i);
        }
    }
    return line;
}

std::string check_value(const ConfigKey& k, const std::string& v) {
    switch (k.type) {
        case ValueType::Integer: {
            const auto n = detail::parse_int(v);
            if (!n) return k.key + ": expected an integer, got '" + v + "'";
            if (static_cast<double>(*n) < k.min || static_cast<double>(*n) > k.max)
                return k.key + ": " + v + " outside [" + detail::format_double(k.min) + ", " +
                       detail::format_double(k.max) + "]";
            return {};
        }
        case ValueType::Real: {
            const auto x = detail::parse_double(v);
            if (!x || std::isnan(*x)) return k.key + ": expected a number, got '" + v + "'";
            if (*x < k.min || *x > k.max)
                return k.key + ": " + v + " outside [" + detail::format_double(k.min) + ", " +
                       detail::format_double(k.max) + "]";
            return {};
        }
        case ValueType::Text:
            if (!k.choices.empty() && std::find(k.choices.begin(), k.choices.end(), v) == k.choices.end())
                return k.key + ": '" + v + "' is not one of the allowed values";
            return {};
    }
    return {};
}

constexpr double kBig = 1e300;
constexpr double kMaxCount = 1e9;

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error("invalid configuration: " + join(problems)), problems_(std::move(problems)) {}

const std::vector<ConfigKey>& config_schema() {
    static const std::vector<ConfigKey> schema = {
        {"seed", ValueType::Integer, "42", 0, 9.0e18, {}, "base seed; stage seeds are derived from it"},
        {"ingest.input", ValueType::Text, "gaze.csv", 0, 0, {}, "raw gaze CSV, relative to the output directory"},
        {"ingest.columns", ValueType::Text, "", 0, 0, {}, "optional column-mapping JSON sidecar"},
        {"ingest.min_ratio", ValueType::Real, "0.75", 0, 1, {}, "trials with a lower tracking ratio are dropped"},
        {"detect.peak_threshold", ValueType::Real, "40", 1e-9, kBig, {}, "saccade velocity threshold, deg/s"},
        {"detect.min_fixation_ms", ValueType::Real, "50", 0, kBig, {}, "shorter fixation candidates are discarded"},
        {"detect.sp_dispersion_px", ValueType::Real, "100", 0, kBig, {}, "larger dispersion marks a smooth pursuit"},
        {"detect.dispersion_metric", ValueType::Text, "bbox", 0, 0, {"bbox", "pairwise"}, "dispersion measure"},
        {"detect.px_per_deg_x", ValueType::Real, "10.666666666666666", 1e-9, kBig, {}, "2400 px per 225 deg"},
        {"detect.px_per_deg_y", ValueType::Real, "5.333333333333333", 1e-9, kBig, {}, "1000 px per 187.5 deg"},
        {"clean.max_velocity", ValueType::Real, "1000", 0, kBig, {}, "deg/s"},
        {"clean.max_acceleration", ValueType::Real, "100000", 0, kBig, {}, "deg/s^2"},
        {"clean.max_deceleration", ValueType::Real, "100000", 0, kBig, {}, "deg/s^2, magnitude"},
        {"svm.kernel", ValueType::Text, "linear", 0, 0, {"linear", "rbf"}, "kernel; importance needs linear"},
        {"svm.gamma", ValueType::Real, "0.02", 1e-12, kBig, {}, "RBF width"},
        {"svm.C", ValueType::Real, "1", 1e-12, kBig, {}, "soft-margin penalty"},
        {"svm.k", ValueType::Integer, "50", 2, kMaxCount, {}, "ensemble folds"},
        {"svm.tol", ValueType::Real, "0.001", 1e-15, 1, {}, "SMO KKT tolerance"},
        {"split.train_per_class", ValueType::Integer, "8", 1, kMaxCount, {}, "training participants per class"},
        {"split.holdout_per_class", ValueType::Integer, "2", 1, kMaxCount, {}, "holdout participants per class"},
        {"train.features", ValueType::Text, "all", 0, 0, {"all", "mff", "significant"}, "feature set for `train`"},
        {"experiment.runs", ValueType::Integer, "1000", 1, kMaxCount, {}, "randomized train/holdout runs"},
        {"stats.alpha", ValueType::Real, "0.0011", 1e-300, 1, {}, "significance level; 0.011 is the alternate reading"},
        {"stats.mff_runs", ValueType::Integer, "1000", 1, kMaxCount, {}, "runs for most-frequent-feature selection"},
        {"stats.top_m", ValueType::Integer, "7", 1, 46, {}, "features recorded per run"},
        {"stats.min_frequency", ValueType::Real, "0.5", 0, 1, {}, "kept when the run frequency exceeds this"},
        {"fliptest.iterations", ValueType::Integer, "100", 1, kMaxCount, {}, "flip-test iterations"},
        {"fliptest.holdout_per_group", ValueType::Integer, "2", 1, kMaxCount, {}, "held-out participants per group"},
        {"synth.mode", ValueType::Text, "features", 0, 0, {"features", "gaze"}, "what `synth` generates"},
        {"synth.stats", ValueType::Text, "", 0, 0, {}, "class statistics JSON; empty uses the bundled table"},
        {"synth.novices", ValueType::Integer, "13", 1, kMaxCount, {}, "participants"},
        {"synth.intermediates", ValueType::Integer, "10", 1, kMaxCount, {}, "participants"},
        {"synth.experts", ValueType::Integer, "12", 1, kMaxCount, {}, "participants"},
        {"synth.trials_per_participant", ValueType::Integer, "52", 1, 52, {}, "trials per participant"},
        {"synth.events_per_trial", ValueType::Integer, "10", 1, kMaxCount, {}, "event draws behind each derivation"},
        {"synth.sigma_p", ValueType::Real, "2.0", 0, kBig, {}, "participant offset scale, in class std units"},
        {"synth.trial_ms", ValueType::Real, "4000", 100, kBig, {}, "trial length for gaze mode"},
    };
    return schema;
}

PipelineConfig::PipelineConfig() {
    for (const auto& k : config_schema()) values_[k.key] = k.default_value;
}

PipelineConfig PipelineConfig::parse(std::istream& in) {
    PipelineConfig cfg;
    std::vector<std::string> problems;
    std::string section, line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        const std::string body = std::string(detail::trim(strip_comment(line)));
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']') {
                problems.push_back("line " + std::to_string(line_no) + ": malformed section header");
                continue;
            }
            section = std::string(detail::trim(body.substr(1, body.size() - 2)));
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            problems.push_back("line " + std::to_string(line_no) + ": expected key = value");
            continue;
        }
        const std::string name = std::string(detail::trim(body.substr(0, eq)));
        const std::string key = section.empty() ? name : section + "." + name;
        if (!find_key(key)) {
            problems.push_back("line " + std::to_string(line_no) + ": unknown key " + key);
            continue;
        }
        cfg.values_[key] = unquote(std::string(detail::trim(body.substr(eq + 1))));
    }
    if (!problems.empty()) throw ConfigError(std::move(problems));
    return cfg;
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
    if (!find_key(key)) throw ConfigError({"unknown key " + key});
    values_[key] = unquote(std::string(detail::trim(value)));
}

void PipelineConfig::validate() const {
    std::vector<std::string> problems;
    for (const auto& k : config_schema()) {
        auto p = check_value(k, values_.at(k.key));
        if (!p.empty()) problems.push_back(std::move(p));
    }
    if (problems.empty() && integer("svm.k") < 2) problems.push_back("svm.k: must be at least 2");
    if (!problems.empty()) throw ConfigError(std::move(problems));
}

std::int64_t PipelineConfig::integer(const std::string& key) const {
    const auto n = detail::parse_int(values_.at(key));
    if (!n) throw ConfigError({key + ": expected an integer"});
    return *n;
}

double PipelineConfig::real(const std::string& key) const {
    const auto x = detail::parse_double(values_.at(key));
    if (!x) throw ConfigError({key + ": expected a number"});
    return *x;
}

const std::string& PipelineConfig::text(const std::string& key) const { return values_.at(key); }

std::uint64_t PipelineConfig::hash() const {
    std::string canonical;
    for (const auto& [k, v] : values_) canonical += k + "=" + v + "\n";
    return fnv1a64(canonical);
}

std::string PipelineConfig::hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
}

nlohmann::json PipelineConfig::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& k : config_schema()) j[k.key] = {{"value", values_.at(k.key)}, {"default", k.default_value}};
    return j;
}

GeometryConfig PipelineConfig::geometry() const {
    GeometryConfig g{real("detect.px_per_deg_x"), real("detect.px_per_deg_y")};
    g.validate();
    return g;
}

DetectionConfig PipelineConfig::detection() const {
    DetectionConfig d;
    d.peak_threshold_deg_s = real("detect.peak_threshold");
    d.min_fixation_ms = real("detect.min_fixation_ms");
    d.sp_dispersion_px = real("detect.sp_dispersion_px");
    d.dispersion = text("detect.dispersion_metric") == "pairwise" ? DispersionMetric::MaxPairwiseDistance
                                                                   : DispersionMetric::BoundingBoxDiagonal;
    return d;
}

PhysiologicalLimits PipelineConfig::limits() const {
    return {real("clean.max_velocity"), real("clean.max_acceleration"), real("clean.max_deceleration")};
}

EnsembleConfig PipelineConfig::ensemble() const {
    EnsembleConfig e;
    e.k = static_cast<std::size_t>(integer("svm.k"));
    e.C = real("svm.C");
    e.kernel.kind = text("svm.kernel") == "rbf" ? KernelKind::Rbf : KernelKind::Linear;
    e.kernel.gamma = real("svm.gamma");
    e.smo.tol = real("svm.tol");
    return e;
}

SplitSizes PipelineConfig::split_sizes() const {
    return {static_cast<std::size_t>(integer("split.train_per_class")),
            static_cast<std::size_t>(integer("split.holdout_per_class"))};
}

ExperimentConfig PipelineConfig::experiment(std::size_t jobs) const {
    ExperimentConfig e;
    e.runs = static_cast<std::size_t>(integer("experiment.runs"));
    e.split = split_sizes();
    e.ensemble = ensemble();
    e.jobs = jobs;
    return e;
}

MffConfig PipelineConfig::mff(std::size_t jobs) const {
    MffConfig m;
    m.runs = static_cast<std::size_t>(integer("stats.mff_runs"));
    m.top_m = static_cast<std::size_t>(integer("stats.top_m"));
    m.min_frequency = real("stats.min_frequency");
    m.ensemble = ensemble();
    m.split = split_sizes();
    m.jobs = jobs;
    return m;
}

FlipTestConfig PipelineConfig::fliptest(std::size_t jobs) const {
    FlipTestConfig f;
    f.iterations = static_cast<std::size_t>(integer("fliptest.iterations"));
    f.holdout_per_group = static_cast<std::size_t>(integer("fliptest.holdout_per_group"));
    f.ensemble = ensemble();
    f.jobs = jobs;
    return f;
}

SynthConfig PipelineConfig::synth() const {
    SynthConfig s;
    s.participants = {static_cast<std::size_t>(integer("synth.novices")),
                      static_cast<std::size_t>(integer("synth.intermediates")),
                      static_cast<std::size_t>(integer("synth.experts"))};
    s.trials_per_participant = static_cast<std::size_t>(integer("synth.trials_per_participant"));
    s.events_per_trial = static_cast<std::size_t>(integer("synth.events_per_trial"));
    s.sigma_p = real("synth.sigma_p");
    s.seed = derive_seed(seed(), 100);
    return s;
}

}  // namespace gazeclass
