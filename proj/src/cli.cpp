#include "gazeclass/cli.hpp"

#include "gazeclass/clean.hpp"
#include "gazeclass/config.hpp"
#include "gazeclass/dataset.hpp"
#include "gazeclass/ensemble.hpp"
#include "gazeclass/event_detect.hpp"
#include "gazeclass/experiment.hpp"
#include "gazeclass/featurize.hpp"
#include "gazeclass/gaze_ingest.hpp"
#include "gazeclass/parallel.hpp"
#include "gazeclass/stats.hpp"
#include "gazeclass/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

namespace gazeclass::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Stage seeds, derived from the configured base seed.
enum SeedStream : std::uint64_t { kSplitSeed = 1, kMffSeed = 2, kExperimentSeed = 3, kFlipSeed = 4, kTrainSeed = 5, kGazeSeed = 6 };

class MissingArtifact : public Error {
public:
    explicit MissingArtifact(const fs::path& p) : Error("missing upstream artifact: " + p.string()) {}
};

struct Context {
    PipelineConfig config;
    fs::path out_dir;
    std::size_t jobs = 1;
    std::ostream* log = nullptr;

    fs::path path(const std::string& name) const { return out_dir / name; }

    fs::path require(const std::string& name) const {
        const fs::path p = path(name);
        if (!fs::exists(p)) throw MissingArtifact(p);
        return p;
    }

    std::uint64_t seed(SeedStream s) const { return derive_seed(config.seed(), s); }

    json stamp(const std::string& stage) const {
        return {{"stage", stage}, {"config_hash", config.hash_hex()}, {"seed", config.seed()}};
    }

    void write_json(const std::string& name, const std::string& stage, json body) const {
        json doc = stamp(stage);
        for (auto& [k, v] : body.items()) doc[k] = std::move(v);
        write_text(name, doc.dump(2) + "\n");
    }

    void write_text(const std::string& name, const std::string& text) const {
        std::ofstream f(path(name), std::ios::binary);
        if (!f) throw Error("cannot write " + path(name).string());
        f << text;
        if (log) *log << "wrote " << path(name).string() << '\n';
    }

    json read_json(const std::string& name) const {
        std::ifstream f(require(name));
        return json::parse(f);
    }

    FeatureMatrix features() const {
        std::ifstream f(require("features.csv"));
        return read_feature_csv(f);
    }

    DatasetManifest manifest() const { return manifest_from_json(read_json("manifest.json")); }

    EventsByTrial events(const std::string& name, const DatasetManifest& m) const {
        std::ifstream f(require(name));
        return read_events_csv(f, m);
    }
};

std::string to_csv(const std::function<void(std::ostream&)>& writer) {
    std::ostringstream s;
    writer(s);
    return s.str();
}

// ---- stages ---------------------------------------------------------------

void ingest(const Context& ctx) {
    fs::path input = ctx.config.text("ingest.input");
    if (input.is_relative()) input = ctx.out_dir / input;
    if (!fs::exists(input)) throw MissingArtifact(input);

    ColumnMapping mapping;
    if (const auto& cols = ctx.config.text("ingest.columns"); !cols.empty()) {
        fs::path p = cols;
        if (p.is_relative()) p = ctx.out_dir / p;
        if (!fs::exists(p)) throw MissingArtifact(p);
        std::ifstream f(p);
        mapping = ColumnMapping::from_json(json::parse(f));
    }
    std::ifstream in(input);
    ParseResult parsed = parse_gaze_log(in, mapping);
    DatasetManifest manifest = apply_quality_gate(std::move(parsed.trials), ctx.config.real("ingest.min_ratio"));
    for (auto& r : parsed.rejected) manifest.dropped.push_back(std::move(r));

    json body = to_json(manifest);
    json errors = json::array();
    for (const auto& e : parsed.row_errors) errors.push_back({{"line", e.line}, {"message", e.message}});
    body["row_errors"] = std::move(errors);
    body["warnings"] = parsed.warnings;
    ctx.write_json("manifest.json", "ingest", std::move(body));
}

void detect(const Context& ctx) {
    const auto manifest = ctx.manifest();
    const auto geom = ctx.config.geometry();
    const auto det = ctx.config.detection();
    std::vector<std::vector<GazeEvent>> per_trial(manifest.trials.size());
    std::vector<std::string> problems(manifest.trials.size());
    parallel_for(manifest.trials.size(), ctx.jobs, [&](std::size_t i) {
        try {
            per_trial[i] = detect_events(manifest.trials[i], geom, det);
        } catch (const Error& e) {
            problems[i] = manifest.trials[i].key() + ": " + e.what();
        }
    });
    EventsByTrial events;
    std::map<std::string, std::size_t> counts;
    std::vector<std::string> warnings;
    for (std::size_t i = 0; i < manifest.trials.size(); ++i) {
        if (!problems[i].empty()) warnings.push_back(problems[i]);
        for (const auto& e : per_trial[i]) ++counts[std::string(to_string(e.kind))];
        events[manifest.trials[i].key()] = std::move(per_trial[i]);
    }
    ctx.write_text("events.csv", to_csv([&](std::ostream& o) { write_events_csv(o, events); }));
    ctx.write_json("events_meta.json", "detect", {{"trials", manifest.trials.size()}, {"events", counts}, {"warnings", warnings}});
}

void clean(const Context& ctx) {
    const auto manifest = ctx.manifest();
    const auto events = ctx.events("events.csv", manifest);
    const auto limits = ctx.config.limits();
    std::vector<CleanResult> results(manifest.trials.size());
    parallel_for(manifest.trials.size(), ctx.jobs, [&](std::size_t i) {
        const auto it = events.find(manifest.trials[i].key());
        if (it != events.end()) results[i] = clean_saccades(it->second, manifest.trials[i], limits);
    });
    EventsByTrial cleaned;
    std::vector<CleaningReport> reports;
    for (std::size_t i = 0; i < manifest.trials.size(); ++i) {
        cleaned[manifest.trials[i].key()] = std::move(results[i].events);
        reports.push_back(results[i].report);
    }
    ctx.write_text("events_clean.csv", to_csv([&](std::ostream& o) { write_events_csv(o, cleaned); }));
    ctx.write_json("cleaning_report.json", "clean", {{"report", to_json(summarize_cleaning(reports))}});
}

void featurize(const Context& ctx) {
    std::vector<std::string> warnings;
    FeatureMatrix matrix;
    std::string source;
    if (fs::exists(ctx.path("events_clean.csv"))) {
        const auto manifest = ctx.manifest();
        const auto events = ctx.events("events_clean.csv", manifest);
        std::vector<FeatureVector> rows(manifest.trials.size());
        parallel_for(manifest.trials.size(), ctx.jobs, [&](std::size_t i) {
            const auto it = events.find(manifest.trials[i].key());
            static const std::vector<GazeEvent> none;
            rows[i] = featurize_trial(it == events.end() ? none : it->second, manifest.trials[i]);
        });
        matrix = build_matrix(std::move(rows), &warnings);
        source = "events_clean.csv";
    } else if (fs::exists(ctx.path("synth_features.csv"))) {
        std::ifstream f(ctx.path("synth_features.csv"));
        matrix = read_feature_csv(f);
        source = "synth_features.csv";
    } else {
        throw MissingArtifact(ctx.path("events_clean.csv"));
    }
    const auto flagged = std::count_if(matrix.rows.begin(), matrix.rows.end(), [](const auto& r) { return r.flagged; });
    ctx.write_text("features.csv", to_csv([&](std::ostream& o) { write_feature_csv(o, matrix); }));
    ctx.write_json("features_meta.json", "featurize",
                   {{"source", source},
                    {"rows", matrix.size()},
                    {"flagged_rows", flagged},
                    {"standardization", to_json(matrix.standardization)},
                    {"warnings", warnings}});
}

void split(const Context& ctx) {
    const auto matrix = ctx.features();
    const auto plan = draw_split(participants_by_class(matrix), ctx.seed(kSplitSeed), ctx.config.split_sizes());
    std::vector<std::string> warnings;
    const auto part = materialize(plan, matrix, &warnings);
    ctx.write_json("split.json", "split",
                   {{"plan", to_json(plan)},
                    {"train_rows", part.train.size()},
                    {"holdout_rows", part.holdout.size()},
                    {"warnings", warnings}});
}

FeatureSelection selection_for(const Context& ctx, const std::string& which) {
    if (which == "mff") return selection_from_json(ctx.read_json("mff.json").at("selection"));
    if (which == "significant") return selection_from_json(ctx.read_json("sigfilter.json").at("selection"));
    return all_features();
}

void train(const Context& ctx) {
    const auto matrix = ctx.features();
    const auto plan = split_plan_from_json(ctx.read_json("split.json").at("plan"));
    const auto part = materialize(plan, matrix);
    const auto selection = selection_for(ctx, ctx.config.text("train.features"));
    const auto columns = selected_columns(selection);
    if (columns.empty()) throw Error("train: the selected feature set is empty");

    std::vector<std::string> warnings;
    const auto scaling = fit_standardization(matrix, part.train, &warnings);
    const RowMatrix x = standardized_rows(matrix, scaling, part.train, columns);
    std::vector<Expertise> labels;
    std::vector<std::string> groups;
    for (std::size_t r : part.train) {
        labels.push_back(matrix.rows[r].class_label);
        groups.push_back(matrix.rows[r].participant_id);
    }
    const auto ens = cv_ensemble_train(x, labels, groups, ctx.config.ensemble(), ctx.seed(kTrainSeed), &warnings);
    ctx.write_json("model.json", "train",
                   {{"features", selection.kept},
                    {"standardization", to_json(scaling)},
                    {"ensemble", to_json(ens)},
                    {"warnings", warnings}});
}

json holdout_score_of_model(const Context& ctx, const FeatureMatrix& matrix) {
    const json model = ctx.read_json("model.json");
    const auto plan = split_plan_from_json(ctx.read_json("split.json").at("plan"));
    const auto part = materialize(plan, matrix);
    const auto ens = ensemble_from_json(model.at("ensemble"));
    const auto scaling = standardization_from_json(model.at("standardization"));
    std::vector<std::size_t> columns;
    for (const auto& name : model.at("features")) {
        const auto idx = feature_index(name.get<std::string>());
        if (!idx) throw Error("model: unknown feature " + name.get<std::string>());
        columns.push_back(*idx);
    }
    const RowMatrix x = standardized_rows(matrix, scaling, part.holdout, columns);
    std::vector<Expertise> preds, truths;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        preds.push_back(ensemble_predict(ens, x.row(i)).label);
        truths.push_back(matrix.rows[part.holdout[i]].class_label);
    }
    return to_json(score(preds, truths));
}

void evaluate(const Context& ctx) {
    const auto matrix = ctx.features();
    const auto cfg = ctx.config.experiment(ctx.jobs);
    const std::uint64_t seed = ctx.seed(kExperimentSeed);
    json models = json::object();
    std::vector<std::string> notes;
    std::ostringstream runs_csv;
    bool header = true;

    auto run_model = [&](const std::string& label, const FeatureMatrix& m, const FeatureSelection& sel) {
        const auto columns = selected_columns(sel);
        if (columns.empty()) {
            notes.push_back(label + ": empty feature set, skipped");
            return;
        }
        const auto result = run_experiment(m, columns, cfg, seed);
        json j = to_json(result);
        j["features"] = sel.kept;
        models[label] = std::move(j);
        write_runs_csv(runs_csv, label, result, header);
        header = false;
    };

    run_model("ALL", matrix, all_features());
    for (const auto& [label, file] : {std::pair{"MFF", "mff.json"}, std::pair{"SF", "sigfilter.json"}}) {
        if (fs::exists(ctx.path(file))) run_model(label, matrix, selection_from_json(ctx.read_json(file).at("selection")));
        else notes.push_back(std::string(label) + ": " + file + " not found, skipped");
    }

    const auto participants = participants_by_class(matrix);
    if (participants.count(Expertise::Intermediate) && participants.count(Expertise::Expert)) {
        const std::array binary_classes{Expertise::Intermediate, Expertise::Expert};
        run_model("BINARY", restrict_classes(matrix, binary_classes), all_features());
    }

    json body = {{"models", std::move(models)}, {"notes", notes}};
    if (fs::exists(ctx.path("model.json")) && fs::exists(ctx.path("split.json")))
        body["trained_model_holdout"] = holdout_score_of_model(ctx, matrix);
    ctx.write_text("runs.csv", runs_csv.str());
    ctx.write_json("evaluation.json", "evaluate", std::move(body));
}

void mff(const Context& ctx) {
    const auto matrix = ctx.features();
    const auto sel = most_frequent_features(matrix, ctx.config.mff(ctx.jobs), ctx.seed(kMffSeed));
    ctx.write_json("mff.json", "mff",
                   {{"runs", ctx.config.integer("stats.mff_runs")},
                    {"top_m", ctx.config.integer("stats.top_m")},
                    {"selection", to_json(sel)}});
}

void sigfilter(const Context& ctx) {
    const auto matrix = ctx.features();
    const double alpha = ctx.config.real("stats.alpha");
    ctx.write_json("sigfilter.json", "sigfilter",
                   {{"alpha", alpha}, {"selection", to_json(significant_feature_filter(matrix, alpha))}});
}

void fliptest(const Context& ctx) {
    const auto matrix = ctx.features();
    std::vector<std::size_t> columns(matrix.feature_names.size());
    std::iota(columns.begin(), columns.end(), 0);
    const auto r = flip_test(matrix, columns, ctx.config.fliptest(ctx.jobs), ctx.seed(kFlipSeed));
    ctx.write_json("fliptest.json", "fliptest", {{"result", to_json(r)}});
}

ClassStats load_stats(const Context& ctx) {
    const auto& path = ctx.config.text("synth.stats");
    if (path.empty()) return default_class_stats();
    fs::path p = path;
    if (p.is_relative()) p = ctx.out_dir / p;
    if (!fs::exists(p)) throw MissingArtifact(p);
    std::ifstream f(p);
    return class_stats_from_json(json::parse(f));
}

void synth(const Context& ctx) {
    const auto stats = load_stats(ctx);
    const auto cfg = ctx.config.synth();
    if (ctx.config.text("synth.mode") == "features") {
        const auto matrix = sample_feature_rows(stats, cfg);
        ctx.write_text("synth_features.csv", to_csv([&](std::ostream& o) { write_feature_csv(o, matrix); }));
        ctx.write_json("synth_meta.json", "synth", {{"mode", "features"}, {"rows", matrix.size()}});
        return;
    }
    // Raw gaze: random scripted trials with occasional planted dropouts
    // inside saccades, so detection and cleaning have work to do.
    std::mt19937_64 rng(ctx.seed(kGazeSeed));
    std::vector<TrialRecord> trials;
    std::size_t planted = 0;
    for (Expertise c : kAllClasses) {
        for (std::size_t p = 0; p < cfg.participants[class_index(c)]; ++p) {
            for (std::size_t t = 0; t < cfg.trials_per_participant; ++t) {
                auto script = random_trace_script(ctx.config.real("synth.trial_ms"), rng);
                script.class_label = c;
                script.participant_id = std::string(1, std::string(to_string(c)).front()) + std::to_string(p + 1);
                script.stimulus_id = static_cast<int>(t % 26) + 1;
                script.block = static_cast<int>(t / 26) + 1;
                if (open_unit(rng) < 0.1 && script.segments.size() > 2) {
                    const auto [first, last] = segment_sample_range(script, 1);
                    if (last > first + 1) {
                        script.zero_samples.push_back(first + 1);
                        ++planted;
                    }
                }
                trials.push_back(sample_gaze_trace(script, rng()));
            }
        }
    }
    ctx.write_text("gaze.csv", to_csv([&](std::ostream& o) { write_gaze_csv(o, trials); }));
    ctx.write_json("synth_meta.json", "synth", {{"mode", "gaze"}, {"trials", trials.size()}, {"planted_dropouts", planted}});
}

void report(const Context& ctx) {
    json body = {{"config", ctx.config.to_json()}};
    json sources = json::array();
    auto take = [&](const std::string& file, const std::function<void(const json&)>& fn) {
        if (!fs::exists(ctx.path(file))) return;
        sources.push_back(file);
        fn(ctx.read_json(file));
    };
    take("manifest.json", [&](const json& j) {
        body["dataset"] = {{"kept_trials", j.at("trials").size()}, {"dropped_trials", j.at("dropped").size()}};
    });
    take("cleaning_report.json", [&](const json& j) { body["cleaning"] = j.at("report"); });
    take("evaluation.json", [&](const json& j) {
        const auto& models = j.at("models");
        if (models.contains("BINARY")) body["binary"] = models.at("BINARY").at("pooled");
        json ternary = json::object();
        for (const char* label : {"ALL", "MFF", "SF"}) {
            if (!models.contains(label)) continue;
            ternary[label] = {{"accuracy", models.at(label).at("accuracy")},
                              {"macro_miss_rate", models.at(label).at("macro_miss_rate")},
                              {"features", models.at(label).at("features").size()}};
        }
        body["ternary"] = std::move(ternary);
        if (j.contains("trained_model_holdout")) body["trained_model_holdout"] = j.at("trained_model_holdout");
    });
    take("mff.json", [&](const json& j) { body["mff"] = j.at("selection").at("kept"); });
    take("sigfilter.json", [&](const json& j) { body["significant"] = j.at("selection").at("kept"); });
    take("fliptest.json", [&](const json& j) { body["fliptest"] = j.at("result"); });
    if (sources.empty()) throw MissingArtifact(ctx.path("evaluation.json"));
    body["sources"] = std::move(sources);
    ctx.write_json("report.json", "report", std::move(body));
}

const std::map<std::string, std::function<void(const Context&)>>& stage_table() {
    static const std::map<std::string, std::function<void(const Context&)>> table = {
        {"ingest", ingest}, {"detect", detect},     {"clean", clean},         {"featurize", featurize},
        {"split", split},   {"train", train},       {"evaluate", evaluate},   {"mff", mff},
        {"sigfilter", sigfilter}, {"fliptest", fliptest}, {"synth", synth}, {"report", report},
    };
    return table;
}

std::string usage() {
    std::string s = "usage: gazeclass <subcommand> [--config FILE] [--seed N] [--jobs N] [--out-dir DIR] "
                    "[--set key=value]... [--input FILE]\nsubcommands:";
    for (const auto& name : subcommands()) s += " " + name;
    return s + "\n";
}

}  // namespace

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = {"synth", "ingest", "detect", "clean",     "featurize", "split",
                                                   "train", "evaluate", "mff",  "sigfilter", "fliptest", "report"};
    return names;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Gaze-based expertise classification pipeline"};
    std::string subcommand, config_path, input, out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;
    std::vector<std::string> sets;
    app.add_option("subcommand", subcommand, "pipeline stage")->required();
    app.add_option("--config", config_path, "configuration file");
    app.add_option("--seed", seed, "overrides the configured seed");
    app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out-dir", out_dir, "artifact directory");
    app.add_option("--set", sets, "key=value override, repeatable");
    app.add_option("--input", input, "raw gaze CSV for ingest");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help() << usage();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n' << usage();
        return kExitUsage;
    }

    const auto stage = stage_table().find(subcommand);
    if (stage == stage_table().end()) {
        err << "unknown subcommand '" << subcommand << "'\n" << usage();
        return kExitUsage;
    }

    try {
        Context ctx;
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) throw MissingArtifact(config_path);
            ctx.config = PipelineConfig::parse(f);
        }
        for (const auto& kv : sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ConfigError({"--set expects key=value, got '" + kv + "'"});
            ctx.config.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (seed) ctx.config.set("seed", std::to_string(*seed));
        if (!input.empty()) ctx.config.set("ingest.input", fs::absolute(input).string());
        ctx.config.validate();
        ctx.out_dir = out_dir;
        ctx.jobs = jobs;
        ctx.log = &out;
        fs::create_directories(ctx.out_dir);
        stage->second(ctx);
        return kExitOk;
    } catch (const MissingArtifact& e) {
        err << e.what() << '\n';
        return kExitMissingArtifact;
    } catch (const ConfigError& e) {
        err << e.what() << '\n';
        for (const auto& p : e.problems()) err << "  " << p << '\n';
        return kExitInvalidConfig;
    } catch (const std::exception& e) {
        err << subcommand << ": " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace gazeclass::cli
