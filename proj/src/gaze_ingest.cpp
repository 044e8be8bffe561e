#include "gazeclass/gaze_ingest.hpp"

#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <tuple>
#include <unordered_map>

namespace gazeclass {

std::string TrialRecord::key() const {
    return participant_id + ":" + std::to_string(stimulus_id) + ":" + std::to_string(block);
}

double tracking_ratio(std::span<const GazeSample> samples) {
    if (samples.empty()) return 0.0;
    const auto usable = std::count_if(samples.begin(), samples.end(),
                                      [](const GazeSample& s) { return s.usable(); });
    return static_cast<double>(usable) / static_cast<double>(samples.size());
}

ColumnMapping ColumnMapping::from_json(const nlohmann::json& j) {
    ColumnMapping m;
    auto take = [&](const char* key, std::string& field) {
        if (j.contains(key)) field = j.at(key).get<std::string>();
    };
    take("participant", m.participant);
    take("class", m.class_label);
    take("stimulus", m.stimulus);
    take("block", m.block);
    take("time", m.time);
    take("x", m.x);
    take("y", m.y);
    take("validity", m.validity);
    if (j.contains("delimiter")) {
        const auto d = j.at("delimiter").get<std::string>();
        if (d.size() != 1) throw Error("schema: delimiter must be a single character");
        m.delimiter = d.front();
    }
    return m;
}

namespace {

using GroupKey = std::tuple<std::string, int, int>;

struct PendingTrial {
    TrialRecord record;
    bool monotone = true;
};

std::size_t require_column(const std::vector<std::string>& header, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error("schema: missing mapped column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

double median_interval(const std::vector<GazeSample>& samples) {
    std::vector<double> dts;
    dts.reserve(samples.size());
    for (std::size_t i = 1; i < samples.size(); ++i) dts.push_back(samples[i].t_ms - samples[i - 1].t_ms);
    if (dts.empty()) return kNominalSamplePeriodMs;
    auto mid = dts.begin() + static_cast<std::ptrdiff_t>(dts.size() / 2);
    std::nth_element(dts.begin(), mid, dts.end());
    return *mid;
}

}  // namespace

ParseResult parse_gaze_log(std::istream& source, const ColumnMapping& schema) {
    ParseResult result;
    std::string line;
    std::size_t line_no = 0;

    std::vector<std::string> header;
    while (std::getline(source, line)) {
        ++line_no;
        if (!detail::trim(line).empty()) {
            header = detail::split_fields(line, schema.delimiter);
            break;
        }
    }
    if (header.empty()) throw Error("schema: input has no header row");
    if (!header.front().empty() && header.front().rfind("\xEF\xBB\xBF", 0) == 0) header.front().erase(0, 3);

    const std::size_t c_participant = require_column(header, schema.participant);
    const std::size_t c_class = require_column(header, schema.class_label);
    const std::size_t c_stimulus = require_column(header, schema.stimulus);
    const std::size_t c_block = require_column(header, schema.block);
    const std::size_t c_time = require_column(header, schema.time);
    const std::size_t c_x = require_column(header, schema.x);
    const std::size_t c_y = require_column(header, schema.y);
    const std::size_t c_valid = require_column(header, schema.validity);

    std::map<GroupKey, PendingTrial> groups;
    std::vector<GroupKey> order;
    std::unordered_map<std::string, Expertise> participant_class;

    while (std::getline(source, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_fields(line, schema.delimiter);
        if (fields.size() != header.size()) {
            result.row_errors.push_back({line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                                      std::to_string(fields.size())});
            continue;
        }
        const auto cls = parse_expertise(fields[c_class]);
        const auto stim = detail::parse_int(fields[c_stimulus]);
        const auto block = detail::parse_int(fields[c_block]);
        const auto t = detail::parse_double(fields[c_time]);
        const auto x = detail::parse_double(fields[c_x]);
        const auto y = detail::parse_double(fields[c_y]);
        const auto valid = detail::parse_int(fields[c_valid]);
        std::string problem;
        if (fields[c_participant].empty()) problem = "empty participant";
        else if (!cls) problem = "unknown class '" + fields[c_class] + "'";
        else if (!stim) problem = "bad stimulus";
        else if (!block) problem = "bad block";
        else if (!t || !std::isfinite(*t)) problem = "bad timestamp";
        else if (!x || !y || !std::isfinite(*x) || !std::isfinite(*y)) problem = "bad gaze position";
        else if (!valid || (*valid != 0 && *valid != 1)) problem = "validity must be 0 or 1";
        if (problem.empty()) {
            auto [it, inserted] = participant_class.emplace(fields[c_participant], *cls);
            if (!inserted && it->second != *cls) problem = "class conflicts with earlier rows of this participant";
        }
        if (!problem.empty()) {
            result.row_errors.push_back({line_no, problem});
            continue;
        }

        GroupKey key{fields[c_participant], static_cast<int>(*stim), static_cast<int>(*block)};
        auto [it, inserted] = groups.try_emplace(key);
        PendingTrial& pending = it->second;
        if (inserted) {
            order.push_back(key);
            pending.record.participant_id = fields[c_participant];
            pending.record.class_label = *cls;
            pending.record.stimulus_id = static_cast<int>(*stim);
            pending.record.block = static_cast<int>(*block);
        }
        auto& samples = pending.record.samples;
        if (!samples.empty() && !(*t > samples.back().t_ms)) pending.monotone = false;
        samples.push_back({*t, *x, *y, *valid == 1});
    }

    std::vector<double> periods;
    for (const auto& key : order) {
        PendingTrial& pending = groups.at(key);
        TrialRecord& rec = pending.record;
        if (!pending.monotone) {
            result.rejected.push_back({rec.participant_id, rec.stimulus_id, rec.block, "non-monotone time"});
            continue;
        }
        rec.tracking_ratio = tracking_ratio(rec.samples);
        if (rec.samples.size() >= 2) periods.push_back(median_interval(rec.samples));
        result.trials.push_back(std::move(rec));
    }

    if (!periods.empty()) {
        auto mid = periods.begin() + static_cast<std::ptrdiff_t>(periods.size() / 2);
        std::nth_element(periods.begin(), mid, periods.end());
        if (std::abs(*mid - kNominalSamplePeriodMs) > 0.1 * kNominalSamplePeriodMs) {
            result.warnings.push_back("median inter-sample interval " + detail::format_double(*mid) +
                                      " ms deviates from the nominal 4 ms (250 Hz)");
        }
    }
    return result;
}

DatasetManifest apply_quality_gate(std::vector<TrialRecord> trials, double min_ratio) {
    DatasetManifest manifest;
    for (auto& trial : trials) {
        if (trial.tracking_ratio < min_ratio) {
            manifest.dropped.push_back({trial.participant_id, trial.stimulus_id, trial.block, "low tracking ratio"});
        } else {
            manifest.trials.push_back(std::move(trial));
        }
    }
    return manifest;
}

void write_gaze_csv(std::ostream& out, std::span<const TrialRecord> trials) {
    out << "participant,class,stimulus,block,t_ms,x_px,y_px,valid\n";
    for (const auto& trial : trials) {
        const std::string prefix = detail::csv_escape(trial.participant_id) + "," +
                                   std::string(to_string(trial.class_label)) + "," +
                                   std::to_string(trial.stimulus_id) + "," + std::to_string(trial.block) + ",";
        for (const auto& s : trial.samples) {
            out << prefix << detail::format_double(s.t_ms) << ',' << detail::format_double(s.x_px) << ','
                << detail::format_double(s.y_px) << ',' << (s.valid ? '1' : '0') << '\n';
        }
    }
}

nlohmann::json to_json(const DatasetManifest& manifest) {
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& t : manifest.trials) {
        nlohmann::json samples = nlohmann::json::array();
        for (const auto& s : t.samples) samples.push_back({s.t_ms, s.x_px, s.y_px, s.valid ? 1 : 0});
        trials.push_back({{"participant", t.participant_id},
                          {"class", std::string(to_string(t.class_label))},
                          {"stimulus", t.stimulus_id},
                          {"block", t.block},
                          {"tracking_ratio", t.tracking_ratio},
                          {"samples", std::move(samples)}});
    }
    nlohmann::json dropped = nlohmann::json::array();
    for (const auto& d : manifest.dropped) {
        dropped.push_back(
            {{"participant", d.participant_id}, {"stimulus", d.stimulus_id}, {"block", d.block}, {"reason", d.reason}});
    }
    return {{"trials", std::move(trials)}, {"dropped", std::move(dropped)}};
}

DatasetManifest manifest_from_json(const nlohmann::json& j) {
    DatasetManifest m;
    for (const auto& jt : j.at("trials")) {
        TrialRecord t;
        t.participant_id = jt.at("participant").get<std::string>();
        const auto cls = parse_expertise(jt.at("class").get<std::string>());
        if (!cls) throw Error("manifest: unknown class");
        t.class_label = *cls;
        t.stimulus_id = jt.at("stimulus").get<int>();
        t.block = jt.at("block").get<int>();
        t.tracking_ratio = jt.at("tracking_ratio").get<double>();
        for (const auto& js : jt.at("samples")) {
            t.samples.push_back({js.at(0).get<double>(), js.at(1).get<double>(), js.at(2).get<double>(),
                                 js.at(3).get<int>() == 1});
        }
        m.trials.push_back(std::move(t));
    }
    for (const auto& jd : j.at("dropped")) {
        m.dropped.push_back({jd.at("participant").get<std::string>(), jd.at("stimulus").get<int>(),
                             jd.at("block").get<int>(), jd.at("reason").get<std::string>()});
    }
    return m;
}

}  // namespace gazeclass
