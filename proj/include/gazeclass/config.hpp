#pragma once

// Pipeline configuration: a flat key/value file with [section] headers.
//
//   seed = 42
//   [svm]
//   kernel = "linear"   # or "rbf"
//   C = 1.0
//
// Keys are addressed as "section.name". Every key has a documented
// default; unknown keys and out-of-range values fail validation.

#include "gazeclass/clean.hpp"
#include "gazeclass/dataset.hpp"
#include "gazeclass/ensemble.hpp"
#include "gazeclass/event_detect.hpp"
#include "gazeclass/experiment.hpp"
#include "gazeclass/stats.hpp"
#include "gazeclass/synth.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace gazeclass {

class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

enum class ValueType { Integer, Real, Text };

struct ConfigKey {
    std::string key;
    ValueType type;
    std::string default_value;
    double min = 0.0;                  // numeric bounds, inclusive
    double max = 0.0;
    std::vector<std::string> choices;  // Text only; empty = free text
    std::string help;
};

const std::vector<ConfigKey>& config_schema();

class PipelineConfig {
public:
    PipelineConfig();  // all defaults

    // Reads key/value lines. Syntax errors and unknown keys throw
    // ConfigError naming every offending line.
    static PipelineConfig parse(std::istream& in);

    void set(const std::string& key, const std::string& value);
    void validate() const;

    std::int64_t integer(const std::string& key) const;
    double real(const std::string& key) const;
    const std::string& text(const std::string& key) const;

    std::uint64_t seed() const { return static_cast<std::uint64_t>(integer("seed")); }
    // FNV-1a over the canonical "key=value" lines.
    std::uint64_t hash() const;
    std::string hash_hex() const;

    // {key: {"value": ..., "default": ...}}
    nlohmann::json to_json() const;

    GeometryConfig geometry() const;
    DetectionConfig detection() const;
    PhysiologicalLimits limits() const;
    EnsembleConfig ensemble() const;
    SplitSizes split_sizes() const;
    ExperimentConfig experiment(std::size_t jobs) const;
    MffConfig mff(std::size_t jobs) const;
    FlipTestConfig fliptest(std::size_t jobs) const;
    SynthConfig synth() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace gazeclass
