#pragma once

#include "rrd/engine.hpp"
#include "rrd/judge.hpp"
#include "rrd/store.hpp"

#include <string>
#include <vector>

namespace rrd::bench {

struct ParseError : std::runtime_error {
    ParseError(int line_, const std::string& why)
        : std::runtime_error("dataset line " + std::to_string(line_) + ": " + why), line(line_) {}
    int line;
};

struct PreferenceRecord {
    std::string id;
    std::string prompt;
    std::string response_a;
    std::string response_b;
    judge::Winner label = judge::Winner::A; // A or B, never tie
    nlohmann::json meta;
};

/// JSONL, one record per line:
/// {"id", "prompt", "response_a", "response_b", "label": "A"|"B", "meta"?}.
/// Blank lines are skipped; anything malformed raises ParseError with the
/// 1-based line number.
std::vector<PreferenceRecord> load_dataset(const std::string& path);

enum class Variant {
    base,        // direct pairwise LLM verdict, no rubrics
    rubrics,     // initial rubric proposal only, uniform weights
    rrd_uniform, // full recursive decomposition, uniform weights
    rrd_llm,     // full recursive decomposition, LLM weights
    rrd_wu,      // full recursive decomposition, whitened-uniform weights
};

const char* to_string(Variant v);
Variant variant_from_string(std::string_view s);

struct JudgeConfig {
    Variant variant = Variant::rrd_uniform;
    engine::EngineConfig engine;
    std::string judge_model = "judge";    // base variant
    std::string weight_model = "weighter"; // rrd-llm variant
    int records_parallelism = 1;
    store::RunStore* run = nullptr; // when set, per-record artifacts persist here
};

struct RecordVerdict {
    std::string id;
    judge::Winner predicted = judge::Winner::tie;
    judge::Winner label = judge::Winner::A;
    double credit = 0.0; // 1 correct, 0.5 tie, 0 wrong
    bool degraded = false;
    std::string detail; // failure reason when degraded
};

struct BenchReport {
    double accuracy = 0.0; // (correct + 0.5 * tie) / total
    int correct = 0;
    int wrong = 0;
    int tie = 0;
    std::vector<RecordVerdict> verdicts;
    std::string config_fingerprint;

    nlohmann::json to_json() const;
    /// Human-readable summary table.
    std::string table() const;
};

BenchReport evaluate_judge(const std::vector<PreferenceRecord>& records, const JudgeConfig& config,
                           gateway::Gateway& gw, const protocol::TemplateSet& templates);

} // namespace rrd::bench
