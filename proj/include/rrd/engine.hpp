#pragma once

#include "rrd/filters.hpp"
#include "rrd/gateway.hpp"
#include "rrd/protocol.hpp"
#include "rrd/rubric_core.hpp"

#include <string>
#include <vector>

namespace rrd::engine {

struct EngineConfig {
    int n_trigger = 2;             // decompose when strictly more than this many satisfy
    int termination_threshold = 15; // stop once cumulative rejections reach this
    int max_iterations = 10;       // safety cap
    int sample_response_count = 8;
    int parallelism = 4;
    std::string proposer_model = "proposer";
    std::string grader_model = "grader";
    std::string filter_model = "grader";
    double proposal_temperature = 0.7;
    filters::FilterConfig filters;
};

struct IterationRecord {
    int iteration = 0;
    int active_count = 0; // active + decomposed_retained after this iteration
    int decompositions = 0;
    int proposals = 0; // candidate rubrics parsed this iteration
    int accepted = 0;
    int rejected_overlap = 0;
    int rejected_conflict = 0;
    int rejected_misaligned = 0;
    int rejected_echo = 0;
    int cumulative_rejected = 0;
};

struct EngineTrace {
    std::vector<IterationRecord> iterations;
    std::vector<std::string> warnings;

    int cumulative_rejected() const {
        return iterations.empty() ? 0 : iterations.back().cumulative_rejected;
    }
    /// One JSON object per iteration, newline terminated.
    std::string to_jsonl() const;
};

void to_json(nlohmann::json& j, const IterationRecord& r);
void from_json(const nlohmann::json& j, IterationRecord& r);

struct EngineResult {
    core::RubricSet rubrics;   // full lineage, including rejected rubrics
    core::ScoreMatrix matrix;  // active rubrics x sample responses
    EngineTrace trace;
};

/// Runs the full recursive decomposition loop: initial proposal, then
/// iterate (grade -> decompose coarse rubrics -> filter candidates) until
/// the cumulative rejection count reaches the termination threshold or the
/// iteration cap is hit.
EngineResult run_rrd(const core::ResponseSet& responses, const EngineConfig& config,
                     gateway::Gateway& gw, const protocol::TemplateSet& templates);

} // namespace rrd::engine
