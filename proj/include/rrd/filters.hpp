#pragma once

#include "rrd/gateway.hpp"
#include "rrd/grader.hpp"
#include "rrd/protocol.hpp"

#include <string>
#include <vector>

namespace rrd::filters {

struct FilterConfig {
    bool misalignment_enabled = true;
    bool conflict_enabled = true;
    bool overlap_enabled = true;
    std::string weak_model = "weak-ref";
    std::string strong_model = "strong-ref";
    int reference_count = 2; // responses generated per reference model
};

struct FilterOutcome {
    bool rejected = false;
    bool degraded = false; // gateway failure, check failed open
};

/// Rejects overlapping, conflicting, and misaligned rubrics. LLM-backed
/// checks fail open (keep the rubric) on gateway failure.
class Filters {
public:
    Filters(gateway::Gateway& gw, const protocol::TemplateSet& templates, std::string model,
            int max_tokens = 64);

    /// True iff the new rubric substantially overlaps any existing one.
    /// An empty existing set short-circuits to false with no LLM call.
    FilterOutcome check_overlap(const std::string& new_text,
                                const std::vector<std::string>& existing_texts);

    /// True iff the new rubric expresses the opposite of an existing one.
    FilterOutcome check_conflict(const std::string& new_text,
                                 const std::vector<std::string>& existing_texts);

    /// True (reject) iff the rubric's mean satisfaction over the weak
    /// reference responses strictly exceeds its mean over the strong ones;
    /// ties keep the rubric.
    bool misaligned(const std::string& rubric_text, const std::vector<std::string>& weak_responses,
                    const std::vector<std::string>& strong_responses, grader::Grader& grader);

private:
    FilterOutcome run_check(protocol::TemplateId id, const std::string& new_text,
                            const std::vector<std::string>& existing_texts);

    gateway::Gateway& gw_;
    const protocol::TemplateSet& templates_;
    std::string model_;
    int max_tokens_;
};

} // namespace rrd::filters
