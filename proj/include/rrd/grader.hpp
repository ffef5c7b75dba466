#pragma once

#include "rrd/gateway.hpp"
#include "rrd/protocol.hpp"
#include "rrd/rubric_core.hpp"

#include <string>
#include <vector>

namespace rrd::grader {

struct GradeOutcome {
    int value = 0;    // 0 or 1
    int attempts = 1; // gateway completions issued
    bool flagged = false; // true when the cell degraded to 0 after retry
};

/// Evaluates rubric satisfaction g(P,R) one (rubric, response) pair per call
/// at temperature 0; a malformed or failed reply gets one re-ask before the
/// cell degrades to 0 with a diagnostic flag.
class Grader {
public:
    Grader(gateway::Gateway& gw, const protocol::TemplateSet& templates, std::string model,
           int max_tokens = 64);

    GradeOutcome grade(const std::string& rubric_text, const std::string& response_text);

    struct CellFlag {
        std::string rubric_id;
        std::string response_id;
    };

    /// m x M matrix with cell (k,i) = grade(rubric_k, response_i). Cells are
    /// independent and graded with bounded parallelism; response caching makes
    /// re-grading unchanged cells free across iterations.
    core::ScoreMatrix grade_matrix(const std::vector<core::Rubric>& rubrics,
                                   const core::ResponseSet& responses, int parallelism,
                                   std::vector<CellFlag>* flags = nullptr);

private:
    gateway::Gateway& gw_;
    const protocol::TemplateSet& templates_;
    std::string model_;
    int max_tokens_;
};

} // namespace rrd::grader
