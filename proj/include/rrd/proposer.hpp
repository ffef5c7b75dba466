#pragma once

#include "rrd/gateway.hpp"
#include "rrd/protocol.hpp"
#include "rrd/rubric_core.hpp"

#include <string>
#include <vector>

namespace rrd::proposer {

struct ProposalFailed : std::runtime_error {
    explicit ProposalFailed(const std::string& why)
        : std::runtime_error("initial rubric proposal failed: " + why) {}
};

struct DecompositionFailed : std::runtime_error {
    explicit DecompositionFailed(const std::string& why)
        : std::runtime_error("rubric decomposition failed: " + why) {}
};

struct ProposalResult {
    std::vector<core::Rubric> rubrics;
    int parsed_blocks = 0; // raw block count before dedup/echo guard
    int echo_dropped = 0;  // blocks that repeated a sample response verbatim
};

struct DecomposeResult {
    std::vector<core::Rubric> children; // exactly 2
    bool truncated = false;             // the model returned more than 2 blocks
};

/// LLM-backed generation of initial rubrics and two-way decomposition of
/// coarse rubrics.
class Proposer {
public:
    Proposer(gateway::Gateway& gw, const protocol::TemplateSet& templates, std::string model,
             double temperature = 0.7, int max_tokens = 2048);

    /// Initial depth-0 proposals from the task prompt and sample responses.
    /// An empty parse triggers one re-ask before failing. Duplicate texts
    /// collapse to one id; texts equal to a sample response are dropped.
    ProposalResult propose_initial(const core::ResponseSet& responses,
                                   const std::string& prompt_id);

    /// Exactly two children of `target`, proposed from the responses that
    /// satisfy it. `other_texts` are the standing rubrics the children must
    /// not overlap with.
    DecomposeResult decompose(const core::Rubric& target,
                              const core::ResponseSet& satisfying_responses,
                              const std::vector<std::string>& other_texts,
                              const std::string& prompt_id, int iteration);

private:
    std::string ask(const std::string& user, int reask_seed);

    gateway::Gateway& gw_;
    const protocol::TemplateSet& templates_;
    std::string model_;
    double temperature_;
    int max_tokens_;
};

} // namespace rrd::proposer
