#pragma once

#include "rrd/gateway.hpp"
#include "rrd/grader.hpp"
#include "rrd/protocol.hpp"
#include "rrd/rubric_core.hpp"

#include <string>
#include <vector>

namespace rrd::judge {

inline constexpr double kTieEpsilon = 1e-9; // pure float-noise guard

enum class Winner { A, B, tie };

const char* to_string(Winner w);
Winner winner_from_string(std::string_view s);

struct EmptyRubricSet : std::runtime_error {
    EmptyRubricSet() : std::runtime_error("no active rubrics to score against") {}
};

struct RubricContribution {
    std::string rubric_id;
    double weight = 0.0;
    int sat_a = 0;
    int sat_b = 0;
};

struct PairJudgment {
    Winner winner = Winner::tie;
    double reward_a = 0.0;
    double reward_b = 0.0;
    std::vector<RubricContribution> per_rubric;
};

void to_json(nlohmann::json& j, const PairJudgment& p);
void from_json(const nlohmann::json& j, PairJudgment& p);

/// Weighted rubric rewards for a two-column score matrix; the winner is the
/// strictly larger reward, with |reward_a - reward_b| <= kTieEpsilon a tie.
PairJudgment judge_pair(const core::ScoreMatrix& matrix, const core::WeightVector& weights);

/// Grades each rollout against every rubric and returns the weighted rubric
/// rewards, positionally aligned with `rollouts`.
std::vector<double> score_batch(const std::vector<core::Rubric>& rubrics,
                                const core::WeightVector& weights, const std::string& prompt,
                                const std::vector<core::Response>& rollouts,
                                grader::Grader& grader, int parallelism);

/// Direct pairwise verdict from the judge model, no rubrics involved.
/// A malformed reply gets one re-ask, then degrades to a tie.
Winner llm_pair_verdict(gateway::Gateway& gw, const protocol::TemplateSet& templates,
                        const std::string& model, const std::string& prompt,
                        const std::string& response_a, const std::string& response_b,
                        bool* degraded = nullptr);

} // namespace rrd::judge
