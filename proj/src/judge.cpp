#include "rrd/judge.hpp"

#include <cmath>

namespace rrd::judge {

const char* to_string(Winner w) {
    switch (w) {
        case Winner::A: return "A";
        case Winner::B: return "B";
        case Winner::tie: return "tie";
    }
    return "?";
}

Winner winner_from_string(std::string_view s) {
    if (s == "A") return Winner::A;
    if (s == "B") return Winner::B;
    if (s == "tie" || s == "TIE") return Winner::tie;
    throw std::invalid_argument("unknown winner: " + std::string(s));
}

void to_json(nlohmann::json& j, const PairJudgment& p) {
    nlohmann::json contributions = nlohmann::json::array();
    for (const auto& c : p.per_rubric) {
        contributions.push_back({{"rubric_id", c.rubric_id},
                                 {"weight", c.weight},
                                 {"sat_a", c.sat_a},
                                 {"sat_b", c.sat_b}});
    }
    j = nlohmann::json{{"winner", to_string(p.winner)},
                       {"reward_a", p.reward_a},
                       {"reward_b", p.reward_b},
                       {"per_rubric", std::move(contributions)}};
}

void from_json(const nlohmann::json& j, PairJudgment& p) {
    p.winner = winner_from_string(j.at("winner").get<std::string>());
    j.at("reward_a").get_to(p.reward_a);
    j.at("reward_b").get_to(p.reward_b);
    p.per_rubric.clear();
    for (const auto& c : j.at("per_rubric")) {
        RubricContribution rc;
        c.at("rubric_id").get_to(rc.rubric_id);
        c.at("weight").get_to(rc.weight);
        c.at("sat_a").get_to(rc.sat_a);
        c.at("sat_b").get_to(rc.sat_b);
        p.per_rubric.push_back(std::move(rc));
    }
}

PairJudgment judge_pair(const core::ScoreMatrix& matrix, const core::WeightVector& weights) {
    if (matrix.cols() != 2) {
        throw core::DimensionMismatch("judge_pair needs exactly 2 response columns, got " +
                                      std::to_string(matrix.cols()));
    }
    if (weights.values.size() != matrix.rows()) {
        throw core::DimensionMismatch("weight length " + std::to_string(weights.values.size()) +
                                      " does not match rubric count " +
                                      std::to_string(matrix.rows()));
    }
    auto rewards = core::column_scores(matrix, weights);
    PairJudgment out;
    out.reward_a = rewards[0];
    out.reward_b = rewards[1];
    if (std::abs(out.reward_a - out.reward_b) <= kTieEpsilon) {
        out.winner = Winner::tie;
    } else {
        out.winner = out.reward_a > out.reward_b ? Winner::A : Winner::B;
    }
    for (std::size_t k = 0; k < matrix.rows(); ++k) {
        out.per_rubric.push_back({matrix.rubric_ids[k], weights.values[k],
                                  static_cast<int>(matrix.at(k, 0)),
                                  static_cast<int>(matrix.at(k, 1))});
    }
    return out;
}

std::vector<double> score_batch(const std::vector<core::Rubric>& rubrics,
                                const core::WeightVector& weights, const std::string& prompt,
                                const std::vector<core::Response>& rollouts,
                                grader::Grader& grader, int parallelism) {
    if (rubrics.empty()) throw EmptyRubricSet();
    if (weights.values.size() != rubrics.size()) {
        throw core::DimensionMismatch("weight length does not match rubric count");
    }
    core::ResponseSet set;
    set.prompt = prompt;
    set.responses = rollouts;
    auto matrix = grader.grade_matrix(rubrics, set, parallelism);
    return core::column_scores(matrix, weights);
}

Winner llm_pair_verdict(gateway::Gateway& gw, const protocol::TemplateSet& templates,
                        const std::string& model, const std::string& prompt,
                        const std::string& response_a, const std::string& response_b,
                        bool* degraded) {
    gateway::ChatRequest req;
    req.model = model;
    req.user = templates.render(protocol::TemplateId::pairwise_judge,
                                {{"prompt", prompt},
                                 {"response_a", response_a},
                                 {"response_b", response_b}});
    req.temperature = 0.0;
    req.max_tokens = 16;

    if (degraded) *degraded = false;
    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            auto blocks = protocol::parse_tagged(gw.complete(req).text, "VERDICT");
            if (!blocks.empty()) {
                std::string v = protocol::trim(blocks.front());
                if (v == "A") return Winner::A;
                if (v == "B") return Winner::B;
                if (v == "TIE") return Winner::tie;
            }
        } catch (const std::exception&) {
            // fall through to the re-ask / degradation path
        }
        req.seed = req.seed ? *req.seed + 1 : 1;
    }
    if (degraded) *degraded = true;
    return Winner::tie;
}

} // namespace rrd::judge
