#include "rrd/grader.hpp"

#include <mutex>

namespace rrd::grader {

Grader::Grader(gateway::Gateway& gw, const protocol::TemplateSet& templates, std::string model,
               int max_tokens)
    : gw_(gw), templates_(templates), model_(std::move(model)), max_tokens_(max_tokens) {}

GradeOutcome Grader::grade(const std::string& rubric_text, const std::string& response_text) {
    if (rubric_text.empty() || response_text.empty()) {
        throw std::invalid_argument("grade requires nonempty rubric and response texts");
    }
    gateway::ChatRequest req;
    req.model = model_;
    req.user = templates_.render(protocol::TemplateId::rubric_grading,
                                 {{"rubric", rubric_text}, {"response", response_text}});
    req.temperature = 0.0;
    req.max_tokens = max_tokens_;

    GradeOutcome out;
    for (int attempt = 1; attempt <= 2; ++attempt) {
        out.attempts = attempt;
        try {
            auto result = gw_.complete(req);
            out.value = protocol::parse_evaluation(result.text) ? 1 : 0;
            out.flagged = false;
            return out;
        } catch (const std::exception&) {
            // malformed reply or gateway failure; re-ask once with a fresh seed
            req.seed = req.seed ? *req.seed + 1 : 1;
        }
    }
    out.value = 0;
    out.flagged = true;
    return out;
}

core::ScoreMatrix Grader::grade_matrix(const std::vector<core::Rubric>& rubrics,
                                       const core::ResponseSet& responses, int parallelism,
                                       std::vector<CellFlag>* flags) {
    if (rubrics.empty() || responses.responses.empty()) {
        throw std::invalid_argument("grade_matrix requires nonempty rubric and response lists");
    }
    core::ScoreMatrix matrix;
    for (const auto& r : rubrics) matrix.rubric_ids.push_back(r.id);
    for (const auto& r : responses.responses) matrix.response_ids.push_back(r.id);
    matrix.entries.assign(matrix.rows() * matrix.cols(), 0);

    std::mutex flag_mu;
    const std::size_t cols = matrix.cols();
    gateway::parallel_for(matrix.rows() * cols, parallelism, [&](std::size_t cell) {
        std::size_t k = cell / cols;
        std::size_t i = cell % cols;
        auto outcome = grade(rubrics[k].text, responses.responses[i].text);
        matrix.set(k, i, static_cast<std::uint8_t>(outcome.value));
        if (outcome.flagged && flags) {
            std::lock_guard<std::mutex> lock(flag_mu);
            flags->push_back({rubrics[k].id, responses.responses[i].id});
        }
    });
    return matrix;
}

} // namespace rrd::grader
