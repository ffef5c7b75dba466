#include "rrd/filters.hpp"

#include <numeric>

namespace rrd::filters {

Filters::Filters(gateway::Gateway& gw, const protocol::TemplateSet& templates, std::string model,
                 int max_tokens)
    : gw_(gw), templates_(templates), model_(std::move(model)), max_tokens_(max_tokens) {}

FilterOutcome Filters::run_check(protocol::TemplateId id, const std::string& new_text,
                                 const std::vector<std::string>& existing_texts) {
    if (existing_texts.empty()) return {false, false};
    gateway::ChatRequest req;
    req.model = model_;
    req.user = templates_.render(
        id, {{"existing_rubrics", existing_texts}, {"new_rubric", new_text}});
    req.temperature = 0.0;
    req.max_tokens = max_tokens_;
    try {
        return {protocol::parse_evaluation(gw_.complete(req).text), false};
    } catch (const std::exception&) {
        return {false, true}; // fail open
    }
}

FilterOutcome Filters::check_overlap(const std::string& new_text,
                                     const std::vector<std::string>& existing_texts) {
    return run_check(protocol::TemplateId::overlap_check, new_text, existing_texts);
}

FilterOutcome Filters::check_conflict(const std::string& new_text,
                                      const std::vector<std::string>& existing_texts) {
    return run_check(protocol::TemplateId::conflict_check, new_text, existing_texts);
}

bool Filters::misaligned(const std::string& rubric_text,
                         const std::vector<std::string>& weak_responses,
                         const std::vector<std::string>& strong_responses,
                         grader::Grader& grader) {
    if (weak_responses.empty() || strong_responses.empty()) {
        throw std::invalid_argument("misalignment filter needs weak and strong responses");
    }
    auto mean_satisfaction = [&](const std::vector<std::string>& group) {
        double total = 0.0;
        for (const auto& response : group) {
            total += grader.grade(rubric_text, response).value;
        }
        return total / static_cast<double>(group.size());
    };
    return mean_satisfaction(weak_responses) > mean_satisfaction(strong_responses);
}

} // namespace rrd::filters
