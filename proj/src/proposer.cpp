#include "rrd/proposer.hpp"

#include <algorithm>

namespace rrd::proposer {

Proposer::Proposer(gateway::Gateway& gw, const protocol::TemplateSet& templates,
                   std::string model, double temperature, int max_tokens)
    : gw_(gw), templates_(templates), model_(std::move(model)), temperature_(temperature),
      max_tokens_(max_tokens) {}

std::string Proposer::ask(const std::string& user, int reask_seed) {
    gateway::ChatRequest req;
    req.model = model_;
    req.user = user;
    req.temperature = temperature_;
    req.max_tokens = max_tokens_;
    if (reask_seed > 0) req.seed = reask_seed;
    return gw_.complete(req).text;
}

ProposalResult Proposer::propose_initial(const core::ResponseSet& responses,
                                         const std::string& prompt_id) {
    if (responses.prompt.empty() || responses.responses.empty()) {
        throw ProposalFailed("needs a prompt and at least one sample response");
    }
    std::vector<std::string> response_texts;
    for (const auto& r : responses.responses) response_texts.push_back(r.text);
    std::string user = templates_.render(
        protocol::TemplateId::initial_proposal,
        {{"prompt", responses.prompt}, {"responses", response_texts}});

    std::vector<std::string> texts;
    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            texts = protocol::parse_rubrics(ask(user, attempt));
            break;
        } catch (const protocol::NoBlocksFound&) {
            if (attempt == 1) throw ProposalFailed("no rubric blocks after retry");
        } catch (const std::exception& e) {
            if (attempt == 1) throw ProposalFailed(e.what());
        }
    }

    ProposalResult result;
    result.parsed_blocks = static_cast<int>(texts.size());
    for (const auto& text : texts) {
        bool echo = std::any_of(responses.responses.begin(), responses.responses.end(),
                                [&](const core::Response& r) { return r.text == text; });
        if (echo) {
            ++result.echo_dropped;
            continue;
        }
        std::string id = core::rubric_id(prompt_id, text);
        bool dup = std::any_of(result.rubrics.begin(), result.rubrics.end(),
                               [&](const core::Rubric& r) { return r.id == id; });
        if (dup) continue;
        core::Rubric r;
        r.id = std::move(id);
        r.text = text;
        r.depth = 0;
        r.status = core::RubricStatus::active;
        r.created_iteration = 0;
        result.rubrics.push_back(std::move(r));
    }
    if (result.rubrics.empty()) throw ProposalFailed("every parsed block was dropped");
    return result;
}

DecomposeResult Proposer::decompose(const core::Rubric& target,
                                    const core::ResponseSet& satisfying_responses,
                                    const std::vector<std::string>& other_texts,
                                    const std::string& prompt_id, int iteration) {
    if (target.status != core::RubricStatus::active) {
        throw DecompositionFailed("target rubric is not active: " + target.id);
    }
    std::vector<std::string> response_texts;
    for (const auto& r : satisfying_responses.responses) response_texts.push_back(r.text);
    std::string user = templates_.render(protocol::TemplateId::decomposition,
                                         {{"prompt", satisfying_responses.prompt},
                                          {"responses", response_texts},
                                          {"rubric", target.text},
                                          {"other_rubric", other_texts}});

    std::vector<std::string> texts;
    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            texts = protocol::parse_rubrics(ask(user, attempt));
        } catch (const std::exception& e) {
            if (attempt == 1) throw DecompositionFailed(e.what());
            continue;
        }
        if (texts.size() >= 2) break;
        if (attempt == 1) throw DecompositionFailed("fewer than 2 rubric blocks after retry");
    }

    DecomposeResult result;
    result.truncated = texts.size() > 2;
    for (std::size_t i = 0; i < 2; ++i) {
        core::Rubric child;
        child.id = core::rubric_id(prompt_id, texts[i]);
        child.text = texts[i];
        child.parent = target.id;
        child.depth = target.depth + 1;
        child.status = core::RubricStatus::active;
        child.created_iteration = iteration;
        result.children.push_back(std::move(child));
    }
    return result;
}

} // namespace rrd::proposer
