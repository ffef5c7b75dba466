#include "rrd/engine.hpp"

#include "rrd/digest.hpp"
#include "rrd/grader.hpp"
#include "rrd/proposer.hpp"

#include <algorithm>
#include <sstream>

namespace rrd::engine {

void to_json(nlohmann::json& j, const IterationRecord& r) {
    j = nlohmann::json{{"iteration", r.iteration},
                       {"active_count", r.active_count},
                       {"decompositions", r.decompositions},
                       {"proposals", r.proposals},
                       {"accepted", r.accepted},
                       {"rejected_overlap", r.rejected_overlap},
                       {"rejected_conflict", r.rejected_conflict},
                       {"rejected_misaligned", r.rejected_misaligned},
                       {"rejected_echo", r.rejected_echo},
                       {"cumulative_rejected", r.cumulative_rejected}};
}

void from_json(const nlohmann::json& j, IterationRecord& r) {
    j.at("iteration").get_to(r.iteration);
    j.at("active_count").get_to(r.active_count);
    j.at("decompositions").get_to(r.decompositions);
    j.at("proposals").get_to(r.proposals);
    j.at("accepted").get_to(r.accepted);
    j.at("rejected_overlap").get_to(r.rejected_overlap);
    j.at("rejected_conflict").get_to(r.rejected_conflict);
    j.at("rejected_misaligned").get_to(r.rejected_misaligned);
    j.at("rejected_echo").get_to(r.rejected_echo);
    j.at("cumulative_rejected").get_to(r.cumulative_rejected);
}

std::string EngineTrace::to_jsonl() const {
    std::ostringstream out;
    for (const auto& rec : iterations) {
        out << nlohmann::json(rec).dump() << '\n';
    }
    return out.str();
}

namespace {

std::vector<std::string> generate_references(gateway::Gateway& gw, const std::string& model,
                                             const std::string& prompt, int count) {
    std::vector<std::string> out;
    for (int i = 1; i <= count; ++i) {
        gateway::ChatRequest req;
        req.model = model;
        req.user = prompt;
        req.temperature = 0.7;
        req.max_tokens = 2048;
        req.seed = i;
        out.push_back(gw.complete(req).text);
    }
    return out;
}

std::vector<std::string> active_texts(const core::RubricSet& set) {
    std::vector<std::string> texts;
    for (const auto& r : set.active()) texts.push_back(r.text);
    return texts;
}

} // namespace

EngineResult run_rrd(const core::ResponseSet& responses, const EngineConfig& config,
                     gateway::Gateway& gw, const protocol::TemplateSet& templates) {
    EngineResult result;
    result.rubrics.prompt_id = short_hash(responses.prompt);

    if (static_cast<int>(responses.responses.size()) != config.sample_response_count) {
        result.trace.warnings.push_back(
            "sample response count is " + std::to_string(responses.responses.size()) +
            ", configured for " + std::to_string(config.sample_response_count));
    }

    proposer::Proposer prop(gw, templates, config.proposer_model, config.proposal_temperature);
    grader::Grader grader(gw, templates, config.grader_model);
    filters::Filters filt(gw, templates, config.filter_model);

    std::vector<std::string> weak_refs;
    std::vector<std::string> strong_refs;
    if (config.filters.misalignment_enabled) {
        weak_refs = generate_references(gw, config.filters.weak_model, responses.prompt,
                                        config.filters.reference_count);
        strong_refs = generate_references(gw, config.filters.strong_model, responses.prompt,
                                          config.filters.reference_count);
    }

    int cumulative = 0;

    // Iteration 0: initial proposal. Echoed sample responses count against
    // the rejection budget.
    auto proposal = prop.propose_initial(responses, result.rubrics.prompt_id);
    for (auto& r : proposal.rubrics) result.rubrics.add(std::move(r));
    cumulative += proposal.echo_dropped;
    {
        IterationRecord rec;
        rec.iteration = 0;
        rec.proposals = proposal.parsed_blocks;
        rec.accepted = static_cast<int>(proposal.rubrics.size());
        rec.rejected_echo = proposal.echo_dropped;
        rec.cumulative_rejected = cumulative;
        rec.active_count = static_cast<int>(result.rubrics.active().size());
        result.trace.iterations.push_back(rec);
    }

    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        if (cumulative >= config.termination_threshold) break;

        auto active = result.rubrics.active();
        result.matrix = grader.grade_matrix(active, responses, config.parallelism);

        // Rubrics satisfied by strictly more than n responses are too coarse.
        std::vector<std::string> targets;
        for (const auto& r : active) {
            if (r.status != core::RubricStatus::active) continue;
            auto sat = core::satisfying_responses(result.matrix, r.id);
            if (static_cast<int>(sat.size()) > config.n_trigger) targets.push_back(r.id);
        }

        IterationRecord rec;
        rec.iteration = iter;

        for (const auto& target_id : targets) {
            core::Rubric* target = result.rubrics.find(target_id);
            auto sat_ids = core::satisfying_responses(result.matrix, target_id);
            core::ResponseSet sat;
            sat.prompt = responses.prompt;
            for (const auto& r : responses.responses) {
                if (std::find(sat_ids.begin(), sat_ids.end(), r.id) != sat_ids.end()) {
                    sat.responses.push_back(r);
                }
            }
            std::vector<std::string> others;
            for (const auto& r : result.rubrics.active()) {
                if (r.id != target_id) others.push_back(r.text);
            }

            proposer::DecomposeResult dec;
            try {
                dec = prop.decompose(*target, sat, others, result.rubrics.prompt_id, iter);
            } catch (const std::exception& e) {
                result.trace.warnings.push_back("decomposition of " + target_id +
                                                " failed: " + e.what());
                continue;
            }
            ++rec.decompositions;
            target->status = core::RubricStatus::decomposed_retained;
            rec.proposals += static_cast<int>(dec.children.size());

            for (auto& child : dec.children) {
                bool echo = std::any_of(
                    responses.responses.begin(), responses.responses.end(),
                    [&](const core::Response& r) { return r.text == child.text; });
                if (echo) {
                    ++rec.rejected_echo;
                    ++cumulative;
                    continue;
                }
                if (result.rubrics.contains(child.id)) {
                    // Re-proposing a known rubric is treated as overlap.
                    ++rec.rejected_overlap;
                    ++cumulative;
                    continue;
                }

                auto standing = active_texts(result.rubrics);
                if (config.filters.misalignment_enabled &&
                    filt.misaligned(child.text, weak_refs, strong_refs, grader)) {
                    child.status = core::RubricStatus::rejected_misaligned;
                    ++rec.rejected_misaligned;
                    ++cumulative;
                } else if (config.filters.conflict_enabled &&
                           filt.check_conflict(child.text, standing).rejected) {
                    child.status = core::RubricStatus::rejected_conflict;
                    ++rec.rejected_conflict;
                    ++cumulative;
                } else if (config.filters.overlap_enabled &&
                           filt.check_overlap(child.text, standing).rejected) {
                    child.status = core::RubricStatus::rejected_overlap;
                    ++rec.rejected_overlap;
                    ++cumulative;
                } else {
                    child.status = core::RubricStatus::active;
                    ++rec.accepted;
                }
                result.rubrics.add(std::move(child));
            }
        }

        rec.cumulative_rejected = cumulative;
        rec.active_count = static_cast<int>(result.rubrics.active().size());
        result.trace.iterations.push_back(rec);
    }

    result.matrix = grader.grade_matrix(result.rubrics.active(), responses, config.parallelism);
    return result;
}

} // namespace rrd::engine
