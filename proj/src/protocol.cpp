#include "rrd/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace rrd::protocol {

namespace {

const char* kSharedTips = R"(Tips for writing good rubrics:

i. MECE:
- Mutually Exclusive, Collectively Exhaustive

ii. Completeness:
- Consider all the elements you would want to include to create a perfect response and put them into the rubric. This means including not only the facts and statements directly requested by the prompt, but also the supporting details that provide justification, reasoning, and logic for your response. Each of these elements should have a criterion because each criterion helps to develop the answer to the question from a slightly different angle.

iii. No overlapping:
- the same error from a model shouldn't be punished multiple times.

iv. Diversity:
- The rubric items should include variable types of information.
- If all criteria are like "the response mentions A", "the response mentions B", then this is not a good rubric.

v: How many rubric items for each prompt
- There is no golden standard, and the desired number of rubrics varies by accounts and task types.
- Write rubrics that cover all aspects of an ideal response.

vi: How many rubric items to fail
- A good rule of thumb is that the model fails on 50 per cent of rubrics items

vii: Atomicity / Non-stacked
- Each rubric criterion should evaluate exactly one distinct aspect. Avoid bundling multiple criteria into a single rubric. Most stacked criteria with the word "and" can be broken up into multiple pieces.
- BAD: Response identifies George Washington as the first U.S. president and mentions he served two terms.
- GOOD: Response identifies George Washington as the first U.S. president.
- GOOD: Response mentions that George Washington served two terms.

viii: Specificity
- Criteria should be binary (true or false) and objective.
- Avoid vague descriptions (e.g., "the response must be accurate" is vague).
- Example: "The response should list exactly three examples."

ix: Self-contained
- Each criterion should contain all the information needed to evaluate a response. For example: "Mentions the capital city of Canada" -> BAD; "Mentions the capital city of Canada is Ottawa" -> GOOD.

x: Criterion should be verifiable without requiring external search.
- BAD: Response names any of the Nobel Prize winners in Physics in 2023
- GOOD: Response names any of the following Nobel Prize winners in Physics in 2023: Pierre Agostini, Ferenc Krausz, or Anne L'Huillier.)";

std::string initial_proposal_body() {
    std::ostringstream s;
    s << R"(Role: You are a rubric designer for an LLM-as-judge system.

Inputs you will receive:
- Prompt: the task/question the response must answer.
- Responses: a set of responses to be evaluated against rubrics.

Goal: Design a comprehensive set of rubrics for evaluating responses to the given prompt. Only write rubrics you are confident about. Only propose the best new rubrics.

Requirements:
- Propose rubrics that collectively cover the most important dimensions needed to judge whether a response correctly and helpfully satisfies the prompt.
- Each rubric must be consistently judgeable across many responses (avoid vague wording like "good", "nice", "high-quality").
- Each rubric must be prompt-specific (tied to what the user asked), not generic writing advice.
- Each rubric should be written as a single criterion with clear, binary pass/fail boundaries. Prefer objective checks.
- New rubric MUST NOT answer the question directly.
- New rubric MUST NOT repeat any of the responses provided.

)" << kSharedTips << R"(

Below are the inputs:
- Here is the user prompt for which we want to generate a rubric:
  PROMPT: {prompt}
- Here are a list of reference responses:
  RESPONSES:
{responses}

Output STRICTLY in below format. No other text is allowed:
<RUBRIC> Rubric 1 </RUBRIC>
<RUBRIC> Rubric 2 </RUBRIC>
...)";
    return s.str();
}

std::string decomposition_body() {
    std::ostringstream s;
    s << R"(Role: You are a rubric designer for an LLM-as-judge system.

Inputs you will receive:
- Prompt: the task/question the response must answer.
- Responses: a set of responses to be evaluated against rubrics.
- Current rubric: criterion currently used by a judge. This rubric has already been satisfied by multiple responses, so it is too coarse and fail to distinguish response quality.
- Other rubrics: Other rubrics that the new rubric must NOT overlap with.

Goal: Propose exactly TWO new rubrics that are more granular than the existing ones and can better differentiate candidate responses. Only write rubrics you are confident about. Only propose the best new rubrics.

What "more granular" means (requirements):
- Each new rubric must target a specific, discriminative dimension of quality that is not sufficiently captured by the existing rubrics (e.g., completeness of key sub-steps, correctness of constraints, justification quality, handling of edge cases, faithfulness to prompt format, etc.).
- New rubrics should NOT miss critical information contained in the existing rubric.
- Each rubric must be consistently judgeable across many responses (avoid vague wording like "good", "nice", "high-quality").
- Each rubric must be prompt-specific (tied to what the user asked), not generic writing advice.
- Each rubric should be written as a single criterion with clear, binary pass/fail boundaries. Prefer objective checks.
- New rubric MUST NOT repeat any of the responses provided.
- New rubric MUST NOT answer the question directly.

)" << kSharedTips << R"(

Below are the inputs:
- Here is the user prompt for which we want to generate a rubric:
  PROMPT: {prompt}
- Here are a list of reference responses:
  RESPONSES:
{responses}
- Here is existing rubric to improve:
  RUBRIC: {rubric}
- Here is other rubric that the new rubric should NOT overlap with:
  OTHER RUBRIC: {other_rubric}

Output STRICTLY in below format. No other text is allowed:
<RUBRIC> New rubric 1 </RUBRIC>
<RUBRIC> New rubric 2 </RUBRIC>)";
    return s.str();
}

const char* kOverlapBody = R"(You are checking whether a new rubric substantially overlaps with ANY of the existing rubrics. If ANY overlap is found, output YES; otherwise output NO.

Definition of substantial overlapping:
- The new rubric has the same intent as an existing rubric, or is a strict subset/superset of it, or >= 70% of its meaning is covered by the existing rubric so that applying both would not materially change scoring outcomes.
- Match on meaning, not wording. Treat synonyms, paraphrases, and inverses with the same effect as overlapping (e.g., "be concise" ~ "avoid unnecessary verbosity").
- Ignore trivial phrasing, tone, and example differences unless they change the requirement.

Edge cases:
- If scopes are disjoint (different capability/goal) -> NO.
- If the new rubric adds only minor qualifiers (e.g., "clearly"/"appropriately") without changing evaluation -> YES.
- If the new rubric merely narrows the context while keeping the same criterion (subset) or broadens it (superset) -> YES.

Input format:
EXISTING_RUBRICS:
{existing_rubrics}
NEW_RUBRIC: {new_rubric}

Output STRICTLY in below format. No other text is allowed:
<EVALUATION> YES/NO </EVALUATION>)";

const char* kConflictBody = R"(You are checking whether a new rubric expresses opposite meaning of ANY of the existing rubrics. If ANY opposition is found, output YES; otherwise output NO.

Definition of opposition:
- "Opposite" means the new rubric asserts the negation or reverse polarity of the same requirement, property, or direction as an existing rubric.
- Examples:
  - require X <-> forbid/avoid X
  - must include X <-> must NOT include X
  - prefer more of X <-> prefer less of X (same X, opposite direction)
  - answer should be optimistic <-> answer should be pessimistic
- Do NOT flag different targets or contexts.
- Do NOT flag orthogonal dimensions (e.g., tone vs citations or "be clear" vs "be concise")
- Do NOT flag mere differences in emphasis, strength, scope, or style.
- Do NOT flag stricter/looser thresholds unless they clearly reverse direction on the same axis (e.g., "maximize brevity" vs "maximize elaboration" = opposite; "<= 120 words" vs "<= 150 words" = NOT opposite).

Input format:
EXISTING_RUBRICS:
{existing_rubrics}
NEW_RUBRIC: {new_rubric}

Output STRICTLY in below format. No other text is allowed:
<EVALUATION> YES/NO </EVALUATION>)";

const char* kGradingBody = R"(You are a judge, evaluating whether a response satisfies the given rubric. If the response satisfies the criterion of the rubric, output YES; otherwise output NO.

Requirement:
- You must follow the rubric strictly, and only consider the criteria listed in the rubric.
- You must NOT consider any other factors, such as your own opinions or external knowledge.

Below between <RESPONSE> and </RESPONSE> is the response to evaluate on
<RESPONSE> {response} </RESPONSE>

Below between <RUBRIC> and </RUBRIC> is the rubric to evaluate on
<RUBRIC> {rubric} </RUBRIC>

Output STRICTLY in below format. No other text is allowed:
<EVALUATION> YES/NO </EVALUATION>)";

const char* kWeightingBody = R"(You are assigning importance weights to evaluation rubrics for an LLM-as-judge system.

Inputs you will receive:
- Prompt: the task/question the responses must answer.
- Rubrics: the numbered list of rubrics to weight.

Goal: For every rubric, output one integer weight from 1 (least important) to 5 (most important) reflecting how much that criterion should influence the overall judgment of a response to this prompt. Output exactly one weight per rubric, in the same order as the rubric list.

Below are the inputs:
- Here is the user prompt:
  PROMPT: {prompt}
- Here are the rubrics to weight:
{rubrics}

Output STRICTLY in below format, one block per rubric, in order. No other text is allowed:
<WEIGHT> 3 </WEIGHT>
<WEIGHT> 5 </WEIGHT>
...)";

const char* kPairwiseBody = R"(You are a judge comparing two candidate responses to the same prompt. Decide which response answers the prompt better overall. If they are of equal quality, output TIE.

Below is the prompt:
PROMPT: {prompt}

Below between <RESPONSE_A> and </RESPONSE_A> is the first response
<RESPONSE_A> {response_a} </RESPONSE_A>

Below between <RESPONSE_B> and </RESPONSE_B> is the second response
<RESPONSE_B> {response_b} </RESPONSE_B>

Output STRICTLY in below format. No other text is allowed:
<VERDICT> A/B/TIE </VERDICT>)";

bool is_placeholder_char(char c) {
    return (c >= 'a' && c <= 'z') || c == '_';
}

} // namespace

const char* to_string(TemplateId id) {
    switch (id) {
        case TemplateId::initial_proposal: return "initial_proposal";
        case TemplateId::decomposition: return "decomposition";
        case TemplateId::overlap_check: return "overlap_check";
        case TemplateId::conflict_check: return "conflict_check";
        case TemplateId::rubric_grading: return "rubric_grading";
        case TemplateId::rubric_weighting: return "rubric_weighting";
        case TemplateId::pairwise_judge: return "pairwise_judge";
    }
    return "?";
}

std::optional<TemplateId> template_from_string(std::string_view name) {
    for (TemplateId id : {TemplateId::initial_proposal, TemplateId::decomposition,
                          TemplateId::overlap_check, TemplateId::conflict_check,
                          TemplateId::rubric_grading, TemplateId::rubric_weighting,
                          TemplateId::pairwise_judge}) {
        if (name == to_string(id)) return id;
    }
    return std::nullopt;
}

TemplateSet TemplateSet::builtin() {
    TemplateSet t;
    t.bodies_[TemplateId::initial_proposal] = initial_proposal_body();
    t.bodies_[TemplateId::decomposition] = decomposition_body();
    t.bodies_[TemplateId::overlap_check] = kOverlapBody;
    t.bodies_[TemplateId::conflict_check] = kConflictBody;
    t.bodies_[TemplateId::rubric_grading] = kGradingBody;
    t.bodies_[TemplateId::rubric_weighting] = kWeightingBody;
    t.bodies_[TemplateId::pairwise_judge] = kPairwiseBody;
    return t;
}

const std::string& TemplateSet::body(TemplateId id) const {
    auto it = bodies_.find(id);
    if (it == bodies_.end()) throw UnknownTemplate(to_string(id));
    return it->second;
}

void TemplateSet::set_body(TemplateId id, std::string body) {
    bodies_[id] = std::move(body);
}

void TemplateSet::override_from_file(TemplateId id, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read template override: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    bodies_[id] = buf.str();
}

void TemplateSet::override_from_directory(const std::string& dir) {
    for (TemplateId id : {TemplateId::initial_proposal, TemplateId::decomposition,
                          TemplateId::overlap_check, TemplateId::conflict_check,
                          TemplateId::rubric_grading, TemplateId::rubric_weighting,
                          TemplateId::pairwise_judge}) {
        auto path = std::filesystem::path(dir) / (std::string(to_string(id)) + ".txt");
        if (std::filesystem::exists(path)) override_from_file(id, path.string());
    }
}

std::string join_numbered(const std::vector<std::string>& items, std::string_view label) {
    std::ostringstream out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out << "\n\n";
        if (label.empty()) {
            out << (i + 1) << ". " << items[i];
        } else {
            out << label << " " << (i + 1) << ": " << items[i];
        }
    }
    return out.str();
}

std::string TemplateSet::render(TemplateId id, const Bindings& bindings) const {
    const std::string& tpl = body(id);
    std::string out;
    out.reserve(tpl.size());
    std::size_t i = 0;
    while (i < tpl.size()) {
        char c = tpl[i];
        if (c == '{') {
            std::size_t j = i + 1;
            while (j < tpl.size() && is_placeholder_char(tpl[j])) ++j;
            if (j < tpl.size() && tpl[j] == '}' && j > i + 1) {
                std::string name = tpl.substr(i + 1, j - i - 1);
                auto it = bindings.find(name);
                if (it == bindings.end()) throw MissingBinding(name);
                if (const auto* s = std::get_if<std::string>(&it->second)) {
                    out += *s;
                } else {
                    const auto& list = std::get<std::vector<std::string>>(it->second);
                    out += join_numbered(list, name == "responses" ? "RESPONSE" : "");
                }
                i = j + 1;
                continue;
            }
        }
        out.push_back(c);
        ++i;
    }
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> parse_tagged(std::string_view text, std::string_view tag) {
    std::string open = "<" + std::string(tag) + ">";
    std::string close = "</" + std::string(tag) + ">";
    std::vector<std::string> values;
    std::size_t pos = 0;
    while (true) {
        std::size_t o = text.find(open, pos);
        if (o == std::string_view::npos) break;
        std::size_t inner = o + open.size();
        std::size_t c = text.find(close, inner);
        if (c == std::string_view::npos) break;
        values.push_back(trim(text.substr(inner, c - inner)));
        pos = c + close.size();
    }
    return values;
}

std::vector<std::string> parse_rubrics(std::string_view text) {
    auto values = parse_tagged(text, "RUBRIC");
    if (values.empty()) throw NoBlocksFound("RUBRIC");
    return values;
}

bool parse_evaluation(std::string_view text) {
    auto values = parse_tagged(text, "EVALUATION");
    if (values.empty()) throw MalformedEvaluation("no EVALUATION block");
    std::string token = values.front();
    std::transform(token.begin(), token.end(), token.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
    if (token == "YES") return true;
    if (token == "NO") return false;
    throw MalformedEvaluation("token is neither YES nor NO: " + token);
}

std::string emit_tagged(const std::vector<std::string>& values, std::string_view tag) {
    std::ostringstream out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out << "\n";
        out << "<" << tag << "> " << values[i] << " </" << tag << ">";
    }
    return out.str();
}

} // namespace rrd::protocol
