#include "rrd/rubric_core.hpp"

#include "rrd/digest.hpp"

#include <algorithm>

namespace rrd::core {

using nlohmann::json;

const char* to_string(RubricStatus s) {
    switch (s) {
        case RubricStatus::active: return "active";
        case RubricStatus::decomposed_retained: return "decomposed_retained";
        case RubricStatus::rejected_overlap: return "rejected_overlap";
        case RubricStatus::rejected_conflict: return "rejected_conflict";
        case RubricStatus::rejected_misaligned: return "rejected_misaligned";
    }
    return "?";
}

RubricStatus status_from_string(std::string_view s) {
    for (RubricStatus st : {RubricStatus::active, RubricStatus::decomposed_retained,
                            RubricStatus::rejected_overlap, RubricStatus::rejected_conflict,
                            RubricStatus::rejected_misaligned}) {
        if (s == to_string(st)) return st;
    }
    throw std::invalid_argument("unknown rubric status: " + std::string(s));
}

bool is_rejected(RubricStatus s) {
    return s == RubricStatus::rejected_overlap || s == RubricStatus::rejected_conflict ||
           s == RubricStatus::rejected_misaligned;
}

std::string rubric_id(std::string_view prompt_id, std::string_view text) {
    std::string key;
    key.reserve(prompt_id.size() + text.size() + 1);
    key.append(prompt_id);
    key.push_back('\x1f');
    key.append(text);
    return short_hash(key);
}

bool RubricSet::contains(std::string_view id) const { return find(id) != nullptr; }

Rubric* RubricSet::find(std::string_view id) {
    auto it = std::find_if(rubrics.begin(), rubrics.end(),
                           [&](const Rubric& r) { return r.id == id; });
    return it == rubrics.end() ? nullptr : &*it;
}

const Rubric* RubricSet::find(std::string_view id) const {
    auto it = std::find_if(rubrics.begin(), rubrics.end(),
                           [&](const Rubric& r) { return r.id == id; });
    return it == rubrics.end() ? nullptr : &*it;
}

void RubricSet::add(Rubric r) {
    if (contains(r.id)) throw std::invalid_argument("duplicate rubric id: " + r.id);
    rubrics.push_back(std::move(r));
}

std::vector<Rubric> RubricSet::active() const {
    std::vector<Rubric> out;
    for (const auto& r : rubrics) {
        if (!is_rejected(r.status)) out.push_back(r);
    }
    return out;
}

std::optional<std::size_t> ScoreMatrix::row_of(std::string_view rubric) const {
    for (std::size_t i = 0; i < rubric_ids.size(); ++i) {
        if (rubric_ids[i] == rubric) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> ScoreMatrix::col_of(std::string_view response) const {
    for (std::size_t i = 0; i < response_ids.size(); ++i) {
        if (response_ids[i] == response) return i;
    }
    return std::nullopt;
}

std::vector<std::string> satisfying_responses(const ScoreMatrix& matrix,
                                              std::string_view rubric_id) {
    auto row = matrix.row_of(rubric_id);
    if (!row) throw UnknownRubric(std::string(rubric_id));
    std::vector<std::string> out;
    for (std::size_t c = 0; c < matrix.cols(); ++c) {
        if (matrix.at(*row, c)) out.push_back(matrix.response_ids[c]);
    }
    return out;
}

std::vector<double> column_scores(const ScoreMatrix& matrix, std::span<const double> weights) {
    if (weights.size() != matrix.rows()) {
        throw DimensionMismatch("weights length " + std::to_string(weights.size()) +
                                " != matrix rows " + std::to_string(matrix.rows()));
    }
    std::vector<double> scores(matrix.cols(), 0.0);
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        for (std::size_t c = 0; c < matrix.cols(); ++c) {
            scores[c] += weights[r] * matrix.at(r, c);
        }
    }
    return scores;
}

std::vector<double> column_scores(const ScoreMatrix& matrix, const WeightVector& weights) {
    return column_scores(matrix, std::span<const double>(weights.values));
}

const char* to_string(WeightScheme s) {
    switch (s) {
        case WeightScheme::uniform: return "uniform";
        case WeightScheme::llm: return "llm";
        case WeightScheme::whitened_uniform: return "whitened_uniform";
    }
    return "?";
}

WeightScheme scheme_from_string(std::string_view s) {
    for (WeightScheme w : {WeightScheme::uniform, WeightScheme::llm,
                           WeightScheme::whitened_uniform}) {
        if (s == to_string(w)) return w;
    }
    throw std::invalid_argument("unknown weight scheme: " + std::string(s));
}

void to_json(json& j, const Rubric& r) {
    j = json{{"id", r.id},
             {"text", r.text},
             {"parent", r.parent ? json(*r.parent) : json(nullptr)},
             {"depth", r.depth},
             {"status", to_string(r.status)},
             {"created_iteration", r.created_iteration}};
}

void from_json(const json& j, Rubric& r) {
    r.id = j.at("id").get<std::string>();
    r.text = j.at("text").get<std::string>();
    if (j.contains("parent") && !j["parent"].is_null()) {
        r.parent = j["parent"].get<std::string>();
    } else {
        r.parent.reset();
    }
    r.depth = j.at("depth").get<int>();
    r.status = status_from_string(j.at("status").get<std::string>());
    r.created_iteration = j.at("created_iteration").get<int>();
}

void to_json(json& j, const RubricSet& s) {
    j = json{{"prompt_id", s.prompt_id}, {"rubrics", s.rubrics}};
}

void from_json(const json& j, RubricSet& s) {
    s.prompt_id = j.at("prompt_id").get<std::string>();
    s.rubrics = j.at("rubrics").get<std::vector<Rubric>>();
}

void to_json(json& j, const ScoreMatrix& m) {
    j = json{{"rubric_ids", m.rubric_ids},
             {"response_ids", m.response_ids},
             {"entries", m.entries}};
}

void from_json(const json& j, ScoreMatrix& m) {
    m.rubric_ids = j.at("rubric_ids").get<std::vector<std::string>>();
    m.response_ids = j.at("response_ids").get<std::vector<std::string>>();
    m.entries = j.at("entries").get<std::vector<std::uint8_t>>();
    if (m.entries.size() != m.rubric_ids.size() * m.response_ids.size()) {
        throw DimensionMismatch("matrix entries length inconsistent with ids");
    }
    for (auto v : m.entries) {
        if (v > 1) throw std::invalid_argument("matrix entry not binary");
    }
}

void to_json(json& j, const Response& r) {
    j = json{{"id", r.id}, {"text", r.text}, {"source_model", r.source_model}};
}

void from_json(const json& j, Response& r) {
    r.id = j.at("id").get<std::string>();
    r.text = j.at("text").get<std::string>();
    r.source_model = j.value("source_model", "");
}

void to_json(json& j, const ResponseSet& s) {
    j = json{{"prompt", s.prompt}, {"responses", s.responses}};
}

void from_json(const json& j, ResponseSet& s) {
    s.prompt = j.at("prompt").get<std::string>();
    s.responses = j.at("responses").get<std::vector<Response>>();
}

void to_json(json& j, const WeightVector& w) {
    j = json{{"values", w.values},
             {"scheme", to_string(w.scheme)},
             {"normalization", w.normalization}};
}

void from_json(const json& j, WeightVector& w) {
    w.values = j.at("values").get<std::vector<double>>();
    w.scheme = scheme_from_string(j.at("scheme").get<std::string>());
    w.normalization = j.value("normalization", 1.0);
}

} // namespace rrd::core
