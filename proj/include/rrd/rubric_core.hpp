#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace rrd::core {

enum class RubricStatus {
    active,
    decomposed_retained,
    rejected_overlap,
    rejected_conflict,
    rejected_misaligned,
};

const char* to_string(RubricStatus s);
RubricStatus status_from_string(std::string_view s);
bool is_rejected(RubricStatus s);

/// One binary pass/fail criterion with lineage and lifecycle.
struct Rubric {
    std::string id;
    std::string text;
    std::optional<std::string> parent;
    int depth = 0;
    RubricStatus status = RubricStatus::active;
    int created_iteration = 0;
};

/// Stable rubric identifier: truncated content hash of (prompt_id, text),
/// so duplicates collapse across retries and runs.
std::string rubric_id(std::string_view prompt_id, std::string_view text);

struct UnknownRubric : std::runtime_error {
    explicit UnknownRubric(const std::string& id)
        : std::runtime_error("unknown rubric: " + id) {}
};

struct DimensionMismatch : std::runtime_error {
    explicit DimensionMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct RubricSet {
    std::string prompt_id;
    std::vector<Rubric> rubrics; // creation order; ids unique

    bool contains(std::string_view id) const;
    Rubric* find(std::string_view id);
    const Rubric* find(std::string_view id) const;
    void add(Rubric r); // throws on duplicate id

    /// Rubrics still contributing to scoring: active and decomposed_retained.
    std::vector<Rubric> active() const;
};

struct Response {
    std::string id;
    std::string text;
    std::string source_model;
};

struct ResponseSet {
    std::string prompt;
    std::vector<Response> responses;
};

/// rubrics x responses binary satisfaction matrix.
struct ScoreMatrix {
    std::vector<std::string> rubric_ids;   // rows
    std::vector<std::string> response_ids; // columns
    std::vector<std::uint8_t> entries;     // row-major, values in {0,1}

    std::size_t rows() const { return rubric_ids.size(); }
    std::size_t cols() const { return response_ids.size(); }
    std::uint8_t at(std::size_t r, std::size_t c) const { return entries[r * cols() + c]; }
    void set(std::size_t r, std::size_t c, std::uint8_t v) { entries[r * cols() + c] = v; }
    std::optional<std::size_t> row_of(std::string_view rubric) const;
    std::optional<std::size_t> col_of(std::string_view response) const;
};

enum class WeightScheme { uniform, llm, whitened_uniform };

const char* to_string(WeightScheme s);
WeightScheme scheme_from_string(std::string_view s);

struct WeightVector {
    std::vector<double> values; // aligned to the rubric set's active rows
    WeightScheme scheme = WeightScheme::uniform;
    double normalization = 1.0; // norm the values were scaled by
};

/// Ids of the responses satisfying the rubric, in column order.
std::vector<std::string> satisfying_responses(const ScoreMatrix& matrix,
                                              std::string_view rubric_id);

/// Per-response weighted rubric reward: score_j = sum_k w_k * entry[k][j].
std::vector<double> column_scores(const ScoreMatrix& matrix, std::span<const double> weights);
std::vector<double> column_scores(const ScoreMatrix& matrix, const WeightVector& weights);

// JSON serialization (rubric tree files, matrix files, weight files).
void to_json(nlohmann::json& j, const Rubric& r);
void from_json(const nlohmann::json& j, Rubric& r);
void to_json(nlohmann::json& j, const RubricSet& s);
void from_json(const nlohmann::json& j, RubricSet& s);
void to_json(nlohmann::json& j, const ScoreMatrix& m);
void from_json(const nlohmann::json& j, ScoreMatrix& m);
void to_json(nlohmann::json& j, const Response& r);
void from_json(const nlohmann::json& j, Response& r);
void to_json(nlohmann::json& j, const ResponseSet& s);
void from_json(const nlohmann::json& j, ResponseSet& s);
void to_json(nlohmann::json& j, const WeightVector& w);
void from_json(const nlohmann::json& j, WeightVector& w);

} // namespace rrd::core
