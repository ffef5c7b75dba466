#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace rrd::protocol {

enum class TemplateId {
    initial_proposal,
    decomposition,
    overlap_check,
    conflict_check,
    rubric_grading,
    rubric_weighting,
    pairwise_judge,
};

const char* to_string(TemplateId id);
std::optional<TemplateId> template_from_string(std::string_view name);

/// A binding is either a single text or an ordered list of texts.
/// Lists bound to the "responses" placeholder render as numbered
/// "RESPONSE i: ..." blocks; any other list renders as "i. ..." lines.
using BindingValue = std::variant<std::string, std::vector<std::string>>;
using Bindings = std::map<std::string, BindingValue, std::less<>>;

struct MissingBinding : std::runtime_error {
    explicit MissingBinding(const std::string& placeholder)
        : std::runtime_error("missing binding for placeholder: " + placeholder), name(placeholder) {}
    std::string name;
};

struct UnknownTemplate : std::runtime_error {
    explicit UnknownTemplate(const std::string& id)
        : std::runtime_error("unknown template: " + id) {}
};

struct NoBlocksFound : std::runtime_error {
    explicit NoBlocksFound(const std::string& tag)
        : std::runtime_error("no well-formed <" + tag + "> blocks found") {}
};

struct MalformedEvaluation : std::runtime_error {
    explicit MalformedEvaluation(const std::string& why)
        : std::runtime_error("malformed evaluation: " + why) {}
};

/// The versioned prompt templates, embedded as built-in resources and
/// overridable per id from UTF-8 text files with the same {placeholder}
/// syntax.
class TemplateSet {
public:
    static TemplateSet builtin();

    const std::string& body(TemplateId id) const;
    void set_body(TemplateId id, std::string body);
    void override_from_file(TemplateId id, const std::string& path);
    /// Loads every "<template_id>.txt" present in the directory.
    void override_from_directory(const std::string& dir);

    /// Substitutes every {placeholder} in the template body. Substituted
    /// content is never re-scanned, so user text containing braces cannot
    /// inject placeholders. Pure: identical inputs give identical bytes.
    std::string render(TemplateId id, const Bindings& bindings) const;

private:
    std::map<TemplateId, std::string> bodies_;
};

std::string join_numbered(const std::vector<std::string>& items, std::string_view label);

/// Inner texts of every well-formed <TAG>...</TAG> pair, trimmed, in source
/// order. The scanner pairs each opening tag with the first closing tag that
/// follows it and ignores all surrounding prose. Returns an empty list when
/// nothing matches.
std::vector<std::string> parse_tagged(std::string_view text, std::string_view tag);

/// parse_tagged for RUBRIC; throws NoBlocksFound on zero blocks.
std::vector<std::string> parse_rubrics(std::string_view text);

/// First <EVALUATION> block: YES -> true, NO -> false (case-insensitive after
/// trimming); anything else throws MalformedEvaluation.
bool parse_evaluation(std::string_view text);

/// Wraps each value in <TAG> ... </TAG>, one per line.
std::string emit_tagged(const std::vector<std::string>& values, std::string_view tag);

std::string trim(std::string_view s);

} // namespace rrd::protocol
