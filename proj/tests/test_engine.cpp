#include "rrd/engine.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <sstream>

using namespace rrd;
using nlohmann::json;

namespace {

std::string fixture_path(const std::string& name) {
    return std::string(RRD_FIXTURE_DIR) + "/golden_engine/" + name;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

core::ResponseSet golden_responses() {
    core::ResponseSet rs;
    rs.prompt = protocol::trim(read_file(fixture_path("prompt.txt")));
    auto texts = json::parse(read_file(fixture_path("responses.json")));
    int i = 0;
    for (const auto& t : texts) {
        ++i;
        rs.responses.push_back({"r" + std::to_string(i), t.get<std::string>(), ""});
    }
    return rs;
}

std::unique_ptr<gateway::Gateway> golden_gateway(std::shared_ptr<gateway::MockTransport>* mock_out = nullptr) {
    auto mock = gateway::MockTransport::from_file(fixture_path("mock.jsonl"));
    if (mock_out) *mock_out = mock;
    gateway::GatewayConfig cfg;
    cfg.backoff_base_ms = 0.0;
    return std::make_unique<gateway::Gateway>(mock, cfg);
}

} // namespace

TEST_CASE("scripted end-to-end run reproduces the committed trace byte for byte") {
    auto gw = golden_gateway();
    auto templates = protocol::TemplateSet::builtin();
    engine::EngineConfig cfg;
    auto result = engine::run_rrd(golden_responses(), cfg, *gw, templates);

    CHECK(result.trace.to_jsonl() == read_file(fixture_path("expected_trace.jsonl")));
    CHECK(result.trace.warnings.empty());

    json expected = json::parse(read_file(fixture_path("expected_rubrics.json")));
    CHECK(json(result.rubrics) == expected);
}

TEST_CASE("scripted run: tree structure, counters, and final matrix") {
    auto gw = golden_gateway();
    auto templates = protocol::TemplateSet::builtin();
    auto result = engine::run_rrd(golden_responses(), engine::EngineConfig{}, *gw, templates);

    CHECK(result.rubrics.rubrics.size() == 31);
    CHECK(result.rubrics.active().size() == 16);
    CHECK(result.trace.cumulative_rejected() == 16);
    REQUIRE(result.trace.iterations.size() == 6);

    // The final matrix covers every contributing rubric against all samples.
    CHECK(result.matrix.rows() == 16);
    CHECK(result.matrix.cols() == 8);

    // Rubric growth: 7 initial rubrics, 16 contributing at the end.
    CHECK(result.trace.iterations.front().active_count == 7);
    CHECK(result.trace.iterations.back().active_count == 16);

    // Per-iteration bookkeeping is internally consistent.
    int cum = 0;
    for (const auto& rec : result.trace.iterations) {
        int rejected = rec.rejected_overlap + rec.rejected_conflict + rec.rejected_misaligned +
                       rec.rejected_echo;
        CHECK(rec.proposals == rec.accepted + rejected);
        cum += rejected;
        CHECK(rec.cumulative_rejected == cum);
    }
    // Cumulative rejections are monotone and end at/above the threshold.
    for (std::size_t i = 1; i < result.trace.iterations.size(); ++i) {
        CHECK(result.trace.iterations[i].cumulative_rejected >=
              result.trace.iterations[i - 1].cumulative_rejected);
        // every earlier iteration ran because the budget was not yet spent
        CHECK(result.trace.iterations[i - 1].cumulative_rejected < 15);
    }
    CHECK(result.trace.cumulative_rejected() >= 15);
}

TEST_CASE("scripted run: lineage forms a well-founded forest") {
    auto gw = golden_gateway();
    auto templates = protocol::TemplateSet::builtin();
    auto result = engine::run_rrd(golden_responses(), engine::EngineConfig{}, *gw, templates);

    for (const auto& r : result.rubrics.rubrics) {
        if (!r.parent) {
            CHECK(r.depth == 0);
            CHECK(r.created_iteration == 0);
            continue;
        }
        const core::Rubric* parent = result.rubrics.find(*r.parent);
        REQUIRE(parent != nullptr);
        CHECK(r.depth == parent->depth + 1);
        CHECK(r.created_iteration > parent->created_iteration);
        // only decomposed parents have children
        CHECK(parent->status == core::RubricStatus::decomposed_retained);
    }
}

TEST_CASE("a lower rejection budget stops the loop earlier") {
    auto gw = golden_gateway();
    auto templates = protocol::TemplateSet::builtin();
    engine::EngineConfig cfg;
    cfg.termination_threshold = 5;
    auto result = engine::run_rrd(golden_responses(), cfg, *gw, templates);
    // iteration 1 reaches cumulative 5, so iteration 2 never runs
    REQUIRE(result.trace.iterations.size() == 2);
    CHECK(result.trace.iterations.back().cumulative_rejected == 5);
}

TEST_CASE("zero decompositions do not exit early; the iteration cap does") {
    // Every rubric is satisfied by at most n=2 responses, so nothing ever
    // decomposes and the loop runs to max_iterations.
    std::string script =
        json{{"match", "Design a comprehensive set of rubrics"},
             {"response", "<RUBRIC> narrow one </RUBRIC>\n<RUBRIC> narrow two </RUBRIC>"}}
            .dump() +
        "\n" +
        json{{"match", json::array({"evaluating whether a response satisfies", "narrow one"})},
             {"response", "<EVALUATION> NO </EVALUATION>"}}
            .dump() +
        "\n" +
        json{{"match", json::array({"evaluating whether a response satisfies", "narrow two"})},
             {"response", "<EVALUATION> YES </EVALUATION>"}}
            .dump() +
        "\n";
    auto mock = gateway::MockTransport::from_script(script);
    gateway::GatewayConfig gcfg;
    gcfg.backoff_base_ms = 0.0;
    gateway::Gateway gw(mock, gcfg);
    auto templates = protocol::TemplateSet::builtin();

    core::ResponseSet rs;
    rs.prompt = "NARROW_TASK";
    rs.responses = {{"a", "RESP_ALPHA", ""}, {"b", "RESP_BETA", ""}};

    engine::EngineConfig cfg;
    cfg.max_iterations = 3;
    cfg.sample_response_count = 2;
    cfg.filters.misalignment_enabled = false;
    auto result = engine::run_rrd(rs, cfg, gw, templates);

    REQUIRE(result.trace.iterations.size() == 4); // iteration 0 plus 3 loop passes
    for (std::size_t i = 1; i < result.trace.iterations.size(); ++i) {
        CHECK(result.trace.iterations[i].decompositions == 0);
        CHECK(result.trace.iterations[i].proposals == 0);
    }
    CHECK(result.trace.cumulative_rejected() == 0);
    CHECK(result.rubrics.rubrics.size() == 2);
    // "narrow two" is satisfied by both responses: 2 is not strictly more
    // than n=2, so it stays undecomposed.
    CHECK(result.matrix.rows() == 2);
}

TEST_CASE("a response-count mismatch is recorded as a warning") {
    std::string script =
        json{{"match", "Design a comprehensive set of rubrics"},
             {"response", "<RUBRIC> something checkable </RUBRIC>"}}
            .dump() +
        "\n" + json{{"match", ""}, {"response", "<EVALUATION> NO </EVALUATION>"}}.dump() + "\n";
    auto mock = gateway::MockTransport::from_script(script);
    gateway::GatewayConfig gcfg;
    gcfg.backoff_base_ms = 0.0;
    gateway::Gateway gw(mock, gcfg);
    auto templates = protocol::TemplateSet::builtin();

    core::ResponseSet rs;
    rs.prompt = "TASK";
    rs.responses = {{"a", "ONLY_RESP", ""}};
    engine::EngineConfig cfg;
    cfg.max_iterations = 1;
    cfg.filters.misalignment_enabled = false;
    // configured for 8 samples, given 1
    auto result = engine::run_rrd(rs, cfg, gw, templates);
    REQUIRE(result.trace.warnings.size() == 1);
    CHECK(result.trace.warnings[0].find("sample response count") != std::string::npos);
}

TEST_CASE("iteration records round trip through JSON") {
    engine::IterationRecord rec;
    rec.iteration = 3;
    rec.active_count = 12;
    rec.decompositions = 2;
    rec.proposals = 4;
    rec.accepted = 1;
    rec.rejected_overlap = 1;
    rec.rejected_conflict = 1;
    rec.rejected_misaligned = 0;
    rec.rejected_echo = 1;
    rec.cumulative_rejected = 9;
    json j = rec;
    auto back = j.get<engine::IterationRecord>();
    CHECK(json(back) == j);

    engine::EngineTrace trace;
    trace.iterations = {rec, rec};
    std::istringstream lines(trace.to_jsonl());
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) {
        ++count;
        CHECK(json::parse(line).get<engine::IterationRecord>().iteration == 3);
    }
    CHECK(count == 2);
}
