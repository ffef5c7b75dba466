#include "rrd/protocol.hpp"

#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

using namespace rrd::protocol;

namespace {

std::string read_fixture(const std::string& name) {
    std::ifstream in(std::string(RRD_FIXTURE_DIR) + "/" + name, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("render substitutes placeholders") {
    auto t = TemplateSet::builtin();
    std::string out = t.render(TemplateId::rubric_grading,
                               {{"response", "hello"}, {"rubric", "says hello"}});
    CHECK(out.find("<RESPONSE> hello </RESPONSE>") != std::string::npos);
    CHECK(out.find("<RUBRIC> says hello </RUBRIC>") != std::string::npos);
    CHECK(out.find("{response}") == std::string::npos);
    CHECK(out.find("{rubric}") == std::string::npos);
}

TEST_CASE("render is pure") {
    auto t = TemplateSet::builtin();
    Bindings b{{"response", "x"}, {"rubric", "y"}};
    CHECK(t.render(TemplateId::rubric_grading, b) == t.render(TemplateId::rubric_grading, b));
}

TEST_CASE("render throws on missing binding") {
    auto t = TemplateSet::builtin();
    CHECK_THROWS_AS(t.render(TemplateId::rubric_grading, {{"response", "x"}}), MissingBinding);
    try {
        t.render(TemplateId::rubric_grading, {{"response", "x"}});
    } catch (const MissingBinding& e) {
        CHECK(e.name == "rubric");
    }
}

TEST_CASE("substituted content is never re-scanned") {
    auto t = TemplateSet::builtin();
    std::string out = t.render(TemplateId::rubric_grading,
                               {{"response", "injected {rubric} stays literal"},
                                {"rubric", "r"}});
    CHECK(out.find("injected {rubric} stays literal") != std::string::npos);
}

TEST_CASE("responses list renders as numbered RESPONSE blocks") {
    auto t = TemplateSet::builtin();
    std::vector<std::string> rs{"first", "second"};
    std::string out = t.render(TemplateId::initial_proposal,
                               {{"prompt", "p"}, {"responses", rs}});
    CHECK(out.find("RESPONSE 1: first") != std::string::npos);
    CHECK(out.find("RESPONSE 2: second") != std::string::npos);
}

TEST_CASE("other lists render as numbered lines") {
    auto t = TemplateSet::builtin();
    std::vector<std::string> existing{"alpha", "beta"};
    std::string out = t.render(TemplateId::overlap_check,
                               {{"existing_rubrics", existing}, {"new_rubric", "gamma"}});
    CHECK(out.find("1. alpha") != std::string::npos);
    CHECK(out.find("2. beta") != std::string::npos);
    CHECK(out.find("NEW_RUBRIC: gamma") != std::string::npos);
}

TEST_CASE("template override from file") {
    auto t = TemplateSet::builtin();
    std::string path = "/tmp/rrd_test_override.txt";
    {
        std::ofstream out(path);
        out << "custom {rubric} body";
    }
    t.override_from_file(TemplateId::rubric_grading, path);
    CHECK(t.render(TemplateId::rubric_grading, {{"rubric", "R"}}) == "custom R body");
    CHECK_THROWS(t.override_from_file(TemplateId::rubric_grading, "/nonexistent/file.txt"));
}

TEST_CASE("parse_tagged extracts blocks in order, ignoring prose") {
    auto blocks = parse_tagged("intro <RUBRIC> a </RUBRIC> mid <RUBRIC>b</RUBRIC> tail", "RUBRIC");
    REQUIRE(blocks.size() == 2);
    CHECK(blocks[0] == "a");
    CHECK(blocks[1] == "b");
}

TEST_CASE("parse_tagged pairs each open tag with the first close") {
    auto blocks = parse_tagged("<T> outer <T> inner </T> rest </T>", "T");
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0] == "outer <T> inner");
}

TEST_CASE("parse_tagged returns empty on no blocks and ignores unclosed tags") {
    CHECK(parse_tagged("no tags here", "RUBRIC").empty());
    CHECK(parse_tagged("<RUBRIC> never closed", "RUBRIC").empty());
    CHECK(parse_tagged("</RUBRIC> close only", "RUBRIC").empty());
}

TEST_CASE("parse_rubrics throws NoBlocksFound on zero blocks") {
    CHECK_THROWS_AS(parse_rubrics("nothing tagged"), NoBlocksFound);
    auto r = parse_rubrics("<RUBRIC> only one </RUBRIC>");
    REQUIRE(r.size() == 1);
    CHECK(r[0] == "only one");
}

TEST_CASE("parse_evaluation") {
    CHECK(parse_evaluation("<EVALUATION> YES </EVALUATION>"));
    CHECK(parse_evaluation("<EVALUATION>yes</EVALUATION>"));
    CHECK_FALSE(parse_evaluation("<EVALUATION> No </EVALUATION>"));
    // first block wins
    CHECK(parse_evaluation("<EVALUATION>YES</EVALUATION> <EVALUATION>NO</EVALUATION>"));
    CHECK_THROWS_AS(parse_evaluation("<EVALUATION> MAYBE </EVALUATION>"), MalformedEvaluation);
    CHECK_THROWS_AS(parse_evaluation("no blocks at all"), MalformedEvaluation);
}

TEST_CASE("emit/parse round trip on random tag-free payloads") {
    std::mt19937 rng(99);
    std::uniform_int_distribution<int> len(0, 40);
    const std::string alphabet =
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 .,;:!?()-_'";
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    for (int i = 0; i < 1000; ++i) {
        std::vector<std::string> values;
        int n = 1 + (i % 5);
        for (int k = 0; k < n; ++k) {
            std::string v;
            int L = len(rng);
            for (int c = 0; c < L; ++c) v += alphabet[pick(rng)];
            values.push_back(trim(v));
        }
        auto parsed = parse_tagged(emit_tagged(values, "ITEM"), "ITEM");
        CHECK(parsed == values);
    }
}

TEST_CASE("trim") {
    CHECK(trim("  x  ") == "x");
    CHECK(trim("\n\t a b \r\n") == "a b");
    CHECK(trim("") == "");
    CHECK(trim("   ") == "");
}

TEST_CASE("template name round trips") {
    for (TemplateId id : {TemplateId::initial_proposal, TemplateId::decomposition,
                          TemplateId::overlap_check, TemplateId::conflict_check,
                          TemplateId::rubric_grading, TemplateId::rubric_weighting,
                          TemplateId::pairwise_judge}) {
        auto back = template_from_string(to_string(id));
        REQUIRE(back.has_value());
        CHECK(*back == id);
    }
    CHECK_FALSE(template_from_string("nope").has_value());
}

TEST_CASE("builtin template renders match committed snapshots") {
    auto t = TemplateSet::builtin();
    std::string prompt = "Explain photosynthesis to a ten year old.";
    std::vector<std::string> responses = {
        "Plants eat sunlight.", "Plants use light to make sugar from air and water."};
    std::vector<std::string> rubrics = {"Mentions that plants make sugar.",
                                        "Mentions sunlight as the energy source.",
                                        "Keeps the explanation age-appropriate."};
    CHECK(t.render(TemplateId::initial_proposal, {{"prompt", prompt}, {"responses", responses}}) ==
          read_fixture("snapshots/initial_proposal.txt"));
    CHECK(t.render(TemplateId::decomposition,
                   {{"prompt", prompt},
                    {"responses", responses},
                    {"rubric", rubrics[0]},
                    {"other_rubric", std::vector<std::string>{rubrics[1], rubrics[2]}}}) ==
          read_fixture("snapshots/decomposition.txt"));
    CHECK(t.render(TemplateId::overlap_check,
                   {{"existing_rubrics", rubrics},
                    {"new_rubric", "States that plants produce glucose."}}) ==
          read_fixture("snapshots/overlap_check.txt"));
    CHECK(t.render(TemplateId::conflict_check,
                   {{"existing_rubrics", rubrics},
                    {"new_rubric", "Avoids mentioning sugar production."}}) ==
          read_fixture("snapshots/conflict_check.txt"));
    CHECK(t.render(TemplateId::rubric_grading,
                   {{"response", responses[1]}, {"rubric", rubrics[0]}}) ==
          read_fixture("snapshots/rubric_grading.txt"));
    CHECK(t.render(TemplateId::rubric_weighting, {{"prompt", prompt}, {"rubrics", rubrics}}) ==
          read_fixture("snapshots/rubric_weighting.txt"));
    CHECK(t.render(TemplateId::pairwise_judge,
                   {{"prompt", prompt},
                    {"response_a", responses[0]},
                    {"response_b", responses[1]}}) ==
          read_fixture("snapshots/pairwise_judge.txt"));
}
