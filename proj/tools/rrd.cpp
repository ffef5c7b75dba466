#include "rrd/bench.hpp"
#include "rrd/digest.hpp"
#include "rrd/engine.hpp"
#include "rrd/grader.hpp"
#include "rrd/judge.hpp"
#include "rrd/store.hpp"
#include "rrd/theory.hpp"
#include "rrd/weighting.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <memory>
#include <fstream>
#include <iostream>

namespace {

using namespace rrd;

struct GatewayOpts {
    std::string mock_script;
    std::string endpoint = "https://api.openai.com";
    std::string api_key_env = "OPENAI_API_KEY";
    std::string cache_dir;
    int attempt_cap = 3;
};

void add_gateway_opts(CLI::App* cmd, GatewayOpts& opts) {
    cmd->add_option("--mock", opts.mock_script, "JSONL mock script; replaces the network")
        ->envname("RRD_MOCK");
    cmd->add_option("--endpoint", opts.endpoint, "chat-completions base URL")
        ->envname("RRD_ENDPOINT");
    cmd->add_option("--api-key-env", opts.api_key_env,
                    "environment variable holding the API key");
    cmd->add_option("--cache-dir", opts.cache_dir, "response cache directory")
        ->envname("RRD_CACHE_DIR");
    cmd->add_option("--attempt-cap", opts.attempt_cap, "max attempts per request");
}

std::unique_ptr<gateway::Gateway> make_gateway(const GatewayOpts& opts) {
    gateway::GatewayConfig cfg;
    cfg.attempt_cap = opts.attempt_cap;
    cfg.cache_dir = opts.cache_dir;
    std::shared_ptr<gateway::Transport> transport;
    if (!opts.mock_script.empty()) {
        transport = gateway::MockTransport::from_file(opts.mock_script);
    } else {
        const char* key = std::getenv(opts.api_key_env.c_str());
        if (!key || !*key) {
            throw std::runtime_error("no API key in $" + opts.api_key_env +
                                     " (use --mock for offline runs)");
        }
        transport = std::make_shared<gateway::HttpTransport>(opts.endpoint, key);
    }
    return std::make_unique<gateway::Gateway>(std::move(transport), cfg);
}

struct EngineOpts {
    engine::EngineConfig config;
    bool no_misalignment = false;
};

void add_engine_opts(CLI::App* cmd, EngineOpts& opts) {
    cmd->add_option("--n-trigger", opts.config.n_trigger,
                    "decompose rubrics satisfied by more than this many responses");
    cmd->add_option("--termination-threshold", opts.config.termination_threshold,
                    "cumulative rejections that stop the loop");
    cmd->add_option("--max-iterations", opts.config.max_iterations, "iteration safety cap");
    cmd->add_option("--parallelism", opts.config.parallelism, "concurrent LLM calls");
    cmd->add_option("--proposer-model", opts.config.proposer_model, "rubric proposal model");
    cmd->add_option("--grader-model", opts.config.grader_model, "rubric grading model");
    cmd->add_option("--weak-model", opts.config.filters.weak_model,
                    "weak reference model for the misalignment filter");
    cmd->add_option("--strong-model", opts.config.filters.strong_model,
                    "strong reference model for the misalignment filter");
    cmd->add_flag("--no-misalignment", opts.no_misalignment, "disable the misalignment filter");
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Responses file: JSON array of strings or of {"id", "text"} objects.
std::vector<core::Response> load_responses(const std::string& path) {
    auto j = nlohmann::json::parse(slurp(path));
    if (!j.is_array() || j.empty()) throw std::runtime_error("responses file must be a nonempty JSON array");
    std::vector<core::Response> out;
    int n = 0;
    for (const auto& item : j) {
        core::Response r;
        if (item.is_string()) {
            r.id = "R" + std::to_string(++n);
            r.text = item.get<std::string>();
        } else {
            ++n;
            item.at("id").get_to(r.id);
            item.at("text").get_to(r.text);
            r.source_model = item.value("source_model", "");
        }
        out.push_back(std::move(r));
    }
    return out;
}

core::RubricSet load_rubrics(const store::RunStore& run) {
    return nlohmann::json::parse(run.load_artifact("rubrics", "tree")).get<core::RubricSet>();
}

int cmd_generate(const std::string& prompt_file, const std::string& responses_file,
                 const std::string& run_dir, const GatewayOpts& gopts, EngineOpts eopts) {
    eopts.config.filters.misalignment_enabled = !eopts.no_misalignment;
    auto run = store::RunStore::create(run_dir, {{"command", "generate"}});
    GatewayOpts gateway_opts = gopts;
    if (gateway_opts.cache_dir.empty()) gateway_opts.cache_dir = run.cache_dir();
    auto gw = make_gateway(gateway_opts);

    core::ResponseSet responses;
    responses.prompt = protocol::trim(slurp(prompt_file));
    responses.responses = load_responses(responses_file);
    eopts.config.sample_response_count = static_cast<int>(responses.responses.size());

    auto templates = protocol::TemplateSet::builtin();
    auto result = engine::run_rrd(responses, eopts.config, *gw, templates);

    run.save_artifact("rubrics", "tree", nlohmann::json(result.rubrics).dump(2));
    run.save_artifact("matrices", "samples", nlohmann::json(result.matrix).dump(2));
    run.save_artifact("trace", "engine", result.trace.to_jsonl());
    run.save_artifact("reports", "responses", nlohmann::json(responses).dump(2));

    std::cout << "active rubrics: " << result.rubrics.active().size() << " of "
              << result.rubrics.rubrics.size() << "; iterations: "
              << result.trace.iterations.size() << "; cumulative rejections: "
              << result.trace.cumulative_rejected() << "\n";
    for (const auto& w : result.trace.warnings) std::cerr << "warning: " << w << "\n";
    return 0;
}

int cmd_weigh(const std::string& run_dir, const std::string& scheme_name,
              const std::string& weight_model, const GatewayOpts& gopts) {
    auto run = store::RunStore::open(run_dir);
    auto rubrics = load_rubrics(run);
    auto matrix =
        nlohmann::json::parse(run.load_artifact("matrices", "samples")).get<core::ScoreMatrix>();
    auto responses = nlohmann::json::parse(run.load_artifact("reports", "responses"))
                         .get<core::ResponseSet>();

    core::WeightScheme scheme = core::scheme_from_string(scheme_name);
    weighting::BuildInputs inputs;
    inputs.prompt = responses.prompt;
    for (const auto& r : rubrics.active()) inputs.rubric_texts.push_back(r.text);
    inputs.matrix = &matrix;
    inputs.model = weight_model;

    auto templates = protocol::TemplateSet::builtin();
    std::unique_ptr<gateway::Gateway> gw;
    if (scheme == core::WeightScheme::llm) {
        GatewayOpts gateway_opts = gopts;
        if (gateway_opts.cache_dir.empty()) gateway_opts.cache_dir = run.cache_dir();
        gw = make_gateway(gateway_opts);
        inputs.gw = gw.get();
        inputs.templates = &templates;
    }

    std::vector<std::string> warnings;
    auto weights = weighting::build_weights(scheme, inputs, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";

    nlohmann::json payload(weights);
    payload["rubric_ids"] = nlohmann::json::array();
    for (const auto& r : rubrics.active()) payload["rubric_ids"].push_back(r.id);
    run.save_artifact("weights", core::to_string(scheme), payload.dump(2));
    std::cout << payload.dump(2) << "\n";
    return 0;
}

int cmd_judge(const std::string& run_dir, const std::string& pair_file,
              const std::string& scheme_name, const GatewayOpts& gopts) {
    auto run = store::RunStore::open(run_dir);
    auto rubrics = load_rubrics(run);
    auto responses = nlohmann::json::parse(run.load_artifact("reports", "responses"))
                         .get<core::ResponseSet>();
    auto weights = nlohmann::json::parse(run.load_artifact("weights", scheme_name))
                       .get<core::WeightVector>();

    auto pair = nlohmann::json::parse(slurp(pair_file));
    core::ResponseSet two;
    two.prompt = responses.prompt;
    two.responses = {{"A", pair.at("response_a").get<std::string>(), ""},
                     {"B", pair.at("response_b").get<std::string>(), ""}};

    GatewayOpts gateway_opts = gopts;
    if (gateway_opts.cache_dir.empty()) gateway_opts.cache_dir = run.cache_dir();
    auto gw = make_gateway(gateway_opts);
    auto templates = protocol::TemplateSet::builtin();
    grader::Grader g(*gw, templates, "grader");

    auto matrix = g.grade_matrix(rubrics.active(), two, 4);
    auto judgment = judge::judge_pair(matrix, weights);
    std::cout << nlohmann::json(judgment).dump(2) << "\n";
    run.save_artifact("reports", "pair-judgment", nlohmann::json(judgment).dump(2));
    return 0;
}

int cmd_score(const std::string& run_dir, const std::string& rollouts_file,
              const std::string& scheme_name, int parallelism, const GatewayOpts& gopts) {
    auto run = store::RunStore::open(run_dir);
    auto rubrics = load_rubrics(run);
    auto responses = nlohmann::json::parse(run.load_artifact("reports", "responses"))
                         .get<core::ResponseSet>();
    auto weights = nlohmann::json::parse(run.load_artifact("weights", scheme_name))
                       .get<core::WeightVector>();

    auto rollouts = load_responses(rollouts_file);

    GatewayOpts gateway_opts = gopts;
    if (gateway_opts.cache_dir.empty()) gateway_opts.cache_dir = run.cache_dir();
    auto gw = make_gateway(gateway_opts);
    auto templates = protocol::TemplateSet::builtin();
    grader::Grader g(*gw, templates, "grader");

    auto rewards =
        judge::score_batch(rubrics.active(), weights, responses.prompt, rollouts, g, parallelism);

    std::ostringstream jsonl;
    for (std::size_t i = 0; i < rollouts.size(); ++i) {
        jsonl << nlohmann::json{{"prompt_id", rubrics.prompt_id},
                                {"response_id", rollouts[i].id},
                                {"reward", rewards[i]}}
                     .dump()
              << "\n";
    }
    std::cout << jsonl.str();
    run.save_artifact("reports", "rollout-rewards", jsonl.str());
    return 0;
}

int cmd_bench(const std::string& dataset, const std::string& variant_name,
              const std::string& run_dir, int records_parallelism, const GatewayOpts& gopts,
              EngineOpts eopts) {
    eopts.config.filters.misalignment_enabled = !eopts.no_misalignment;
    auto records = bench::load_dataset(dataset);

    bench::JudgeConfig config;
    config.variant = bench::variant_from_string(variant_name);
    config.engine = eopts.config;
    config.records_parallelism = records_parallelism;

    std::optional<store::RunStore> run;
    GatewayOpts gateway_opts = gopts;
    if (!run_dir.empty()) {
        run.emplace(store::RunStore::create(run_dir, {{"command", "bench"},
                                                      {"variant", variant_name}}));
        config.run = &*run;
        if (gateway_opts.cache_dir.empty()) gateway_opts.cache_dir = run->cache_dir();
    }
    auto gw = make_gateway(gateway_opts);
    auto templates = protocol::TemplateSet::builtin();

    auto report = bench::evaluate_judge(records, config, *gw, templates);
    std::cout << report.table();
    if (run) run->save_artifact("reports", "bench", report.to_json().dump(2));
    return 0;
}

int cmd_simulate(const std::string& grid_file, int trials, std::uint64_t seed,
                 const std::string& out_csv) {
    std::vector<theory::GridPoint> grid;
    if (grid_file.empty()) {
        grid = theory::default_grid();
    } else {
        for (const auto& j : nlohmann::json::parse(slurp(grid_file))) {
            theory::GridPoint pt;
            j.at("m").get_to(pt.m);
            j.at("rho").get_to(pt.rho);
            j.at("mu_over_sigma").get_to(pt.mu_over_sigma);
            pt.family = theory::family_from_string(j.value("family", "gaussian"));
            grid.push_back(pt);
        }
    }
    auto outcomes = theory::run_grid(grid, trials, seed);
    std::string csv = theory::grid_csv(outcomes);
    if (!out_csv.empty()) store::atomic_write(out_csv, csv);
    std::cout << csv;

    bool all_pass = true;
    for (const auto& o : outcomes) all_pass = all_pass && o.pass;
    std::cout << (all_pass ? "all points within bound\n" : "BOUND VIOLATION\n");
    return all_pass ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"rubric construction, weighting, judging, and bound verification"};
    app.require_subcommand(1);
    app.set_config("--config")->envname("RRD_CONFIG");

    GatewayOpts gopts;
    EngineOpts eopts;

    std::string prompt_file, responses_file, run_dir;
    auto* generate = app.add_subcommand("generate", "build a rubric tree for one prompt");
    generate->add_option("--prompt-file", prompt_file, "file holding the task prompt")
        ->required();
    generate->add_option("--responses-file", responses_file,
                         "JSON array of sample responses")
        ->required();
    generate->add_option("--run", run_dir, "run directory to create")->required();
    add_gateway_opts(generate, gopts);
    add_engine_opts(generate, eopts);

    std::string scheme = "uniform", weight_model = "weighter";
    auto* weigh = app.add_subcommand("weigh", "compute rubric weights for a run");
    weigh->add_option("--run", run_dir, "existing run directory")->required();
    weigh->add_option("--scheme", scheme, "uniform | llm | whitened_uniform");
    weigh->add_option("--weight-model", weight_model, "model for the llm scheme");
    add_gateway_opts(weigh, gopts);

    std::string pair_file;
    auto* judge_cmd = app.add_subcommand("judge", "judge one response pair with a run's rubrics");
    judge_cmd->add_option("--run", run_dir, "existing run directory")->required();
    judge_cmd->add_option("--pair-file", pair_file, "JSON {response_a, response_b}")->required();
    judge_cmd->add_option("--scheme", scheme, "weight scheme to load");
    add_gateway_opts(judge_cmd, gopts);

    std::string rollouts_file;
    int parallelism = 4;
    auto* score = app.add_subcommand("score", "reward-score rollouts with a run's rubrics");
    score->add_option("--run", run_dir, "existing run directory")->required();
    score->add_option("--rollouts-file", rollouts_file, "JSON array of rollout responses")
        ->required();
    score->add_option("--scheme", scheme, "weight scheme to load");
    score->add_option("--parallelism", parallelism, "concurrent grading calls");
    add_gateway_opts(score, gopts);

    std::string dataset, variant = "rrd-uniform", bench_run;
    int records_parallelism = 1;
    auto* bench_cmd = app.add_subcommand("bench", "pairwise preference accuracy over a dataset");
    bench_cmd->add_option("--dataset", dataset, "JSONL preference dataset")->required();
    bench_cmd->add_option("--variant", variant, "base | rubrics | rrd-uniform | rrd-llm | rrd-wu");
    bench_cmd->add_option("--run", bench_run, "run directory for per-record artifacts");
    bench_cmd->add_option("--records-parallelism", records_parallelism,
                          "records evaluated concurrently");
    add_gateway_opts(bench_cmd, gopts);
    add_engine_opts(bench_cmd, eopts);

    std::string grid_file, out_csv;
    int trials = 20000;
    std::uint64_t seed = 7;
    auto* simulate = app.add_subcommand("simulate",
                                        "verify the misclassification bound by Monte Carlo");
    simulate->add_option("--grid-file", grid_file, "JSON array of grid points (default grid)");
    simulate->add_option("--trials", trials, "Monte Carlo trials per point");
    simulate->add_option("--seed", seed, "RNG seed");
    simulate->add_option("--out", out_csv, "CSV report path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) {
            return cmd_generate(prompt_file, responses_file, run_dir, gopts, eopts);
        }
        if (weigh->parsed()) return cmd_weigh(run_dir, scheme, weight_model, gopts);
        if (judge_cmd->parsed()) return cmd_judge(run_dir, pair_file, scheme, gopts);
        if (score->parsed()) {
            return cmd_score(run_dir, rollouts_file, scheme, parallelism, gopts);
        }
        if (bench_cmd->parsed()) {
            return cmd_bench(dataset, variant, bench_run, records_parallelism, gopts, eopts);
        }
        if (simulate->parsed()) return cmd_simulate(grid_file, trials, seed, out_csv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
