#include "rrd/bench.hpp"

#include "rrd/digest.hpp"
#include "rrd/weighting.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace rrd::bench {

std::vector<PreferenceRecord> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset: " + path);
    std::vector<PreferenceRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (protocol::trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw ParseError(line_no, e.what());
        }
        PreferenceRecord rec;
        try {
            j.at("id").get_to(rec.id);
            j.at("prompt").get_to(rec.prompt);
            j.at("response_a").get_to(rec.response_a);
            j.at("response_b").get_to(rec.response_b);
            std::string label = j.at("label").get<std::string>();
            if (label != "A" && label != "B") throw std::runtime_error("label must be A or B");
            rec.label = label == "A" ? judge::Winner::A : judge::Winner::B;
            rec.meta = j.value("meta", nlohmann::json::object());
        } catch (const std::exception& e) {
            throw ParseError(line_no, e.what());
        }
        records.push_back(std::move(rec));
    }
    return records;
}

const char* to_string(Variant v) {
    switch (v) {
        case Variant::base: return "base";
        case Variant::rubrics: return "rubrics";
        case Variant::rrd_uniform: return "rrd-uniform";
        case Variant::rrd_llm: return "rrd-llm";
        case Variant::rrd_wu: return "rrd-wu";
    }
    return "?";
}

Variant variant_from_string(std::string_view s) {
    for (Variant v : {Variant::base, Variant::rubrics, Variant::rrd_uniform, Variant::rrd_llm,
                      Variant::rrd_wu}) {
        if (s == to_string(v)) return v;
    }
    throw std::invalid_argument("unknown variant: " + std::string(s));
}

namespace {

std::string fingerprint(const JudgeConfig& c) {
    nlohmann::json j{{"variant", to_string(c.variant)},
                     {"judge_model", c.judge_model},
                     {"weight_model", c.weight_model},
                     {"n_trigger", c.engine.n_trigger},
                     {"termination_threshold", c.engine.termination_threshold},
                     {"max_iterations", c.engine.max_iterations},
                     {"proposer_model", c.engine.proposer_model},
                     {"grader_model", c.engine.grader_model}};
    return short_hash(j.dump(), 16);
}

judge::Winner judge_record(const PreferenceRecord& rec, const JudgeConfig& config,
                           gateway::Gateway& gw, const protocol::TemplateSet& templates,
                           bool* degraded) {
    if (config.variant == Variant::base) {
        return judge::llm_pair_verdict(gw, templates, config.judge_model, rec.prompt,
                                       rec.response_a, rec.response_b, degraded);
    }

    engine::EngineConfig ecfg = config.engine;
    ecfg.sample_response_count = 2; // the pair itself is the sample set
    if (config.variant == Variant::rubrics) ecfg.max_iterations = 0;

    core::ResponseSet pair;
    pair.prompt = rec.prompt;
    pair.responses = {{"A", rec.response_a, ""}, {"B", rec.response_b, ""}};

    auto result = engine::run_rrd(pair, ecfg, gw, templates);
    auto active = result.rubrics.active();

    weighting::BuildInputs inputs;
    inputs.prompt = rec.prompt;
    for (const auto& r : active) inputs.rubric_texts.push_back(r.text);
    inputs.matrix = &result.matrix;
    inputs.gw = &gw;
    inputs.templates = &templates;
    inputs.model = config.weight_model;

    core::WeightScheme scheme = core::WeightScheme::uniform;
    if (config.variant == Variant::rrd_llm) scheme = core::WeightScheme::llm;
    if (config.variant == Variant::rrd_wu) scheme = core::WeightScheme::whitened_uniform;
    auto weights = weighting::build_weights(scheme, inputs);

    auto judgment = judge::judge_pair(result.matrix, weights);

    if (config.run) {
        config.run->save_artifact("rubrics", rec.id, nlohmann::json(result.rubrics).dump(2));
        config.run->save_artifact("matrices", rec.id, nlohmann::json(result.matrix).dump(2));
        config.run->save_artifact("weights", rec.id, nlohmann::json(weights).dump(2));
        config.run->save_artifact("reports", rec.id + ".verdict", nlohmann::json(judgment).dump(2));
        config.run->save_artifact("trace", rec.id, result.trace.to_jsonl());
    }
    return judgment.winner;
}

} // namespace

nlohmann::json BenchReport::to_json() const {
    nlohmann::json verdict_list = nlohmann::json::array();
    for (const auto& v : verdicts) {
        verdict_list.push_back({{"id", v.id},
                                {"predicted", judge::to_string(v.predicted)},
                                {"label", judge::to_string(v.label)},
                                {"credit", v.credit},
                                {"degraded", v.degraded},
                                {"detail", v.detail}});
    }
    return {{"accuracy", accuracy},
            {"correct", correct},
            {"wrong", wrong},
            {"tie", tie},
            {"tie_credit", 0.5},
            {"config_fingerprint", config_fingerprint},
            {"verdicts", std::move(verdict_list)}};
}

std::string BenchReport::table() const {
    std::ostringstream out;
    out << "ties count 0.5; config " << config_fingerprint << "\n";
    out << "record        predicted  label  credit\n";
    for (const auto& v : verdicts) {
        out << std::left << std::setw(14) << v.id << std::setw(11)
            << judge::to_string(v.predicted) << std::setw(7) << judge::to_string(v.label)
            << v.credit << (v.degraded ? "  (degraded)" : "") << "\n";
    }
    out << "accuracy " << accuracy << " (" << correct << " correct, " << wrong << " wrong, "
        << tie << " tie)\n";
    return out.str();
}

BenchReport evaluate_judge(const std::vector<PreferenceRecord>& records, const JudgeConfig& config,
                           gateway::Gateway& gw, const protocol::TemplateSet& templates) {
    BenchReport report;
    report.config_fingerprint = fingerprint(config);
    report.verdicts.resize(records.size());

    // The run store is single-writer; serialize records when persisting.
    int parallelism = config.run ? 1 : config.records_parallelism;
    gateway::parallel_for(records.size(), parallelism, [&](std::size_t i) {
        const auto& rec = records[i];
        RecordVerdict v;
        v.id = rec.id;
        v.label = rec.label;
        try {
            v.predicted = judge_record(rec, config, gw, templates, &v.degraded);
        } catch (const std::exception& e) {
            v.predicted = judge::Winner::tie;
            v.degraded = true;
            v.detail = e.what();
        }
        report.verdicts[i] = v;
    });

    for (auto& v : report.verdicts) {
        if (v.predicted == judge::Winner::tie) {
            v.credit = 0.5;
            ++report.tie;
        } else if (v.predicted == v.label) {
            v.credit = 1.0;
            ++report.correct;
        } else {
            ++report.wrong;
        }
    }
    double total = static_cast<double>(records.size());
    report.accuracy = total == 0 ? 0.0 : (report.correct + 0.5 * report.tie) / total;
    return report;
}

} // namespace rrd::bench
