#pragma once

// Run-directory persistence. A run is staged under <runs_root>/<run_id>.partial
// and renamed into place only after every record is written, so a failed run
// leaves no partially written prediction files behind. All records are
// line-delimited JSON keyed by instance_id; the manifest carries everything
// needed to re-execute the run bit-identically under the mock backend.

#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lot/config.hpp"
#include "lot/digest.hpp"
#include "lot/evaluation.hpp"
#include "lot/pipeline.hpp"

namespace lot {

inline std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "missing";
    std::ostringstream buf;
    buf << in.rdbuf();
    return hex_digest(buf.str());
}

struct RunPaths {
    std::filesystem::path root;

    std::filesystem::path manifest() const { return root / "manifest.json"; }
    std::filesystem::path config_snapshot() const { return root / "config.snapshot"; }
    std::filesystem::path knowledge() const { return root / "knowledge" / "knowledge.jsonl"; }
    std::filesystem::path rationales() const { return root / "rationales" / "rationales.jsonl"; }
    std::filesystem::path enhanced() const { return root / "enhanced_inputs" / "inputs.jsonl"; }
    std::filesystem::path predictions() const { return root / "predictions" / "predictions.jsonl"; }
    std::filesystem::path dev_predictions() const { return root / "predictions" / "dev_predictions.jsonl"; }
    std::filesystem::path report() const { return root / "report.json"; }
    std::filesystem::path checkpoints() const { return root / "checkpoints"; }
};

namespace detail {

inline void write_lines(const std::filesystem::path& path, const std::vector<nlohmann::json>& records) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& r : records) out << r.dump() << '\n';
}

} // namespace detail

inline nlohmann::json build_manifest(const RunConfig& config, const Dataset& dataset,
                                     const RunResult& result, const TextBackend& backend,
                                     const EvalReport& report) {
    nlohmann::json manifest;
    manifest["run_id"] = config.run_id;
    manifest["variant"] = variant_name(result.variant);
    manifest["seed"] = config.seed;
    manifest["seeds"] = {{"phase1", config.pipeline.phase1.seed},
                         {"phase2", config.pipeline.phase2.seed},
                         {"gen", config.pipeline.gen.seed}};
    manifest["config_digest"] = config.digest();
    manifest["config_digests"] = {{"phase1", config.pipeline.phase1.digest()},
                                  {"phase2", config.pipeline.phase2.digest()},
                                  {"gen", config.pipeline.gen.digest()}};
    manifest["templates"] = {{"elicitation", config.pipeline.templates.elicitation},
                             {"fusion_with_knowledge", config.pipeline.templates.fusion_with_knowledge},
                             {"fusion_without_knowledge", config.pipeline.templates.fusion_without_knowledge}};
    manifest["dataset"] = {{"train", {{"path", config.train_path}, {"n", dataset.train.size()},
                                      {"digest", file_digest(config.train_path)}}},
                           {"dev", {{"path", config.dev_path}, {"n", dataset.dev.size()},
                                    {"digest", config.dev_path.empty() ? "none" : file_digest(config.dev_path)}}},
                           {"test", {{"path", config.test_path}, {"n", dataset.test.size()},
                                     {"digest", file_digest(config.test_path)}}}};
    manifest["counts"] = {{"phase1_pairs", result.phase1_pair_count},
                          {"phase1_skipped_empty", result.phase1_skipped},
                          {"rationales", result.rationales.size()},
                          {"predictions", result.predictions.size()},
                          {"invalid_predictions", report.invalid_count}};
    manifest["losses"] = {{"phase1", result.phase1_losses}, {"phase2", result.phase2_losses}};
    manifest["models"] = nlohmann::json::object();
    manifest["models"]["m0"] = result.m0.to_json();
    if (result.m1) manifest["models"]["m1"] = result.m1->to_json();
    manifest["models"]["predictor"] = result.predictor.to_json();
    manifest["backend"] = {{"kind", backend.id()}};
    if (auto digest = backend.call_log_digest()) manifest["backend"]["call_log_digest"] = *digest;
    manifest["macro_f1"] = report.macro_f1;
    return manifest;
}

// Persist a completed run. Knowledge records are written per instance (the
// doc text actually available for that instance's target), so downstream
// tooling can re-pair them without the cache.
inline RunPaths persist_run(const std::filesystem::path& runs_root, const RunConfig& config,
                            const Dataset& dataset, const RunResult& result,
                            const std::map<std::string, KnowledgeDoc>& knowledge,
                            const TextBackend& backend, const EvalReport& report,
                            const EvalReport* dev_report = nullptr) {
    const auto final_root = runs_root / config.run_id;
    if (std::filesystem::exists(final_root)) {
        throw std::runtime_error("run directory already exists: " + final_root.string());
    }
    const auto staging = runs_root / (config.run_id + ".partial");
    std::filesystem::remove_all(staging);
    std::filesystem::create_directories(staging);
    RunPaths paths{staging};

    try {
        {
            std::ofstream snap(paths.config_snapshot(), std::ios::binary);
            snap << config.snapshot();
        }

        if (!knowledge.empty()) {
            std::vector<nlohmann::json> records;
            for (const auto* split : {&dataset.train, &dataset.dev, &dataset.test}) {
                for (const auto& inst : *split) {
                    auto it = knowledge.find(normalize_target(inst.target));
                    if (it == knowledge.end()) continue;
                    records.push_back({{"instance_id", inst.id},
                                       {"target_key", it->second.target_key},
                                       {"text", it->second.text},
                                       {"truncated", it->second.truncated},
                                       {"empty_marker", it->second.empty_marker()}});
                }
            }
            detail::write_lines(paths.knowledge(), records);
        }

        {
            std::vector<nlohmann::json> records;
            for (const auto& r : result.rationales) {
                records.push_back({{"instance_id", r.instance_id}, {"text", r.text},
                                   {"generator_stage", stage_name(r.generator_stage)}});
            }
            detail::write_lines(paths.rationales(), records);
        }
        {
            std::vector<nlohmann::json> records;
            for (const auto* block : {&result.train_inputs, &result.test_inputs, &result.dev_inputs}) {
                for (const auto& e : *block) {
                    records.push_back({{"instance_id", e.instance_id}, {"text", e.text},
                                       {"knowledge_used", e.knowledge_used},
                                       {"knowledge_source", knowledge_source_name(e.knowledge_source)}});
                }
            }
            detail::write_lines(paths.enhanced(), records);
        }
        {
            std::vector<nlohmann::json> records;
            for (const auto& p : result.predictions) {
                records.push_back({{"instance_id", p.instance_id}, {"label", encode_label(p.label)},
                                   {"was_invalid", p.was_invalid}, {"raw", p.raw_text}});
            }
            detail::write_lines(paths.predictions(), records);
        }
        if (!result.dev_predictions.empty()) {
            std::vector<nlohmann::json> records;
            for (const auto& p : result.dev_predictions) {
                records.push_back({{"instance_id", p.instance_id}, {"label", encode_label(p.label)},
                                   {"was_invalid", p.was_invalid}, {"raw", p.raw_text}});
            }
            detail::write_lines(paths.dev_predictions(), records);
        }

        backend.save_checkpoint(result.m0, paths.checkpoints() / stage_name(result.m0.stage));
        if (result.m1) {
            backend.save_checkpoint(*result.m1, paths.checkpoints() / stage_name(result.m1->stage));
        }
        backend.save_checkpoint(result.predictor,
                                paths.checkpoints() / stage_name(result.predictor.stage));

        {
            nlohmann::json report_json = report.to_json();
            if (dev_report) report_json["dev"] = dev_report->to_json();
            std::ofstream out(paths.report());
            out << report_json.dump(2) << '\n';
        }
        {
            std::ofstream out(paths.manifest());
            out << build_manifest(config, dataset, result, backend, report).dump(2) << '\n';
        }
    } catch (...) {
        std::filesystem::remove_all(staging);
        throw;
    }

    std::filesystem::rename(staging, final_root);
    return RunPaths{final_root};
}

struct StoredPrediction {
    std::string instance_id;
    StanceLabel label;
    bool was_invalid;
};

inline std::vector<StoredPrediction> read_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open predictions file: " + path);
    std::vector<StoredPrediction> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            nlohmann::json j = nlohmann::json::parse(line);
            auto label = label_from_name(j.at("label").get<std::string>());
            if (!label) throw std::runtime_error("bad label '" + j.at("label").get<std::string>() + "'");
            out.push_back({j.at("instance_id").get<std::string>(), *label,
                           j.value("was_invalid", false)});
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ": bad prediction record at line " +
                                     std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

} // namespace lot
