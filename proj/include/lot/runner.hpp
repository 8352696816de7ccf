#pragma once

// Command-level orchestration behind the CLI: cache warming, single runs,
// the four-variant ablation battery, the Phase-1 epoch sweep, and
// standalone re-scoring. Commands return their results so both the CLI and
// the test suites drive the same code.

#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "lot/config.hpp"
#include "lot/pipeline.hpp"
#include "lot/reference_results.hpp"
#include "lot/retrieval.hpp"
#include "lot/run_store.hpp"

namespace lot {

using BackendFactory = std::function<std::unique_ptr<TextBackend>(const RunConfig&)>;
using ClientFactory = std::function<std::shared_ptr<SearchClient>(const RunConfig&)>;

inline std::unique_ptr<TextBackend> make_backend(const RunConfig& config) {
    if (config.backend_kind == "mock") return std::make_unique<MockBackend>();
    throw std::runtime_error("unknown backend kind '" + config.backend_kind +
                             "' (this build ships the deterministic mock; plug real backends in "
                             "through the TextBackend interface)");
}

inline std::shared_ptr<SearchClient> make_search_client_or_null(const RunConfig& config,
                                                                const ClientFactory& live_factory) {
    if (config.mock_search) {
        if (config.search_fixture.empty()) {
            throw std::runtime_error("search.mock=true requires search.fixture");
        }
        return std::make_shared<MockSearchClient>(config.search_fixture);
    }
    if (live_factory) return live_factory(config);
    return nullptr;
}

struct RunOutcome {
    RunResult result;
    EvalReport report;
    std::optional<EvalReport> dev_report;
    RunPaths paths;
};

inline Dataset load_configured_dataset(const RunConfig& config, bool need_dev) {
    if (config.train_path.empty()) throw std::runtime_error("config key 'data.train' is required");
    if (config.test_path.empty()) throw std::runtime_error("config key 'data.test' is required");
    return load_splits(config.train_path, need_dev ? config.dev_path : "", config.test_path,
                       config.columns, config.label_map);
}

inline KnowledgeStore make_store(const RunConfig& config, std::shared_ptr<SearchClient> client) {
    auto cache = std::make_shared<KnowledgeCache>(config.cache_path);
    return KnowledgeStore(std::move(cache), std::move(client), config.retrieval);
}

namespace detail {

// Command-level manifest: the exact config snapshot plus the command's own
// inputs, enough to re-execute the command bit-identically under the mock
// backend.
inline void write_command_manifest(const std::filesystem::path& runs_root, const RunConfig& config,
                                   const std::string& command, nlohmann::json payload) {
    if (runs_root.empty()) return;
    payload["command"] = command;
    payload["config_digest"] = config.digest();
    payload["config_snapshot"] = config.snapshot();
    std::filesystem::create_directories(runs_root);
    std::ofstream out(runs_root / (config.run_id + "-" + command + ".json"));
    if (!out) throw std::runtime_error("cannot write command manifest under " + runs_root.string());
    out << payload.dump(2) << '\n';
}

} // namespace detail

// Warm the knowledge cache for every unique target across the configured
// splits. `runs_root`, when given, receives the command manifest.
inline WarmStats cmd_retrieve(const RunConfig& config, std::shared_ptr<SearchClient> client,
                              const std::filesystem::path& runs_root = {}) {
    std::vector<std::string> targets;
    auto collect = [&](const std::string& path, Split split) {
        if (path.empty()) return;
        for (const auto& inst : load_dataset(path, split, config.columns, config.label_map)) {
            targets.push_back(inst.target);
        }
    };
    collect(config.train_path, Split::train);
    collect(config.dev_path, Split::dev);
    collect(config.test_path, Split::test);
    if (targets.empty()) throw std::runtime_error("no dataset paths configured");

    KnowledgeStore store = make_store(config, std::move(client));
    WarmStats stats = store.warm(targets);
    detail::write_command_manifest(runs_root, config, "retrieve",
                                   {{"cache", config.cache_path},
                                    {"unique_targets", stats.unique_targets},
                                    {"fetched", stats.fetched},
                                    {"cache_hits", stats.cache_hits},
                                    {"empty", stats.empty}});
    return stats;
}

// One full run of the configured variant: warm/serve knowledge as needed,
// execute the pipeline, evaluate, and persist the run directory.
inline RunOutcome cmd_run(const RunConfig& config, const std::filesystem::path& runs_root,
                          std::shared_ptr<SearchClient> client, TextBackend* backend_override = nullptr) {
    const Dataset dataset = load_configured_dataset(config, config.pipeline.include_dev ||
                                                                !config.dev_path.empty());

    std::map<std::string, KnowledgeDoc> knowledge;
    if (variant_traits(config.variant).do_phase1_finetune) {
        KnowledgeStore store = make_store(config, std::move(client));
        std::vector<std::string> targets;
        for (const auto& inst : dataset.train) targets.push_back(inst.target);
        store.warm(targets);
        for (const auto& inst : dataset.train) {
            const std::string key = normalize_target(inst.target);
            knowledge.emplace(key, *store.get(key));
        }
    }

    std::unique_ptr<TextBackend> owned;
    TextBackend* backend = backend_override;
    if (!backend) {
        owned = make_backend(config);
        backend = owned.get();
    }

    RunOutcome outcome{
        run_variant(config.variant, dataset, *backend, backend->pretrained(), knowledge,
                    config.pipeline),
        {}, std::nullopt, {}};
    outcome.report = evaluate_run(outcome.result, dataset.test);
    if (!outcome.result.dev_predictions.empty()) {
        std::vector<LabeledPrediction> preds;
        std::vector<StanceLabel> golds;
        std::map<std::string, StanceLabel> by_id;
        for (const auto& inst : dataset.dev) by_id[inst.id] = inst.gold;
        for (const auto& p : outcome.result.dev_predictions) {
            preds.push_back({p.label, p.was_invalid});
            golds.push_back(by_id.at(p.instance_id));
        }
        outcome.dev_report = evaluate(preds, golds);
    }

    outcome.paths = persist_run(runs_root, config, dataset, outcome.result, knowledge, *backend,
                                outcome.report, outcome.dev_report ? &*outcome.dev_report : nullptr);
    return outcome;
}

struct AblationRow {
    AblationVariant variant;
    double macro_f1;
    double reference_full_scale;
    RunPaths paths;
};

// All four variants with identical seeds, data, and templates, sharing one
// warmed retrieval cache. Rows follow the canonical order baseline, cot,
// phase1-only, lot.
inline std::vector<AblationRow> cmd_ablation(const RunConfig& base_config,
                                             const std::filesystem::path& runs_root,
                                             std::shared_ptr<SearchClient> client) {
    // Warm once; the per-variant runs then hit the cache only.
    {
        RunConfig warm_config = base_config;
        const Dataset dataset = load_configured_dataset(warm_config, false);
        KnowledgeStore store = make_store(warm_config, client);
        std::vector<std::string> targets;
        for (const auto& inst : dataset.train) targets.push_back(inst.target);
        store.warm(targets);
    }

    std::vector<AblationRow> rows;
    nlohmann::json table = nlohmann::json::array();
    for (std::size_t i = 0; i < kAllVariants.size(); ++i) {
        const AblationVariant variant = kAllVariants[i];
        RunConfig config = base_config;
        config.variant = variant;
        config.run_id = base_config.run_id + "-" + variant_name(variant);
        config.effective["pipeline.variant"] = variant_name(variant);
        config.effective["run.id"] = config.run_id;
        RunOutcome outcome = cmd_run(config, runs_root, client);
        rows.push_back({variant, outcome.report.macro_f1, reference::kAblation[i].macro_f1,
                        outcome.paths});
        table.push_back({{"variant", variant_name(variant)},
                         {"macro_f1", outcome.report.macro_f1},
                         {"reference_full_scale", reference::kAblation[i].macro_f1},
                         {"run_dir", outcome.paths.root.string()}});
    }
    detail::write_command_manifest(runs_root, base_config, "ablation", {{"rows", table}});
    return rows;
}

struct SweepEntry {
    int phase1_epochs;
    double macro_f1;
    double phase1_final_loss;
    std::string phase2_config_digest;
};

struct SweepResult {
    std::vector<SweepEntry> entries;

    std::string to_table() const {
        std::ostringstream os;
        os << "phase1_epochs\tmacro_f1\tphase1_final_loss\n";
        for (const auto& e : entries) {
            os << e.phase1_epochs << '\t' << e.macro_f1 << '\t' << e.phase1_final_loss << '\n';
        }
        return os.str();
    }
};

// Full pipeline runs with Phase-1 epochs swept over `epochs_list`; everything
// else, including the root seed, stays fixed. Runs execute sequentially so
// checkpoint storage stays bounded.
inline SweepResult cmd_epoch_sweep(const RunConfig& base_config,
                                   const std::vector<int>& epochs_list,
                                   const std::filesystem::path& runs_root,
                                   std::shared_ptr<SearchClient> client) {
    if (epochs_list.empty()) throw std::runtime_error("epoch sweep: empty epochs list");
    for (std::size_t i = 1; i < epochs_list.size(); ++i) {
        if (epochs_list[i] <= epochs_list[i - 1]) {
            throw std::runtime_error("epoch sweep: epoch settings must be strictly increasing");
        }
    }
    if (epochs_list.front() <= 0) throw std::runtime_error("epoch sweep: epochs must be positive");

    SweepResult sweep;
    for (int epochs : epochs_list) {
        RunConfig config = base_config;
        config.variant = AblationVariant::lot;
        config.pipeline.phase1.epochs = epochs;
        config.run_id = base_config.run_id + "-e" + std::to_string(epochs);
        config.effective["pipeline.variant"] = "lot";
        config.effective["phase1.epochs"] = std::to_string(epochs);
        config.effective["run.id"] = config.run_id;
        RunOutcome outcome = cmd_run(config, runs_root, client);
        sweep.entries.push_back({epochs, outcome.report.macro_f1,
                                 outcome.result.phase1_losses.back(),
                                 config.pipeline.phase2.digest()});
    }

    std::filesystem::create_directories(runs_root);
    std::ofstream table(runs_root / (base_config.run_id + "-sweep.tsv"));
    table << sweep.to_table();

    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : sweep.entries) {
        entries.push_back({{"phase1_epochs", e.phase1_epochs},
                           {"macro_f1", e.macro_f1},
                           {"phase1_final_loss", e.phase1_final_loss},
                           {"phase2_config_digest", e.phase2_config_digest}});
    }
    detail::write_command_manifest(runs_root, base_config, "epoch-sweep", {{"entries", entries}});
    return sweep;
}

/// Standalone re-scoring: a predictions file from a run directory against
/// gold labels from a dataset file, joined on instance id.
inline EvalReport cmd_evaluate(const std::string& predictions_path, const std::string& golds_path,
                               const RunConfig& config,
                               const std::filesystem::path& runs_root = {}) {
    const auto stored = read_predictions(predictions_path);
    if (stored.empty()) throw std::runtime_error(predictions_path + ": no predictions");

    // The split tag is irrelevant for scoring; test matches the common case.
    const auto instances = load_dataset(golds_path, Split::test, config.columns, config.label_map);
    std::map<std::string, StanceLabel> golds;
    for (const auto& inst : instances) golds[inst.id] = inst.gold;

    std::vector<LabeledPrediction> preds;
    std::vector<StanceLabel> gold_list;
    for (const auto& p : stored) {
        auto it = golds.find(p.instance_id);
        if (it == golds.end()) {
            throw std::runtime_error("prediction for unknown instance '" + p.instance_id +
                                     "' (not present in " + golds_path + ")");
        }
        preds.push_back({p.label, p.was_invalid});
        gold_list.push_back(it->second);
    }
    EvalReport report = evaluate(preds, gold_list);
    detail::write_command_manifest(runs_root, config, "evaluate",
                                   {{"predictions", predictions_path},
                                    {"golds", golds_path},
                                    {"report", report.to_json()}});
    return report;
}

} // namespace lot
