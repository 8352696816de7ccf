// lot: stance-detection pipeline CLI.
//
// Subcommands: retrieve, run, ablation, epoch-sweep, evaluate. All outputs
// land under --runs-root; every run directory carries the exact config
// snapshot and a manifest sufficient to re-execute it bit-identically under
// the mock backend.

#include <cstdio>
#include <exception>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lot/runner.hpp"
#include "lot/web_search.hpp"

namespace {

struct GlobalOptions {
    std::string config_path;
    std::string runs_root = "runs";
    std::string run_id;
    std::string backend_kind;
    int seed = -1;
    bool mock_backend = false;
    bool mock_search = false;
    std::string search_fixture;
};

lot::RunConfig load_config(const GlobalOptions& opt) {
    lot::FlatConfig user;
    if (!opt.config_path.empty()) user = lot::read_flat_config(opt.config_path);
    if (!opt.run_id.empty()) user["run.id"] = opt.run_id;
    if (opt.seed >= 0) user["run.seed"] = std::to_string(opt.seed);
    if (!opt.backend_kind.empty()) user["backend.kind"] = opt.backend_kind;
    if (opt.mock_backend) user["backend.kind"] = "mock";
    if (opt.mock_search) user["search.mock"] = "true";
    if (!opt.search_fixture.empty()) user["search.fixture"] = opt.search_fixture;
    return lot::build_run_config(user);
}

std::shared_ptr<lot::SearchClient> pick_client(const lot::RunConfig& config) {
    return lot::make_search_client_or_null(config, [](const lot::RunConfig&) {
        return lot::make_live_search_client();
    });
}

void print_run_summary(const lot::RunOutcome& outcome) {
    std::cout << outcome.report.render_table();
    if (outcome.dev_report) {
        std::cout << "dev split:\n" << outcome.dev_report->render_table();
    }
    std::cout << "run directory: " << outcome.paths.root.string() << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stance-detection pipeline: retrieval-grounded two-phase fine-tuning"};
    app.require_subcommand(1);

    GlobalOptions opt;
    app.add_option("-c,--config", opt.config_path, "flat key-value config file");
    app.add_option("--runs-root", opt.runs_root, "directory receiving run outputs")
        ->capture_default_str();
    app.add_option("--run-id", opt.run_id, "override run.id");
    app.add_option("--seed", opt.seed, "override run.seed");
    app.add_option("--backend", opt.backend_kind, "override backend.kind");
    app.add_flag("--mock-backend", opt.mock_backend, "force the deterministic mock backend");
    app.add_flag("--mock-search", opt.mock_search, "use the fixture-backed search client");
    app.add_option("--search-fixture", opt.search_fixture, "fixture file for --mock-search");

    auto* retrieve = app.add_subcommand("retrieve", "warm the knowledge cache for all targets");

    auto* run = app.add_subcommand("run", "execute one variant end to end and evaluate it");
    std::string variant_override;
    run->add_option("--variant", variant_override, "baseline|cot|phase1-only|lot");

    auto* ablation = app.add_subcommand("ablation",
                                        "run all four variants with identical seeds and data");

    auto* sweep = app.add_subcommand("epoch-sweep", "sweep Phase-1 epochs over the full pipeline");
    std::vector<int> epochs_list;
    sweep->add_option("--epochs", epochs_list, "strictly increasing epoch settings")
        ->required()
        ->delimiter(',');

    auto* evaluate = app.add_subcommand("evaluate", "re-score a predictions file against golds");
    std::string predictions_path;
    std::string golds_path;
    evaluate->add_option("--predictions", predictions_path, "predictions.jsonl from a run")->required();
    evaluate->add_option("--golds", golds_path, "dataset file holding gold labels")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*retrieve) {
            const auto config = load_config(opt);
            const auto stats = lot::cmd_retrieve(config, pick_client(config), opt.runs_root);
            std::cout << "unique targets: " << stats.unique_targets << '\n'
                      << "fetched:        " << stats.fetched << '\n'
                      << "cache hits:     " << stats.cache_hits << '\n'
                      << "empty results:  " << stats.empty << '\n';
        } else if (*run) {
            auto config = load_config(opt);
            if (!variant_override.empty()) {
                config.variant = lot::variant_from_name(variant_override);
                config.effective["pipeline.variant"] = variant_override;
            }
            print_run_summary(lot::cmd_run(config, opt.runs_root, pick_client(config)));
        } else if (*ablation) {
            const auto config = load_config(opt);
            const auto rows = lot::cmd_ablation(config, opt.runs_root, pick_client(config));
            std::cout << std::left << std::setw(14) << "variant" << std::setw(10) << "macro_f1"
                      << "reference_full_scale\n";
            std::cout << std::fixed << std::setprecision(4);
            for (const auto& row : rows) {
                std::cout << std::left << std::setw(14) << lot::variant_name(row.variant)
                          << std::setw(10) << row.macro_f1 << std::setprecision(1)
                          << row.reference_full_scale << std::setprecision(4) << '\n';
            }
            std::cout << "reference column: published full-scale results (FLAN-T5-Large, VAST, "
                         "macro-F1 x 100); desk-scale mock runs are not comparable.\n";
        } else if (*sweep) {
            const auto config = load_config(opt);
            const auto result = lot::cmd_epoch_sweep(config, epochs_list, opt.runs_root,
                                                     pick_client(config));
            std::cout << result.to_table();
        } else if (*evaluate) {
            const auto config = load_config(opt);
            std::cout << lot::cmd_evaluate(predictions_path, golds_path, config, opt.runs_root)
                             .render_table();
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
