#pragma once

// Orchestration of the progressive-optimization pipeline: build Phase-1
// generation pairs from retrieved knowledge, fine-tune the generator,
// produce intermediate rationales, fuse them into enhanced inputs,
// fine-tune the predictor, and predict — for the full pipeline and its
// three ablation variants.

#include <atomic>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "lot/backend.hpp"
#include "lot/corpus.hpp"
#include "lot/evaluation.hpp"
#include "lot/retrieval.hpp"
#include "lot/text.hpp"

namespace lot {

enum class AblationVariant { baseline, cot, phase1_only, lot };

inline constexpr std::array<AblationVariant, 4> kAllVariants = {
    AblationVariant::baseline, AblationVariant::cot, AblationVariant::phase1_only,
    AblationVariant::lot};

inline const std::string& variant_name(AblationVariant v) {
    static const std::array<std::string, 4> names = {"baseline", "cot", "phase1-only", "lot"};
    return names[static_cast<std::size_t>(v)];
}

inline AblationVariant variant_from_name(std::string_view name) {
    for (AblationVariant v : kAllVariants) {
        if (variant_name(v) == name) return v;
    }
    throw std::runtime_error("unknown variant '" + std::string(name) +
                             "' (expected baseline/cot/phase1-only/lot)");
}

// Each variant fixes (do_phase1_finetune, rationale_generator,
// include_knowledge_in_input). Rationales are only generated when the
// variant integrates them; rationale_generator names the stage that
// supplies them in that case.
struct VariantTraits {
    bool do_phase1_finetune;
    std::optional<Stage> rationale_generator;
    bool include_knowledge_in_input;
};

inline VariantTraits variant_traits(AblationVariant v) {
    switch (v) {
        case AblationVariant::baseline:    return {false, std::nullopt, false};
        case AblationVariant::cot:         return {false, Stage::M0, true};
        case AblationVariant::phase1_only: return {true, Stage::M1, false};
        case AblationVariant::lot:         return {true, Stage::M1, true};
    }
    throw std::logic_error("unreachable");
}

enum class KnowledgeSource { phase1_model, pretrained_model, none };

inline const std::string& knowledge_source_name(KnowledgeSource s) {
    static const std::array<std::string, 3> names = {"phase1-model", "pretrained-model", "none"};
    return names[static_cast<std::size_t>(s)];
}

struct Rationale {
    std::string instance_id;
    std::string text;
    Stage generator_stage = Stage::M0;
};

struct EnhancedInput {
    std::string instance_id;
    std::string text;
    bool knowledge_used = false;
    KnowledgeSource knowledge_source = KnowledgeSource::none;
};

// Prompt templates. Placeholders {target}, {document}, {knowledge} are
// substituted verbatim; the rendered text is byte-exact for given values.
struct Templates {
    std::string elicitation =
        "Explain the background relevant to the stance of the document on the target. "
        "target: {target} document: {document}";
    std::string fusion_with_knowledge = "stance target: {target} document: {document} knowledge: {knowledge}";
    std::string fusion_without_knowledge = "stance target: {target} document: {document}";
};

inline std::string render_template(std::string_view tpl,
                                   const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tpl.size());
    for (std::size_t i = 0; i < tpl.size();) {
        if (tpl[i] == '{') {
            std::size_t close = tpl.find('}', i);
            if (close != std::string_view::npos) {
                auto it = values.find(std::string(tpl.substr(i + 1, close - i - 1)));
                if (it != values.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tpl[i]);
        ++i;
    }
    return out;
}

/// Knowledge-elicitation prompt shared by Phase-1 training sources and
/// rationale generation, so exact-match lookups line up.
inline std::string elicitation_source(const Templates& templates, const std::string& document,
                                      const std::string& target) {
    return render_template(templates.elicitation, {{"target", target}, {"document", document}});
}

struct Phase1Pairs {
    std::vector<TextPair> pairs;
    std::size_t skipped_empty = 0; // instances whose knowledge was an empty-result marker
};

inline Phase1Pairs build_phase1_pairs(const std::vector<Instance>& instances,
                                      const std::map<std::string, KnowledgeDoc>& knowledge,
                                      const Templates& templates) {
    Phase1Pairs out;
    for (const auto& inst : instances) {
        const std::string key = normalize_target(inst.target);
        auto it = knowledge.find(key);
        if (it == knowledge.end()) {
            throw std::runtime_error("no knowledge for target_key '" + key + "' (instance " +
                                     inst.id + ")");
        }
        if (it->second.empty_marker()) {
            ++out.skipped_empty;
            continue;
        }
        out.pairs.push_back({elicitation_source(templates, inst.document, inst.target),
                             it->second.text});
    }
    return out;
}

inline FinetuneResult run_phase1(TextBackend& backend, const ModelHandle& m0,
                                 const std::vector<TextPair>& pairs, const FinetuneConfig& cfg) {
    return backend.finetune(m0, pairs, cfg, "phase1");
}

inline Rationale generate_rationale(TextBackend& backend, const ModelHandle& model,
                                    const Instance& inst, const Templates& templates,
                                    const GenConfig& cfg) {
    if (model.stage == Stage::M2) {
        throw std::runtime_error("rationales come from stage M0 or M1, not the predictor");
    }
    Rationale r;
    r.instance_id = inst.id;
    r.text = backend.generate(model, elicitation_source(templates, inst.document, inst.target), cfg);
    r.generator_stage = model.stage;
    return r;
}

// Fusion of document, intermediate rationale, and target. A length budget
// (characters; 0 = unlimited) only ever shortens the knowledge segment —
// never the document or target — cutting at the last whitespace at or
// before the allowance. Knowledge that cannot fit at all falls back to the
// knowledge-free rendering.
inline EnhancedInput integrate_inputs(const std::string& document, const Rationale* rationale,
                                      const std::string& target, const Templates& templates,
                                      std::size_t max_len = 0, const std::string& instance_id = "") {
    if (document.empty()) throw std::runtime_error("integrate_inputs: empty document");
    if (target.empty()) throw std::runtime_error("integrate_inputs: empty target");

    EnhancedInput out;
    out.instance_id = instance_id.empty() && rationale ? rationale->instance_id : instance_id;

    const bool have_knowledge = rationale && !rationale->text.empty();
    if (rationale) {
        out.knowledge_source = rationale->generator_stage == Stage::M1
                                   ? KnowledgeSource::phase1_model
                                   : KnowledgeSource::pretrained_model;
    }

    const std::map<std::string, std::string> base = {{"target", target}, {"document", document}};
    if (!have_knowledge) {
        out.text = render_template(templates.fusion_without_knowledge, base);
        return out;
    }

    std::string knowledge = rationale->text;
    if (max_len > 0) {
        const std::size_t fixed_len =
            render_template(templates.fusion_with_knowledge,
                            {{"target", target}, {"document", document}, {"knowledge", ""}})
                .size();
        if (fixed_len >= max_len) {
            out.text = render_template(templates.fusion_without_knowledge, base);
            return out;
        }
        auto cut = cut_at_whitespace(knowledge, max_len - fixed_len);
        knowledge = std::move(cut.text);
        if (knowledge.empty()) {
            out.text = render_template(templates.fusion_without_knowledge, base);
            return out;
        }
    }
    out.knowledge_used = true;
    out.text = render_template(templates.fusion_with_knowledge,
                               {{"target", target}, {"document", document}, {"knowledge", knowledge}});
    return out;
}

inline std::vector<TextPair> build_phase2_pairs(const std::vector<EnhancedInput>& enhanced,
                                                const std::map<std::string, StanceLabel>& golds) {
    std::vector<TextPair> pairs;
    pairs.reserve(enhanced.size());
    for (const auto& e : enhanced) {
        auto it = golds.find(e.instance_id);
        if (it == golds.end()) {
            throw std::runtime_error("no gold label for instance '" + e.instance_id + "'");
        }
        pairs.push_back({e.text, encode_label(it->second)});
    }
    return pairs;
}

inline FinetuneResult run_phase2(TextBackend& backend, const ModelHandle& model,
                                 const std::vector<TextPair>& pairs, const FinetuneConfig& cfg) {
    return backend.finetune(model, pairs, cfg, "phase2");
}

struct Prediction {
    std::string instance_id;
    StanceLabel label = StanceLabel::neutral;
    bool was_invalid = false;
    std::string raw_text;
};

/// Predict a stance for one enhanced input; undecodable generations fall
/// back to Neutral with was_invalid set so decode failures stay observable.
inline Prediction predict(TextBackend& backend, const ModelHandle& model,
                          const EnhancedInput& enhanced, const GenConfig& cfg) {
    Prediction p;
    p.instance_id = enhanced.instance_id;
    p.raw_text = backend.generate(model, enhanced.text, cfg);
    if (auto label = decode_label(p.raw_text)) {
        p.label = *label;
    } else {
        p.label = StanceLabel::neutral;
        p.was_invalid = true;
    }
    return p;
}

struct PipelineConfig {
    Templates templates;
    FinetuneConfig phase1;
    FinetuneConfig phase2;
    GenConfig gen;
    std::size_t max_enhanced_len = 0; // characters; 0 = unlimited
    int gen_parallelism = 1;          // rationale fan-out bound (read-safe backends only)
    bool include_dev = false;
};

struct RunResult {
    AblationVariant variant = AblationVariant::lot;
    ModelHandle m0;
    std::optional<ModelHandle> m1;
    ModelHandle predictor;
    std::vector<double> phase1_losses;
    std::vector<double> phase2_losses;
    std::size_t phase1_pair_count = 0;
    std::size_t phase1_skipped = 0;
    std::vector<Rationale> rationales;            // train, then test, then dev
    std::vector<EnhancedInput> train_inputs;
    std::vector<EnhancedInput> test_inputs;
    std::vector<EnhancedInput> dev_inputs;
    std::vector<Prediction> predictions;          // test order
    std::vector<Prediction> dev_predictions;
};

namespace detail {

// Fan rationale generation out across instances when the backend declares
// concurrent generation safe; results land in instance order either way.
inline std::vector<Rationale> generate_rationales(TextBackend& backend, const ModelHandle& model,
                                                  const std::vector<Instance>& instances,
                                                  const Templates& templates, const GenConfig& gcfg,
                                                  int parallelism) {
    std::vector<Rationale> out(instances.size());
    const bool parallel = backend.concurrent_generate_safe() && parallelism > 1 && instances.size() > 1;
    if (!parallel) {
        for (std::size_t i = 0; i < instances.size(); ++i) {
            out[i] = generate_rationale(backend, model, instances[i], templates, gcfg);
        }
        return out;
    }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= instances.size()) return;
            out[i] = generate_rationale(backend, model, instances[i], templates, gcfg);
        }
    };
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(parallelism),
                                                      instances.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    return out;
}

inline std::vector<EnhancedInput> integrate_all(const std::vector<Instance>& instances,
                                                const std::vector<Rationale>* rationales,
                                                const PipelineConfig& cfg) {
    std::vector<EnhancedInput> out;
    out.reserve(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const Rationale* r = rationales ? &(*rationales)[i] : nullptr;
        out.push_back(integrate_inputs(instances[i].document, r, instances[i].target,
                                       cfg.templates, cfg.max_enhanced_len, instances[i].id));
    }
    return out;
}

} // namespace detail

// Execute one variant end to end. `knowledge` must cover every unique
// normalized train target when the variant fine-tunes Phase 1 (empty-result
// markers allowed; those instances are skipped and counted). Either the run
// completes and covers every test instance, or it throws — no partial
// results are returned.
inline RunResult run_variant(AblationVariant variant, const Dataset& dataset, TextBackend& backend,
                             const ModelHandle& m0,
                             const std::map<std::string, KnowledgeDoc>& knowledge,
                             const PipelineConfig& cfg) {
    if (dataset.train.empty()) throw std::runtime_error("run_variant: empty train split");
    if (dataset.test.empty()) throw std::runtime_error("run_variant: empty test split");
    const VariantTraits traits = variant_traits(variant);

    RunResult result;
    result.variant = variant;
    result.m0 = m0;

    // Phase 1: generation fine-tuning on retrieved knowledge.
    ModelHandle phase2_base = m0;
    if (traits.do_phase1_finetune) {
        Phase1Pairs p1 = build_phase1_pairs(dataset.train, knowledge, cfg.templates);
        result.phase1_pair_count = p1.pairs.size();
        result.phase1_skipped = p1.skipped_empty;
        FinetuneResult ft = run_phase1(backend, m0, p1.pairs, cfg.phase1);
        result.phase1_losses = std::move(ft.epoch_losses);
        result.m1 = ft.model;
        phase2_base = *result.m1;
    }

    // Intermediate rationales for train and test (dev behind the flag);
    // generated only when the variant integrates them.
    std::vector<Rationale> train_rat;
    std::vector<Rationale> test_rat;
    std::vector<Rationale> dev_rat;
    if (traits.include_knowledge_in_input) {
        const ModelHandle& generator =
            *traits.rationale_generator == Stage::M1 ? *result.m1 : m0;
        train_rat = detail::generate_rationales(backend, generator, dataset.train, cfg.templates,
                                                cfg.gen, cfg.gen_parallelism);
        test_rat = detail::generate_rationales(backend, generator, dataset.test, cfg.templates,
                                               cfg.gen, cfg.gen_parallelism);
        if (cfg.include_dev && !dataset.dev.empty()) {
            dev_rat = detail::generate_rationales(backend, generator, dataset.dev, cfg.templates,
                                                  cfg.gen, cfg.gen_parallelism);
        }
    }

    result.train_inputs = detail::integrate_all(dataset.train,
                                                traits.include_knowledge_in_input ? &train_rat : nullptr, cfg);
    result.test_inputs = detail::integrate_all(dataset.test,
                                               traits.include_knowledge_in_input ? &test_rat : nullptr, cfg);
    if (cfg.include_dev && !dataset.dev.empty()) {
        result.dev_inputs = detail::integrate_all(dataset.dev,
                                                  traits.include_knowledge_in_input ? &dev_rat : nullptr, cfg);
    }

    // Phase 2: prediction fine-tuning on the enhanced training inputs.
    std::map<std::string, StanceLabel> golds;
    for (const auto& inst : dataset.train) golds[inst.id] = inst.gold;
    std::vector<TextPair> p2 = build_phase2_pairs(result.train_inputs, golds);
    FinetuneResult ft2 = run_phase2(backend, phase2_base, p2, cfg.phase2);
    result.phase2_losses = std::move(ft2.epoch_losses);
    result.predictor = ft2.model;

    for (const auto& input : result.test_inputs) {
        result.predictions.push_back(predict(backend, result.predictor, input, cfg.gen));
    }
    for (const auto& input : result.dev_inputs) {
        result.dev_predictions.push_back(predict(backend, result.predictor, input, cfg.gen));
    }

    result.rationales.reserve(train_rat.size() + test_rat.size() + dev_rat.size());
    for (auto* block : {&train_rat, &test_rat, &dev_rat}) {
        for (auto& r : *block) result.rationales.push_back(std::move(r));
    }
    return result;
}

/// Report over the test predictions of a completed run.
inline EvalReport evaluate_run(const RunResult& run, const std::vector<Instance>& test) {
    std::vector<LabeledPrediction> preds;
    std::vector<StanceLabel> golds;
    preds.reserve(run.predictions.size());
    golds.reserve(test.size());
    std::map<std::string, StanceLabel> by_id;
    for (const auto& inst : test) by_id[inst.id] = inst.gold;
    for (const auto& p : run.predictions) {
        preds.push_back({p.label, p.was_invalid});
        golds.push_back(by_id.at(p.instance_id));
    }
    return evaluate(preds, golds);
}

} // namespace lot
