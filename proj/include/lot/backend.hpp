#pragma once

// Pluggable text-to-text model interface: fine-tuning plus generation over
// immutable checkpoints. Handles are value types; every finetune produces a
// new checkpoint and leaves its input handle untouched, so earlier stages
// stay usable after later phases run.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lot/digest.hpp"
#include "lot/text.hpp"

namespace lot {

enum class Stage { M0 = 0, M1 = 1, M2 = 2 };

inline const std::string& stage_name(Stage s) {
    static const std::array<std::string, 3> names = {"M0", "M1", "M2"};
    return names[static_cast<std::size_t>(s)];
}

inline Stage stage_from_name(std::string_view name) {
    if (name == "M0") return Stage::M0;
    if (name == "M1") return Stage::M1;
    if (name == "M2") return Stage::M2;
    throw std::runtime_error("unknown stage '" + std::string(name) + "'");
}

struct TextPair {
    std::string source;
    std::string target;
};

struct FinetuneConfig {
    int epochs = 2;
    double learning_rate = 3e-4;
    int batch_size = 8;
    std::uint64_t seed = 0;
    int max_source_len = 4096; // backend token units
    int max_target_len = 512;

    void validate() const {
        if (epochs <= 0) throw std::runtime_error("finetune config: epochs must be positive");
        if (learning_rate <= 0) throw std::runtime_error("finetune config: learning_rate must be positive");
        if (batch_size <= 0) throw std::runtime_error("finetune config: batch_size must be positive");
        if (max_source_len <= 0 || max_target_len <= 0) {
            throw std::runtime_error("finetune config: max lengths must be positive");
        }
    }

    std::string canonical() const {
        std::ostringstream os;
        char lr[64];
        std::snprintf(lr, sizeof(lr), "%.17g", learning_rate);
        os << "batch_size=" << batch_size << ";epochs=" << epochs << ";learning_rate=" << lr
           << ";max_source_len=" << max_source_len << ";max_target_len=" << max_target_len
           << ";seed=" << seed;
        return os.str();
    }

    std::string digest() const { return hex_digest(canonical()); }
};

enum class Decoding { greedy, beam, sample };

struct GenConfig {
    Decoding decoding = Decoding::greedy;
    int beam_width = 4;
    double temperature = 1.0;
    std::uint64_t seed = 0;
    int max_new_tokens = 256;

    std::string canonical() const {
        std::ostringstream os;
        switch (decoding) {
            case Decoding::greedy: os << "decoding=greedy"; break;
            case Decoding::beam: os << "decoding=beam(" << beam_width << ")"; break;
            case Decoding::sample: {
                char t[64];
                std::snprintf(t, sizeof(t), "%.17g", temperature);
                os << "decoding=sample(" << t << "," << seed << ")";
                break;
            }
        }
        os << ";max_new_tokens=" << max_new_tokens;
        return os.str();
    }

    std::string digest() const { return hex_digest(canonical()); }
};

struct PhaseRecord {
    std::string phase_name;
    std::string config_digest;

    bool operator==(const PhaseRecord&) const = default;
};

struct ModelHandle {
    Stage stage = Stage::M0;
    std::string backend_id;
    std::string checkpoint_ref;
    std::vector<PhaseRecord> lineage; // one record per fine-tuning phase applied

    nlohmann::json to_json() const {
        nlohmann::json phases = nlohmann::json::array();
        for (const auto& p : lineage) {
            phases.push_back({{"phase", p.phase_name}, {"config_digest", p.config_digest}});
        }
        return {{"stage", stage_name(stage)}, {"backend_id", backend_id},
                {"checkpoint_ref", checkpoint_ref}, {"lineage", phases}};
    }
};

struct FinetuneResult {
    ModelHandle model;
    std::vector<double> epoch_losses; // one entry per epoch, in order
};

class TextBackend {
public:
    virtual ~TextBackend() = default;

    virtual std::string id() const = 0;

    /// Stage-M0 handle for the backend's pretrained state.
    virtual ModelHandle pretrained() = 0;

    // Trains a new checkpoint from `model` on `pairs` and returns its
    // handle with lineage extended by (phase_name, cfg digest). Throws on
    // empty pairs and on stage-M2 input ("pipeline exhausted").
    virtual FinetuneResult finetune(const ModelHandle& model, const std::vector<TextPair>& pairs,
                                    const FinetuneConfig& cfg, const std::string& phase_name) = 0;

    virtual std::string generate(const ModelHandle& model, const std::string& source,
                                 const GenConfig& cfg) = 0;

    /// Whether generate() against a fixed checkpoint may run concurrently.
    virtual bool concurrent_generate_safe() const { return false; }

    virtual void save_checkpoint(const ModelHandle& model, const std::filesystem::path& dir) const = 0;

    /// Digest of the ordered call log, when the backend keeps one.
    virtual std::optional<std::string> call_log_digest() const { return std::nullopt; }
};

struct BackendCall {
    std::string op;     // "finetune" | "generate"
    std::string detail; // phase name or source text
    Stage stage;        // stage of the handle the call was made with
};

// Deterministic mock backend. "Training" stores each phase's pairs verbatim;
// generation answers exact-match lookups against the checkpoint's phase
// tables, newest phase first, and otherwise echoes a prefix of the source
// (the first min(16, max_new_tokens) words). Token unit: whitespace word.
// Reported per-epoch loss follows 1/epoch.
class MockBackend : public TextBackend {
public:
    static constexpr std::size_t kFallbackWords = 16;

    MockBackend() {
        states_.emplace(pretrained_ref(), State{});
    }

    std::string id() const override { return "mock"; }

    ModelHandle pretrained() override {
        ModelHandle handle;
        handle.stage = Stage::M0;
        handle.backend_id = id();
        handle.checkpoint_ref = pretrained_ref();
        return handle;
    }

    FinetuneResult finetune(const ModelHandle& model, const std::vector<TextPair>& pairs,
                            const FinetuneConfig& cfg, const std::string& phase_name) override {
        std::lock_guard lock(mutex_); // training is exclusive per backend instance
        cfg.validate();
        if (model.backend_id != id()) {
            throw std::runtime_error("handle belongs to backend '" + model.backend_id + "', not '" + id() + "'");
        }
        if (model.stage == Stage::M2) {
            throw std::runtime_error("pipeline exhausted: stage-M2 handle admits no further fine-tuning");
        }
        if (pairs.empty()) throw std::runtime_error("finetune: empty training pairs");

        const State& parent = state_for(model.checkpoint_ref);
        State next = parent;
        PhaseTable table;
        table.phase_name = phase_name;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const auto& p = pairs[i];
            if (p.source.empty() || p.target.empty()) {
                throw std::runtime_error("finetune: pair " + std::to_string(i) + " has an empty side");
            }
            if (count_words(p.source) > static_cast<std::size_t>(cfg.max_source_len)) {
                throw std::runtime_error("finetune: pair " + std::to_string(i) +
                                         " source exceeds max_source_len");
            }
            if (count_words(p.target) > static_cast<std::size_t>(cfg.max_target_len)) {
                throw std::runtime_error("finetune: pair " + std::to_string(i) +
                                         " target exceeds max_target_len");
            }
            table.pairs[p.source] = p.target;
        }
        next.phases.push_back(std::move(table));

        FinetuneResult result;
        result.model.stage = static_cast<Stage>(static_cast<int>(model.stage) + 1);
        result.model.backend_id = id();
        result.model.checkpoint_ref = "mock:ckpt:" + std::to_string(next_ref_++);
        result.model.lineage = model.lineage;
        result.model.lineage.push_back({phase_name, cfg.digest()});
        for (int e = 1; e <= cfg.epochs; ++e) result.epoch_losses.push_back(1.0 / e);

        states_.emplace(result.model.checkpoint_ref, std::move(next));
        log_.push_back({"finetune", phase_name, model.stage});
        return result;
    }

    std::string generate(const ModelHandle& model, const std::string& source,
                         const GenConfig& cfg) override {
        std::lock_guard lock(mutex_);
        const State& state = state_for(model.checkpoint_ref);
        log_.push_back({"generate", source, model.stage});
        for (auto it = state.phases.rbegin(); it != state.phases.rend(); ++it) {
            auto hit = it->pairs.find(source);
            if (hit != it->pairs.end()) {
                const auto cap = static_cast<std::size_t>(std::max(cfg.max_new_tokens, 0));
                if (count_words(hit->second) <= cap) return hit->second; // verbatim
                return word_prefix(hit->second, cap);
            }
        }
        const std::size_t limit = std::min<std::size_t>(kFallbackWords,
                                                        static_cast<std::size_t>(std::max(cfg.max_new_tokens, 0)));
        return word_prefix(source, limit);
    }

    bool concurrent_generate_safe() const override { return false; } // call log is ordered

    void save_checkpoint(const ModelHandle& model, const std::filesystem::path& dir) const override {
        std::lock_guard lock(mutex_);
        const State& state = state_for(model.checkpoint_ref);
        std::filesystem::create_directories(dir);
        {
            std::ofstream manifest(dir / "manifest.json");
            manifest << model.to_json().dump(2) << '\n';
        }
        std::ofstream out(dir / "state.jsonl");
        for (std::size_t phase = 0; phase < state.phases.size(); ++phase) {
            const auto& table = state.phases[phase];
            std::vector<std::string> sources;
            sources.reserve(table.pairs.size());
            for (const auto& [src, _] : table.pairs) sources.push_back(src);
            std::sort(sources.begin(), sources.end());
            for (const auto& src : sources) {
                out << nlohmann::json{{"phase_index", phase}, {"phase", table.phase_name},
                                      {"source", src}, {"target", table.pairs.at(src)}}
                           .dump()
                    << '\n';
            }
        }
    }

    /// Restore a saved checkpoint into this backend under a fresh ref.
    ModelHandle load_checkpoint(const std::filesystem::path& dir) {
        std::lock_guard lock(mutex_);
        std::ifstream manifest_in(dir / "manifest.json");
        if (!manifest_in) throw std::runtime_error("no manifest.json in " + dir.string());
        nlohmann::json manifest = nlohmann::json::parse(manifest_in);

        State state;
        std::ifstream in(dir / "state.jsonl");
        if (!in) throw std::runtime_error("no state.jsonl in " + dir.string());
        std::string line;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line);
            const auto idx = j.at("phase_index").get<std::size_t>();
            if (state.phases.size() <= idx) state.phases.resize(idx + 1);
            state.phases[idx].phase_name = j.at("phase").get<std::string>();
            state.phases[idx].pairs[j.at("source").get<std::string>()] =
                j.at("target").get<std::string>();
        }

        ModelHandle handle;
        handle.stage = stage_from_name(manifest.at("stage").get<std::string>());
        handle.backend_id = id();
        handle.checkpoint_ref = "mock:ckpt:" + std::to_string(next_ref_++);
        for (const auto& p : manifest.at("lineage")) {
            handle.lineage.push_back({p.at("phase").get<std::string>(),
                                      p.at("config_digest").get<std::string>()});
        }
        states_.emplace(handle.checkpoint_ref, std::move(state));
        return handle;
    }

    std::vector<BackendCall> call_log() const {
        std::lock_guard lock(mutex_);
        return log_;
    }

    std::size_t finetune_calls() const { return count_op("finetune"); }
    std::size_t generate_calls() const { return count_op("generate"); }

    std::optional<std::string> call_log_digest() const override {
        std::lock_guard lock(mutex_);
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const auto& call : log_) {
            h = fnv1a64(call.op, h);
            h = fnv1a64("|", h);
            h = fnv1a64(call.detail, h);
            h = fnv1a64("|", h);
            h = fnv1a64(stage_name(call.stage), h);
            h = fnv1a64("\n", h);
        }
        return to_hex(h);
    }

private:
    struct PhaseTable {
        std::string phase_name;
        std::map<std::string, std::string> pairs;
    };
    struct State {
        std::vector<PhaseTable> phases;
    };

    static std::string pretrained_ref() { return "mock:ckpt:pretrained"; }

    const State& state_for(const std::string& ref) const {
        auto it = states_.find(ref);
        if (it == states_.end()) throw std::runtime_error("unresolvable checkpoint ref '" + ref + "'");
        return it->second;
    }

    std::size_t count_op(std::string_view op) const {
        std::lock_guard lock(mutex_);
        return static_cast<std::size_t>(
            std::count_if(log_.begin(), log_.end(), [&](const BackendCall& c) { return c.op == op; }));
    }

    mutable std::mutex mutex_;
    std::map<std::string, State> states_;
    std::vector<BackendCall> log_;
    std::size_t next_ref_ = 1;
};

} // namespace lot
