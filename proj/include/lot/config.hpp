#pragma once

// Flat key-value run configuration: dotted section keys, one `key = value`
// per line, `#` comment lines. Canonical serialization (sorted keys) backs
// the config digest embedded in every run manifest.

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "lot/backend.hpp"
#include "lot/corpus.hpp"
#include "lot/digest.hpp"
#include "lot/pipeline.hpp"
#include "lot/retrieval.hpp"
#include "lot/text.hpp"

namespace lot {

using FlatConfig = std::map<std::string, std::string>;

inline FlatConfig parse_flat_config(const std::string& content, const std::string& origin = "<config>") {
    FlatConfig cfg;
    std::istringstream in(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error(origin + ": line " + std::to_string(line_no) +
                                     ": expected 'key = value'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw std::runtime_error(origin + ": line " + std::to_string(line_no) + ": empty key");
        }
        cfg[key] = value;
    }
    return cfg;
}

inline FlatConfig read_flat_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_flat_config(buf.str(), path);
}

inline std::string canonical_config(const FlatConfig& cfg) {
    std::ostringstream os;
    for (const auto& [key, value] : cfg) os << key << " = " << value << '\n';
    return os.str();
}

// The documented schema. Unknown keys are rejected so typos fail loudly.
inline const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys = {
        "data.train", "data.dev", "data.test",
        "data.id_column", "data.document_column", "data.target_column", "data.label_column",
        "data.label_map",
        "backend.kind",
        "phase1.epochs", "phase1.learning_rate", "phase1.batch_size",
        "phase1.max_source_len", "phase1.max_target_len",
        "phase2.epochs", "phase2.learning_rate", "phase2.batch_size",
        "phase2.max_source_len", "phase2.max_target_len",
        "gen.decoding", "gen.max_new_tokens", "gen.parallelism",
        "search.top_k", "search.max_knowledge_len", "search.parallelism",
        "search.rate_per_sec", "search.retries", "search.backoff_ms",
        "search.query_suffix", "search.mock", "search.fixture", "search.cache",
        "templates.elicitation", "templates.fusion_with_knowledge", "templates.fusion_without_knowledge",
        "pipeline.variant", "pipeline.max_enhanced_len", "pipeline.include_dev",
        "run.id", "run.seed",
    };
    return keys;
}

struct RunConfig {
    // data
    std::string train_path;
    std::string dev_path;
    std::string test_path;
    DatasetColumns columns;
    LabelMap label_map = LabelMap::vast_default();

    // models
    std::string backend_kind = "mock";
    PipelineConfig pipeline;
    AblationVariant variant = AblationVariant::lot;

    // retrieval
    RetrievalConfig retrieval;
    bool mock_search = false;
    std::string search_fixture;
    std::string cache_path = "cache/knowledge.jsonl";

    // run identity
    std::string run_id = "run";
    std::uint64_t seed = 42;

    FlatConfig effective; // every key after defaults merge; the manifest snapshot

    std::string snapshot() const { return canonical_config(effective); }
    std::string digest() const { return hex_digest(snapshot()); }
};

namespace detail {

inline int to_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config key '" + key + "': expected integer, got '" + value + "'");
    }
}

inline double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config key '" + key + "': expected number, got '" + value + "'");
    }
}

inline bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw std::runtime_error("config key '" + key + "': expected boolean, got '" + value + "'");
}

inline GenConfig parse_gen(const std::string& decoding, int max_new_tokens) {
    GenConfig g;
    g.max_new_tokens = max_new_tokens;
    if (decoding == "greedy") {
        g.decoding = Decoding::greedy;
    } else if (starts_with(decoding, "beam:")) {
        g.decoding = Decoding::beam;
        g.beam_width = to_int("gen.decoding", decoding.substr(5));
    } else if (starts_with(decoding, "sample:")) {
        g.decoding = Decoding::sample;
        g.temperature = to_double("gen.decoding", decoding.substr(7));
    } else {
        throw std::runtime_error("config key 'gen.decoding': expected greedy, beam:<width>, or "
                                 "sample:<temperature>, got '" + decoding + "'");
    }
    return g;
}

} // namespace detail

inline FlatConfig default_config() {
    Templates t;
    return {
        {"data.train", ""}, {"data.dev", ""}, {"data.test", ""},
        {"data.id_column", "new_id"}, {"data.document_column", "post"},
        {"data.target_column", "new_topic"}, {"data.label_column", "label"},
        {"data.label_map", "0:negative,1:positive,2:neutral"},
        {"backend.kind", "mock"},
        {"phase1.epochs", "2"}, {"phase1.learning_rate", "0.0003"}, {"phase1.batch_size", "8"},
        {"phase1.max_source_len", "4096"}, {"phase1.max_target_len", "512"},
        {"phase2.epochs", "2"}, {"phase2.learning_rate", "0.0003"}, {"phase2.batch_size", "8"},
        {"phase2.max_source_len", "4096"}, {"phase2.max_target_len", "512"},
        {"gen.decoding", "greedy"}, {"gen.max_new_tokens", "256"}, {"gen.parallelism", "1"},
        {"search.top_k", "5"}, {"search.max_knowledge_len", "1000"}, {"search.parallelism", "4"},
        {"search.rate_per_sec", "0"}, {"search.retries", "3"}, {"search.backoff_ms", "100"},
        {"search.query_suffix", ""}, {"search.mock", "false"}, {"search.fixture", ""},
        {"search.cache", "cache/knowledge.jsonl"},
        {"templates.elicitation", t.elicitation},
        {"templates.fusion_with_knowledge", t.fusion_with_knowledge},
        {"templates.fusion_without_knowledge", t.fusion_without_knowledge},
        {"pipeline.variant", "lot"}, {"pipeline.max_enhanced_len", "0"},
        {"pipeline.include_dev", "false"},
        {"run.id", "run"}, {"run.seed", "42"},
    };
}

// Merge user keys over defaults, validate against the schema, and build the
// typed config. Phase seeds derive from the single root seed.
inline RunConfig build_run_config(const FlatConfig& user) {
    for (const auto& [key, _] : user) {
        if (!known_config_keys().count(key)) {
            throw std::runtime_error("unknown config key '" + key + "'");
        }
    }
    FlatConfig merged = default_config();
    for (const auto& [key, value] : user) merged[key] = value;

    RunConfig rc;
    rc.effective = merged;
    auto get = [&](const char* key) -> const std::string& { return merged.at(key); };

    rc.train_path = get("data.train");
    rc.dev_path = get("data.dev");
    rc.test_path = get("data.test");
    rc.columns.id = get("data.id_column");
    rc.columns.document = get("data.document_column");
    rc.columns.target = get("data.target_column");
    rc.columns.label = get("data.label_column");
    rc.label_map = LabelMap::parse(get("data.label_map"));

    rc.backend_kind = get("backend.kind");
    rc.variant = variant_from_name(get("pipeline.variant"));

    rc.seed = static_cast<std::uint64_t>(detail::to_int("run.seed", get("run.seed")));
    rc.run_id = get("run.id");
    if (rc.run_id.empty()) throw std::runtime_error("config key 'run.id' must not be empty");

    auto fill_phase = [&](const char* section, FinetuneConfig& cfg) {
        const std::string s(section);
        cfg.epochs = detail::to_int(s + ".epochs", merged.at(s + ".epochs"));
        cfg.learning_rate = detail::to_double(s + ".learning_rate", merged.at(s + ".learning_rate"));
        cfg.batch_size = detail::to_int(s + ".batch_size", merged.at(s + ".batch_size"));
        cfg.max_source_len = detail::to_int(s + ".max_source_len", merged.at(s + ".max_source_len"));
        cfg.max_target_len = detail::to_int(s + ".max_target_len", merged.at(s + ".max_target_len"));
        cfg.seed = derive_seed(rc.seed, s);
        cfg.validate();
    };
    fill_phase("phase1", rc.pipeline.phase1);
    fill_phase("phase2", rc.pipeline.phase2);

    rc.pipeline.gen = detail::parse_gen(get("gen.decoding"),
                                        detail::to_int("gen.max_new_tokens", get("gen.max_new_tokens")));
    rc.pipeline.gen.seed = derive_seed(rc.seed, "gen");
    rc.pipeline.gen_parallelism = detail::to_int("gen.parallelism", get("gen.parallelism"));
    rc.pipeline.max_enhanced_len = static_cast<std::size_t>(
        detail::to_int("pipeline.max_enhanced_len", get("pipeline.max_enhanced_len")));
    rc.pipeline.include_dev = detail::to_bool("pipeline.include_dev", get("pipeline.include_dev"));
    rc.pipeline.templates.elicitation = get("templates.elicitation");
    rc.pipeline.templates.fusion_with_knowledge = get("templates.fusion_with_knowledge");
    rc.pipeline.templates.fusion_without_knowledge = get("templates.fusion_without_knowledge");

    rc.retrieval.top_k = detail::to_int("search.top_k", get("search.top_k"));
    rc.retrieval.max_knowledge_len = static_cast<std::size_t>(
        detail::to_int("search.max_knowledge_len", get("search.max_knowledge_len")));
    rc.retrieval.parallelism = detail::to_int("search.parallelism", get("search.parallelism"));
    rc.retrieval.rate_per_sec = detail::to_double("search.rate_per_sec", get("search.rate_per_sec"));
    rc.retrieval.retries = detail::to_int("search.retries", get("search.retries"));
    rc.retrieval.backoff_ms = detail::to_int("search.backoff_ms", get("search.backoff_ms"));
    rc.retrieval.query_suffix = get("search.query_suffix");
    rc.mock_search = detail::to_bool("search.mock", get("search.mock"));
    rc.search_fixture = get("search.fixture");
    rc.cache_path = get("search.cache");
    if (rc.mock_search) rc.retrieval.clock = fixed_epoch_timestamp; // byte-stable replays

    if (rc.retrieval.top_k <= 0) throw std::runtime_error("config key 'search.top_k' must be positive");
    return rc;
}

} // namespace lot
