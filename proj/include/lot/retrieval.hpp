#pragma once

// External knowledge retrieval: pluggable search clients, per-target
// normalization, snippet concatenation, and a persistent line-delimited
// cache keyed by normalized target.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lot/text.hpp"

namespace lot {

struct KnowledgeDoc {
    std::string target_key;
    std::string text;                  // empty <=> explicit empty-result marker
    std::vector<std::string> sources;  // origin URLs, rank order
    std::string fetched_at;            // UTC timestamp, ISO-8601
    bool truncated = false;

    bool empty_marker() const { return text.empty(); }

    nlohmann::json to_json() const {
        return {{"target_key", target_key}, {"text", text}, {"sources", sources},
                {"fetched_at", fetched_at}, {"truncated", truncated}};
    }

    static KnowledgeDoc from_json(const nlohmann::json& j) {
        KnowledgeDoc doc;
        doc.target_key = j.at("target_key").get<std::string>();
        doc.text = j.at("text").get<std::string>();
        doc.sources = j.at("sources").get<std::vector<std::string>>();
        doc.fetched_at = j.at("fetched_at").get<std::string>();
        doc.truncated = j.at("truncated").get<bool>();
        return doc;
    }

    bool operator==(const KnowledgeDoc&) const = default;
};

/// lowercase, collapse internal whitespace, trim. Idempotent.
inline std::string normalize_target(std::string_view target) {
    std::string key = collapse_whitespace(to_lower(target));
    if (key.empty()) throw std::runtime_error("empty target");
    return key;
}

struct SearchHit {
    std::string title;
    std::string snippet;
    std::string url;
};

class SearchClient {
public:
    virtual ~SearchClient() = default;
    virtual std::vector<SearchHit> search(const std::string& query, int top_k) = 0;
};

// Fixture-backed client for tests and offline runs. The fixture file holds
// one record per line: {"query": ..., "results": [{title, snippet, url}]}.
// Queries absent from the table return zero hits.
class MockSearchClient : public SearchClient {
public:
    MockSearchClient() = default;

    explicit MockSearchClient(const std::string& fixture_path) {
        std::ifstream in(fixture_path);
        if (!in) throw std::runtime_error("cannot open search fixture: " + fixture_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const std::exception& e) {
                throw std::runtime_error(fixture_path + ": corrupt record at line " +
                                         std::to_string(line_no) + ": " + e.what());
            }
            std::vector<SearchHit> hits;
            for (const auto& r : j.at("results")) {
                hits.push_back({r.value("title", ""), r.at("snippet").get<std::string>(),
                                r.value("url", "")});
            }
            fixtures_[j.at("query").get<std::string>()] = std::move(hits);
        }
    }

    void add(const std::string& query, std::vector<SearchHit> hits) {
        fixtures_[query] = std::move(hits);
    }

    std::vector<SearchHit> search(const std::string& query, int top_k) override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        auto it = fixtures_.find(query);
        if (it == fixtures_.end()) return {};
        auto hits = it->second;
        if (static_cast<int>(hits.size()) > top_k) hits.resize(static_cast<std::size_t>(top_k));
        return hits;
    }

    std::size_t calls() const { return calls_.load(std::memory_order_relaxed); }
    void reset_calls() { calls_.store(0, std::memory_order_relaxed); }

private:
    std::map<std::string, std::vector<SearchHit>> fixtures_;
    std::atomic<std::size_t> calls_{0};
};

struct RetrievalConfig {
    int top_k = 5;
    std::size_t max_knowledge_len = 1000; // characters of concatenated snippet text
    int parallelism = 4;
    double rate_per_sec = 0.0; // 0 = unlimited
    int retries = 3;           // total attempts
    int backoff_ms = 100;      // base of exponential backoff between attempts
    std::string query_suffix;  // appended to the normalized target, space-separated
    std::function<std::string()> clock; // fetched_at source; default = UTC now
};

inline std::string utc_now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Fixed timestamp used by mock/replay paths so cache records and manifests
/// are byte-stable across executions.
inline std::string fixed_epoch_timestamp() { return "1970-01-01T00:00:00Z"; }

// One retrieval: single query per target, snippets concatenated in rank
// order separated by one space, markup stripped, cut at the last whitespace
// at or before the length budget. Zero hits yield the empty-result marker.
inline KnowledgeDoc retrieve_knowledge(const std::string& target, SearchClient& client,
                                       const RetrievalConfig& cfg) {
    KnowledgeDoc doc;
    doc.target_key = normalize_target(target);
    doc.fetched_at = cfg.clock ? cfg.clock() : utc_now_iso8601();

    std::string query = doc.target_key;
    if (!cfg.query_suffix.empty()) query += " " + cfg.query_suffix;

    std::vector<SearchHit> hits;
    const int attempts = std::max(1, cfg.retries);
    for (int attempt = 0;; ++attempt) {
        try {
            hits = client.search(query, cfg.top_k);
            break;
        } catch (const std::exception& e) {
            if (attempt + 1 >= attempts) {
                throw std::runtime_error("retrieval failed for target_key '" + doc.target_key +
                                         "' after " + std::to_string(attempts) + " attempts: " + e.what());
            }
            const auto delay = std::chrono::milliseconds(cfg.backoff_ms) * (1 << attempt);
            std::this_thread::sleep_for(delay);
        }
    }

    if (hits.empty()) return doc; // empty-result marker: text "", sources []

    std::string joined;
    for (const auto& hit : hits) {
        const std::string snippet = collapse_whitespace(strip_markup(hit.snippet));
        if (snippet.empty()) continue;
        if (!joined.empty()) joined.push_back(' ');
        joined += snippet;
        doc.sources.push_back(hit.url);
    }
    auto cut = cut_at_whitespace(joined, cfg.max_knowledge_len);
    doc.text = std::move(cut.text);
    doc.truncated = cut.truncated;
    return doc;
}

// Persistent cache: one KnowledgeDoc JSON record per line, append-on-put,
// last record per target_key wins on load.
class KnowledgeCache {
public:
    KnowledgeCache() = default;

    explicit KnowledgeCache(std::string path) : path_(std::move(path)) {
        if (path_.empty() || !std::filesystem::exists(path_)) return;
        std::ifstream in(path_);
        if (!in) throw std::runtime_error("cannot open cache file: " + path_);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            try {
                KnowledgeDoc doc = KnowledgeDoc::from_json(nlohmann::json::parse(line));
                docs_[doc.target_key] = std::move(doc);
            } catch (const std::exception& e) {
                throw std::runtime_error(path_ + ": corrupt cache record at line " +
                                         std::to_string(line_no) + ": " + e.what());
            }
        }
    }

    std::optional<KnowledgeDoc> get(const std::string& target_key) const {
        std::lock_guard lock(mutex_);
        auto it = docs_.find(target_key);
        if (it == docs_.end()) return std::nullopt;
        return it->second;
    }

    void put(const KnowledgeDoc& doc) {
        std::lock_guard lock(mutex_);
        docs_[doc.target_key] = doc;
        if (path_.empty()) return;
        const auto parent = std::filesystem::path(path_).parent_path();
        if (!parent.empty()) std::filesystem::create_directories(parent);
        std::ofstream out(path_, std::ios::app);
        if (!out) throw std::runtime_error("cannot write cache file: " + path_);
        out << doc.to_json().dump() << '\n';
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return docs_.size();
    }

    std::map<std::string, KnowledgeDoc> snapshot() const {
        std::lock_guard lock(mutex_);
        return docs_;
    }

private:
    std::string path_;
    mutable std::mutex mutex_;
    std::map<std::string, KnowledgeDoc> docs_;
};

struct WarmStats {
    std::size_t unique_targets = 0;
    std::size_t fetched = 0;
    std::size_t cache_hits = 0;
    std::size_t empty = 0; // empty-result markers among fetched
};

// Cache-through knowledge access. Guarantees at most one fetch per unique
// target_key: cache first, then a shared in-flight table so concurrent
// callers join the same fetch. Fetches respect the parallelism bound and a
// shared rate limiter.
class KnowledgeStore {
public:
    KnowledgeStore(std::shared_ptr<KnowledgeCache> cache, std::shared_ptr<SearchClient> client,
                   RetrievalConfig cfg)
        : cache_(std::move(cache)), client_(std::move(client)), cfg_(std::move(cfg)) {}

    const RetrievalConfig& config() const { return cfg_; }

    /// Knowledge for one target, fetching on miss.
    KnowledgeDoc ensure(const std::string& target) {
        const std::string key = normalize_target(target);
        if (auto hit = cache_->get(key)) return *hit;

        std::shared_future<KnowledgeDoc> future;
        bool owner = false;
        {
            std::lock_guard lock(inflight_mutex_);
            auto it = inflight_.find(key);
            if (it != inflight_.end()) {
                future = it->second;
            } else {
                std::promise<KnowledgeDoc> promise;
                future = promise.get_future().share();
                inflight_.emplace(key, future);
                owner = true;
                promises_.emplace(key, std::move(promise));
            }
        }
        if (!owner) return future.get();

        try {
            rate_limit();
            KnowledgeDoc doc = retrieve_knowledge(key, *client_, cfg_);
            cache_->put(doc);
            settle(key, doc, nullptr);
            return doc;
        } catch (...) {
            settle(key, {}, std::current_exception());
            throw;
        }
    }

    std::optional<KnowledgeDoc> get(const std::string& target) const {
        return cache_->get(normalize_target(target));
    }

    /// Warm the cache for every unique normalized target in `targets`.
    WarmStats warm(const std::vector<std::string>& targets) {
        std::set<std::string> keys;
        for (const auto& t : targets) keys.insert(normalize_target(t));

        WarmStats stats;
        stats.unique_targets = keys.size();

        std::vector<std::string> misses;
        for (const auto& key : keys) {
            if (cache_->get(key)) {
                ++stats.cache_hits;
            } else {
                misses.push_back(key);
            }
        }
        if (misses.empty()) return stats;
        if (!client_) throw std::runtime_error("no search client configured and cache misses exist");

        const std::size_t workers =
            std::min<std::size_t>(std::max(1, cfg_.parallelism), misses.size());
        std::atomic<std::size_t> next{0};
        std::atomic<std::size_t> empty_count{0};
        std::mutex error_mutex;
        std::exception_ptr first_error;

        auto work = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= misses.size()) return;
                try {
                    KnowledgeDoc doc = ensure(misses[i]);
                    if (doc.empty_marker()) empty_count.fetch_add(1);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
        work();
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);

        stats.fetched = misses.size();
        stats.empty = empty_count.load();
        return stats;
    }

private:
    void rate_limit() {
        if (cfg_.rate_per_sec <= 0.0) return;
        const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(1.0 / cfg_.rate_per_sec));
        std::unique_lock lock(rate_mutex_);
        const auto now = std::chrono::steady_clock::now();
        if (next_slot_ < now) next_slot_ = now;
        const auto my_slot = next_slot_;
        next_slot_ += interval;
        lock.unlock();
        std::this_thread::sleep_until(my_slot);
    }

    void settle(const std::string& key, const KnowledgeDoc& doc, std::exception_ptr error) {
        std::promise<KnowledgeDoc> promise;
        {
            std::lock_guard lock(inflight_mutex_);
            auto it = promises_.find(key);
            promise = std::move(it->second);
            promises_.erase(it);
            inflight_.erase(key);
        }
        if (error) {
            promise.set_exception(error);
        } else {
            promise.set_value(doc);
        }
    }

    std::shared_ptr<KnowledgeCache> cache_;
    std::shared_ptr<SearchClient> client_;
    RetrievalConfig cfg_;

    std::mutex inflight_mutex_;
    std::map<std::string, std::shared_future<KnowledgeDoc>> inflight_;
    std::map<std::string, std::promise<KnowledgeDoc>> promises_;

    std::mutex rate_mutex_;
    std::chrono::steady_clock::time_point next_slot_{};
};

} // namespace lot
