#pragma once

// Live web search client backed by the Google Custom Search JSON API.
// Credentials come from the environment (LOT_SEARCH_API_KEY and
// LOT_SEARCH_CX). Compiled into the CLI only; library code and tests use
// the fixture-backed mock client.

#include <cstdlib>
#include <memory>
#include <stdexcept>
#include <string>

#include "lot/retrieval.hpp"

#ifdef LOT_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>
#endif

namespace lot {

inline constexpr const char* kSearchApiKeyEnv = "LOT_SEARCH_API_KEY";
inline constexpr const char* kSearchCxEnv = "LOT_SEARCH_CX";

#ifdef LOT_HAVE_OPENSSL

class WebSearchClient : public SearchClient {
public:
    WebSearchClient(std::string api_key, std::string cx)
        : api_key_(std::move(api_key)), cx_(std::move(cx)) {}

    std::vector<SearchHit> search(const std::string& query, int top_k) override {
        httplib::SSLClient http("www.googleapis.com");
        http.set_connection_timeout(10);
        http.set_read_timeout(30);

        httplib::Params params{{"key", api_key_},
                               {"cx", cx_},
                               {"q", query},
                               {"num", std::to_string(std::min(top_k, 10))}};
        auto res = http.Get("/customsearch/v1", params, httplib::Headers{});
        if (!res) throw std::runtime_error("search request failed: " + httplib::to_string(res.error()));
        if (res->status != 200) {
            throw std::runtime_error("search request returned HTTP " + std::to_string(res->status));
        }

        std::vector<SearchHit> hits;
        const auto body = nlohmann::json::parse(res->body);
        if (!body.contains("items")) return hits;
        for (const auto& item : body["items"]) {
            hits.push_back({item.value("title", ""), item.value("snippet", ""),
                            item.value("link", "")});
            if (static_cast<int>(hits.size()) >= top_k) break;
        }
        return hits;
    }

private:
    std::string api_key_;
    std::string cx_;
};

inline std::shared_ptr<SearchClient> make_live_search_client() {
    const char* key = std::getenv(kSearchApiKeyEnv);
    const char* cx = std::getenv(kSearchCxEnv);
    if (!key || !cx || !*key || !*cx) return nullptr;
    return std::make_shared<WebSearchClient>(key, cx);
}

#else

inline std::shared_ptr<SearchClient> make_live_search_client() {
    const char* key = std::getenv(kSearchApiKeyEnv);
    if (key && *key) {
        throw std::runtime_error("live search requested but this binary was built without TLS support");
    }
    return nullptr;
}

#endif

} // namespace lot
