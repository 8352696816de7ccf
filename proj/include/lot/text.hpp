#pragma once

// Small string helpers shared across the toolkit. Everything operates on
// UTF-8 bytes; "whitespace" means the ASCII kind reported by std::isspace.

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace lot {

inline bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return out;
}

/// Trim plus collapse of internal whitespace runs to single spaces.
inline std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_run = false;
    for (char c : s) {
        if (is_space(c)) {
            in_run = true;
            continue;
        }
        if (in_run && !out.empty()) out.push_back(' ');
        in_run = false;
        out.push_back(c);
    }
    return out;
}

inline std::vector<std::string> split_words(std::string_view s) {
    std::vector<std::string> words;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        std::size_t start = i;
        while (i < s.size() && !is_space(s[i])) ++i;
        if (i > start) words.emplace_back(s.substr(start, i - start));
    }
    return words;
}

inline std::size_t count_words(std::string_view s) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : s) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

inline std::string join_words(const std::vector<std::string>& words, std::size_t limit) {
    std::string out;
    for (std::size_t i = 0; i < words.size() && i < limit; ++i) {
        if (!out.empty()) out.push_back(' ');
        out += words[i];
    }
    return out;
}

/// First `limit` whitespace-delimited words of `s`, joined by single spaces.
inline std::string word_prefix(std::string_view s, std::size_t limit) {
    return join_words(split_words(s), limit);
}

struct CutResult {
    std::string text;
    bool truncated = false;
};

// Cut `s` so the result is at most `limit` characters, preferring the last
// whitespace at or before the limit as the cut point; falls back to a hard
// cut when the prefix contains no whitespace. Result is right-trimmed.
inline CutResult cut_at_whitespace(std::string_view s, std::size_t limit) {
    if (s.size() <= limit) return {std::string(s), false};
    std::size_t cut = std::string_view::npos;
    for (std::size_t i = 0; i <= limit && i < s.size(); ++i) {
        if (is_space(s[i])) cut = i;
    }
    std::string head(s.substr(0, cut == std::string_view::npos ? limit : cut));
    while (!head.empty() && is_space(head.back())) head.pop_back();
    return {head, true};
}

/// Remove SGML-style tags and decode the handful of entities search snippets
/// actually carry (&amp; &lt; &gt; &quot; &#39; &nbsp;).
inline std::string strip_markup(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        if (s[i] == '<') {
            std::size_t close = s.find('>', i);
            if (close == std::string_view::npos) break;
            i = close + 1;
            continue;
        }
        if (s[i] == '&') {
            static const std::pair<std::string_view, char> entities[] = {
                {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'},
                {"&quot;", '"'}, {"&#39;", '\''}, {"&nbsp;", ' '},
            };
            bool matched = false;
            for (const auto& [name, repl] : entities) {
                if (s.substr(i, name.size()) == name) {
                    out.push_back(repl);
                    i += name.size();
                    matched = true;
                    break;
                }
            }
            if (matched) continue;
        }
        out.push_back(s[i]);
        ++i;
    }
    return out;
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

/// Number of non-overlapping occurrences of `needle` in `hay`.
inline std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
    if (needle.empty()) return 0;
    std::size_t n = 0;
    std::size_t pos = 0;
    while ((pos = hay.find(needle, pos)) != std::string_view::npos) {
        ++n;
        pos += needle.size();
    }
    return n;
}

} // namespace lot
