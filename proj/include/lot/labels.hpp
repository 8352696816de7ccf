#pragma once

// Stance labels, their verbalizers, and the configurable mapping from
// dataset label codes to labels.

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "lot/text.hpp"

namespace lot {

enum class StanceLabel { positive = 0, negative = 1, neutral = 2 };

inline constexpr std::array<StanceLabel, 3> kAllLabels = {
    StanceLabel::positive, StanceLabel::negative, StanceLabel::neutral};

inline constexpr int label_index(StanceLabel l) { return static_cast<int>(l); }

inline StanceLabel label_from_index(int idx) {
    if (idx < 0 || idx > 2) throw std::invalid_argument("label index out of range: " + std::to_string(idx));
    return static_cast<StanceLabel>(idx);
}

/// The surface string the predictor is trained to emit for each label.
inline const std::string& encode_label(StanceLabel l) {
    static const std::array<std::string, 3> verbalizers = {"positive", "negative", "neutral"};
    return verbalizers[static_cast<std::size_t>(l)];
}

inline std::optional<StanceLabel> label_from_name(std::string_view name) {
    for (StanceLabel l : kAllLabels) {
        if (encode_label(l) == name) return l;
    }
    return std::nullopt;
}

// Decode generated text into a label: lowercase + trim, exact verbalizer
// match, else unique-substring match, else Invalid (nullopt). Invalid is a
// value, not an error.
inline std::optional<StanceLabel> decode_label(std::string_view generated) {
    const std::string norm = to_lower(trim(generated));
    if (auto exact = label_from_name(norm)) return exact;
    std::optional<StanceLabel> found;
    for (StanceLabel l : kAllLabels) {
        if (norm.find(encode_label(l)) == std::string::npos) continue;
        if (found) return std::nullopt; // two verbalizers present: ambiguous
        found = l;
    }
    return found;
}

/// Dataset label-code map (e.g. VAST's {0:con, 1:pro, 2:neutral}). The
/// default is configurable because distributions disagree on integer codes.
class LabelMap {
public:
    LabelMap() = default;

    explicit LabelMap(std::map<std::string, StanceLabel> codes) : codes_(std::move(codes)) {}

    // Spec string shape: "0:negative,1:positive,2:neutral". Accepts the
    // dataset's native pro/con vocabulary as aliases.
    static LabelMap parse(std::string_view spec) {
        std::map<std::string, StanceLabel> codes;
        std::size_t start = 0;
        while (start <= spec.size()) {
            std::size_t comma = spec.find(',', start);
            std::string_view entry = spec.substr(start, comma == std::string_view::npos ? spec.npos : comma - start);
            if (!trim(entry).empty()) {
                std::size_t colon = entry.find(':');
                if (colon == std::string_view::npos) {
                    throw std::runtime_error("bad label-map entry '" + std::string(entry) + "' (expected code:label)");
                }
                std::string code = trim(entry.substr(0, colon));
                std::string name = to_lower(trim(entry.substr(colon + 1)));
                if (name == "pro") name = "positive";
                if (name == "con") name = "negative";
                auto label = label_from_name(name);
                if (!label) {
                    throw std::runtime_error("bad label name '" + name + "' in label map (expected positive/negative/neutral or pro/con)");
                }
                if (!codes.emplace(code, *label).second) {
                    throw std::runtime_error("duplicate label code '" + code + "' in label map");
                }
            }
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (codes.empty()) throw std::runtime_error("empty label map");
        return LabelMap(std::move(codes));
    }

    /// Official VAST distribution codes: 0 = con, 1 = pro, 2 = neutral.
    static LabelMap vast_default() {
        return parse("0:negative,1:positive,2:neutral");
    }

    std::optional<StanceLabel> decode_code(std::string_view code) const {
        auto it = codes_.find(trim(code));
        if (it == codes_.end()) return std::nullopt;
        return it->second;
    }

    const std::map<std::string, StanceLabel>& codes() const { return codes_; }

private:
    std::map<std::string, StanceLabel> codes_;
};

} // namespace lot
