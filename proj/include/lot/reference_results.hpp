#pragma once

// Published full-scale reference results for this pipeline family on VAST
// (FLAN-T5-Large backbone, live web retrieval, macro-F1 x 100). Shipped as
// documentation only: desk-scale runs with the mock backend are not
// comparable, so nothing here is ever asserted by a test.

#include <array>
#include <string_view>

namespace lot::reference {

struct VariantReference {
    std::string_view variant;
    double macro_f1;
};

/// Ablation reference, in canonical row order.
inline constexpr std::array<VariantReference, 4> kAblation = {{
    {"baseline", 73.4},
    {"cot", 73.1},
    {"phase1-only", 74.2},
    {"lot", 79.2},
}};

struct MethodReference {
    std::string_view method;
    std::string_view model;
    double macro_f1;
};

/// Full-scale comparison on the VAST test set.
inline constexpr std::array<MethodReference, 9> kComparison = {{
    {"TGA-Net", "BERT", 66.5},
    {"BERT", "BERT", 68.4},
    {"BERT-GCN", "BERT", 69.2},
    {"CKE-Net", "BERT", 70.1},
    {"WS-BERT-Single", "BERT", 74.5},
    {"DQA", "GPT-3.5", 62.3},
    {"StSQA", "GPT-3.5", 68.9},
    {"baseline fine-tune", "FLAN-T5-Large", 73.6},
    {"full two-phase pipeline", "FLAN-T5-Large", 79.2},
}};

// Reported Phase-1 epoch behavior at full scale: prediction quality peaks
// near 2 Phase-1 epochs and declines as Phase-1 training continues.
inline constexpr int kBestPhase1Epochs = 2;

} // namespace lot::reference
