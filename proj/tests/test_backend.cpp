#include <catch2/catch_amalgamated.hpp>

#include "lot/backend.hpp"
#include "support/tmpdir.hpp"

using namespace lot;
using lot_test::TempDir;

namespace {

FinetuneConfig small_config(int epochs = 2) {
    FinetuneConfig cfg;
    cfg.epochs = epochs;
    cfg.seed = 7;
    return cfg;
}

} // namespace

TEST_CASE("finetune extends lineage and advances the stage") {
    MockBackend backend;
    auto m0 = backend.pretrained();
    CHECK(m0.stage == Stage::M0);
    CHECK(m0.lineage.empty());

    auto r1 = backend.finetune(m0, {{"s", "t"}}, small_config(), "phase1");
    CHECK(r1.model.stage == Stage::M1);
    REQUIRE(r1.model.lineage.size() == 1);
    CHECK(r1.model.lineage[0].phase_name == "phase1");
    CHECK(r1.model.lineage[0].config_digest == small_config().digest());

    auto r2 = backend.finetune(r1.model, {{"s2", "t2"}}, small_config(), "phase2");
    CHECK(r2.model.stage == Stage::M2);
    REQUIRE(r2.model.lineage.size() == 2);
    CHECK(r2.model.lineage[1].phase_name == "phase2");

    SECTION("input handles are never mutated") {
        CHECK(m0.lineage.empty());
        CHECK(r1.model.lineage.size() == 1);
    }
    SECTION("stage M2 admits no further fine-tuning") {
        CHECK_THROWS_WITH(backend.finetune(r2.model, {{"s3", "t3"}}, small_config(), "phase3"),
                          Catch::Matchers::ContainsSubstring("pipeline exhausted"));
    }
}

TEST_CASE("finetune rejects empty pairs") {
    MockBackend backend;
    CHECK_THROWS_WITH(backend.finetune(backend.pretrained(), {}, small_config(), "phase1"),
                      Catch::Matchers::ContainsSubstring("empty training pairs"));
}

TEST_CASE("finetune enforces configured token budgets") {
    MockBackend backend;
    auto cfg = small_config();
    cfg.max_source_len = 3;
    CHECK_THROWS_WITH(backend.finetune(backend.pretrained(), {{"one two three four", "t"}}, cfg, "p"),
                      Catch::Matchers::ContainsSubstring("max_source_len"));
}

TEST_CASE("per-epoch loss reporting follows the 1/epoch model") {
    MockBackend backend;
    auto result = backend.finetune(backend.pretrained(), {{"s", "t"}}, small_config(4), "phase1");
    REQUIRE(result.epoch_losses.size() == 4);
    CHECK(result.epoch_losses[0] == 1.0);
    CHECK(result.epoch_losses[1] == 0.5);
    CHECK(result.epoch_losses[3] == 0.25);
    for (std::size_t i = 1; i < result.epoch_losses.size(); ++i) {
        CHECK(result.epoch_losses[i] < result.epoch_losses[i - 1]);
    }
}

TEST_CASE("generate answers exact-match lookups and later phases shadow earlier") {
    MockBackend backend;
    GenConfig gcfg;
    auto m1 = backend.finetune(backend.pretrained(), {{"question", "first answer"}},
                               small_config(), "phase1").model;
    CHECK(backend.generate(m1, "question", gcfg) == "first answer");

    auto m2 = backend.finetune(m1, {{"question", "second answer"}}, small_config(), "phase2").model;
    CHECK(backend.generate(m2, "question", gcfg) == "second answer");
    // Earlier checkpoints stay intact: checkpoints are immutable.
    CHECK(backend.generate(m1, "question", gcfg) == "first answer");
}

TEST_CASE("unknown sources fall back to a source-prefix echo") {
    MockBackend backend;
    GenConfig gcfg;
    auto m0 = backend.pretrained();
    const std::string source = "w1 w2 w3 w4 w5 w6 w7 w8 w9 w10 w11 w12 w13 w14 w15 w16 w17 w18";
    CHECK(backend.generate(m0, source, gcfg) ==
          "w1 w2 w3 w4 w5 w6 w7 w8 w9 w10 w11 w12 w13 w14 w15 w16");

    gcfg.max_new_tokens = 2;
    CHECK(backend.generate(m0, source, gcfg) == "w1 w2");
}

TEST_CASE("generate output respects max_new_tokens in token units") {
    MockBackend backend;
    GenConfig gcfg;
    gcfg.max_new_tokens = 3;
    auto m1 = backend.finetune(backend.pretrained(), {{"s", "alpha beta gamma delta"}},
                               small_config(), "phase1").model;
    CHECK(backend.generate(m1, "s", gcfg) == "alpha beta gamma");
}

TEST_CASE("deterministic decoding is a pure function of checkpoint and source") {
    MockBackend backend;
    GenConfig gcfg;
    auto m1 = backend.finetune(backend.pretrained(), {{"a", "b"}}, small_config(), "phase1").model;
    CHECK(backend.generate(m1, "a", gcfg) == backend.generate(m1, "a", gcfg));
    CHECK(backend.generate(m1, "unseen source", gcfg) == backend.generate(m1, "unseen source", gcfg));
}

TEST_CASE("call log records ordered finetune and generate entries") {
    MockBackend backend;
    GenConfig gcfg;
    auto m0 = backend.pretrained();
    auto m1 = backend.finetune(m0, {{"a", "b"}}, small_config(), "phase1").model;
    backend.generate(m1, "a", gcfg);
    backend.generate(m0, "x", gcfg);

    auto log = backend.call_log();
    REQUIRE(log.size() == 3);
    CHECK(log[0].op == "finetune");
    CHECK(log[0].detail == "phase1");
    CHECK(log[0].stage == Stage::M0);
    CHECK(log[1].op == "generate");
    CHECK(log[1].detail == "a");
    CHECK(log[1].stage == Stage::M1);
    CHECK(log[2].stage == Stage::M0);
    CHECK(backend.finetune_calls() == 1);
    CHECK(backend.generate_calls() == 2);

    auto digest = backend.call_log_digest();
    REQUIRE(digest.has_value());
    backend.generate(m1, "a", gcfg);
    CHECK(backend.call_log_digest() != digest); // digest tracks the log
}

TEST_CASE("unresolvable checkpoint refs error") {
    MockBackend backend;
    ModelHandle bogus;
    bogus.backend_id = "mock";
    bogus.checkpoint_ref = "mock:ckpt:999";
    CHECK_THROWS_WITH(backend.generate(bogus, "x", GenConfig{}),
                      Catch::Matchers::ContainsSubstring("unresolvable checkpoint"));
}

TEST_CASE("config digests are stable and order-insensitive") {
    FinetuneConfig a = small_config();
    FinetuneConfig b = small_config();
    CHECK(a.digest() == b.digest());
    b.epochs = 3;
    CHECK(a.digest() != b.digest());

    GenConfig g1;
    GenConfig g2;
    CHECK(g1.digest() == g2.digest());
    g2.max_new_tokens = 128;
    CHECK(g1.digest() != g2.digest());
}

TEST_CASE("checkpoints round-trip through save and load") {
    TempDir tmp;
    MockBackend backend;
    auto m1 = backend.finetune(backend.pretrained(),
                               {{"q1", "a1"}, {"q2", "a2 with words"}}, small_config(), "phase1").model;
    backend.save_checkpoint(m1, tmp.path() / "M1");

    MockBackend fresh;
    auto restored = fresh.load_checkpoint(tmp.path() / "M1");
    CHECK(restored.stage == Stage::M1);
    REQUIRE(restored.lineage.size() == 1);
    CHECK(restored.lineage[0].phase_name == "phase1");
    GenConfig gcfg;
    CHECK(fresh.generate(restored, "q1", gcfg) == "a1");
    CHECK(fresh.generate(restored, "q2", gcfg) == "a2 with words");
}
