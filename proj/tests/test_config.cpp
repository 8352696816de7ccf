#include <catch2/catch_amalgamated.hpp>

#include "lot/config.hpp"
#include "support/tmpdir.hpp"

using namespace lot;
using lot_test::TempDir;

TEST_CASE("flat config parses dotted keys, comments, and blank lines") {
    auto cfg = parse_flat_config("# comment\n\nrun.seed = 7\nrun.id = demo\n"
                                 "templates.elicitation = a {target} = {document}\n");
    CHECK(cfg.at("run.seed") == "7");
    CHECK(cfg.at("run.id") == "demo");
    // Values keep everything after the first '='.
    CHECK(cfg.at("templates.elicitation") == "a {target} = {document}");
}

TEST_CASE("flat config rejects malformed lines") {
    CHECK_THROWS_WITH(parse_flat_config("just some words\n"),
                      Catch::Matchers::ContainsSubstring("line 1"));
    CHECK_THROWS_WITH(parse_flat_config("= value\n"),
                      Catch::Matchers::ContainsSubstring("empty key"));
}

TEST_CASE("canonical serialization sorts keys and digests stably") {
    auto a = parse_flat_config("b.k = 2\na.k = 1\n");
    auto b = parse_flat_config("a.k = 1\nb.k = 2\n");
    CHECK(canonical_config(a) == canonical_config(b));
    CHECK(canonical_config(a) == "a.k = 1\nb.k = 2\n");
    CHECK(hex_digest(canonical_config(a)) == hex_digest(canonical_config(b)));
}

TEST_CASE("unknown keys are rejected by name") {
    FlatConfig user = {{"serach.top_k", "3"}};
    CHECK_THROWS_WITH(build_run_config(user),
                      Catch::Matchers::ContainsSubstring("serach.top_k"));
}

TEST_CASE("defaults fill every schema key and user values override") {
    FlatConfig user = {{"run.seed", "99"}, {"search.top_k", "2"}};
    auto rc = build_run_config(user);
    CHECK(rc.seed == 99);
    CHECK(rc.retrieval.top_k == 2);
    CHECK(rc.backend_kind == "mock");
    CHECK(rc.variant == AblationVariant::lot);
    CHECK(rc.effective.size() == known_config_keys().size());
    for (const auto& key : known_config_keys()) CHECK(rc.effective.count(key) == 1);
}

TEST_CASE("phase seeds derive deterministically from the root seed") {
    auto a = build_run_config({{"run.seed", "5"}});
    auto b = build_run_config({{"run.seed", "5"}});
    auto c = build_run_config({{"run.seed", "6"}});
    CHECK(a.pipeline.phase1.seed == b.pipeline.phase1.seed);
    CHECK(a.pipeline.phase2.seed == b.pipeline.phase2.seed);
    CHECK(a.pipeline.phase1.seed != a.pipeline.phase2.seed);
    CHECK(a.pipeline.phase1.seed != c.pipeline.phase1.seed);
}

TEST_CASE("config snapshot digest is stable across instances") {
    FlatConfig user = {{"run.id", "x"}, {"pipeline.variant", "cot"}};
    auto a = build_run_config(user);
    auto b = build_run_config(user);
    CHECK(a.snapshot() == b.snapshot());
    CHECK(a.digest() == b.digest());
}

TEST_CASE("decoding strings parse into structured gen configs") {
    auto greedy = build_run_config({{"gen.decoding", "greedy"}});
    CHECK(greedy.pipeline.gen.decoding == Decoding::greedy);

    auto beam = build_run_config({{"gen.decoding", "beam:6"}});
    CHECK(beam.pipeline.gen.decoding == Decoding::beam);
    CHECK(beam.pipeline.gen.beam_width == 6);

    auto sample = build_run_config({{"gen.decoding", "sample:0.7"}});
    CHECK(sample.pipeline.gen.decoding == Decoding::sample);
    CHECK(sample.pipeline.gen.temperature == 0.7);

    CHECK_THROWS(build_run_config({{"gen.decoding", "magic"}}));
}

TEST_CASE("type errors name the key") {
    CHECK_THROWS_WITH(build_run_config({{"phase1.epochs", "two"}}),
                      Catch::Matchers::ContainsSubstring("phase1.epochs"));
    CHECK_THROWS_WITH(build_run_config({{"pipeline.include_dev", "maybe"}}),
                      Catch::Matchers::ContainsSubstring("pipeline.include_dev"));
    CHECK_THROWS_WITH(build_run_config({{"phase2.epochs", "0"}}),
                      Catch::Matchers::ContainsSubstring("positive"));
}

TEST_CASE("templates flow from config into the pipeline") {
    FlatConfig user = {{"templates.fusion_without_knowledge", "T={target} D={document}"}};
    auto rc = build_run_config(user);
    CHECK(rc.pipeline.templates.fusion_without_knowledge == "T={target} D={document}");
    auto enhanced = integrate_inputs("docx", nullptr, "tgx", rc.pipeline.templates, 0, "i");
    CHECK(enhanced.text == "T=tgx D=docx");
}

TEST_CASE("config files round-trip through the reader") {
    TempDir tmp;
    auto path = tmp.write("t.conf", "run.id = from-file\nrun.seed = 3\n");
    auto cfg = read_flat_config(path.string());
    CHECK(cfg.at("run.id") == "from-file");
    auto rc = build_run_config(cfg);
    CHECK(rc.run_id == "from-file");
    CHECK(rc.seed == 3);
}

TEST_CASE("mock search pins the knowledge clock") {
    auto rc = build_run_config({{"search.mock", "true"}, {"search.fixture", "f.jsonl"}});
    REQUIRE(rc.retrieval.clock);
    CHECK(rc.retrieval.clock() == "1970-01-01T00:00:00Z");

    auto live = build_run_config({});
    CHECK_FALSE(live.retrieval.clock); // live runs stamp real time
}
