#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "tripalign/registry.hpp"

using namespace tripalign;

TEST_CASE("concept set from file assigns ids in file order") {
    const auto dir = testutil::scratch_dir("concepts");
    testutil::write_file(dir / "c.txt", "lion\nbanjo\ncar\n");
    const ConceptSet set = load_concept_set((dir / "c.txt").string());
    CHECK(set.size() == 3);
    CHECK(set.name(0) == "lion");
    CHECK(set.name(1) == "banjo");
    CHECK(set.name(2) == "car");
    CHECK(set.id_of("lion") == 0);
    CHECK(!set.id_of("zebra").has_value());
}

TEST_CASE("concept names are lowercased and trimmed, inner spaces kept") {
    const auto dir = testutil::scratch_dir("concepts");
    testutil::write_file(dir / "c.txt", "  Lion \nFrying Pan\ncar\n");
    const ConceptSet set = load_concept_set((dir / "c.txt").string());
    CHECK(set.name(0) == "lion");
    CHECK(set.name(1) == "frying pan");
}

TEST_CASE("concept set validation failures") {
    const auto dir = testutil::scratch_dir("concepts");
    testutil::write_file(dir / "empty.txt", "");
    CHECK_CATEGORY(load_concept_set((dir / "empty.txt").string()), "EmptyConceptSet");
    testutil::write_file(dir / "dup.txt", "lion\nlion\ncar\n");
    CHECK_CATEGORY(load_concept_set((dir / "dup.txt").string()), "DuplicateName");
    testutil::write_file(dir / "two.txt", "lion\ncar\n");
    CHECK_CATEGORY(load_concept_set((dir / "two.txt").string()), "ConceptSetTooSmall");
    CHECK_CATEGORY(load_concept_set((dir / "missing.txt").string()), "FileNotFound");
    CHECK_CATEGORY(ConceptSet({"a", "", "c"}, "t"), "EmptyName");
}

TEST_CASE("concept set round-trips through save/load") {
    const auto dir = testutil::scratch_dir("concepts");
    const ConceptSet set({"lion", "frying pan", "car", "owl"}, "fixture");
    save_concept_set(set, (dir / "round.txt").string());
    const ConceptSet back = load_concept_set((dir / "round.txt").string());
    REQUIRE(back.size() == set.size());
    for (int i = 0; i < set.size(); ++i) CHECK(back.name(i) == set.name(i));
}

TEST_CASE("stage labels parse both spellings") {
    CHECK(stage_from_string("base-stage1") == Stage::BaseStage1);
    CHECK(stage_from_string("Base Stage 1") == Stage::BaseStage1);
    CHECK(stage_from_string("base") == Stage::Base);
    CHECK(stage_from_string("SFT") == Stage::Sft);
    CHECK(stage_from_string("dpo") == Stage::Dpo);
    CHECK(stage_from_string("RLVR") == Stage::Rlvr);
    CHECK(stage_from_string("instruct") == Stage::Instruct);
    CHECK_CATEGORY(stage_from_string("pretraining"), "UnknownStage");
    CHECK(to_string(Stage::BaseStage1) == "base-stage1");
}

namespace {

std::string ingredient_csv() {
    return "model_id,family,instruction_tuned,param_count,training_tokens,post_training_stage\n"
           "m1,alpha,true,7000000000,2000000000000,base\n"
           "m2,alpha,false,13000000000,,sft\n"
           "m3,beta,true,70000000000,15000000000000,dpo\n";
}

}  // namespace

TEST_CASE("ingredient table joins alignments and counts dropped models") {
    const auto dir = testutil::scratch_dir("ingredients");
    testutil::write_file(dir / "t.csv", ingredient_csv());
    const std::map<std::string, double> alignments = {{"m1", 0.3}, {"m3", 0.5}};
    const IngredientTable table = load_ingredient_table((dir / "t.csv").string(), alignments);
    CHECK(table.rows.size() == 2);
    CHECK(table.dropped_without_alignment == 1);
    CHECK(table.rows[0].card.model_id == "m1");
    CHECK(table.rows[0].alignment_r2 == doctest::Approx(0.3));
    CHECK(table.rows[1].card.model_id == "m3");
}

TEST_CASE("missing numeric cells stay absent, never zero") {
    const auto dir = testutil::scratch_dir("ingredients");
    testutil::write_file(dir / "t.csv", ingredient_csv());
    const std::map<std::string, double> alignments = {{"m1", 0.3}, {"m2", 0.4}, {"m3", 0.5}};
    const IngredientTable table = load_ingredient_table((dir / "t.csv").string(), alignments);
    REQUIRE(table.rows.size() == 3);
    CHECK(!table.rows[1].card.training_tokens.has_value());
    CHECK(table.rows[0].card.training_tokens == doctest::Approx(2e12));
    CHECK(table.rows[0].card.instruction_tuned == true);
    CHECK(table.rows[1].card.instruction_tuned == false);
}

TEST_CASE("ingredient table rejects bad input") {
    const auto dir = testutil::scratch_dir("ingredients");
    testutil::write_file(dir / "unknown.csv", "model_id,family,favorite_color\nm1,alpha,red\n");
    CHECK_CATEGORY(load_ingredient_table((dir / "unknown.csv").string(), {}), "UnknownColumn");
    testutil::write_file(dir / "neg.csv", "model_id,family,param_count\nm1,alpha,-5\n");
    CHECK_CATEGORY(load_ingredient_table((dir / "neg.csv").string(), {{"m1", 0.1}}), "NegativeCount");
    testutil::write_file(dir / "nan.csv", "model_id,family,param_count\nm1,alpha,seven\n");
    CHECK_CATEGORY(load_ingredient_table((dir / "nan.csv").string(), {{"m1", 0.1}}),
                   "NonNumericField");
    testutil::write_file(dir / "dup.csv", "model_id,family\nm1,alpha\nm1,alpha\n");
    CHECK_CATEGORY(load_ingredient_table((dir / "dup.csv").string(), {{"m1", 0.1}}),
                   "DuplicateModel");
}

TEST_CASE("model card predictor accessor") {
    ModelCard card;
    card.instruction_tuned = true;
    card.param_count = 7e9;
    CHECK(card.predictor("instruction_tuned") == doctest::Approx(1.0));
    CHECK(card.predictor("param_count") == doctest::Approx(7e9));
    CHECK(!card.predictor("multimodal").has_value());
    CHECK(!card.predictor("vocab_size").has_value());
    CHECK_CATEGORY(card.predictor("activation_fn"), "UnknownColumn");
}

TEST_CASE("benchmark scores load and attach by model id") {
    const auto dir = testutil::scratch_dir("bench");
    testutil::write_file(dir / "t.csv", ingredient_csv());
    testutil::write_file(dir / "b.csv",
                         "model_id,benchmark,score\nm1,bbh,0.61\nm1,mmlu,0.70\nm3,bbh,0.72\n");
    IngredientTable table = load_ingredient_table(
        (dir / "t.csv").string(), {{"m1", 0.3}, {"m2", 0.4}, {"m3", 0.5}});
    attach_benchmarks(table, load_benchmark_scores((dir / "b.csv").string()));
    CHECK(table.rows[0].benchmarks.at("bbh") == doctest::Approx(0.61));
    CHECK(table.rows[0].benchmarks.size() == 2);
    CHECK(table.rows[1].benchmarks.empty());
    CHECK(table.rows[2].benchmarks.at("bbh") == doctest::Approx(0.72));
}

namespace {

IngredientTable stage_fixture() {
    // The shipped per-model, per-stage alignment scores.
    struct Row {
        const char* id;
        const char* family;
        const char* stage;
        double r2;
    };
    const Row rows[] = {
        {"instella-3b-stage1", "instella", "base-stage1", 0.106},
        {"instella-3b-base", "instella", "base", 0.241},
        {"instella-3b-sft", "instella", "sft", 0.293},
        {"instella-3b-dpo", "instella", "dpo", 0.374},
        {"llama-3.1-8b-base", "llama", "base", 0.358},
        {"llama-3.1-8b-sft", "llama", "sft", 0.301},
        {"llama-3.1-8b-dpo", "llama", "dpo", 0.352},
        {"llama-3.1-8b-rlvr", "llama", "rlvr", 0.424},
        {"olmo-13b-base", "olmo", "base", 0.299},
        {"olmo-13b-sft", "olmo", "sft", 0.392},
        {"olmo-13b-dpo", "olmo", "dpo", 0.406},
        {"olmo-13b-rlvr", "olmo", "rlvr", 0.414},
        {"olmo-7b-base", "olmo", "base", 0.179},
        {"olmo-7b-sft", "olmo", "sft", 0.347},
        {"olmo-7b-dpo", "olmo", "dpo", 0.357},
        {"olmo-7b-rlvr", "olmo", "rlvr", 0.241},
    };
    IngredientTable table;
    for (const auto& r : rows) {
        ModelCard card;
        card.model_id = r.id;
        card.family = r.family;
        card.post_training_stage = stage_from_string(r.stage);
        table.rows.push_back({card, r.r2, {}});
    }
    return table;
}

double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

}  // namespace

TEST_CASE("stage averages reproduce the shipped per-stage means") {
    const auto averages = stage_averages(stage_fixture());
    // Exact means before display rounding.
    CHECK(averages.at(Stage::BaseStage1) == doctest::Approx(0.106).epsilon(1e-12));
    CHECK(averages.at(Stage::Base) == doctest::Approx(0.26925).epsilon(1e-12));
    CHECK(averages.at(Stage::Sft) == doctest::Approx(0.33325).epsilon(1e-12));
    CHECK(averages.at(Stage::Dpo) == doctest::Approx(0.37225).epsilon(1e-12));
    CHECK(averages.at(Stage::Rlvr) == doctest::Approx(1.079 / 3.0).epsilon(1e-12));
    // The shipped table reports 3 decimal places.
    CHECK(round3(averages.at(Stage::BaseStage1)) == doctest::Approx(0.106));
    CHECK(round3(averages.at(Stage::Base)) == doctest::Approx(0.269));
    CHECK(round3(averages.at(Stage::Sft)) == doctest::Approx(0.333));
    CHECK(round3(averages.at(Stage::Dpo)) == doctest::Approx(0.372));
    CHECK(round3(averages.at(Stage::Rlvr)) == doctest::Approx(0.360));
    CHECK(averages.count(Stage::Instruct) == 0);
}

TEST_CASE("stage averages require a stage on every row") {
    IngredientTable table = stage_fixture();
    table.rows[3].card.post_training_stage.reset();
    CHECK_CATEGORY(stage_averages(table), "MissingStage");
}
