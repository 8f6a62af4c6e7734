#include <doctest.h>

#include <fstream>
#include <sstream>

#include "remet/errors.hpp"
#include "remet/rng.hpp"
#include "remet/scoring.hpp"

using namespace remet;

TEST_SUITE_BEGIN("scoring");

TEST_CASE("radcliq6 preset shape") {
    const ScoringSystem sys = preset_system("radcliq6");
    CHECK(sys.size() == 6);
    CHECK(sys.formula() == TotalFormula::sum_of_errors);
    CHECK(sys.orientation() == Orientation::lower_is_better);
    CHECK(sys.min_total() == 0);
    CHECK(sys.max_total() == 12);
    CHECK(sys.quality_range_width() == 12);
    for (const Criterion& c : sys.criteria()) {
        CHECK(c.kind == ScoreKind::error_count);
        CHECK(c.max_count == 2);
        CHECK(c.weight == 1.0);
    }
    CHECK(sys.criterion_index("wrong_location") == 2);
}

TEST_CASE("mrscore7 preset shape") {
    const ScoringSystem sys = preset_system("mrscore7");
    CHECK(sys.size() == 7);
    CHECK(sys.formula() == TotalFormula::hundred_minus_weighted_sum);
    CHECK(sys.orientation() == Orientation::higher_is_better);
    const std::vector<double> weights = {30, 20, 20, 10, 10, 5, 5};
    for (size_t j = 0; j < sys.size(); ++j) {
        CHECK(sys.criterion(j).kind == ScoreKind::binary_error);
        CHECK(sys.criterion(j).weight == weights[j]);
    }
    CHECK(sys.min_total() == 0);
    CHECK(sys.max_total() == 100);
}

TEST_CASE("weighted total formula") {
    const ScoringSystem sys = preset_system("mrscore7");
    CHECK(sys.total_score({1, 0, 0, 1, 0, 0, 0}) == 60);
    CHECK(sys.total_score({0, 0, 0, 0, 0, 0, 0}) == 100);
    CHECK(sys.quality_score({0, 0, 0, 0, 0, 0, 0}) == 100);
}

TEST_CASE("error count totals and quality flip") {
    const ScoringSystem sys = preset_system("radcliq6");
    CHECK(sys.total_score({0, 0, 0, 0, 0, 0}) == 0);
    CHECK(sys.total_score({1, 2, 0, 0, 1, 0}) == 4);
    CHECK(sys.quality_score({0, 0, 0, 0, 0, 0}) == 12);
    CHECK(sys.quality_score({1, 2, 0, 0, 1, 0}) == 8);
}

TEST_CASE("sub-score validation names the criterion") {
    const ScoringSystem sys = preset_system("radcliq6");
    CHECK_THROWS_AS(sys.total_score({1, 2, 0}), ValidationError);
    CHECK_THROWS_WITH_AS(sys.total_score({3, 0, 0, 0, 0, 0}),
                         doctest::Contains("false_finding"), ValidationError);
    CHECK_THROWS_WITH_AS(sys.total_score({0, 0.5, 0, 0, 0, 0}),
                         doctest::Contains("omit_finding"), ValidationError);
    const ScoringSystem weighted = preset_system("mrscore7");
    CHECK_THROWS_WITH_AS(weighted.total_score({0, 2, 0, 0, 0, 0, 0}),
                         doctest::Contains("impression_organs"), ValidationError);
}

TEST_CASE("definition document validation") {
    const char* bad_weight = R"({
      "name": "x", "formula": "hundred_minus_weighted_sum",
      "criteria": [{"id": "a", "kind": "binary_error", "weight": -1}]
    })";
    std::istringstream in1(bad_weight);
    CHECK_THROWS_WITH_AS(load_system(in1), doctest::Contains("criteria[0].weight"),
                         ValidationError);

    const char* dup_ids = R"({
      "name": "x", "formula": "sum_of_errors",
      "criteria": [{"id": "a"}, {"id": "a"}]
    })";
    std::istringstream in2(dup_ids);
    CHECK_THROWS_WITH_AS(load_system(in2), doctest::Contains("duplicate"), ValidationError);

    const char* bad_formula = R"({"name": "x", "formula": "product", "criteria": [{"id": "a"}]})";
    std::istringstream in3(bad_formula);
    CHECK_THROWS_WITH_AS(load_system(in3), doctest::Contains("formula"), ValidationError);

    std::istringstream in4("{not json");
    CHECK_THROWS_AS(load_system(in4), ParseError);
}

TEST_CASE("serialize round-trips presets and custom systems") {
    for (const std::string& name : preset_names()) {
        const ScoringSystem sys = preset_system(name);
        std::istringstream in(serialize_system(sys));
        CHECK(load_system(in) == sys);
    }
    Criterion a{"alpha", "first", ScoreKind::error_count, 3, 1.0};
    Criterion b{"beta", "second", ScoreKind::error_count, 1, 1.0};
    const ScoringSystem custom("custom", TotalFormula::sum_of_errors, {a, b});
    std::istringstream in(serialize_system(custom));
    const ScoringSystem loaded = load_system(in);
    CHECK(loaded == custom);
    CHECK(loaded.max_total() == 4);
}

TEST_CASE("shipped preset files match the builtins") {
    for (const std::string& name : preset_names()) {
        const std::string path = std::string(REMET_SOURCE_DIR) + "/data/systems/" + name + ".json";
        CHECK(load_system_file(path) == preset_system(name));
    }
}

TEST_CASE("total_score is the declared affine formula on random subs") {
    Rng rng(301);
    for (const std::string& name : preset_names()) {
        const ScoringSystem sys = preset_system(name);
        for (int iter = 0; iter < 200; ++iter) {
            SubScores subs(sys.size());
            for (size_t j = 0; j < sys.size(); ++j)
                subs[j] = static_cast<double>(
                    rng.below(static_cast<uint64_t>(sys.criterion(j).max_value()) + 1));
            double expected;
            if (sys.formula() == TotalFormula::sum_of_errors) {
                expected = 0;
                for (double v : subs) expected += v;
            } else {
                expected = 100;
                for (size_t j = 0; j < sys.size(); ++j)
                    expected -= subs[j] * sys.criterion(j).weight;
            }
            CHECK(sys.total_score(subs) == expected);
            CHECK(sys.total_score(subs) >= sys.min_total());
            CHECK(sys.total_score(subs) <= sys.max_total());
        }
    }
}

TEST_CASE("quality ranks reports by error mass under either orientation") {
    Rng rng(302);
    for (const std::string& name : preset_names()) {
        const ScoringSystem sys = preset_system(name);
        for (int iter = 0; iter < 200; ++iter) {
            SubScores a(sys.size()), b(sys.size());
            double mass_a = 0, mass_b = 0;
            for (size_t j = 0; j < sys.size(); ++j) {
                a[j] = static_cast<double>(
                    rng.below(static_cast<uint64_t>(sys.criterion(j).max_value()) + 1));
                b[j] = static_cast<double>(
                    rng.below(static_cast<uint64_t>(sys.criterion(j).max_value()) + 1));
                mass_a += a[j] * sys.criterion(j).weight;
                mass_b += b[j] * sys.criterion(j).weight;
            }
            if (mass_a < mass_b) CHECK(sys.quality_score(a) > sys.quality_score(b));
            if (mass_a == mass_b) CHECK(sys.quality_score(a) == sys.quality_score(b));
        }
    }
}

TEST_CASE("quality strictly decreases when any error increments") {
    Rng rng(303);
    for (const std::string& name : preset_names()) {
        const ScoringSystem sys = preset_system(name);
        for (int iter = 0; iter < 200; ++iter) {
            SubScores subs(sys.size());
            for (size_t j = 0; j < sys.size(); ++j)
                subs[j] = static_cast<double>(
                    rng.below(static_cast<uint64_t>(sys.criterion(j).max_value()) + 1));
            const size_t j = rng.below(sys.size());
            if (subs[j] >= sys.criterion(j).max_value()) continue;
            SubScores bumped = subs;
            bumped[j] += 1;
            CHECK(sys.quality_score(bumped) < sys.quality_score(subs));
        }
    }
}

TEST_CASE("unknown preset rejected") {
    CHECK_THROWS_AS(preset_system("nope"), ValidationError);
    CHECK_THROWS_AS(resolve_system("/no/such/file.json"), IoError);
}

TEST_SUITE_END();
