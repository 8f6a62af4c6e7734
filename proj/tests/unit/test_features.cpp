#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <set>

#include "remet/errors.hpp"
#include "remet/features.hpp"

using namespace remet;

namespace {

FeatureSpec small_spec() {
    FeatureSpec spec;
    spec.dim = 256;
    return spec;
}

std::vector<double> raw_fold(const FeatureSpec& spec, const std::string& reference,
                             const std::string& candidate) {
    std::vector<double> v(static_cast<size_t>(spec.dim), 0.0);
    const auto add = [&](const std::vector<double>& block, double scale) {
        for (size_t i = 0; i < v.size(); ++i) v[i] += scale * block[i];
    };
    add(tf_hash_block(candidate, HashBlock::candidate, spec), 1.0);
    add(tf_hash_block(reference, HashBlock::reference, spec), 1.0);
    add(tf_hash_block(candidate, HashBlock::difference, spec), 1.0);
    add(tf_hash_block(reference, HashBlock::difference, spec), -1.0);
    return v;
}

}  // namespace

TEST_SUITE_BEGIN("features");

TEST_CASE("spec validation") {
    FeatureSpec spec;
    spec.dim = 7;
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    spec.dim = 48;  // not a power of two
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    spec.dim = 64;
    CHECK_NOTHROW(spec.validate());
}

TEST_CASE("featurize is deterministic and unit-norm") {
    const Featurizer f(small_spec());
    const std::string ref = "There is a small left pleural effusion. No pneumothorax.";
    const std::string cand = "There is a large left pleural effusion.";
    const FeatureVector a = f.featurize(ref, cand);
    const FeatureVector b = f.featurize(ref, cand);
    CHECK(a.values == b.values);
    double norm = 0;
    for (double x : a.values) norm += x * x;
    CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-9);
}

TEST_CASE("identical texts zero out the difference block") {
    const FeatureSpec spec = small_spec();
    const Featurizer f(spec);
    const std::string t = "The lungs are clear. No effusion.";
    const FeatureVector v = f.featurize(t, t);
    // With the difference block cancelled, the raw fold is just the
    // candidate and reference blocks.
    std::vector<double> expected(static_cast<size_t>(spec.dim), 0.0);
    const auto bc = tf_hash_block(t, HashBlock::candidate, spec);
    const auto br = tf_hash_block(t, HashBlock::reference, spec);
    double norm = 0;
    for (size_t i = 0; i < expected.size(); ++i) {
        expected[i] = bc[i] + br[i];
        norm += expected[i] * expected[i];
    }
    for (double& x : expected) x /= std::sqrt(norm);
    for (size_t i = 0; i < expected.size(); ++i) CHECK(v.values[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("featurize equals the normalized raw fold") {
    const FeatureSpec spec = small_spec();
    const Featurizer f(spec);
    const std::string ref = "Small right effusion. Mild cardiomegaly.";
    const std::string cand = "Large right effusion.";
    const FeatureVector v = f.featurize(ref, cand);
    std::vector<double> raw = raw_fold(spec, ref, cand);
    double norm = 0;
    for (double x : raw) norm += x * x;
    for (double& x : raw) x /= std::sqrt(norm);
    for (size_t i = 0; i < raw.size(); ++i)
        CHECK(v.values[i] == doctest::Approx(raw[i]).epsilon(1e-12));
}

TEST_CASE("a one-token change touches only that token's buckets") {
    const FeatureSpec spec = small_spec();
    const std::string ref = "clear lungs";
    const std::string cand1 = "left effusion";
    const std::string cand2 = "right effusion";

    // Oracle: grams that appear in exactly one candidate are the ones the
    // changed token participates in; collect their buckets under the two
    // candidate-bearing blocks.
    std::set<size_t> allowed;
    const auto grams1 = extract_grams(cand1, spec);
    const auto grams2 = extract_grams(cand2, spec);
    const auto count = [](const std::vector<std::string>& grams, const std::string& g) {
        size_t n = 0;
        for (const auto& x : grams)
            if (x == g) ++n;
        return n;
    };
    for (const auto& g : grams1)
        if (count(grams1, g) != count(grams2, g)) {
            allowed.insert(bucket_of(g, HashBlock::candidate, spec));
            allowed.insert(bucket_of(g, HashBlock::difference, spec));
        }
    for (const auto& g : grams2)
        if (count(grams1, g) != count(grams2, g)) {
            allowed.insert(bucket_of(g, HashBlock::candidate, spec));
            allowed.insert(bucket_of(g, HashBlock::difference, spec));
        }
    CHECK(!allowed.empty());

    const std::vector<double> raw1 = raw_fold(spec, ref, cand1);
    const std::vector<double> raw2 = raw_fold(spec, ref, cand2);
    for (size_t i = 0; i < raw1.size(); ++i) {
        if (raw1[i] != raw2[i]) CHECK(allowed.count(i) == 1);
    }
}

TEST_CASE("candidate changes move the vector") {
    const Featurizer f(small_spec());
    const std::string ref = "No acute cardiopulmonary process.";
    const FeatureVector a = f.featurize(ref, "There is a small left effusion.");
    const FeatureVector b = f.featurize(ref, "There is a large left effusion.");
    CHECK(a.values != b.values);
}

TEST_CASE("empty or whitespace text rejected") {
    const Featurizer f(small_spec());
    CHECK_THROWS_AS(f.featurize("", "text"), ValidationError);
    CHECK_THROWS_AS(f.featurize("text", "   "), ValidationError);
}

TEST_CASE("external table round-trip and validation") {
    VectorTable table;
    table["a"] = {1.0, 2.5, -3.125, 1e-17};
    table["b"] = {0.1, 0.2, 0.3, 0.4};
    table["c"] = {-1, -2, -3, -4};
    const std::string path = "test_external_vectors.tsv";
    save_external(table, path);
    const VectorTable loaded = load_external(path, 4);
    CHECK(loaded.size() == 3);
    CHECK(loaded.at("a") == table.at("a"));  // full precision
    CHECK_THROWS_WITH_AS(load_external(path, 5), doctest::Contains("'a'"), ValidationError);
    std::remove(path.c_str());
}

TEST_CASE("external variant looks up by record id") {
    FeatureSpec spec;
    spec.variant = FeatureVariant::external;
    spec.dim = 8;
    VectorTable table;
    table["rec1"] = {1, 0, 0, 0, 0, 0, 0, 0};
    const Featurizer f(spec, table);
    CHECK(f.featurize_for("rec1", "x", "y").values[0] == 1);
    CHECK_THROWS_WITH_AS(f.featurize_for("rec2", "x", "y"), doctest::Contains("rec2"),
                         LookupError);
    CHECK_THROWS_AS(f.featurize("x", "y"), ConfigError);
}

TEST_CASE("dim mismatch in the table is rejected at construction") {
    FeatureSpec spec;
    spec.variant = FeatureVariant::external;
    spec.dim = 8;
    VectorTable table;
    table["short"] = {1, 2, 3};
    CHECK_THROWS_WITH_AS(Featurizer(spec, table), doctest::Contains("short"), ValidationError);
}

TEST_SUITE_END();
