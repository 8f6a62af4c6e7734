#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace remet {

enum class FeatureVariant { hashed_ngrams, external };

// Configuration of the text featurizer. The hashed variant folds word and
// character n-grams of candidate, reference, and their count difference into
// one dim-sized bucket vector; the external variant looks rows up by record
// id from a preloaded table.
struct FeatureSpec {
    FeatureVariant variant = FeatureVariant::hashed_ngrams;
    int dim = 4096;  // power of two for hashed_ngrams
    std::vector<int> word_n = {1, 2};
    std::vector<int> char_n = {3, 4};

    void validate() const;
    bool operator==(const FeatureSpec&) const = default;
};

struct FeatureVector {
    std::vector<double> values;
    size_t dim() const { return values.size(); }
};

// id -> dense row, for the external variant.
using VectorTable = std::unordered_map<std::string, std::vector<double>>;

// Hash blocks of the folded vector. Candidate and reference terms carry
// distinct salts so their buckets do not collide by construction; the
// difference block uses a third salt shared by both texts.
enum class HashBlock : uint64_t {
    candidate = 0x86b7c96f1e3a5d21ull,
    reference = 0x41c64e6da3b1f095ull,
    difference = 0xd6e8feb866cc9c67ull,
};

// Bucket index of one n-gram under the documented hash: FNV-1a(64) of the
// gram bytes, mixed with the block salt via splitmix64; low bits select the
// bucket, the top bit selects the sign.
size_t bucket_of(std::string_view gram, HashBlock block, const FeatureSpec& spec);
double sign_of(std::string_view gram, HashBlock block);

// n-gram strings extracted from one text under spec (lowercased, whitespace
// collapsed; word grams joined with 0x1f).
std::vector<std::string> extract_grams(std::string_view text, const FeatureSpec& spec);

// Signed term-frequency vector of one text folded into spec.dim buckets
// under the given block salt. Building block of featurize; exposed for
// bucket-level tests.
std::vector<double> tf_hash_block(std::string_view text, HashBlock block, const FeatureSpec& spec);

class Featurizer {
public:
    explicit Featurizer(FeatureSpec spec);
    Featurizer(FeatureSpec spec, VectorTable external);

    const FeatureSpec& spec() const { return spec_; }

    // Deterministic map of a (reference, candidate) pair to an
    // L2-normalized vector. hashed_ngrams only.
    FeatureVector featurize(std::string_view reference, std::string_view candidate) const;

    // Variant dispatch: hashed uses the texts, external uses record_id.
    FeatureVector featurize_for(std::string_view record_id, std::string_view reference,
                                std::string_view candidate) const;

private:
    FeatureSpec spec_;
    VectorTable external_;
};

// External vector file: one line per record, "id<TAB>v1,v2,...,vd".
VectorTable load_external(const std::string& path, int dim);
void save_external(const VectorTable& table, const std::string& path);

}  // namespace remet
