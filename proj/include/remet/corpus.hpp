#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "remet/scoring.hpp"

namespace remet {

enum class Tier { high, mid, low };
std::string to_string(Tier t);
Tier tier_from_string(std::string_view s);

// One candidate report scored against its reference. quality is derived
// (never stored in files); total is stored and re-validated on read.
struct ReportRecord {
    std::string id;  // "<reference-id>#<suffix>"
    std::string reference_text;
    std::string candidate_text;
    SubScores subs;
    double total = 0;
    double quality = 0;
    Tier tier = Tier::high;

    // Grouping key for pairing: id prefix before '#', or the whole id.
    std::string reference_id() const;
};

enum class CorruptionKind {
    false_finding,
    omit_finding,
    wrong_location,
    wrong_severity,
    spurious_comparison,
    omit_comparison,
};
inline constexpr size_t kCorruptionKindCount = 6;
std::string to_string(CorruptionKind k);

// One sentence-level edit. target_sentence_index addresses the working
// sentence list at the moment the op is applied (earlier ops shift it).
// For inserts, replacement is the inserted sentence; for term swaps it is
// the full rewritten sentence. Empty replacement means: draw from the
// lexicons using the corruption seed.
struct CorruptionOp {
    CorruptionKind kind = CorruptionKind::false_finding;
    int target_sentence_index = 0;
    std::string replacement;
};

// Editable term tables driving the corruption mechanics. laterality and
// severity hold bidirectional swap pairs; the spurious lists hold whole
// sentences to insert; synonyms are interchangeable phrasings used for
// label-free paraphrase noise (never terms the error lexicons touch).
struct Lexicons {
    std::vector<std::pair<std::string, std::string>> laterality;
    std::vector<std::pair<std::string, std::string>> severity;
    std::vector<std::string> spurious_findings;
    std::vector<std::string> spurious_comparisons;
    std::vector<std::vector<std::string>> synonyms;

    static Lexicons builtin();
    // Reads laterality.txt, severity.txt, spurious_findings.txt,
    // spurious_comparisons.txt, synonyms.txt from a directory; missing
    // files keep the builtin entries.
    static Lexicons load_dir(const std::string& dir);
};

// Label-preserving rewrites: synonym phrasing swaps plus a shuffle of the
// interior sentences. Generated candidates run through this so surface
// n-gram overlap with the reference stops tracking planted quality.
std::string paraphrase(const std::string& text, uint64_t seed, const Lexicons& lexicons);

// Maps each corruption kind to the criterion index it increments. Identity
// for radcliq6; name-based defaults for mrscore7; user-configurable for
// other systems.
struct KindMap {
    std::array<int, kCorruptionKindCount> criterion_index{};

    static KindMap for_system(const ScoringSystem& system);
    void validate(const ScoringSystem& system) const;
};

// Quality bands used during generation, expressed on the total score.
// Membership is lo <= total < hi, except the band with the largest hi,
// which includes its upper bound.
struct TierBand {
    Tier tier = Tier::high;
    double lo = 0;
    double hi = 0;
};

struct TierSpec {
    std::vector<TierBand> bands;

    // radcliq6-style: errors 0-2 / 3-4 / 5-6. weighted: totals 0-40 /
    // 40-70 / 70-100.
    static TierSpec defaults_for(const ScoringSystem& system);
    void validate(const ScoringSystem& system) const;
    bool in_band(const TierBand& band, double total) const;
    Tier tier_of(double total) const;
};

// Sentence segmentation: split on '.' followed by whitespace, with a small
// fixed abbreviation exception list. join_sentences re-appends periods.
std::vector<std::string> split_sentences(std::string_view text);
std::string join_sentences(const std::vector<std::string>& sentences);

struct CorruptResult {
    std::string candidate;
    SubScores subs;
};

// Applies ops in order to the reference and returns the corrupted candidate
// plus the sub-scores the ops plant. Deterministic for fixed
// (reference, ops, seed).
CorruptResult corrupt(const std::string& reference, const std::vector<CorruptionOp>& ops,
                      uint64_t seed, const ScoringSystem& system, const KindMap& kind_map,
                      const Lexicons& lexicons);
CorruptResult corrupt(const std::string& reference, const std::vector<CorruptionOp>& ops,
                      uint64_t seed, const ScoringSystem& system);

// One record per reference per tier band, with totals landing inside the
// band. Deterministic for a fixed seed; each reference draws from its own
// derived stream, so results do not depend on list order.
std::vector<ReportRecord> generate_tiered(const std::vector<std::string>& references,
                                          const ScoringSystem& system, const TierSpec& tiers,
                                          uint64_t seed, const KindMap& kind_map,
                                          const Lexicons& lexicons);
std::vector<ReportRecord> generate_tiered(const std::vector<std::string>& references,
                                          const ScoringSystem& system, const TierSpec& tiers,
                                          uint64_t seed);

// Template-composed reference reports for zero-setup demos and fixtures.
std::vector<std::string> builtin_references(int count, uint64_t seed);

// Record files: one JSON object per line, fields in fixed order
// {id, reference_text, candidate_text, subs, total, tier}. Totals are
// recomputed against the system on read and must match.
std::vector<ReportRecord> read_records(const std::string& path, const ScoringSystem& system);
void write_records(const std::vector<ReportRecord>& records, const std::string& path);

// Reference list file: one report per line; blank lines skipped.
std::vector<std::string> read_reference_lines(const std::string& path);

// Deterministic split by reference id: the last n_test distinct references
// (after a seeded shuffle) become the test set.
struct CorpusSplit {
    std::vector<ReportRecord> train;
    std::vector<ReportRecord> test;
};
CorpusSplit split_by_reference(const std::vector<ReportRecord>& records, size_t n_test,
                               uint64_t seed);

}  // namespace remet
