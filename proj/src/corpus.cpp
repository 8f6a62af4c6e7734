#include "remet/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "remet/errors.hpp"
#include "remet/rng.hpp"

namespace remet {

using ordered_json = nlohmann::ordered_json;

std::string to_string(Tier t) {
    switch (t) {
        case Tier::high: return "high";
        case Tier::mid: return "mid";
        case Tier::low: return "low";
    }
    return "high";
}

Tier tier_from_string(std::string_view s) {
    if (s == "high") return Tier::high;
    if (s == "mid") return Tier::mid;
    if (s == "low") return Tier::low;
    throw ValidationError("unknown tier '" + std::string(s) + "'");
}

std::string ReportRecord::reference_id() const {
    const size_t hash_pos = id.find('#');
    return hash_pos == std::string::npos ? id : id.substr(0, hash_pos);
}

std::string to_string(CorruptionKind k) {
    switch (k) {
        case CorruptionKind::false_finding: return "false_finding";
        case CorruptionKind::omit_finding: return "omit_finding";
        case CorruptionKind::wrong_location: return "wrong_location";
        case CorruptionKind::wrong_severity: return "wrong_severity";
        case CorruptionKind::spurious_comparison: return "spurious_comparison";
        case CorruptionKind::omit_comparison: return "omit_comparison";
    }
    return "false_finding";
}

// ---------------------------------------------------------------------------
// Sentence segmentation

namespace {

const std::set<std::string>& abbreviations() {
    static const std::set<std::string> kAbbrev = {"dr", "mr", "mrs", "ms", "vs",
                                                  "fig", "e.g", "i.e", "approx"};
    return kAbbrev;
}

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lowercase(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Word immediately before position pos (a '.'), as a run of [alnum.] chars.
std::string word_before(std::string_view text, size_t pos) {
    size_t b = pos;
    while (b > 0) {
        const unsigned char c = static_cast<unsigned char>(text[b - 1]);
        if (std::isalnum(c) || c == '.') --b;
        else break;
    }
    return lowercase(text.substr(b, pos - b));
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> sentences;
    size_t start = 0;
    for (size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '.') continue;
        const bool at_end = i + 1 == text.size();
        const bool ws_next = !at_end && std::isspace(static_cast<unsigned char>(text[i + 1]));
        if (!at_end && !ws_next) continue;
        if (abbreviations().count(word_before(text, i))) continue;
        std::string sent = trim(text.substr(start, i - start));
        if (!sent.empty()) sentences.push_back(std::move(sent));
        start = i + 1;
    }
    std::string tail = trim(text.substr(start));
    if (!tail.empty()) sentences.push_back(std::move(tail));
    return sentences;
}

std::string join_sentences(const std::vector<std::string>& sentences) {
    std::string out;
    for (size_t i = 0; i < sentences.size(); ++i) {
        if (i) out.push_back(' ');
        out += sentences[i];
        out.push_back('.');
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lexicons

Lexicons Lexicons::builtin() {
    Lexicons lex;
    lex.laterality = {{"left", "right"}, {"upper", "lower"}};
    lex.severity = {{"small", "large"},    {"mild", "severe"},      {"trace", "extensive"},
                    {"minimal", "marked"}, {"moderate", "massive"}, {"increased", "decreased"}};
    lex.spurious_findings = {
        "There is a new right apical pneumothorax",
        "A large hiatal hernia is present",
        "There is marked gaseous distention of the stomach",
        "A right-sided pleural catheter is in place",
        "There is severe degenerative change of the thoracic spine",
        "Patchy consolidation is present in the lingula",
    };
    lex.spurious_comparisons = {
        "Compared with the prior examination, the consolidation has worsened",
        "The previously seen pneumothorax has resolved in the interval",
        "Compared to the earlier radiograph, the cardiac silhouette has enlarged",
        "Interval placement of a nasogastric tube is noted",
    };
    return lex;
}

namespace {

std::vector<std::string> read_lines_or_empty(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    if (!in) return lines;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (!line.empty() && line[0] != '#') lines.push_back(line);
    }
    return lines;
}

std::vector<std::pair<std::string, std::string>> parse_pairs(const std::vector<std::string>& lines,
                                                             const std::string& path) {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (size_t i = 0; i < lines.size(); ++i) {
        const size_t tab = lines[i].find('\t');
        if (tab == std::string::npos)
            throw ParseError(path + ":" + std::to_string(i + 1) + ": expected two terms separated by a tab");
        pairs.emplace_back(trim(lines[i].substr(0, tab)), trim(lines[i].substr(tab + 1)));
    }
    return pairs;
}

}  // namespace

Lexicons Lexicons::load_dir(const std::string& dir) {
    Lexicons lex = builtin();
    const std::string lat_path = dir + "/laterality.txt";
    const std::string sev_path = dir + "/severity.txt";
    if (auto lines = read_lines_or_empty(lat_path); !lines.empty())
        lex.laterality = parse_pairs(lines, lat_path);
    if (auto lines = read_lines_or_empty(sev_path); !lines.empty())
        lex.severity = parse_pairs(lines, sev_path);
    if (auto lines = read_lines_or_empty(dir + "/spurious_findings.txt"); !lines.empty())
        lex.spurious_findings = std::move(lines);
    if (auto lines = read_lines_or_empty(dir + "/spurious_comparisons.txt"); !lines.empty())
        lex.spurious_comparisons = std::move(lines);
    return lex;
}

// ---------------------------------------------------------------------------
// Kind -> criterion mapping

KindMap KindMap::for_system(const ScoringSystem& system) {
    KindMap map;
    const std::array<const char*, kCorruptionKindCount> radcliq_ids = {
        "false_finding",  "omit_finding",        "wrong_location",
        "wrong_severity", "spurious_comparison", "omit_comparison"};
    // mrscore7-style mapping: each corruption kind lands on the weighted
    // item it most plausibly violates; grammar has no corresponding kind.
    const std::array<const char*, kCorruptionKindCount> weighted_ids = {
        "impression_consistency", "completeness",     "impression_organs",
        "lesion_description",     "clinical_history", "medical_terminology"};
    bool all_radcliq = true, all_weighted = true;
    for (size_t k = 0; k < kCorruptionKindCount; ++k) {
        if (system.criterion_index(radcliq_ids[k]) < 0) all_radcliq = false;
        if (system.criterion_index(weighted_ids[k]) < 0) all_weighted = false;
    }
    if (all_radcliq) {
        for (size_t k = 0; k < kCorruptionKindCount; ++k)
            map.criterion_index[k] = system.criterion_index(radcliq_ids[k]);
    } else if (all_weighted) {
        for (size_t k = 0; k < kCorruptionKindCount; ++k)
            map.criterion_index[k] = system.criterion_index(weighted_ids[k]);
    } else {
        // Fallback: kinds cycle over the criteria in order.
        for (size_t k = 0; k < kCorruptionKindCount; ++k)
            map.criterion_index[k] = static_cast<int>(k % system.size());
    }
    map.validate(system);
    return map;
}

void KindMap::validate(const ScoringSystem& system) const {
    for (size_t k = 0; k < kCorruptionKindCount; ++k) {
        const int ci = criterion_index[k];
        if (ci < 0 || ci >= static_cast<int>(system.size()))
            throw ValidationError("kind map: criterion index " + std::to_string(ci) +
                                  " for kind '" + to_string(static_cast<CorruptionKind>(k)) +
                                  "' out of range");
    }
}

// ---------------------------------------------------------------------------
// Tier bands

TierSpec TierSpec::defaults_for(const ScoringSystem& system) {
    TierSpec spec;
    if (system.formula() == TotalFormula::sum_of_errors) {
        if (system.max_total() >= 6) {
            spec.bands = {{Tier::high, 0, 3}, {Tier::mid, 3, 5}, {Tier::low, 5, 6}};
        } else {
            const double m = system.max_total();
            spec.bands = {{Tier::high, 0, m / 3}, {Tier::mid, m / 3, 2 * m / 3}, {Tier::low, 2 * m / 3, m}};
        }
    } else {
        spec.bands = {{Tier::low, 0, 40}, {Tier::mid, 40, 70}, {Tier::high, 70, 100}};
    }
    spec.validate(system);
    return spec;
}

void TierSpec::validate(const ScoringSystem& system) const {
    if (bands.empty()) throw ConfigError("tier spec has no bands");
    std::vector<TierBand> sorted = bands;
    std::sort(sorted.begin(), sorted.end(), [](const TierBand& a, const TierBand& b) { return a.lo < b.lo; });
    for (size_t i = 0; i < sorted.size(); ++i) {
        const TierBand& b = sorted[i];
        if (!(b.lo < b.hi) && !(b.lo == b.hi))
            throw ConfigError("tier band '" + to_string(b.tier) + "' has lo > hi");
        if (i + 1 < sorted.size() && sorted[i + 1].lo < b.hi)
            throw ConfigError("tier bands '" + to_string(b.tier) + "' and '" +
                              to_string(sorted[i + 1].tier) + "' overlap");
        if (b.hi < system.min_total() || b.lo > system.max_total())
            throw ConfigError("tier band '" + to_string(b.tier) +
                              "' lies outside the system's total range");
    }
}

bool TierSpec::in_band(const TierBand& band, double total) const {
    double max_hi = bands.front().hi;
    for (const TierBand& b : bands) max_hi = std::max(max_hi, b.hi);
    if (total < band.lo) return false;
    if (total < band.hi) return true;
    return band.hi == max_hi && total == band.hi;
}

Tier TierSpec::tier_of(double total) const {
    for (const TierBand& b : bands)
        if (in_band(b, total)) return b.tier;
    throw ValidationError("total " + std::to_string(total) + " falls in no tier band");
}

// ---------------------------------------------------------------------------
// Corruption mechanics

namespace {

struct TermHit {
    size_t pos = 0;
    size_t len = 0;
    std::string replacement;
};

bool is_word_boundary(const std::string& text, size_t pos, size_t len) {
    const bool left_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(text[pos - 1]));
    const bool right_ok =
        pos + len >= text.size() || !std::isalnum(static_cast<unsigned char>(text[pos + len]));
    return left_ok && right_ok;
}

void collect_hits(const std::string& lowered, const std::string& term, const std::string& repl,
                  std::vector<TermHit>& hits) {
    size_t pos = 0;
    while ((pos = lowered.find(term, pos)) != std::string::npos) {
        if (is_word_boundary(lowered, pos, term.size()))
            hits.push_back({pos, term.size(), repl});
        pos += 1;
    }
}

std::vector<TermHit> find_term_hits(const std::string& sentence,
                                    const std::vector<std::pair<std::string, std::string>>& pairs) {
    const std::string lowered = lowercase(sentence);
    std::vector<TermHit> hits;
    for (const auto& [a, b] : pairs) {
        collect_hits(lowered, lowercase(a), b, hits);
        collect_hits(lowered, lowercase(b), a, hits);
    }
    std::stable_sort(hits.begin(), hits.end(),
                     [](const TermHit& x, const TermHit& y) { return x.pos < y.pos; });
    return hits;
}

std::string swap_term(const std::string& sentence, const TermHit& hit) {
    std::string repl = hit.replacement;
    if (hit.len > 0 && std::isupper(static_cast<unsigned char>(sentence[hit.pos])) && !repl.empty())
        repl[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(repl[0])));
    return sentence.substr(0, hit.pos) + repl + sentence.substr(hit.pos + hit.len);
}

bool is_comparison_sentence(const std::string& sentence) {
    const std::string lowered = lowercase(sentence);
    for (const char* cue : {"compared", "comparison", "prior", "previous", "interval"})
        if (lowered.find(cue) != std::string::npos) return true;
    return false;
}

bool is_insert_kind(CorruptionKind k) {
    return k == CorruptionKind::false_finding || k == CorruptionKind::spurious_comparison;
}
bool is_omit_kind(CorruptionKind k) {
    return k == CorruptionKind::omit_finding || k == CorruptionKind::omit_comparison;
}

struct CorruptState {
    std::vector<std::string> sentences;
    SubScores subs;
    Rng rng;
    const ScoringSystem& system;
    const KindMap& kmap;
    const Lexicons& lex;

    CorruptState(const std::string& reference, uint64_t seed, const ScoringSystem& sys,
                 const KindMap& km, const Lexicons& lx)
        : sentences(split_sentences(reference)),
          subs(sys.size(), 0.0),
          rng(seed),
          system(sys),
          kmap(km),
          lex(lx) {
        if (sentences.empty()) throw ValidationError("reference decomposes into no sentences");
    }

    void bump_sub(CorruptionKind kind) {
        const int ci = kmap.criterion_index[static_cast<size_t>(kind)];
        const Criterion& c = system.criterion(static_cast<size_t>(ci));
        if (c.kind == ScoreKind::binary_error)
            subs[static_cast<size_t>(ci)] = 1.0;
        else
            subs[static_cast<size_t>(ci)] = std::min(subs[static_cast<size_t>(ci)] + 1.0,
                                                     static_cast<double>(c.max_count));
    }

    const std::string& pick(const std::vector<std::string>& pool) {
        if (pool.empty()) throw ConfigError("lexicon pool is empty");
        return pool[rng.below(pool.size())];
    }

    void apply(const CorruptionOp& op) {
        const int n = static_cast<int>(sentences.size());
        const int idx = op.target_sentence_index;
        if (is_insert_kind(op.kind)) {
            if (idx < 0 || idx > n)
                throw ValidationError("insert index " + std::to_string(idx) + " out of range [0, " +
                                      std::to_string(n) + "]");
            const std::string& sent =
                op.replacement.empty()
                    ? pick(op.kind == CorruptionKind::false_finding ? lex.spurious_findings
                                                                    : lex.spurious_comparisons)
                    : op.replacement;
            sentences.insert(sentences.begin() + idx, sent);
        } else {
            if (idx < 0 || idx >= n)
                throw ValidationError("sentence index " + std::to_string(idx) +
                                      " out of range [0, " + std::to_string(n) + ")");
            if (is_omit_kind(op.kind)) {
                if (n < 2)
                    throw ValidationError("cannot omit the only remaining sentence");
                sentences.erase(sentences.begin() + idx);
            } else {
                std::string& sent = sentences[idx];
                if (!op.replacement.empty()) {
                    sent = op.replacement;
                } else {
                    const auto& pairs = op.kind == CorruptionKind::wrong_location
                                            ? lex.laterality
                                            : lex.severity;
                    const auto hits = find_term_hits(sent, pairs);
                    if (hits.empty())
                        throw ValidationError("sentence " + std::to_string(idx) + " has no " +
                                              (op.kind == CorruptionKind::wrong_location
                                                   ? std::string("laterality")
                                                   : std::string("severity")) +
                                              " term to swap");
                    sent = swap_term(sent, hits.front());
                }
            }
        }
        bump_sub(op.kind);
    }
};

}  // namespace

CorruptResult corrupt(const std::string& reference, const std::vector<CorruptionOp>& ops,
                      uint64_t seed, const ScoringSystem& system, const KindMap& kind_map,
                      const Lexicons& lexicons) {
    kind_map.validate(system);
    if (ops.empty()) {
        if (split_sentences(reference).empty())
            throw ValidationError("reference decomposes into no sentences");
        return CorruptResult{reference, SubScores(system.size(), 0.0)};
    }
    CorruptState state(reference, seed, system, kind_map, lexicons);
    for (const CorruptionOp& op : ops) state.apply(op);
    return CorruptResult{join_sentences(state.sentences), state.subs};
}

CorruptResult corrupt(const std::string& reference, const std::vector<CorruptionOp>& ops,
                      uint64_t seed, const ScoringSystem& system) {
    return corrupt(reference, ops, seed, system, KindMap::for_system(system), Lexicons::builtin());
}

// ---------------------------------------------------------------------------
// Tiered generation

namespace {

// Working view used while planting errors for one record: tracks which
// sentences are original and still untouched, so each op leaves distinct
// textual evidence and labels stay exact.
struct PlantState {
    CorruptState core;
    std::vector<bool> original;
    std::vector<bool> touched;
    std::vector<bool> comparison;

    PlantState(const std::string& reference, uint64_t seed, const ScoringSystem& sys,
               const KindMap& km, const Lexicons& lx)
        : core(reference, seed, sys, km, lx) {
        const size_t n = core.sentences.size();
        original.assign(n, true);
        touched.assign(n, false);
        comparison.resize(n);
        for (size_t i = 0; i < n; ++i) comparison[i] = is_comparison_sentence(core.sentences[i]);
    }

    bool has_capacity(CorruptionKind kind) const {
        const int ci = core.kmap.criterion_index[static_cast<size_t>(kind)];
        const Criterion& c = core.system.criterion(static_cast<size_t>(ci));
        return core.subs[static_cast<size_t>(ci)] < c.max_value();
    }

    std::vector<int> eligible_targets(CorruptionKind kind) const {
        std::vector<int> out;
        const int n = static_cast<int>(core.sentences.size());
        switch (kind) {
            case CorruptionKind::false_finding:
            case CorruptionKind::spurious_comparison:
                for (int i = 0; i <= n; ++i) out.push_back(i);
                break;
            case CorruptionKind::omit_finding:
                if (n < 2) break;
                for (int i = 0; i < n; ++i)
                    if (original[i] && !touched[i] && !comparison[i]) out.push_back(i);
                break;
            case CorruptionKind::omit_comparison:
                if (n < 2) break;
                for (int i = 0; i < n; ++i)
                    if (original[i] && !touched[i] && comparison[i]) out.push_back(i);
                break;
            case CorruptionKind::wrong_location:
            case CorruptionKind::wrong_severity: {
                const auto& pairs = kind == CorruptionKind::wrong_location ? core.lex.laterality
                                                                           : core.lex.severity;
                for (int i = 0; i < n; ++i)
                    if (original[i] && !touched[i] &&
                        !find_term_hits(core.sentences[i], pairs).empty())
                        out.push_back(i);
                break;
            }
        }
        return out;
    }

    bool applicable(CorruptionKind kind) const {
        return has_capacity(kind) && !eligible_targets(kind).empty();
    }

    void plant(CorruptionKind kind) {
        const auto targets = eligible_targets(kind);
        const int idx = targets[core.rng.below(targets.size())];
        CorruptionOp op;
        op.kind = kind;
        op.target_sentence_index = idx;
        if (kind == CorruptionKind::wrong_location || kind == CorruptionKind::wrong_severity) {
            const auto& pairs = kind == CorruptionKind::wrong_location ? core.lex.laterality
                                                                       : core.lex.severity;
            const auto hits = find_term_hits(core.sentences[idx], pairs);
            op.replacement = swap_term(core.sentences[idx], hits[core.rng.below(hits.size())]);
        }
        core.apply(op);
        if (is_insert_kind(kind)) {
            original.insert(original.begin() + idx, false);
            touched.insert(touched.begin() + idx, true);
            comparison.insert(comparison.begin() + idx,
                              kind == CorruptionKind::spurious_comparison);
        } else if (is_omit_kind(kind)) {
            original.erase(original.begin() + idx);
            touched.erase(touched.begin() + idx);
            comparison.erase(comparison.begin() + idx);
        } else {
            touched[idx] = true;
        }
    }
};

std::vector<CorruptionKind> all_kinds() {
    std::vector<CorruptionKind> kinds;
    for (size_t k = 0; k < kCorruptionKindCount; ++k)
        kinds.push_back(static_cast<CorruptionKind>(k));
    return kinds;
}

// Error-count plan: pick a target error count inside the band, then plant
// that many ops, sampling each kind uniformly from the applicable ones.
bool plant_error_band(PlantState& state, const TierSpec& tiers, const TierBand& band) {
    const double cap = state.core.system.max_total();
    const int lo = static_cast<int>(std::ceil(band.lo));
    int hi = static_cast<int>(std::floor(std::min(band.hi, cap)));
    if (!tiers.in_band(band, hi)) hi -= 1;  // hi-exclusive bands
    if (hi < lo) return false;
    const int target = lo + static_cast<int>(state.core.rng.below(static_cast<uint64_t>(hi - lo + 1)));
    for (int e = 0; e < target; ++e) {
        std::vector<CorruptionKind> options;
        for (CorruptionKind k : all_kinds())
            if (state.applicable(k)) options.push_back(k);
        if (options.empty()) return false;
        state.plant(options[state.core.rng.below(options.size())]);
    }
    return tiers.in_band(band, state.core.system.total_score(state.core.subs));
}

// Weighted plan: choose a subset of kinds whose planted weighted error sum
// puts the total inside the band; at most one op per kind.
bool plant_weighted_band(PlantState& state, const TierSpec& tiers, const TierBand& band) {
    const ScoringSystem& system = state.core.system;
    const auto kinds = all_kinds();
    std::vector<uint32_t> fits;
    for (uint32_t mask = 0; mask < (1u << kCorruptionKindCount); ++mask) {
        SubScores subs(system.size(), 0.0);
        for (size_t k = 0; k < kCorruptionKindCount; ++k) {
            if (!(mask & (1u << k))) continue;
            const int ci = state.core.kmap.criterion_index[k];
            const Criterion& c = system.criterion(static_cast<size_t>(ci));
            subs[static_cast<size_t>(ci)] =
                std::min(subs[static_cast<size_t>(ci)] + 1.0, c.max_value());
        }
        if (tiers.in_band(band, system.total_score(subs))) fits.push_back(mask);
    }
    if (fits.empty()) return false;
    const uint32_t mask = fits[state.core.rng.below(fits.size())];
    for (size_t k = 0; k < kCorruptionKindCount; ++k) {
        if (!(mask & (1u << k))) continue;
        if (!state.applicable(kinds[k])) return false;
        state.plant(kinds[k]);
    }
    return tiers.in_band(band, system.total_score(state.core.subs));
}

}  // namespace

std::vector<ReportRecord> generate_tiered(const std::vector<std::string>& references,
                                          const ScoringSystem& system, const TierSpec& tiers,
                                          uint64_t seed, const KindMap& kind_map,
                                          const Lexicons& lexicons) {
    tiers.validate(system);
    kind_map.validate(system);
    std::vector<ReportRecord> records;
    records.reserve(references.size() * tiers.bands.size());
    constexpr int kMaxAttempts = 64;

    for (size_t r = 0; r < references.size(); ++r) {
        std::string ref_id = "r" + std::string(references.size() > 9999 ? 5 : 4, '0');
        {
            const std::string num = std::to_string(r);
            ref_id.replace(ref_id.size() - num.size(), num.size(), num);
        }
        const uint64_t ref_seed = derive_seed(seed, ref_id);
        Rng band_rng(ref_seed);
        for (const TierBand& band : tiers.bands) {
            bool done = false;
            for (int attempt = 0; attempt < kMaxAttempts && !done; ++attempt) {
                PlantState state(references[r], band_rng.next(), system, kind_map, lexicons);
                const bool ok = system.formula() == TotalFormula::sum_of_errors
                                    ? plant_error_band(state, tiers, band)
                                    : plant_weighted_band(state, tiers, band);
                if (!ok) continue;
                ReportRecord rec;
                rec.id = ref_id + "#" + to_string(band.tier);
                rec.reference_text = references[r];
                rec.candidate_text = state.core.subs == SubScores(system.size(), 0.0)
                                         ? references[r]
                                         : join_sentences(state.core.sentences);
                rec.subs = state.core.subs;
                rec.total = system.total_score(rec.subs);
                rec.quality = system.quality_score(rec.subs);
                rec.tier = band.tier;
                records.push_back(std::move(rec));
                done = true;
            }
            if (!done)
                throw ConfigError("tier band '" + to_string(band.tier) + "' [" +
                                  std::to_string(band.lo) + ", " + std::to_string(band.hi) +
                                  "] unreachable for reference '" + ref_id + "'");
        }
    }
    return records;
}

std::vector<ReportRecord> generate_tiered(const std::vector<std::string>& references,
                                          const ScoringSystem& system, const TierSpec& tiers,
                                          uint64_t seed) {
    return generate_tiered(references, system, tiers, seed, KindMap::for_system(system),
                           Lexicons::builtin());
}

// ---------------------------------------------------------------------------
// Built-in reference templates

namespace {

struct Slot {
    std::vector<std::string> options;
};

std::string fill_template(const std::string& tmpl, Rng& rng) {
    std::string out;
    size_t pos = 0;
    while (pos < tmpl.size()) {
        const size_t open = tmpl.find('{', pos);
        if (open == std::string::npos) {
            out += tmpl.substr(pos);
            break;
        }
        out += tmpl.substr(pos, open - pos);
        const size_t close = tmpl.find('}', open);
        if (close == std::string::npos) throw ValidationError("unbalanced template brace");
        std::vector<std::string> options;
        size_t s = open + 1;
        while (s <= close) {
            size_t bar = tmpl.find('|', s);
            if (bar == std::string::npos || bar > close) bar = close;
            options.push_back(tmpl.substr(s, bar - s));
            s = bar + 1;
        }
        out += options[rng.below(options.size())];
        pos = close + 1;
    }
    return out;
}

}  // namespace

std::vector<std::string> builtin_references(int count, uint64_t seed) {
    const std::vector<std::string> openers = {
        "The lungs are adequately expanded",
        "Portable frontal view of the chest was obtained",
        "The patient is status post median sternotomy",
        "Endotracheal and enteric tubes have been removed",
    };
    const std::vector<std::string> findings = {
        "There is a {small|large} {left|right} pleural effusion",
        "{Mild|Severe} cardiomegaly is present",
        "There is {mild|severe} atelectasis at the {left|right} base",
        "A {small|large} consolidation is present in the {left|right} {upper|lower} lobe",
        "{Trace|Extensive} interstitial edema is noted",
        "There is {minimal|marked} blunting of the {left|right} costophrenic angle",
        "A {small|moderate} {left|right} apical opacity is seen",
        "{Mild|Moderate} peribronchial cuffing is present in the {upper|lower} zones",
    };
    const std::vector<std::string> neutrals = {
        "No pneumothorax is identified",
        "The mediastinal contours are within normal limits",
        "Pulmonary vascularity is normal",
        "The visualized osseous structures are intact",
    };
    const std::vector<std::string> comparisons = {
        "Compared with the prior study, the {left|right} pleural effusion has {increased|decreased}",
        "Interval {improvement|worsening} of the basilar atelectasis since the previous examination",
        "Compared to the prior radiograph, the pulmonary edema has {improved|progressed}",
    };
    const std::vector<std::string> closers = {
        "No acute osseous abnormality is seen",
        "The upper abdomen is unremarkable",
        "The imaged upper abdomen shows no acute finding",
    };

    std::vector<std::string> refs;
    refs.reserve(static_cast<size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i) {
        Rng rng(derive_seed(seed, "ref-" + std::to_string(i)));
        std::vector<std::string> sentences;
        sentences.push_back(fill_template(openers[rng.below(openers.size())], rng));

        std::vector<size_t> finding_order(findings.size());
        for (size_t k = 0; k < finding_order.size(); ++k) finding_order[k] = k;
        rng.shuffle(finding_order);
        const size_t n_findings = 3 + rng.below(3);  // 3..5
        for (size_t k = 0; k < n_findings; ++k)
            sentences.push_back(fill_template(findings[finding_order[k]], rng));

        sentences.push_back(neutrals[rng.below(neutrals.size())]);
        sentences.push_back(fill_template(comparisons[rng.below(comparisons.size())], rng));
        sentences.push_back(closers[rng.below(closers.size())]);
        refs.push_back(join_sentences(sentences));
    }
    return refs;
}

// ---------------------------------------------------------------------------
// Record file I/O

void write_records(const std::vector<ReportRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write record file '" + path + "'");
    for (const ReportRecord& rec : records) {
        ordered_json j;
        j["id"] = rec.id;
        j["reference_text"] = rec.reference_text;
        j["candidate_text"] = rec.candidate_text;
        ordered_json subs = ordered_json::array();
        for (double v : rec.subs) subs.push_back(static_cast<long long>(v));
        j["subs"] = std::move(subs);
        j["total"] = rec.total;
        j["tier"] = to_string(rec.tier);
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("failed writing record file '" + path + "'");
}

std::vector<ReportRecord> read_records(const std::string& path, const ScoringSystem& system) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open record file '" + path + "'");
    std::vector<ReportRecord> records;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(where + ": " + e.what());
        }
        ReportRecord rec;
        try {
            rec.id = j.at("id").get<std::string>();
            rec.reference_text = j.at("reference_text").get<std::string>();
            rec.candidate_text = j.at("candidate_text").get<std::string>();
            rec.subs = j.at("subs").get<std::vector<double>>();
            rec.total = j.at("total").get<double>();
            rec.tier = tier_from_string(j.at("tier").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(where + ": " + e.what());
        }
        system.validate_subs(rec.subs);
        const double recomputed = system.total_score(rec.subs);
        if (std::abs(recomputed - rec.total) > 1e-9)
            throw ValidationError(where + ": stored total " + std::to_string(rec.total) +
                                  " does not match recomputed " + std::to_string(recomputed));
        rec.total = recomputed;
        rec.quality = system.quality_from_total(recomputed);
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<std::string> read_reference_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open reference file '" + path + "'");
    std::vector<std::string> refs;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (!line.empty()) refs.push_back(line);
    }
    return refs;
}

CorpusSplit split_by_reference(const std::vector<ReportRecord>& records, size_t n_test,
                               uint64_t seed) {
    std::vector<std::string> ref_ids;
    std::unordered_set<std::string> seen;
    for (const ReportRecord& rec : records) {
        const std::string rid = rec.reference_id();
        if (seen.insert(rid).second) ref_ids.push_back(rid);
    }
    if (n_test >= ref_ids.size())
        throw ValidationError("test split of " + std::to_string(n_test) +
                              " references needs fewer than the " + std::to_string(ref_ids.size()) +
                              " available");
    Rng rng(derive_seed(seed, "split"));
    rng.shuffle(ref_ids);
    std::unordered_set<std::string> test_ids(ref_ids.end() - static_cast<long>(n_test),
                                             ref_ids.end());
    CorpusSplit split;
    for (const ReportRecord& rec : records) {
        if (test_ids.count(rec.reference_id()))
            split.test.push_back(rec);
        else
            split.train.push_back(rec);
    }
    return split;
}

}  // namespace remet
