#include "remet/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <charconv>
#include <fstream>
#include <sstream>

#include "remet/errors.hpp"
#include "remet/rng.hpp"

namespace remet {

void FeatureSpec::validate() const {
    if (dim < 8) throw ValidationError("feature dim must be >= 8");
    if (variant == FeatureVariant::hashed_ngrams) {
        if ((dim & (dim - 1)) != 0)
            throw ValidationError("hashed_ngrams dim must be a power of two, got " +
                                  std::to_string(dim));
        if (word_n.empty() && char_n.empty())
            throw ValidationError("hashed_ngrams needs at least one n-gram order");
        for (int n : word_n)
            if (n < 1) throw ValidationError("word n-gram orders must be >= 1");
        for (int n : char_n)
            if (n < 1) throw ValidationError("char n-gram orders must be >= 1");
    }
}

namespace {

constexpr char kGramJoin = '\x1f';

// Lowercase, collapse runs of whitespace to single spaces, trim.
std::string normalize_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

std::vector<std::string> word_tokens(const std::string& normalized) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : normalized) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur.push_back(ch);
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

uint64_t gram_hash(std::string_view gram, HashBlock block) {
    return mix64(fnv1a64(gram) ^ static_cast<uint64_t>(block));
}

}  // namespace

size_t bucket_of(std::string_view gram, HashBlock block, const FeatureSpec& spec) {
    return static_cast<size_t>(gram_hash(gram, block) & (static_cast<uint64_t>(spec.dim) - 1));
}

double sign_of(std::string_view gram, HashBlock block) {
    return (gram_hash(gram, block) >> 63) ? -1.0 : 1.0;
}

std::vector<std::string> extract_grams(std::string_view text, const FeatureSpec& spec) {
    const std::string normalized = normalize_text(text);
    std::vector<std::string> grams;
    const std::vector<std::string> tokens = word_tokens(normalized);
    for (int n : spec.word_n) {
        if (tokens.size() < static_cast<size_t>(n)) continue;
        for (size_t i = 0; i + n <= tokens.size(); ++i) {
            std::string g = "w:";
            for (int k = 0; k < n; ++k) {
                if (k) g.push_back(kGramJoin);
                g += tokens[i + k];
            }
            grams.push_back(std::move(g));
        }
    }
    for (int n : spec.char_n) {
        if (normalized.size() < static_cast<size_t>(n)) continue;
        for (size_t i = 0; i + n <= normalized.size(); ++i)
            grams.push_back("c:" + normalized.substr(i, n));
    }
    return grams;
}

std::vector<double> tf_hash_block(std::string_view text, HashBlock block, const FeatureSpec& spec) {
    std::vector<double> v(static_cast<size_t>(spec.dim), 0.0);
    for (const std::string& g : extract_grams(text, spec))
        v[bucket_of(g, block, spec)] += sign_of(g, block);
    return v;
}

Featurizer::Featurizer(FeatureSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

Featurizer::Featurizer(FeatureSpec spec, VectorTable external)
    : spec_(std::move(spec)), external_(std::move(external)) {
    spec_.validate();
    for (const auto& [id, row] : external_)
        if (row.size() != static_cast<size_t>(spec_.dim))
            throw ValidationError("external vector for '" + id + "' has dim " +
                                  std::to_string(row.size()) + ", expected " +
                                  std::to_string(spec_.dim));
}

FeatureVector Featurizer::featurize(std::string_view reference, std::string_view candidate) const {
    if (spec_.variant != FeatureVariant::hashed_ngrams)
        throw ConfigError("featurize(reference, candidate) requires the hashed_ngrams variant");
    if (normalize_text(reference).empty()) throw ValidationError("reference text is empty");
    if (normalize_text(candidate).empty()) throw ValidationError("candidate text is empty");

    std::vector<double> v(static_cast<size_t>(spec_.dim), 0.0);
    auto fold = [&](std::string_view text, HashBlock block, double scale) {
        for (const std::string& g : extract_grams(text, spec_))
            v[bucket_of(g, block, spec_)] += scale * sign_of(g, block);
    };
    fold(candidate, HashBlock::candidate, 1.0);
    fold(reference, HashBlock::reference, 1.0);
    fold(candidate, HashBlock::difference, 1.0);
    fold(reference, HashBlock::difference, -1.0);

    double norm_sq = 0;
    for (double x : v) norm_sq += x * x;
    if (norm_sq == 0) throw ValidationError("texts produced no features");
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : v) x *= inv;
    return FeatureVector{std::move(v)};
}

FeatureVector Featurizer::featurize_for(std::string_view record_id, std::string_view reference,
                                        std::string_view candidate) const {
    if (spec_.variant == FeatureVariant::hashed_ngrams) return featurize(reference, candidate);
    auto it = external_.find(std::string(record_id));
    if (it == external_.end())
        throw LookupError("no external feature vector for record '" + std::string(record_id) + "'");
    return FeatureVector{it->second};
}

VectorTable load_external(const std::string& path, int dim) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open external vector file '" + path + "'");
    VectorTable table;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected id<TAB>values");
        std::string id = line.substr(0, tab);
        std::vector<double> row;
        size_t pos = tab + 1;
        while (pos <= line.size()) {
            size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            double value = 0;
            const char* first = line.data() + pos;
            const char* last = line.data() + comma;
            auto [ptr, ec] = std::from_chars(first, last, value);
            if (ec != std::errc() || ptr != last)
                throw ParseError(path + ":" + std::to_string(lineno) + ": bad float in row '" + id +
                                 "'");
            row.push_back(value);
            pos = comma + 1;
            if (comma == line.size()) break;
        }
        if (row.size() != static_cast<size_t>(dim))
            throw ValidationError("external vector row '" + id + "' has dim " +
                                  std::to_string(row.size()) + ", expected " + std::to_string(dim));
        table.emplace(std::move(id), std::move(row));
    }
    return table;
}

void save_external(const VectorTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write external vector file '" + path + "'");
    // Deterministic order for diff-stability.
    std::vector<const std::string*> ids;
    ids.reserve(table.size());
    for (const auto& [id, _] : table) ids.push_back(&id);
    std::sort(ids.begin(), ids.end(), [](const auto* a, const auto* b) { return *a < *b; });
    out.precision(17);
    for (const std::string* id : ids) {
        out << *id << '\t';
        const std::vector<double>& row = table.at(*id);
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << row[i];
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing external vector file '" + path + "'");
}

}  // namespace remet
