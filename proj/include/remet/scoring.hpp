#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace remet {

enum class ScoreKind { error_count, binary_error };
enum class TotalFormula { sum_of_errors, hundred_minus_weighted_sum };
enum class Orientation { higher_is_better, lower_is_better };

std::string to_string(ScoreKind k);
std::string to_string(TotalFormula f);

struct Criterion {
    std::string id;
    std::string description;
    ScoreKind kind = ScoreKind::error_count;
    int max_count = 2;    // only meaningful for error_count
    double weight = 1.0;  // 1.0 for error-count systems, W_i for weighted ones

    // Largest legal sub-score under this criterion.
    double max_value() const { return kind == ScoreKind::error_count ? max_count : 1.0; }

    bool operator==(const Criterion&) const = default;
};

// Per-criterion sub-scores aligned with a system's criteria list.
using SubScores = std::vector<double>;

// A named set of criteria plus the total-score formula. Construction
// validates the definition; instances are immutable afterwards.
class ScoringSystem {
public:
    ScoringSystem(std::string name, TotalFormula formula, std::vector<Criterion> criteria);

    const std::string& name() const { return name_; }
    TotalFormula formula() const { return formula_; }
    Orientation orientation() const;
    const std::vector<Criterion>& criteria() const { return criteria_; }
    size_t size() const { return criteria_.size(); }
    const Criterion& criterion(size_t j) const { return criteria_[j]; }
    int criterion_index(std::string_view id) const;  // -1 when absent

    double min_total() const { return min_total_; }
    double max_total() const { return max_total_; }
    double quality_range_width() const { return quality_width_; }

    // Throws ValidationError naming the offending criterion.
    void validate_subs(const SubScores& subs) const;

    double total_score(const SubScores& subs) const;

    // Total mapped so that higher always means better; error-count totals
    // are flipped to max_total - total.
    double quality_score(const SubScores& subs) const;
    double quality_from_total(double total) const;

    bool operator==(const ScoringSystem& other) const;

private:
    std::string name_;
    TotalFormula formula_;
    std::vector<Criterion> criteria_;
    double min_total_ = 0;
    double max_total_ = 0;
    double quality_width_ = 0;
};

// Built-in presets: "radcliq6" (six error-count categories, total = sum of
// counts) and "mrscore7" (seven weighted yes/no items, total = 100 minus the
// weighted error sum).
ScoringSystem preset_system(const std::string& name);
std::vector<std::string> preset_names();

// JSON definition document <-> system. load validates and reports the path
// to the offending field; serialize(load(doc)) round-trips.
ScoringSystem load_system(std::istream& in);
ScoringSystem load_system_file(const std::string& path);
std::string serialize_system(const ScoringSystem& system);
void save_system_file(const ScoringSystem& system, const std::string& path);

// Resolves a --system argument: preset name first, then a file path.
ScoringSystem resolve_system(const std::string& name_or_path);

}  // namespace remet
