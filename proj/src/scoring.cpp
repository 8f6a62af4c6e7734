#include "remet/scoring.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "remet/errors.hpp"

namespace remet {

using ordered_json = nlohmann::ordered_json;

std::string to_string(ScoreKind k) {
    return k == ScoreKind::error_count ? "error_count" : "binary_error";
}

std::string to_string(TotalFormula f) {
    return f == TotalFormula::sum_of_errors ? "sum_of_errors" : "hundred_minus_weighted_sum";
}

ScoringSystem::ScoringSystem(std::string name, TotalFormula formula,
                             std::vector<Criterion> criteria)
    : name_(std::move(name)), formula_(formula), criteria_(std::move(criteria)) {
    if (criteria_.empty()) throw ValidationError("scoring system needs at least one criterion");
    std::set<std::string> ids;
    for (size_t j = 0; j < criteria_.size(); ++j) {
        const Criterion& c = criteria_[j];
        if (c.id.empty())
            throw ValidationError("criteria[" + std::to_string(j) + "].id: must be non-empty");
        if (!ids.insert(c.id).second)
            throw ValidationError("criteria[" + std::to_string(j) + "].id: duplicate id '" + c.id + "'");
        if (!(c.weight >= 0) || !std::isfinite(c.weight))
            throw ValidationError("criteria[" + std::to_string(j) + "].weight: must be >= 0");
        if (c.kind == ScoreKind::error_count && c.max_count < 0)
            throw ValidationError("criteria[" + std::to_string(j) + "].max_count: must be >= 0");
        if (formula_ == TotalFormula::sum_of_errors && c.weight != 1.0)
            throw ValidationError("criteria[" + std::to_string(j) +
                                  "].weight: sum_of_errors systems use weight 1.0");
    }
    if (formula_ == TotalFormula::sum_of_errors) {
        double cap = 0;
        for (const Criterion& c : criteria_) cap += c.max_value();
        min_total_ = 0;
        max_total_ = cap;
    } else {
        double weighted_cap = 0;
        for (const Criterion& c : criteria_) weighted_cap += c.weight * c.max_value();
        min_total_ = 100.0 - weighted_cap;
        max_total_ = 100.0;
    }
    quality_width_ = max_total_ - min_total_;
}

Orientation ScoringSystem::orientation() const {
    return formula_ == TotalFormula::sum_of_errors ? Orientation::lower_is_better
                                                   : Orientation::higher_is_better;
}

int ScoringSystem::criterion_index(std::string_view id) const {
    for (size_t j = 0; j < criteria_.size(); ++j)
        if (criteria_[j].id == id) return static_cast<int>(j);
    return -1;
}

void ScoringSystem::validate_subs(const SubScores& subs) const {
    if (subs.size() != criteria_.size())
        throw ValidationError("sub-scores length " + std::to_string(subs.size()) +
                              " does not match criteria count " + std::to_string(criteria_.size()));
    for (size_t j = 0; j < criteria_.size(); ++j) {
        const Criterion& c = criteria_[j];
        const double v = subs[j];
        if (!std::isfinite(v))
            throw ValidationError("sub-score for criterion '" + c.id + "' is not finite");
        if (v != std::floor(v))
            throw ValidationError("sub-score for criterion '" + c.id + "' must be integral, got " +
                                  std::to_string(v));
        if (v < 0 || v > c.max_value())
            throw ValidationError("sub-score for criterion '" + c.id + "' out of range [0, " +
                                  std::to_string(c.max_value()) + "]: " + std::to_string(v));
    }
}

double ScoringSystem::total_score(const SubScores& subs) const {
    validate_subs(subs);
    if (formula_ == TotalFormula::sum_of_errors) {
        double s = 0;
        for (double v : subs) s += v;
        return s;
    }
    double weighted = 0;
    for (size_t j = 0; j < criteria_.size(); ++j) weighted += subs[j] * criteria_[j].weight;
    return 100.0 - weighted;
}

double ScoringSystem::quality_from_total(double total) const {
    return orientation() == Orientation::higher_is_better ? total : max_total_ - total;
}

double ScoringSystem::quality_score(const SubScores& subs) const {
    return quality_from_total(total_score(subs));
}

bool ScoringSystem::operator==(const ScoringSystem& other) const {
    return name_ == other.name_ && formula_ == other.formula_ && criteria_ == other.criteria_;
}

namespace {

Criterion count_criterion(std::string id, std::string description) {
    Criterion c;
    c.id = std::move(id);
    c.description = std::move(description);
    c.kind = ScoreKind::error_count;
    c.max_count = 2;
    c.weight = 1.0;
    return c;
}

Criterion binary_criterion(std::string id, std::string description, double weight) {
    Criterion c;
    c.id = std::move(id);
    c.description = std::move(description);
    c.kind = ScoreKind::binary_error;
    c.max_count = 1;
    c.weight = weight;
    return c;
}

}  // namespace

ScoringSystem preset_system(const std::string& name) {
    if (name == "radcliq6") {
        return ScoringSystem(
            "radcliq6", TotalFormula::sum_of_errors,
            {count_criterion("false_finding", "finding reported that the reference does not support"),
             count_criterion("omit_finding", "finding present in the reference left out"),
             count_criterion("wrong_location", "finding placed at the wrong location or side"),
             count_criterion("wrong_severity", "finding severity misstated"),
             count_criterion("spurious_comparison", "comparison mentioned that the reference lacks"),
             count_criterion("omit_comparison", "comparison to a previous study left out")});
    }
    if (name == "mrscore7") {
        return ScoringSystem(
            "mrscore7", TotalFormula::hundred_minus_weighted_sum,
            {binary_criterion("impression_consistency", "impression disagrees with the reference", 30),
             binary_criterion("impression_organs", "impression names the wrong organs", 20),
             binary_criterion("lesion_description", "lesions described incorrectly", 20),
             binary_criterion("clinical_history", "clinical history misused", 10),
             binary_criterion("completeness", "content missing relative to the reference", 10),
             binary_criterion("grammar", "grammatical errors", 5),
             binary_criterion("medical_terminology", "incorrect medical terminology", 5)});
    }
    throw ValidationError("unknown preset scoring system '" + name + "'");
}

std::vector<std::string> preset_names() { return {"radcliq6", "mrscore7"}; }

namespace {

ScoringSystem system_from_json(const ordered_json& doc) {
    if (!doc.is_object()) throw ValidationError("system definition: top level must be an object");
    if (!doc.contains("name") || !doc["name"].is_string())
        throw ValidationError("name: required string field");
    if (!doc.contains("formula") || !doc["formula"].is_string())
        throw ValidationError("formula: required string field");
    const std::string formula_s = doc["formula"].get<std::string>();
    TotalFormula formula;
    if (formula_s == "sum_of_errors")
        formula = TotalFormula::sum_of_errors;
    else if (formula_s == "hundred_minus_weighted_sum")
        formula = TotalFormula::hundred_minus_weighted_sum;
    else
        throw ValidationError("formula: unknown formula '" + formula_s + "'");
    if (!doc.contains("criteria") || !doc["criteria"].is_array())
        throw ValidationError("criteria: required array field");

    std::vector<Criterion> criteria;
    size_t j = 0;
    for (const auto& cj : doc["criteria"]) {
        const std::string path = "criteria[" + std::to_string(j) + "]";
        if (!cj.is_object()) throw ValidationError(path + ": must be an object");
        Criterion c;
        if (!cj.contains("id") || !cj["id"].is_string())
            throw ValidationError(path + ".id: required string field");
        c.id = cj["id"].get<std::string>();
        c.description = cj.value("description", std::string());
        const std::string kind_s = cj.value("kind", std::string("error_count"));
        if (kind_s == "error_count")
            c.kind = ScoreKind::error_count;
        else if (kind_s == "binary_error")
            c.kind = ScoreKind::binary_error;
        else
            throw ValidationError(path + ".kind: unknown kind '" + kind_s + "'");
        if (cj.contains("max_count")) {
            if (!cj["max_count"].is_number_integer())
                throw ValidationError(path + ".max_count: must be an integer");
            c.max_count = cj["max_count"].get<int>();
        } else {
            c.max_count = c.kind == ScoreKind::error_count ? 2 : 1;
        }
        if (cj.contains("weight")) {
            if (!cj["weight"].is_number())
                throw ValidationError(path + ".weight: must be a number");
            c.weight = cj["weight"].get<double>();
            if (c.weight < 0) throw ValidationError(path + ".weight: must be >= 0");
        }
        criteria.push_back(std::move(c));
        ++j;
    }
    return ScoringSystem(doc["name"].get<std::string>(), formula, std::move(criteria));
}

}  // namespace

ScoringSystem load_system(std::istream& in) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("system definition: ") + e.what());
    }
    return system_from_json(doc);
}

ScoringSystem load_system_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open system definition '" + path + "'");
    return load_system(in);
}

std::string serialize_system(const ScoringSystem& system) {
    ordered_json doc;
    doc["name"] = system.name();
    doc["formula"] = to_string(system.formula());
    doc["criteria"] = ordered_json::array();
    for (const Criterion& c : system.criteria()) {
        ordered_json cj;
        cj["id"] = c.id;
        cj["description"] = c.description;
        cj["kind"] = to_string(c.kind);
        cj["max_count"] = c.max_count;
        cj["weight"] = c.weight;
        doc["criteria"].push_back(std::move(cj));
    }
    return doc.dump(2) + "\n";
}

void save_system_file(const ScoringSystem& system, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write system definition '" + path + "'");
    out << serialize_system(system);
    if (!out) throw IoError("failed writing system definition '" + path + "'");
}

ScoringSystem resolve_system(const std::string& name_or_path) {
    for (const std::string& p : preset_names())
        if (p == name_or_path) return preset_system(p);
    return load_system_file(name_or_path);
}

}  // namespace remet
