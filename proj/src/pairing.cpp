#include "remet/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "remet/errors.hpp"

namespace remet {

using ordered_json = nlohmann::ordered_json;

std::vector<ReportPair> make_pairs(const std::vector<ReportRecord>& records,
                                   const ScoringSystem& system) {
    // Group by reference id, preserving a deterministic group order.
    std::map<std::string, std::vector<const ReportRecord*>> groups;
    for (const ReportRecord& rec : records) {
        system.validate_subs(rec.subs);
        const double total = system.total_score(rec.subs);
        if (std::abs(total - rec.total) > 1e-9)
            throw ValidationError("record '" + rec.id + "' total " + std::to_string(rec.total) +
                                  " does not match its sub-scores under system '" + system.name() +
                                  "'");
        groups[rec.reference_id()].push_back(&rec);
    }

    std::vector<ReportPair> pairs;
    for (const auto& [ref_id, group] : groups) {
        for (const ReportRecord* rec : group)
            if (rec->reference_text != group.front()->reference_text)
                throw ValidationError("records in group '" + ref_id +
                                      "' disagree on the reference text");
        for (size_t a = 0; a < group.size(); ++a) {
            for (size_t b = a + 1; b < group.size(); ++b) {
                const double qa = system.quality_score(group[a]->subs);
                const double qb = system.quality_score(group[b]->subs);
                if (qa == qb) continue;  // ties produce no pair
                const ReportRecord& win = qa > qb ? *group[a] : *group[b];
                const ReportRecord& lose = qa > qb ? *group[b] : *group[a];
                ReportPair pair;
                pair.reference_id = ref_id;
                pair.reference_text = win.reference_text;
                pair.accepted = win;
                pair.rejected = lose;
                pair.sub_margins.resize(system.size());
                for (size_t j = 0; j < system.size(); ++j) {
                    // Both formulas count errors, so the quality-oriented,
                    // weight-adjusted margin is (rejected - accepted) errors
                    // times the criterion weight.
                    pair.sub_margins[j] =
                        (lose.subs[j] - win.subs[j]) * system.criterion(j).weight;
                }
                pair.total_margin =
                    system.quality_score(win.subs) - system.quality_score(lose.subs);
                pairs.push_back(std::move(pair));
            }
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const ReportPair& x, const ReportPair& y) {
        if (x.reference_id != y.reference_id) return x.reference_id < y.reference_id;
        if (x.total_margin != y.total_margin) return x.total_margin > y.total_margin;
        if (x.accepted.id != y.accepted.id) return x.accepted.id < y.accepted.id;
        return x.rejected.id < y.rejected.id;
    });
    return pairs;
}

ReportPair margin_normalize(const ReportPair& pair, const ScoringSystem& system) {
    if (pair.normalized)
        throw ValidationError("pair (" + pair.accepted.id + ", " + pair.rejected.id +
                              ") is already normalized");
    const double width = system.quality_range_width();
    if (!(width > 0)) throw ConfigError("system '" + system.name() + "' has a zero-width quality range");
    ReportPair out = pair;
    out.total_margin = pair.total_margin / width;
    for (double& m : out.sub_margins) m /= width;
    out.normalized = true;
    return out;
}

std::vector<ReportPair> margin_normalize_all(const std::vector<ReportPair>& pairs,
                                             const ScoringSystem& system) {
    std::vector<ReportPair> out;
    out.reserve(pairs.size());
    for (const ReportPair& p : pairs) out.push_back(margin_normalize(p, system));
    return out;
}

void write_pairs(const std::vector<ReportPair>& pairs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write pair file '" + path + "'");
    for (const ReportPair& p : pairs) {
        ordered_json j;
        j["reference_id"] = p.reference_id;
        j["reference_text"] = p.reference_text;
        j["accepted_id"] = p.accepted.id;
        j["accepted_text"] = p.accepted.candidate_text;
        j["rejected_id"] = p.rejected.id;
        j["rejected_text"] = p.rejected.candidate_text;
        j["sub_margins"] = p.sub_margins;
        j["total_margin"] = p.total_margin;
        j["normalized"] = p.normalized;
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("failed writing pair file '" + path + "'");
}

std::vector<ReportPair> read_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open pair file '" + path + "'");
    std::vector<ReportPair> pairs;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(where + ": " + e.what());
        }
        ReportPair p;
        try {
            p.reference_id = j.value("reference_id", std::string());
            p.reference_text = j.at("reference_text").get<std::string>();
            p.accepted.id = j.value("accepted_id", std::string());
            p.accepted.candidate_text = j.at("accepted_text").get<std::string>();
            p.accepted.reference_text = p.reference_text;
            p.rejected.id = j.value("rejected_id", std::string());
            p.rejected.candidate_text = j.at("rejected_text").get<std::string>();
            p.rejected.reference_text = p.reference_text;
            p.sub_margins = j.at("sub_margins").get<std::vector<double>>();
            p.total_margin = j.at("total_margin").get<double>();
            p.normalized = j.at("normalized").get<bool>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(where + ": " + e.what());
        }
        if (!(p.total_margin > 0))
            throw ValidationError(where + ": total_margin must be positive");
        pairs.push_back(std::move(p));
    }
    return pairs;
}

}  // namespace remet
