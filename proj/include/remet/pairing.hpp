#pragma once

#include <string>
#include <vector>

#include "remet/corpus.hpp"
#include "remet/scoring.hpp"

namespace remet {

// One accepted/rejected training pair sharing a reference. Margins are kept
// in quality orientation (positive sub-margin = accepted is better on that
// criterion) and, for weighted systems, in weighted units, so the total
// margin equals the sum of the sub-margins for both formulas.
struct ReportPair {
    std::string reference_id;
    std::string reference_text;
    ReportRecord accepted;
    ReportRecord rejected;
    std::vector<double> sub_margins;
    double total_margin = 0;
    bool normalized = false;
};

// All unordered pairs with strictly different quality inside each reference
// group; ties contribute nothing. Output sorted by reference id, then
// descending total margin, then record ids.
std::vector<ReportPair> make_pairs(const std::vector<ReportRecord>& records,
                                   const ScoringSystem& system);

// Divides every margin by the system's quality-range width, putting the
// total margin in (0, 1]. Refuses to run twice on the same pair.
ReportPair margin_normalize(const ReportPair& pair, const ScoringSystem& system);
std::vector<ReportPair> margin_normalize_all(const std::vector<ReportPair>& pairs,
                                             const ScoringSystem& system);

// Pair files: one JSON object per line, fields in fixed order
// {reference_id, reference_text, accepted_id, accepted_text, rejected_id,
// rejected_text, sub_margins, total_margin, normalized}. The id fields are
// optional on read (older or hand-built files may omit them).
void write_pairs(const std::vector<ReportPair>& pairs, const std::string& path);
std::vector<ReportPair> read_pairs(const std::string& path);

}  // namespace remet
