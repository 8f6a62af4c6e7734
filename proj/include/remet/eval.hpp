#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "remet/corpus.hpp"
#include "remet/features.hpp"
#include "remet/model.hpp"
#include "remet/scoring.hpp"

namespace remet {

struct Correlation {
    double coefficient = 0;
    double p_value = 1;
};

// Kendall's tau-b with tie correction; p from the normal approximation on
// the tie-adjusted variance. Throws on all-tied input instead of returning
// NaN.
Correlation kendall_tau(std::span<const double> x, std::span<const double> y);

// Spearman's rho as Pearson over mid-ranks; p from the t approximation
// with n-2 degrees of freedom.
Correlation spearman(std::span<const double> x, std::span<const double> y);

// Exact permutation p-values, feasible for n <= 10.
double kendall_tau_perm_p(std::span<const double> x, std::span<const double> y);
double spearman_perm_p(std::span<const double> x, std::span<const double> y);

// BLEU with uniform 4-gram weights, brevity penalty, and add-epsilon
// smoothing on zero higher-order counts; returns exactly 0 when not even a
// unigram matches.
double bleu4(std::string_view reference, std::string_view candidate);

// ROUGE-L F-measure (harmonic mean of LCS precision and recall) over
// word tokens.
double rouge_l(std::string_view reference, std::string_view candidate);

// Values flipped to quality orientation (higher = better) when needed.
std::vector<double> quality_orient(std::span<const double> values, Orientation orientation);

struct CriterionCorrelation {
    std::string id;
    double tau = 0, tau_p = 1;
    double rho = 0, rho_p = 1;
};

struct CriterionAccuracy {
    std::string id;
    double accuracy = 0;
    double threshold = 0;
};

struct EvalReport {
    std::string metric_name;
    double kendall = 0, kendall_p = 1;
    double spearman_rho = 0, spearman_p = 1;
    size_t n = 0;
    std::vector<CriterionCorrelation> per_criterion;
    std::vector<CriterionAccuracy> per_criterion_accuracy;
};

// Total-score correlations of one metric against human/planted scores.
// Both inputs must already be in quality orientation.
EvalReport evaluate_metric(const std::string& metric_name, std::span<const double> scores,
                           std::span<const double> human);

// Per-criterion accuracy of binarized predictions against truth, for
// binary_error systems: accuracy_j = matches_j / n.
std::vector<double> subscore_accuracy(const std::vector<SubScores>& predicted,
                                      const std::vector<SubScores>& truth,
                                      const ScoringSystem& system);

// Per-criterion reward -> binary-error thresholds, fitted by maximizing
// accuracy on a fit split. A reward below the threshold predicts an error.
std::vector<double> fit_reward_thresholds(const std::vector<std::vector<double>>& rewards,
                                          const std::vector<SubScores>& truth,
                                          const ScoringSystem& system);
std::vector<SubScores> binarize_rewards(const std::vector<std::vector<double>>& rewards,
                                        std::span<const double> thresholds);

// Full harness: scores every record with the model and correlates against
// human quality scores (defaults to the records' planted quality). Adds
// per-criterion correlations for error-count systems and fitted-threshold
// accuracies for binary systems (fit on the first fit_fraction of records,
// measured on the rest).
struct EvalOptions {
    std::optional<std::vector<double>> human_quality;
    double fit_fraction = 0.5;
    bool per_criterion = true;
};
EvalReport evaluate_model(const RewardModel& model, const Featurizer& featurizer,
                          const std::vector<ReportRecord>& records, const ScoringSystem& system,
                          const EvalOptions& options = {});

// One row of a metric comparison table.
struct MetricRow {
    std::string metric_name;
    double kendall = 0, kendall_p = 1;
    double spearman_rho = 0, spearman_p = 1;
};
std::string render_comparison_text(const std::vector<MetricRow>& rows, size_t n);
std::string render_comparison_csv(const std::vector<MetricRow>& rows);

std::string render_eval_text(const EvalReport& report);
std::string render_eval_csv(const EvalReport& report);

}  // namespace remet
