#include "remet/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "remet/errors.hpp"

namespace remet {

namespace {

void check_xy(std::span<const double> x, std::span<const double> y, size_t min_n) {
    if (x.size() != y.size())
        throw ValidationError("correlation inputs differ in length: " + std::to_string(x.size()) +
                              " vs " + std::to_string(y.size()));
    if (x.size() < min_n)
        throw ValidationError("correlation needs at least " + std::to_string(min_n) +
                              " samples, got " + std::to_string(x.size()));
    for (double v : x)
        if (!std::isfinite(v)) throw NumericError("correlation input contains a non-finite value");
    for (double v : y)
        if (!std::isfinite(v)) throw NumericError("correlation input contains a non-finite value");
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double two_sided_normal_p(double z) {
    return std::min(1.0, std::max(0.0, 2.0 * normal_sf(std::abs(z))));
}

// Lentz's continued fraction for the regularized incomplete beta.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

double ibeta(double a, double b, double x) {
    if (x <= 0) return 0.0;
    if (x >= 1) return 1.0;
    const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                               a * std::log(x) + b * std::log(1.0 - x));
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

// Two-sided p of a t statistic with nu degrees of freedom.
double two_sided_t_p(double t, double nu) {
    if (!std::isfinite(t)) return 0.0;
    return std::min(1.0, std::max(0.0, ibeta(nu / 2.0, 0.5, nu / (nu + t * t))));
}

// Sum of t*(t-1)... over tied groups.
struct TieStats {
    double pairs = 0;     // sum t(t-1)/2
    double v_adj = 0;     // sum t(t-1)(2t+5)
    double prod1 = 0;     // sum t(t-1)
    double prod2 = 0;     // sum t(t-1)(t-2)
};

TieStats tie_stats(std::span<const double> v) {
    std::map<double, long long> counts;
    for (double x : v) counts[x] += 1;
    TieStats s;
    for (const auto& [_, t] : counts) {
        const double td = static_cast<double>(t);
        s.pairs += td * (td - 1) / 2.0;
        s.v_adj += td * (td - 1) * (2 * td + 5);
        s.prod1 += td * (td - 1);
        s.prod2 += td * (td - 1) * (td - 2);
    }
    return s;
}

long long concordant_minus_discordant(std::span<const double> x, std::span<const double> y) {
    long long c = 0, d = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        for (size_t j = i + 1; j < x.size(); ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            const double prod = dx * dy;
            if (prod > 0) ++c;
            else if (prod < 0) ++d;
        }
    }
    return c - d;
}

std::vector<double> midranks(std::span<const double> v) {
    const size_t n = v.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    const size_t n = x.size();
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0 || syy == 0)
        throw ValidationError("correlation undefined: an input has zero rank variance");
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

Correlation kendall_tau(std::span<const double> x, std::span<const double> y) {
    check_xy(x, y, 2);
    const double n = static_cast<double>(x.size());
    const TieStats tx = tie_stats(x);
    const TieStats ty = tie_stats(y);
    const double n0 = n * (n - 1) / 2.0;
    if (tx.pairs == n0 || ty.pairs == n0)
        throw ValidationError("correlation undefined: an input is entirely tied");
    const long long cmd = concordant_minus_discordant(x, y);
    const double denom = std::sqrt((n0 - tx.pairs) * (n0 - ty.pairs));
    Correlation out;
    out.coefficient = static_cast<double>(cmd) / denom;

    // Tie-adjusted variance of C - D under independence.
    const double v0 = n * (n - 1) * (2 * n + 5);
    double var = (v0 - tx.v_adj - ty.v_adj) / 18.0 + tx.prod1 * ty.prod1 / (2.0 * n * (n - 1));
    if (n > 2) var += tx.prod2 * ty.prod2 / (9.0 * n * (n - 1) * (n - 2));
    if (var <= 0) {
        out.p_value = 1.0;
        return out;
    }
    out.p_value = two_sided_normal_p(static_cast<double>(cmd) / std::sqrt(var));
    return out;
}

Correlation spearman(std::span<const double> x, std::span<const double> y) {
    check_xy(x, y, 3);
    const std::vector<double> rx = midranks(x);
    const std::vector<double> ry = midranks(y);
    Correlation out;
    out.coefficient = pearson(rx, ry);
    const double n = static_cast<double>(x.size());
    const double r2 = 1.0 - out.coefficient * out.coefficient;
    if (r2 <= 0) {
        out.p_value = 0.0;
        return out;
    }
    const double t = out.coefficient * std::sqrt((n - 2.0) / r2);
    out.p_value = two_sided_t_p(t, n - 2.0);
    return out;
}

double kendall_tau_perm_p(std::span<const double> x, std::span<const double> y) {
    check_xy(x, y, 2);
    if (x.size() > 10)
        throw ValidationError("permutation p-value limited to n <= 10, got " +
                              std::to_string(x.size()));
    const long long observed = std::llabs(concordant_minus_discordant(x, y));
    std::vector<double> perm(y.begin(), y.end());
    std::sort(perm.begin(), perm.end());
    long long hits = 0, total = 0;
    do {
        if (std::llabs(concordant_minus_discordant(x, perm)) >= observed) ++hits;
        ++total;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(hits) / static_cast<double>(total);
}

double spearman_perm_p(std::span<const double> x, std::span<const double> y) {
    check_xy(x, y, 3);
    if (x.size() > 10)
        throw ValidationError("permutation p-value limited to n <= 10, got " +
                              std::to_string(x.size()));
    const std::vector<double> rx = midranks(x);
    std::vector<double> ry = midranks(y);
    const double observed = std::abs(pearson(rx, ry));
    std::sort(ry.begin(), ry.end());
    long long hits = 0, total = 0;
    do {
        if (std::abs(pearson(rx, ry)) >= observed - 1e-12) ++hits;
        ++total;
    } while (std::next_permutation(ry.begin(), ry.end()));
    return static_cast<double>(hits) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// Baseline text metrics

namespace {

std::vector<std::string> metric_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        const unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

std::map<std::string, long long> ngram_counts(const std::vector<std::string>& tokens, size_t n) {
    std::map<std::string, long long> counts;
    if (tokens.size() < n) return counts;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key;
        for (size_t k = 0; k < n; ++k) {
            if (k) key.push_back('\x1f');
            key += tokens[i + k];
        }
        counts[key] += 1;
    }
    return counts;
}

}  // namespace

double bleu4(std::string_view reference, std::string_view candidate) {
    constexpr double kEps = 1e-9;
    const auto ref_tokens = metric_tokens(reference);
    const auto cand_tokens = metric_tokens(candidate);
    if (ref_tokens.empty()) throw ValidationError("reference has no tokens");
    if (cand_tokens.empty()) throw ValidationError("candidate has no tokens");

    double log_sum = 0;
    for (size_t n = 1; n <= 4; ++n) {
        const auto ref_counts = ngram_counts(ref_tokens, n);
        const auto cand_counts = ngram_counts(cand_tokens, n);
        long long matches = 0, total = 0;
        for (const auto& [gram, count] : cand_counts) {
            total += count;
            const auto it = ref_counts.find(gram);
            if (it != ref_counts.end()) matches += std::min(count, it->second);
        }
        if (n == 1 && matches == 0) return 0.0;  // nothing shared at all
        double p;
        if (total == 0)
            p = kEps;  // candidate too short for this order
        else
            p = matches > 0 ? static_cast<double>(matches) / static_cast<double>(total)
                            : kEps / static_cast<double>(total);
        log_sum += 0.25 * std::log(p);
    }
    const double ref_len = static_cast<double>(ref_tokens.size());
    const double cand_len = static_cast<double>(cand_tokens.size());
    const double bp = cand_len >= ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
    return bp * std::exp(log_sum);
}

double rouge_l(std::string_view reference, std::string_view candidate) {
    const auto ref_tokens = metric_tokens(reference);
    const auto cand_tokens = metric_tokens(candidate);
    if (ref_tokens.empty()) throw ValidationError("reference has no tokens");
    if (cand_tokens.empty()) throw ValidationError("candidate has no tokens");

    const size_t nr = ref_tokens.size(), nc = cand_tokens.size();
    std::vector<size_t> prev(nc + 1, 0), cur(nc + 1, 0);
    for (size_t i = 1; i <= nr; ++i) {
        for (size_t j = 1; j <= nc; ++j) {
            if (ref_tokens[i - 1] == cand_tokens[j - 1])
                cur[j] = prev[j - 1] + 1;
            else
                cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    const double lcs = static_cast<double>(prev[nc]);
    if (lcs == 0) return 0.0;
    const double precision = lcs / static_cast<double>(nc);
    const double recall = lcs / static_cast<double>(nr);
    return 2.0 * precision * recall / (precision + recall);
}

std::vector<double> quality_orient(std::span<const double> values, Orientation orientation) {
    std::vector<double> out(values.begin(), values.end());
    if (orientation == Orientation::lower_is_better)
        for (double& v : out) v = -v;
    return out;
}

// ---------------------------------------------------------------------------
// Harness

EvalReport evaluate_metric(const std::string& metric_name, std::span<const double> scores,
                           std::span<const double> human) {
    check_xy(scores, human, 3);
    EvalReport report;
    report.metric_name = metric_name;
    report.n = scores.size();
    const Correlation kt = kendall_tau(scores, human);
    const Correlation sp = spearman(scores, human);
    report.kendall = kt.coefficient;
    report.kendall_p = kt.p_value;
    report.spearman_rho = sp.coefficient;
    report.spearman_p = sp.p_value;
    return report;
}

std::vector<double> subscore_accuracy(const std::vector<SubScores>& predicted,
                                      const std::vector<SubScores>& truth,
                                      const ScoringSystem& system) {
    if (system.formula() != TotalFormula::hundred_minus_weighted_sum)
        throw ValidationError("per-criterion accuracy applies to binary_error systems");
    for (const Criterion& c : system.criteria())
        if (c.kind != ScoreKind::binary_error)
            throw ValidationError("per-criterion accuracy applies to binary_error systems");
    if (predicted.size() != truth.size())
        throw ValidationError("prediction/truth counts differ");
    if (predicted.empty()) throw ValidationError("no samples for accuracy");
    std::vector<double> acc(system.size(), 0.0);
    for (size_t i = 0; i < predicted.size(); ++i) {
        system.validate_subs(predicted[i]);
        system.validate_subs(truth[i]);
        for (size_t j = 0; j < system.size(); ++j)
            if (predicted[i][j] == truth[i][j]) acc[j] += 1.0;
    }
    for (double& a : acc) a /= static_cast<double>(predicted.size());
    return acc;
}

std::vector<double> fit_reward_thresholds(const std::vector<std::vector<double>>& rewards,
                                          const std::vector<SubScores>& truth,
                                          const ScoringSystem& system) {
    if (rewards.size() != truth.size() || rewards.empty())
        throw ValidationError("threshold fitting needs aligned, non-empty samples");
    std::vector<double> thresholds(system.size(), 0.0);
    for (size_t j = 0; j < system.size(); ++j) {
        std::vector<double> values;
        values.reserve(rewards.size());
        for (const auto& r : rewards) {
            if (r.size() != system.size())
                throw ValidationError("reward row length does not match criterion count");
            values.push_back(r[j]);
        }
        std::vector<double> cands;
        std::vector<double> sorted = values;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        cands.push_back(sorted.front() - 1.0);
        for (size_t k = 0; k + 1 < sorted.size(); ++k)
            cands.push_back((sorted[k] + sorted[k + 1]) / 2.0);
        cands.push_back(sorted.back() + 1.0);

        double best_acc = -1.0, best_thr = cands.front();
        for (double thr : cands) {
            long long ok = 0;
            for (size_t i = 0; i < values.size(); ++i) {
                const double pred = values[i] < thr ? 1.0 : 0.0;
                if (pred == truth[i][j]) ++ok;
            }
            const double a = static_cast<double>(ok) / static_cast<double>(values.size());
            if (a > best_acc) {
                best_acc = a;
                best_thr = thr;
            }
        }
        thresholds[j] = best_thr;
    }
    return thresholds;
}

std::vector<SubScores> binarize_rewards(const std::vector<std::vector<double>>& rewards,
                                        std::span<const double> thresholds) {
    std::vector<SubScores> out;
    out.reserve(rewards.size());
    for (const auto& r : rewards) {
        if (r.size() != thresholds.size())
            throw ValidationError("reward row length does not match threshold count");
        SubScores s(r.size(), 0.0);
        for (size_t j = 0; j < r.size(); ++j) s[j] = r[j] < thresholds[j] ? 1.0 : 0.0;
        out.push_back(std::move(s));
    }
    return out;
}

EvalReport evaluate_model(const RewardModel& model, const Featurizer& featurizer,
                          const std::vector<ReportRecord>& records, const ScoringSystem& system,
                          const EvalOptions& options) {
    if (records.size() < 3) throw ValidationError("model evaluation needs at least 3 records");
    if (options.human_quality && options.human_quality->size() != records.size())
        throw ValidationError("human score list does not match record count");

    std::vector<double> totals;
    std::vector<std::vector<double>> rewards;
    totals.reserve(records.size());
    rewards.reserve(records.size());
    for (const ReportRecord& rec : records) {
        const RewardVector r =
            score_report(model, featurizer, rec.id, rec.reference_text, rec.candidate_text);
        totals.push_back(r.total);
        rewards.push_back(r.values);
    }
    std::vector<double> human;
    if (options.human_quality)
        human = *options.human_quality;
    else
        for (const ReportRecord& rec : records) human.push_back(rec.quality);

    EvalReport report = evaluate_metric("reward_model", totals, human);

    if (!options.per_criterion) return report;

    if (system.formula() == TotalFormula::sum_of_errors) {
        for (size_t j = 0; j < system.size(); ++j) {
            std::vector<double> pred_j, truth_j;
            for (size_t i = 0; i < records.size(); ++i) {
                pred_j.push_back(rewards[i][j]);
                truth_j.push_back(-records[i].subs[j]);  // quality orientation
            }
            try {
                const Correlation kt = kendall_tau(pred_j, truth_j);
                const Correlation sp = spearman(pred_j, truth_j);
                report.per_criterion.push_back(
                    {system.criterion(j).id, kt.coefficient, kt.p_value, sp.coefficient, sp.p_value});
            } catch (const ValidationError&) {
                // criterion never varies in this corpus; correlation undefined
            }
        }
    } else {
        const size_t n_fit = std::max<size_t>(
            1, static_cast<size_t>(options.fit_fraction * static_cast<double>(records.size())));
        if (n_fit >= records.size())
            throw ValidationError("fit fraction leaves no records to measure accuracy on");
        std::vector<std::vector<double>> fit_rewards(rewards.begin(), rewards.begin() + n_fit);
        std::vector<SubScores> fit_truth;
        for (size_t i = 0; i < n_fit; ++i) fit_truth.push_back(records[i].subs);
        const std::vector<double> thresholds =
            fit_reward_thresholds(fit_rewards, fit_truth, system);

        std::vector<std::vector<double>> test_rewards(rewards.begin() + n_fit, rewards.end());
        std::vector<SubScores> test_truth;
        for (size_t i = n_fit; i < records.size(); ++i) test_truth.push_back(records[i].subs);
        const std::vector<SubScores> predicted = binarize_rewards(test_rewards, thresholds);
        const std::vector<double> acc = subscore_accuracy(predicted, test_truth, system);
        for (size_t j = 0; j < system.size(); ++j)
            report.per_criterion_accuracy.push_back({system.criterion(j).id, acc[j], thresholds[j]});
    }
    return report;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string fmt(double v, const char* spec = "%.4f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::string fmt_p(double p) { return fmt(p, "%.3g"); }

void pad_to(std::string& s, size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
}

}  // namespace

std::string render_comparison_text(const std::vector<MetricRow>& rows, size_t n) {
    size_t name_w = 6;
    for (const MetricRow& r : rows) name_w = std::max(name_w, r.metric_name.size());
    std::ostringstream os;
    std::string head = "metric";
    pad_to(head, name_w + 2);
    os << head << "kendall_tau (p)      spearman (p)\n";
    for (const MetricRow& r : rows) {
        std::string name = r.metric_name;
        pad_to(name, name_w + 2);
        std::string kt = fmt(r.kendall) + " (" + fmt_p(r.kendall_p) + ")";
        pad_to(kt, 21);
        os << name << kt << fmt(r.spearman_rho) << " (" << fmt_p(r.spearman_p) << ")\n";
    }
    os << "n=" << n << "\n";
    return os.str();
}

std::string render_comparison_csv(const std::vector<MetricRow>& rows) {
    std::ostringstream os;
    os << "metric,kendall_tau,kendall_p,spearman,spearman_p\n";
    for (const MetricRow& r : rows)
        os << r.metric_name << ',' << fmt(r.kendall, "%.6f") << ',' << fmt_p(r.kendall_p) << ','
           << fmt(r.spearman_rho, "%.6f") << ',' << fmt_p(r.spearman_p) << '\n';
    return os.str();
}

std::string render_eval_text(const EvalReport& report) {
    std::ostringstream os;
    os << "metric: " << report.metric_name << "\n";
    os << "n: " << report.n << "\n";
    os << "kendall_tau: " << fmt(report.kendall) << " (p=" << fmt_p(report.kendall_p) << ")\n";
    os << "spearman:    " << fmt(report.spearman_rho) << " (p=" << fmt_p(report.spearman_p)
       << ")\n";
    if (!report.per_criterion.empty()) {
        size_t w = 9;
        for (const auto& c : report.per_criterion) w = std::max(w, c.id.size());
        std::string head = "criterion";
        pad_to(head, w + 2);
        os << "\n" << head << "tau (p)              rho (p)\n";
        for (const auto& c : report.per_criterion) {
            std::string id = c.id;
            pad_to(id, w + 2);
            std::string kt = fmt(c.tau) + " (" + fmt_p(c.tau_p) + ")";
            pad_to(kt, 21);
            os << id << kt << fmt(c.rho) << " (" << fmt_p(c.rho_p) << ")\n";
        }
    }
    if (!report.per_criterion_accuracy.empty()) {
        size_t w = 9;
        for (const auto& c : report.per_criterion_accuracy) w = std::max(w, c.id.size());
        std::string head = "criterion";
        pad_to(head, w + 2);
        os << "\n" << head << "accuracy  threshold\n";
        for (const auto& c : report.per_criterion_accuracy) {
            std::string id = c.id;
            pad_to(id, w + 2);
            std::string acc = fmt(c.accuracy);
            pad_to(acc, 10);
            os << id << acc << fmt(c.threshold, "%.6g") << "\n";
        }
    }
    return os.str();
}

std::string render_eval_csv(const EvalReport& report) {
    std::ostringstream os;
    os << "section,id,value1,value2,value3,value4\n";
    os << "total," << report.metric_name << ',' << fmt(report.kendall, "%.6f") << ','
       << fmt_p(report.kendall_p) << ',' << fmt(report.spearman_rho, "%.6f") << ','
       << fmt_p(report.spearman_p) << '\n';
    for (const auto& c : report.per_criterion)
        os << "criterion_correlation," << c.id << ',' << fmt(c.tau, "%.6f") << ',' << fmt_p(c.tau_p)
           << ',' << fmt(c.rho, "%.6f") << ',' << fmt_p(c.rho_p) << '\n';
    for (const auto& c : report.per_criterion_accuracy)
        os << "criterion_accuracy," << c.id << ',' << fmt(c.accuracy, "%.6f") << ','
           << fmt(c.threshold, "%.6g") << ",,\n";
    return os.str();
}

}  // namespace remet
