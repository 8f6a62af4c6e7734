#include "remet/loss.hpp"

#include <cmath>
#include <string>

#include "remet/errors.hpp"

namespace remet {

namespace {

inline double relu(double z) { return z > 0 ? z : 0.0; }
inline double relu_grad(double z) { return z > 0 ? 1.0 : 0.0; }  // 0 at the kink
inline double sign0(double z) { return z > 0 ? 1.0 : (z < 0 ? -1.0 : 0.0); }

void check_finite(std::span<const double> v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw NumericError(std::string(what) + " contains a non-finite value");
}

void check_lengths(std::span<const double> r_w, std::span<const double> r_l,
                   std::span<const double> m) {
    if (r_w.size() != r_l.size() || r_w.size() != m.size())
        throw ValidationError("reward/margin length mismatch: " + std::to_string(r_w.size()) +
                              " vs " + std::to_string(r_l.size()) + " vs " +
                              std::to_string(m.size()));
    if (r_w.empty()) throw ValidationError("empty reward vectors");
}

}  // namespace

void LossConfig::validate() const {
    if (!(lambda > 0) || !std::isfinite(lambda)) throw ValidationError("loss lambda must be > 0");
    if (!(c > 0) || !std::isfinite(c)) throw ValidationError("loss c must be > 0");
    if (!use_ind && !use_tot) throw ValidationError("at least one loss term must be enabled");
}

IndLoss l_ind(std::span<const double> r_w, std::span<const double> r_l,
              std::span<const double> sub_margins, double c) {
    check_lengths(r_w, r_l, sub_margins);
    check_finite(r_w, "r_w");
    check_finite(r_l, "r_l");
    check_finite(sub_margins, "sub_margins");
    IndLoss out;
    out.per_criterion.resize(r_w.size());
    double acc = 0;
    for (size_t j = 0; j < r_w.size(); ++j) {
        const double gap = r_w[j] - r_l[j];
        const double m = sub_margins[j];
        double term;
        if (m > 0)
            term = relu(m - gap);
        else if (m < 0)
            term = relu(gap - m);
        else
            term = relu(std::abs(gap) - c);
        out.per_criterion[j] = term;
        acc += term;
    }
    out.value = acc / static_cast<double>(r_w.size());
    return out;
}

double l_tot(std::span<const double> r_w, std::span<const double> r_l, double total_margin) {
    if (r_w.size() != r_l.size())
        throw ValidationError("reward length mismatch in l_tot");
    check_finite(r_w, "r_w");
    check_finite(r_l, "r_l");
    if (!(total_margin > 0))
        throw ValidationError("total margin must be positive, got " + std::to_string(total_margin));
    double sum_w = 0, sum_l = 0;
    for (double x : r_w) sum_w += x;
    for (double x : r_l) sum_l += x;
    return relu(total_margin - (sum_w - sum_l));
}

LossBreakdown mre_loss(const std::vector<PairRewards>& batch, const LossConfig& config) {
    config.validate();
    if (batch.empty()) throw ValidationError("loss batch is empty");
    LossBreakdown out;
    out.pairs = batch.size();
    out.per_criterion.assign(batch.front().r_w.size(), 0.0);
    for (const PairRewards& pair : batch) {
        const IndLoss ind = l_ind(pair.r_w, pair.r_l, pair.sub_margins, config.c);
        const double tot = l_tot(pair.r_w, pair.r_l, pair.total_margin);
        out.l_ind += ind.value;
        out.l_tot += tot;
        if (ind.per_criterion.size() != out.per_criterion.size())
            throw ValidationError("batch pairs disagree on criterion count");
        for (size_t j = 0; j < out.per_criterion.size(); ++j)
            out.per_criterion[j] += ind.per_criterion[j];
    }
    if (config.mean_over_batch) {
        const double inv = 1.0 / static_cast<double>(batch.size());
        out.l_ind *= inv;
        out.l_tot *= inv;
        for (double& v : out.per_criterion) v *= inv;
    }
    // Computed from the reduced fields so the breakdown identity is exact.
    out.l_total = (config.use_ind ? out.l_ind : 0.0) +
                  config.lambda * (config.use_tot ? out.l_tot : 0.0);
    return out;
}

PairGrad mre_pair_grad(const PairRewards& pair, const LossConfig& config) {
    config.validate();
    check_lengths(pair.r_w, pair.r_l, pair.sub_margins);
    check_finite(pair.r_w, "r_w");
    check_finite(pair.r_l, "r_l");
    const size_t n = pair.r_w.size();
    PairGrad g;
    g.d_r_w.assign(n, 0.0);
    g.d_r_l.assign(n, 0.0);

    if (config.use_ind) {
        const double inv_n = 1.0 / static_cast<double>(n);
        for (size_t j = 0; j < n; ++j) {
            const double gap = pair.r_w[j] - pair.r_l[j];
            const double m = pair.sub_margins[j];
            double d_gap = 0;
            if (m > 0)
                d_gap = -relu_grad(m - gap);
            else if (m < 0)
                d_gap = relu_grad(gap - m);
            else
                d_gap = relu_grad(std::abs(gap) - config.c) * sign0(gap);
            g.d_r_w[j] += inv_n * d_gap;
            g.d_r_l[j] -= inv_n * d_gap;
        }
    }
    if (config.use_tot) {
        if (!(pair.total_margin > 0))
            throw ValidationError("total margin must be positive");
        double sum_w = 0, sum_l = 0;
        for (double x : pair.r_w) sum_w += x;
        for (double x : pair.r_l) sum_l += x;
        const double d = config.lambda * relu_grad(pair.total_margin - (sum_w - sum_l));
        for (size_t j = 0; j < n; ++j) {
            g.d_r_w[j] -= d;
            g.d_r_l[j] += d;
        }
    }
    return g;
}

std::vector<PairGrad> mre_grad(const std::vector<PairRewards>& batch, const LossConfig& config) {
    config.validate();
    if (batch.empty()) throw ValidationError("loss batch is empty");
    std::vector<PairGrad> grads;
    grads.reserve(batch.size());
    const double scale = config.mean_over_batch ? 1.0 / static_cast<double>(batch.size()) : 1.0;
    for (const PairRewards& pair : batch) {
        PairGrad g = mre_pair_grad(pair, config);
        if (scale != 1.0) {
            for (double& v : g.d_r_w) v *= scale;
            for (double& v : g.d_r_l) v *= scale;
        }
        grads.push_back(std::move(g));
    }
    return grads;
}

PairLossGrad pair_loss_grad(const PairRewards& pair, const LossConfig& config) {
    PairLossGrad out;
    const IndLoss ind = l_ind(pair.r_w, pair.r_l, pair.sub_margins, config.c);
    out.l_ind = ind.value;
    out.per_criterion = ind.per_criterion;
    out.l_tot = l_tot(pair.r_w, pair.r_l, pair.total_margin);
    out.grad = mre_pair_grad(pair, config);
    return out;
}

}  // namespace remet
