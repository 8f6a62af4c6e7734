#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace remet {

// Hyperparameters of the margin reward enforcement loss. lambda balances
// the per-criterion term against the total-reward term; c is the slack
// allowed between rewards whose sub-scores are tied. use_ind / use_tot
// switch terms off for ablations; mean_over_batch replaces the faithful
// sum-over-pairs reduction with a mean.
struct LossConfig {
    double lambda = 1.0;
    double c = 1e-2;
    bool use_ind = true;
    bool use_tot = true;
    bool mean_over_batch = false;

    void validate() const;
};

struct IndLoss {
    double value = 0;                   // mean over criteria
    std::vector<double> per_criterion;  // individual hinge terms
};

// Per-criterion ranking loss. For sub-margin m and reward gap g = r_w - r_l:
//   m > 0: relu(m - g)        (accepted must lead by at least m)
//   m < 0: relu(g - m)        (accepted must trail by at least |m|; the
//                              relu argument equals g + |m|, the same
//                              quantity the sign-flag formulation yields)
//   m = 0: relu(|g| - c)      (tied sub-scores keep rewards within c)
IndLoss l_ind(std::span<const double> r_w, std::span<const double> r_l,
              std::span<const double> sub_margins, double c);

// Total-reward hinge: relu(total_margin - (sum r_w - sum r_l)).
double l_tot(std::span<const double> r_w, std::span<const double> r_l, double total_margin);

// Margins and rewards of one pair, the unit the loss consumes.
struct PairRewards {
    std::vector<double> r_w;
    std::vector<double> r_l;
    std::vector<double> sub_margins;
    double total_margin = 0;
};

struct LossBreakdown {
    double l_ind = 0;   // sum (or mean) of per-pair individual losses
    double l_tot = 0;   // sum (or mean) of per-pair total losses
    double l_total = 0; // use_ind * l_ind + lambda * use_tot * l_tot
    std::vector<double> per_criterion;  // per-criterion l_ind terms, reduced over pairs
    size_t pairs = 0;
};

LossBreakdown mre_loss(const std::vector<PairRewards>& batch, const LossConfig& config);

// d l_total / d rewards for one pair. ReLU subgradient at the kink is 0,
// as is the sign of an exactly-zero gap in the tied branch.
struct PairGrad {
    std::vector<double> d_r_w;
    std::vector<double> d_r_l;
};

PairGrad mre_pair_grad(const PairRewards& pair, const LossConfig& config);
std::vector<PairGrad> mre_grad(const std::vector<PairRewards>& batch, const LossConfig& config);

// Loss value and gradient in one pass; what the trainer consumes.
struct PairLossGrad {
    double l_ind = 0;
    double l_tot = 0;
    std::vector<double> per_criterion;
    PairGrad grad;
};
PairLossGrad pair_loss_grad(const PairRewards& pair, const LossConfig& config);

}  // namespace remet
