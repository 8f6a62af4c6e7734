#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "remet/features.hpp"
#include "remet/loss.hpp"
#include "remet/model.hpp"
#include "remet/pairing.hpp"

namespace remet {

// Optimizer and loop settings. Defaults mirror the training budget the
// metric was designed around: 4 epochs with batches of 6 pairs. The update
// rule is gradient descent with momentum, optionally rescaled per parameter
// by a running second moment:
//   v <- momentum * v + g
//   s <- adaptive_decay * s + (1 - adaptive_decay) * g^2    (adaptive only)
//   p <- p - step_size * v / (sqrt(s / (1 - adaptive_decay^t)) + adaptive_eps)
// (the divisor is 1 when adaptive is off).
struct TrainConfig {
    int epochs = 4;
    int batch_size = 6;
    double step_size = 0.05;
    double momentum = 0.9;
    bool adaptive = true;
    double adaptive_decay = 0.999;
    double adaptive_eps = 1e-8;
    uint64_t seed = 17;
    LossConfig loss;
    int eval_every = 0;  // extra mid-epoch log records every N batches; 0 = off

    void validate() const;
};

struct EpochStats {
    int epoch = 0;           // 1-based; 0 is the pre-training evaluation
    double l_ind = 0;
    double l_tot = 0;
    double l_total = 0;
    double pair_accuracy = 0;  // fraction of pairs with sum r_w > sum r_l
};

struct TrainLog {
    std::vector<EpochStats> epochs;
    bool aborted = false;
    std::string abort_reason;
};

// Complete training state; checkpoints persist all of it so a resumed run
// continues exactly where an uninterrupted one would be.
struct TrainState {
    RewardModel model;
    TrainConfig config;
    std::vector<double> velocity;
    std::vector<double> second_moment;
    long long step_count = 0;
    std::string rng_state;
    int next_epoch = 0;
    TrainLog log;
};

struct TrainResult {
    RewardModel model;
    TrainLog log;
};

TrainState init_train_state(RewardModel model, const TrainConfig& config);

// Runs epochs [state.next_epoch, until_epoch). Pairs must be normalized.
// A non-finite loss aborts the run and restores the last finite epoch
// snapshot. The optional featurizer overrides the model-spec default
// (needed for the external feature variant).
void run_epochs(TrainState& state, const std::vector<ReportPair>& pairs, int until_epoch,
                const Featurizer* featurizer = nullptr);

TrainResult train(const std::vector<ReportPair>& pairs, RewardModel model,
                  const TrainConfig& config, const Featurizer* featurizer = nullptr);

// Checkpoint files carry the model, optimizer state, rng stream, and log.
// Loading verifies the stored config hash; resuming with a different config
// is refused with a field-by-field diff.
void save_checkpoint(const TrainState& state, const std::string& path);
TrainState load_checkpoint(const std::string& path);

// Throws ConfigError listing every differing field.
void ensure_config_matches(const TrainConfig& stored, const TrainConfig& requested);

std::string config_hash(const TrainConfig& config);

// One log record per line, JSON objects.
std::string render_log_jsonl(const TrainLog& log);

}  // namespace remet
