#include "remet/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "remet/errors.hpp"
#include "remet/rng.hpp"

namespace remet {

using ordered_json = nlohmann::ordered_json;

namespace {
constexpr int kCheckpointFormatVersion = 1;
constexpr const char* kCheckpointFormatName = "remet-checkpoint";
}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    // step_size 0 is allowed as an explicit no-op run (kept for the update
    // equations' identity checks); negative steps are not.
    if (step_size < 0 || !std::isfinite(step_size))
        throw ValidationError("step_size must be >= 0");
    if (momentum < 0 || momentum >= 1) throw ValidationError("momentum must lie in [0, 1)");
    if (adaptive && (adaptive_decay <= 0 || adaptive_decay >= 1))
        throw ValidationError("adaptive_decay must lie in (0, 1)");
    if (adaptive && adaptive_eps <= 0) throw ValidationError("adaptive_eps must be > 0");
    if (eval_every < 0) throw ValidationError("eval_every must be >= 0");
    loss.validate();
}

namespace {

ordered_json config_to_json(const TrainConfig& c) {
    ordered_json j;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["step_size"] = c.step_size;
    j["momentum"] = c.momentum;
    j["adaptive"] = c.adaptive;
    j["adaptive_decay"] = c.adaptive_decay;
    j["adaptive_eps"] = c.adaptive_eps;
    j["seed"] = c.seed;
    j["eval_every"] = c.eval_every;
    j["loss"] = {{"lambda", c.loss.lambda},
                 {"c", c.loss.c},
                 {"use_ind", c.loss.use_ind},
                 {"use_tot", c.loss.use_tot},
                 {"mean_over_batch", c.loss.mean_over_batch}};
    return j;
}

TrainConfig config_from_json(const ordered_json& j) {
    TrainConfig c;
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.step_size = j.at("step_size").get<double>();
    c.momentum = j.at("momentum").get<double>();
    c.adaptive = j.at("adaptive").get<bool>();
    c.adaptive_decay = j.at("adaptive_decay").get<double>();
    c.adaptive_eps = j.at("adaptive_eps").get<double>();
    c.seed = j.at("seed").get<uint64_t>();
    c.eval_every = j.at("eval_every").get<int>();
    const auto& lj = j.at("loss");
    c.loss.lambda = lj.at("lambda").get<double>();
    c.loss.c = lj.at("c").get<double>();
    c.loss.use_ind = lj.at("use_ind").get<bool>();
    c.loss.use_tot = lj.at("use_tot").get<bool>();
    c.loss.mean_over_batch = lj.at("mean_over_batch").get<bool>();
    return c;
}

// Featurizes both sides of every pair once; training touches only these.
struct PreparedPairs {
    std::vector<FeatureVector> feat_w;
    std::vector<FeatureVector> feat_l;
    std::vector<PairRewards> margins;  // r_w / r_l filled per step
};

PreparedPairs prepare(const std::vector<ReportPair>& pairs, const RewardModel& model,
                      const Featurizer& featurizer) {
    PreparedPairs prep;
    prep.feat_w.reserve(pairs.size());
    prep.feat_l.reserve(pairs.size());
    prep.margins.reserve(pairs.size());
    const size_t n = static_cast<size_t>(model.n_outputs());
    for (const ReportPair& p : pairs) {
        if (!p.normalized)
            throw ValidationError("pair (" + p.accepted.id + ", " + p.rejected.id +
                                  ") is not normalized; run margin normalization first");
        if (!(p.total_margin > 0))
            throw ValidationError("pair (" + p.accepted.id + ", " + p.rejected.id +
                                  ") has non-positive total margin");
        if (p.sub_margins.size() != n)
            throw ValidationError("pair (" + p.accepted.id + ", " + p.rejected.id + ") carries " +
                                  std::to_string(p.sub_margins.size()) +
                                  " sub-margins for a model with " + std::to_string(n) +
                                  " outputs");
        prep.feat_w.push_back(
            featurizer.featurize_for(p.accepted.id, p.reference_text, p.accepted.candidate_text));
        prep.feat_l.push_back(
            featurizer.featurize_for(p.rejected.id, p.reference_text, p.rejected.candidate_text));
        PairRewards pr;
        pr.sub_margins = p.sub_margins;
        pr.total_margin = p.total_margin;
        prep.margins.push_back(std::move(pr));
    }
    return prep;
}

EpochStats evaluate_pass(const TrainState& state, const PreparedPairs& prep, int epoch) {
    EpochStats stats;
    stats.epoch = epoch;
    std::vector<PairRewards> batch;
    batch.reserve(prep.margins.size());
    long long ranked_ok = 0;
    for (size_t i = 0; i < prep.margins.size(); ++i) {
        PairRewards pr = prep.margins[i];
        pr.r_w = state.model.forward(prep.feat_w[i]).values;
        pr.r_l = state.model.forward(prep.feat_l[i]).values;
        double sum_w = 0, sum_l = 0;
        for (double v : pr.r_w) sum_w += v;
        for (double v : pr.r_l) sum_l += v;
        if (sum_w > sum_l) ++ranked_ok;
        batch.push_back(std::move(pr));
    }
    const LossBreakdown breakdown = mre_loss(batch, state.config.loss);
    stats.l_ind = breakdown.l_ind;
    stats.l_tot = breakdown.l_tot;
    stats.l_total = breakdown.l_total;
    stats.pair_accuracy =
        static_cast<double>(ranked_ok) / static_cast<double>(prep.margins.size());
    return stats;
}

bool params_finite(const RewardModel& model) {
    for (double p : model.params())
        if (!std::isfinite(p)) return false;
    return true;
}

}  // namespace

std::string config_hash(const TrainConfig& config) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(config_to_json(config).dump())));
    return buf;
}

TrainState init_train_state(RewardModel model, const TrainConfig& config) {
    config.validate();
    TrainState state{std::move(model), config, {}, {}, 0, "", 0, {}};
    state.velocity.assign(state.model.param_count(), 0.0);
    state.second_moment.assign(state.model.param_count(), 0.0);
    state.rng_state = Rng(derive_seed(config.seed, "train-shuffle")).save_state();
    return state;
}

void run_epochs(TrainState& state, const std::vector<ReportPair>& pairs, int until_epoch,
                const Featurizer* featurizer) {
    state.config.validate();
    if (pairs.empty()) throw ValidationError("cannot train on an empty pair list");
    if (until_epoch > state.config.epochs)
        throw ValidationError("until_epoch exceeds configured epochs");

    Featurizer default_featurizer(state.model.feature_spec());
    const Featurizer& feat = featurizer ? *featurizer : default_featurizer;
    PreparedPairs prep = prepare(pairs, state.model, feat);

    if (state.next_epoch == 0 && state.log.epochs.empty())
        state.log.epochs.push_back(evaluate_pass(state, prep, 0));

    Rng rng = Rng::restore_state(state.rng_state);
    std::vector<size_t> order(pairs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<double> grad(state.model.param_count(), 0.0);

    for (int epoch = state.next_epoch; epoch < until_epoch; ++epoch) {
        // Snapshot for the non-finite abort path.
        const std::vector<double> params_snapshot(state.model.params().begin(),
                                                  state.model.params().end());
        const std::vector<double> velocity_snapshot = state.velocity;
        const std::vector<double> moment_snapshot = state.second_moment;
        const long long step_snapshot = state.step_count;
        const std::string rng_snapshot = rng.save_state();

        // The permutation must depend only on the rng state at epoch start,
        // so a resumed run shuffles exactly like an uninterrupted one.
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        bool finite = true;
        for (size_t start = 0; start < order.size() && finite;
             start += static_cast<size_t>(state.config.batch_size)) {
            const size_t end =
                std::min(order.size(), start + static_cast<size_t>(state.config.batch_size));
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0;
            const double scale = state.config.loss.mean_over_batch
                                     ? 1.0 / static_cast<double>(end - start)
                                     : 1.0;
            try {
                for (size_t k = start; k < end; ++k) {
                    const size_t i = order[k];
                    PairRewards pr = prep.margins[i];
                    pr.r_w = state.model.forward(prep.feat_w[i]).values;
                    pr.r_l = state.model.forward(prep.feat_l[i]).values;
                    const PairLossGrad plg = pair_loss_grad(pr, state.config.loss);
                    batch_loss += (state.config.loss.use_ind ? plg.l_ind : 0.0) +
                                  state.config.loss.lambda *
                                      (state.config.loss.use_tot ? plg.l_tot : 0.0);
                    std::vector<double> d_w = plg.grad.d_r_w;
                    std::vector<double> d_l = plg.grad.d_r_l;
                    if (scale != 1.0) {
                        for (double& v : d_w) v *= scale;
                        for (double& v : d_l) v *= scale;
                    }
                    state.model.accumulate_param_grad(prep.feat_w[i], d_w, grad);
                    state.model.accumulate_param_grad(prep.feat_l[i], d_l, grad);
                }
            } catch (const NumericError&) {
                // Diverged parameters produce non-finite rewards; take the
                // abort path rather than surfacing the numeric error.
                finite = false;
                break;
            }
            if (!std::isfinite(batch_loss)) {
                finite = false;
                break;
            }

            state.step_count += 1;
            std::vector<double>& params = state.model.mutable_params();
            const TrainConfig& c = state.config;
            if (c.adaptive) {
                const double bias = 1.0 - std::pow(c.adaptive_decay, state.step_count);
                for (size_t k = 0; k < params.size(); ++k) {
                    state.velocity[k] = c.momentum * state.velocity[k] + grad[k];
                    state.second_moment[k] = c.adaptive_decay * state.second_moment[k] +
                                             (1.0 - c.adaptive_decay) * grad[k] * grad[k];
                    const double scaled = std::sqrt(state.second_moment[k] / bias) + c.adaptive_eps;
                    params[k] -= c.step_size * state.velocity[k] / scaled;
                }
            } else {
                for (size_t k = 0; k < params.size(); ++k) {
                    state.velocity[k] = c.momentum * state.velocity[k] + grad[k];
                    params[k] -= c.step_size * state.velocity[k];
                }
            }
        }

        EpochStats stats;
        if (finite && params_finite(state.model)) {
            try {
                stats = evaluate_pass(state, prep, epoch + 1);
                finite = std::isfinite(stats.l_total);
            } catch (const NumericError&) {
                finite = false;
            }
        } else {
            finite = false;
        }
        if (!finite) {
            // Restore the last finite state and stop.
            std::copy(params_snapshot.begin(), params_snapshot.end(),
                      state.model.mutable_params().begin());
            state.velocity = velocity_snapshot;
            state.second_moment = moment_snapshot;
            state.step_count = step_snapshot;
            state.rng_state = rng_snapshot;
            state.log.aborted = true;
            state.log.abort_reason =
                "non-finite loss in epoch " + std::to_string(epoch + 1) +
                "; restored the last finite checkpoint (epoch " + std::to_string(epoch) + ")";
            return;
        }
        state.log.epochs.push_back(stats);
        state.next_epoch = epoch + 1;
        state.rng_state = rng.save_state();
    }
}

TrainResult train(const std::vector<ReportPair>& pairs, RewardModel model,
                  const TrainConfig& config, const Featurizer* featurizer) {
    TrainState state = init_train_state(std::move(model), config);
    run_epochs(state, pairs, config.epochs, featurizer);
    return TrainResult{std::move(state.model), std::move(state.log)};
}

void ensure_config_matches(const TrainConfig& stored, const TrainConfig& requested) {
    const ordered_json a = config_to_json(stored);
    const ordered_json b = config_to_json(requested);
    if (a == b) return;
    std::string diff;
    for (auto it = a.begin(); it != a.end(); ++it) {
        if (b.contains(it.key()) && b[it.key()] != it.value())
            diff += "  " + it.key() + ": checkpoint " + it.value().dump() + " vs requested " +
                    b[it.key()].dump() + "\n";
    }
    throw ConfigError("resume refused: config differs from checkpoint:\n" + diff);
}

namespace {

ordered_json log_to_json(const TrainLog& log) {
    ordered_json j;
    j["aborted"] = log.aborted;
    j["abort_reason"] = log.abort_reason;
    j["epochs"] = ordered_json::array();
    for (const EpochStats& e : log.epochs)
        j["epochs"].push_back({{"epoch", e.epoch},
                               {"l_ind", e.l_ind},
                               {"l_tot", e.l_tot},
                               {"l_total", e.l_total},
                               {"pair_accuracy", e.pair_accuracy}});
    return j;
}

TrainLog log_from_json(const ordered_json& j) {
    TrainLog log;
    log.aborted = j.at("aborted").get<bool>();
    log.abort_reason = j.at("abort_reason").get<std::string>();
    for (const auto& e : j.at("epochs"))
        log.epochs.push_back({e.at("epoch").get<int>(), e.at("l_ind").get<double>(),
                              e.at("l_tot").get<double>(), e.at("l_total").get<double>(),
                              e.at("pair_accuracy").get<double>()});
    return log;
}

}  // namespace

void save_checkpoint(const TrainState& state, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint '" + path + "'");
    ordered_json j;
    j["format"] = kCheckpointFormatName;
    j["version"] = kCheckpointFormatVersion;
    j["config"] = config_to_json(state.config);
    j["config_hash"] = config_hash(state.config);
    j["model"] = {
        {"system_name", state.model.system_name()},
        {"n_outputs", state.model.n_outputs()},
        {"feature_spec",
         {{"variant", state.model.feature_spec().variant == FeatureVariant::hashed_ngrams
                          ? "hashed_ngrams"
                          : "external"},
          {"dim", state.model.feature_spec().dim},
          {"word_n", state.model.feature_spec().word_n},
          {"char_n", state.model.feature_spec().char_n}}},
        {"arch",
         {{"kind", state.model.arch().kind == ArchKind::linear ? "linear" : "mlp"},
          {"hidden", state.model.arch().hidden}}},
        {"params", std::vector<double>(state.model.params().begin(), state.model.params().end())},
    };
    j["velocity"] = state.velocity;
    j["second_moment"] = state.second_moment;
    j["step_count"] = state.step_count;
    j["rng_state"] = state.rng_state;
    j["next_epoch"] = state.next_epoch;
    j["log"] = log_to_json(state.log);
    out << j.dump() << '\n';
    if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

TrainState load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint '" + path + "'");
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("checkpoint '" + path + "': " + e.what());
    }
    try {
        if (j.value("format", std::string()) != kCheckpointFormatName)
            throw ParseError("'" + path + "' is not a training checkpoint");
        const int version = j.at("version").get<int>();
        if (version != kCheckpointFormatVersion)
            throw VersionError("checkpoint '" + path + "' has format version " +
                               std::to_string(version) + ", expected " +
                               std::to_string(kCheckpointFormatVersion));
        const TrainConfig config = config_from_json(j.at("config"));
        if (j.at("config_hash").get<std::string>() != config_hash(config))
            throw ValidationError("checkpoint '" + path + "' config hash mismatch");

        const auto& mj = j.at("model");
        FeatureSpec spec;
        spec.variant = mj.at("feature_spec").at("variant").get<std::string>() == "external"
                           ? FeatureVariant::external
                           : FeatureVariant::hashed_ngrams;
        spec.dim = mj.at("feature_spec").at("dim").get<int>();
        spec.word_n = mj.at("feature_spec").at("word_n").get<std::vector<int>>();
        spec.char_n = mj.at("feature_spec").at("char_n").get<std::vector<int>>();
        ModelArch arch;
        arch.kind = mj.at("arch").at("kind").get<std::string>() == "mlp" ? ArchKind::mlp
                                                                         : ArchKind::linear;
        arch.hidden = mj.at("arch").at("hidden").get<int>();
        RewardModel model(spec, arch, mj.at("system_name").get<std::string>(),
                          mj.at("n_outputs").get<int>(), 0);
        auto params = mj.at("params").get<std::vector<double>>();
        if (params.size() != model.param_count())
            throw ParseError("checkpoint '" + path + "' parameter count mismatch");
        model.mutable_params() = std::move(params);

        TrainState state{std::move(model), config, {}, {}, 0, "", 0, {}};
        state.velocity = j.at("velocity").get<std::vector<double>>();
        state.second_moment = j.at("second_moment").get<std::vector<double>>();
        if (state.velocity.size() != state.model.param_count() ||
            state.second_moment.size() != state.model.param_count())
            throw ParseError("checkpoint '" + path + "' optimizer state size mismatch");
        state.step_count = j.at("step_count").get<long long>();
        state.rng_state = j.at("rng_state").get<std::string>();
        state.next_epoch = j.at("next_epoch").get<int>();
        state.log = log_from_json(j.at("log"));
        return state;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("checkpoint '" + path + "': " + e.what());
    }
}

std::string render_log_jsonl(const TrainLog& log) {
    std::ostringstream os;
    for (const EpochStats& e : log.epochs) {
        ordered_json j;
        j["epoch"] = e.epoch;
        j["l_ind"] = e.l_ind;
        j["l_tot"] = e.l_tot;
        j["l_total"] = e.l_total;
        j["pair_accuracy"] = e.pair_accuracy;
        os << j.dump() << '\n';
    }
    if (log.aborted) {
        ordered_json j;
        j["aborted"] = true;
        j["abort_reason"] = log.abort_reason;
        os << j.dump() << '\n';
    }
    return os.str();
}

}  // namespace remet
