#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "remet/corpus.hpp"
#include "remet/errors.hpp"
#include "remet/pairing.hpp"
#include "remet/train.hpp"

using namespace remet;

namespace {

struct Fixture {
    ScoringSystem system = preset_system("radcliq6");
    std::vector<ReportPair> pairs;
    FeatureSpec spec;

    explicit Fixture(int n_refs = 12, uint64_t seed = 1001) {
        spec.dim = 512;
        const auto refs = builtin_references(n_refs, seed);
        const auto records = generate_tiered(refs, system, TierSpec::defaults_for(system), seed);
        pairs = margin_normalize_all(make_pairs(records, system), system);
    }

    RewardModel fresh_model(uint64_t seed = 7) const {
        return RewardModel(spec, ModelArch{}, system.name(), static_cast<int>(system.size()),
                           seed);
    }
};

std::vector<double> params_of(const RewardModel& m) {
    return {m.params().begin(), m.params().end()};
}

}  // namespace

TEST_SUITE_BEGIN("train");

TEST_CASE("zero step size leaves parameters untouched") {
    const Fixture fx(6);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.step_size = 0.0;
    for (bool adaptive : {false, true}) {
        cfg.adaptive = adaptive;
        RewardModel model = fx.fresh_model();
        const auto before = params_of(model);
        const TrainResult result = train(fx.pairs, std::move(model), cfg);
        CHECK(params_of(result.model) == before);
        CHECK_FALSE(result.log.aborted);
        REQUIRE(result.log.epochs.size() == 2);  // pre-training pass + epoch 1
        CHECK(result.log.epochs[0].l_total == result.log.epochs[1].l_total);
    }
}

TEST_CASE("training is deterministic for a fixed seed") {
    const Fixture fx(8);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.seed = 33;
    const TrainResult a = train(fx.pairs, fx.fresh_model(), cfg);
    const TrainResult b = train(fx.pairs, fx.fresh_model(), cfg);
    CHECK(params_of(a.model) == params_of(b.model));
    CHECK(a.log.epochs.back().l_total == b.log.epochs.back().l_total);
}

TEST_CASE("training reduces the loss and ranks pairs on planted data") {
    const Fixture fx(12);
    TrainConfig cfg;
    const TrainResult result = train(fx.pairs, fx.fresh_model(), cfg);
    REQUIRE(result.log.epochs.size() == static_cast<size_t>(cfg.epochs) + 1);
    const EpochStats& first = result.log.epochs.front();
    const EpochStats& last = result.log.epochs.back();
    CHECK(last.l_total < first.l_total);
    CHECK(last.pair_accuracy >= 0.9);
    CHECK(last.l_total == last.l_ind + cfg.loss.lambda * last.l_tot);
    for (const EpochStats& e : result.log.epochs) CHECK(std::isfinite(e.l_total));
}

TEST_CASE("checkpoint resume reproduces an uninterrupted run") {
    const Fixture fx(8);
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.seed = 91;

    const TrainResult straight = train(fx.pairs, fx.fresh_model(), cfg);

    TrainState state = init_train_state(fx.fresh_model(), cfg);
    run_epochs(state, fx.pairs, 2);
    const std::string path = "test_checkpoint.json";
    save_checkpoint(state, path);
    TrainState resumed = load_checkpoint(path);
    CHECK(resumed.next_epoch == 2);
    run_epochs(resumed, fx.pairs, cfg.epochs);

    CHECK(params_of(resumed.model) == params_of(straight.model));
    REQUIRE(resumed.log.epochs.size() == straight.log.epochs.size());
    for (size_t i = 0; i < straight.log.epochs.size(); ++i)
        CHECK(resumed.log.epochs[i].l_total == straight.log.epochs[i].l_total);
    std::remove(path.c_str());
}

TEST_CASE("checkpoint round-trip preserves the log and optimizer state") {
    const Fixture fx(6);
    TrainConfig cfg;
    cfg.epochs = 2;
    TrainState state = init_train_state(fx.fresh_model(), cfg);
    run_epochs(state, fx.pairs, 2);
    const std::string path = "test_checkpoint_rt.json";
    save_checkpoint(state, path);
    const TrainState loaded = load_checkpoint(path);
    CHECK(render_log_jsonl(loaded.log) == render_log_jsonl(state.log));
    CHECK(loaded.velocity == state.velocity);
    CHECK(loaded.second_moment == state.second_moment);
    CHECK(loaded.step_count == state.step_count);
    CHECK(loaded.rng_state == state.rng_state);
    std::remove(path.c_str());
}

TEST_CASE("resume with an altered config is refused with a diff") {
    TrainConfig stored;
    TrainConfig altered = stored;
    altered.step_size = stored.step_size * 2;
    CHECK_THROWS_WITH_AS(ensure_config_matches(stored, altered),
                         doctest::Contains("step_size"), ConfigError);
    CHECK_NOTHROW(ensure_config_matches(stored, stored));
}

TEST_CASE("non-finite loss aborts and restores the last finite state") {
    const Fixture fx(6);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.step_size = 1.5e308;
    cfg.adaptive = false;
    RewardModel model = fx.fresh_model();
    const auto init_params = params_of(model);
    const TrainResult result = train(fx.pairs, std::move(model), cfg);
    CHECK(result.log.aborted);
    CHECK(result.log.abort_reason.find("non-finite") != std::string::npos);
    for (double p : params_of(result.model)) CHECK(std::isfinite(p));
    CHECK(params_of(result.model) == init_params);  // epoch 1 already diverged
}

TEST_CASE("training rejects bad inputs") {
    const Fixture fx(4);
    TrainConfig cfg;
    CHECK_THROWS_AS(train({}, fx.fresh_model(), cfg), ValidationError);

    // Un-normalized margins are refused.
    const auto records = generate_tiered(builtin_references(2, 3), fx.system,
                                         TierSpec::defaults_for(fx.system), 3);
    const auto raw_pairs = make_pairs(records, fx.system);
    CHECK_THROWS_WITH_AS(train(raw_pairs, fx.fresh_model(), cfg),
                         doctest::Contains("normalized"), ValidationError);

    TrainConfig bad = cfg;
    bad.epochs = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = cfg;
    bad.momentum = 1.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = cfg;
    bad.step_size = -0.1;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("config hash is stable and sensitive") {
    TrainConfig a;
    TrainConfig b;
    CHECK(config_hash(a) == config_hash(b));
    b.seed = a.seed + 1;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_SUITE_END();
