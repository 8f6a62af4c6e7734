#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "remet/features.hpp"

namespace remet {

enum class ArchKind { linear, mlp };

struct ModelArch {
    ArchKind kind = ArchKind::linear;
    int hidden = 64;  // mlp only; activation is tanh

    bool operator==(const ModelArch&) const = default;
};

// Per-criterion rewards for one report; total is always the exact sum of
// the values (there is no separate total head).
struct RewardVector {
    std::vector<double> values;
    double total = 0;
};

// Multi-reward head over a feature vector: one reward per criterion.
//   linear: r = W v + b
//   mlp:    r = W2 tanh(W1 v + b1) + b2
// Parameters live in one flat array (layout documented in the model file
// format) so the optimizer can treat them uniformly.
class RewardModel {
public:
    RewardModel(FeatureSpec spec, ModelArch arch, std::string system_name, int n_outputs,
                uint64_t init_seed);

    static RewardModel zeros(FeatureSpec spec, ModelArch arch, std::string system_name,
                             int n_outputs);

    int n_outputs() const { return n_outputs_; }
    const FeatureSpec& feature_spec() const { return spec_; }
    const ModelArch& arch() const { return arch_; }
    const std::string& system_name() const { return system_name_; }

    std::span<const double> params() const { return params_; }
    std::vector<double>& mutable_params() { return params_; }
    size_t param_count() const { return params_.size(); }

    RewardVector forward(const FeatureVector& features) const;

    // Accumulates d(loss)/d(params) into grad, given d(loss)/d(rewards).
    void accumulate_param_grad(const FeatureVector& features, std::span<const double> d_rewards,
                               std::span<double> grad) const;

    void save(const std::string& path) const;
    static RewardModel load(const std::string& path);
    static RewardModel load(const std::string& path, const std::string& expected_system);

private:
    FeatureSpec spec_;
    ModelArch arch_;
    std::string system_name_;
    int n_outputs_ = 0;
    std::vector<double> params_;

    // Flat layout offsets.
    size_t w1_size() const;
    size_t b1_size() const;
    size_t w2_size() const;
    size_t b2_size() const;
};

// featurize + forward. The overload without a featurizer builds one from
// the model's spec and requires the hashed_ngrams variant.
RewardVector score_report(const RewardModel& model, std::string_view reference,
                          std::string_view candidate);
RewardVector score_report(const RewardModel& model, const Featurizer& featurizer,
                          std::string_view record_id, std::string_view reference,
                          std::string_view candidate);

}  // namespace remet
