#include "remet/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "remet/errors.hpp"
#include "remet/rng.hpp"

namespace remet {

using ordered_json = nlohmann::ordered_json;

namespace {
constexpr int kModelFormatVersion = 1;
constexpr const char* kModelFormatName = "remet-model";
}  // namespace

size_t RewardModel::w1_size() const {
    const size_t dim = static_cast<size_t>(spec_.dim);
    return arch_.kind == ArchKind::linear ? static_cast<size_t>(n_outputs_) * dim
                                          : static_cast<size_t>(arch_.hidden) * dim;
}
size_t RewardModel::b1_size() const {
    return arch_.kind == ArchKind::linear ? static_cast<size_t>(n_outputs_)
                                          : static_cast<size_t>(arch_.hidden);
}
size_t RewardModel::w2_size() const {
    return arch_.kind == ArchKind::linear
               ? 0
               : static_cast<size_t>(n_outputs_) * static_cast<size_t>(arch_.hidden);
}
size_t RewardModel::b2_size() const {
    return arch_.kind == ArchKind::linear ? 0 : static_cast<size_t>(n_outputs_);
}

RewardModel::RewardModel(FeatureSpec spec, ModelArch arch, std::string system_name, int n_outputs,
                         uint64_t init_seed)
    : spec_(std::move(spec)), arch_(arch), system_name_(std::move(system_name)),
      n_outputs_(n_outputs) {
    spec_.validate();
    if (n_outputs_ < 1) throw ValidationError("model needs at least one reward output");
    if (arch_.kind == ArchKind::mlp && arch_.hidden < 1)
        throw ValidationError("mlp hidden size must be >= 1");

    params_.assign(w1_size() + b1_size() + w2_size() + b2_size(), 0.0);
    Rng rng(init_seed);
    // Weights uniform in [-1, 1] scaled by 1/sqrt(fan_in); biases zero.
    const double s1 = 1.0 / std::sqrt(static_cast<double>(spec_.dim));
    for (size_t i = 0; i < w1_size(); ++i) params_[i] = (2.0 * rng.uniform01() - 1.0) * s1;
    if (arch_.kind == ArchKind::mlp) {
        const double s2 = 1.0 / std::sqrt(static_cast<double>(arch_.hidden));
        const size_t w2_off = w1_size() + b1_size();
        for (size_t i = 0; i < w2_size(); ++i)
            params_[w2_off + i] = (2.0 * rng.uniform01() - 1.0) * s2;
    }
}

RewardModel RewardModel::zeros(FeatureSpec spec, ModelArch arch, std::string system_name,
                               int n_outputs) {
    RewardModel m(std::move(spec), arch, std::move(system_name), n_outputs, 0);
    std::fill(m.params_.begin(), m.params_.end(), 0.0);
    return m;
}

RewardVector RewardModel::forward(const FeatureVector& features) const {
    const size_t dim = static_cast<size_t>(spec_.dim);
    if (features.values.size() != dim)
        throw ValidationError("feature dim " + std::to_string(features.values.size()) +
                              " does not match model dim " + std::to_string(dim));
    const size_t n = static_cast<size_t>(n_outputs_);
    RewardVector out;
    out.values.assign(n, 0.0);
    const double* v = features.values.data();

    if (arch_.kind == ArchKind::linear) {
        const double* w = params_.data();
        const double* b = params_.data() + w1_size();
        for (size_t j = 0; j < n; ++j) {
            double acc = b[j];
            const double* row = w + j * dim;
            for (size_t k = 0; k < dim; ++k) acc += row[k] * v[k];
            out.values[j] = acc;
        }
    } else {
        const size_t h = static_cast<size_t>(arch_.hidden);
        const double* w1 = params_.data();
        const double* b1 = params_.data() + w1_size();
        const double* w2 = b1 + b1_size();
        const double* b2 = w2 + w2_size();
        std::vector<double> hidden(h);
        for (size_t i = 0; i < h; ++i) {
            double acc = b1[i];
            const double* row = w1 + i * dim;
            for (size_t k = 0; k < dim; ++k) acc += row[k] * v[k];
            hidden[i] = std::tanh(acc);
        }
        for (size_t j = 0; j < n; ++j) {
            double acc = b2[j];
            const double* row = w2 + j * h;
            for (size_t i = 0; i < h; ++i) acc += row[i] * hidden[i];
            out.values[j] = acc;
        }
    }
    double total = 0;
    for (double x : out.values) total += x;
    out.total = total;
    return out;
}

void RewardModel::accumulate_param_grad(const FeatureVector& features,
                                        std::span<const double> d_rewards,
                                        std::span<double> grad) const {
    const size_t dim = static_cast<size_t>(spec_.dim);
    const size_t n = static_cast<size_t>(n_outputs_);
    if (features.values.size() != dim) throw ValidationError("feature dim mismatch in backward");
    if (d_rewards.size() != n) throw ValidationError("reward gradient length mismatch");
    if (grad.size() != params_.size()) throw ValidationError("parameter gradient length mismatch");
    const double* v = features.values.data();

    if (arch_.kind == ArchKind::linear) {
        double* gw = grad.data();
        double* gb = grad.data() + w1_size();
        for (size_t j = 0; j < n; ++j) {
            const double d = d_rewards[j];
            if (d == 0) continue;
            double* row = gw + j * dim;
            for (size_t k = 0; k < dim; ++k) row[k] += d * v[k];
            gb[j] += d;
        }
        return;
    }

    const size_t h = static_cast<size_t>(arch_.hidden);
    const double* w1 = params_.data();
    const double* b1 = params_.data() + w1_size();
    const double* w2 = b1 + b1_size();
    std::vector<double> pre(h), hidden(h);
    for (size_t i = 0; i < h; ++i) {
        double acc = b1[i];
        const double* row = w1 + i * dim;
        for (size_t k = 0; k < dim; ++k) acc += row[k] * v[k];
        pre[i] = acc;
        hidden[i] = std::tanh(acc);
    }
    double* gw1 = grad.data();
    double* gb1 = grad.data() + w1_size();
    double* gw2 = gb1 + b1_size();
    double* gb2 = gw2 + w2_size();
    std::vector<double> d_hidden(h, 0.0);
    for (size_t j = 0; j < n; ++j) {
        const double d = d_rewards[j];
        if (d == 0) continue;
        const double* row = w2 + j * h;
        double* grow = gw2 + j * h;
        for (size_t i = 0; i < h; ++i) {
            grow[i] += d * hidden[i];
            d_hidden[i] += d * row[i];
        }
        gb2[j] += d;
    }
    for (size_t i = 0; i < h; ++i) {
        const double dpre = d_hidden[i] * (1.0 - hidden[i] * hidden[i]);
        if (dpre == 0) continue;
        double* row = gw1 + i * dim;
        for (size_t k = 0; k < dim; ++k) row[k] += dpre * v[k];
        gb1[i] += dpre;
    }
}

void RewardModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write model file '" + path + "'");
    ordered_json j;
    j["format"] = kModelFormatName;
    j["version"] = kModelFormatVersion;
    j["system_name"] = system_name_;
    j["n_outputs"] = n_outputs_;
    j["feature_spec"] = {
        {"variant", spec_.variant == FeatureVariant::hashed_ngrams ? "hashed_ngrams" : "external"},
        {"dim", spec_.dim},
        {"word_n", spec_.word_n},
        {"char_n", spec_.char_n},
    };
    j["arch"] = {
        {"kind", arch_.kind == ArchKind::linear ? "linear" : "mlp"},
        {"hidden", arch_.hidden},
    };
    j["params"] = params_;
    out << j.dump() << '\n';
    if (!out) throw IoError("failed writing model file '" + path + "'");
}

RewardModel RewardModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file '" + path + "'");
    ordered_json j;
    try {
        j = ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("model file '" + path + "': " + e.what());
    }
    try {
        if (j.value("format", std::string()) != kModelFormatName)
            throw ParseError("model file '" + path + "': not a reward model file");
        const int version = j.at("version").get<int>();
        if (version != kModelFormatVersion)
            throw VersionError("model file '" + path + "' has format version " +
                               std::to_string(version) + ", expected " +
                               std::to_string(kModelFormatVersion));
        FeatureSpec spec;
        const auto& fs = j.at("feature_spec");
        spec.variant = fs.at("variant").get<std::string>() == "external"
                           ? FeatureVariant::external
                           : FeatureVariant::hashed_ngrams;
        spec.dim = fs.at("dim").get<int>();
        spec.word_n = fs.at("word_n").get<std::vector<int>>();
        spec.char_n = fs.at("char_n").get<std::vector<int>>();
        ModelArch arch;
        arch.kind = j.at("arch").at("kind").get<std::string>() == "mlp" ? ArchKind::mlp
                                                                        : ArchKind::linear;
        arch.hidden = j.at("arch").at("hidden").get<int>();
        RewardModel model(spec, arch, j.at("system_name").get<std::string>(),
                          j.at("n_outputs").get<int>(), 0);
        auto params = j.at("params").get<std::vector<double>>();
        if (params.size() != model.params_.size())
            throw ParseError("model file '" + path + "' has " + std::to_string(params.size()) +
                             " parameters, expected " + std::to_string(model.params_.size()));
        model.params_ = std::move(params);
        for (double p : model.params_)
            if (!std::isfinite(p)) throw ValidationError("model file contains non-finite parameters");
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("model file '" + path + "': " + e.what());
    }
}

RewardModel RewardModel::load(const std::string& path, const std::string& expected_system) {
    RewardModel model = load(path);
    if (model.system_name() != expected_system)
        throw ValidationError("model was trained for system '" + model.system_name() +
                              "', expected '" + expected_system + "'");
    return model;
}

RewardVector score_report(const RewardModel& model, std::string_view reference,
                          std::string_view candidate) {
    if (model.feature_spec().variant != FeatureVariant::hashed_ngrams)
        throw ConfigError("external feature models need a featurizer with a loaded vector table");
    Featurizer featurizer(model.feature_spec());
    return model.forward(featurizer.featurize(reference, candidate));
}

RewardVector score_report(const RewardModel& model, const Featurizer& featurizer,
                          std::string_view record_id, std::string_view reference,
                          std::string_view candidate) {
    return model.forward(featurizer.featurize_for(record_id, reference, candidate));
}

}  // namespace remet
