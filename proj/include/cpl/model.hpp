#pragma once

#include "cpl/distributions.hpp"
#include "cpl/geometry.hpp"
#include "cpl/losses.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace cpl {

enum class ParamGroup { Extractor, Proxies };

// One named, row-major parameter tensor with its gradient buffer.
struct Parameter {
    std::string name;
    ParamGroup group = ParamGroup::Extractor;
    size_t rows = 0;
    size_t cols = 0;
    Vector value;
    Vector grad;

    size_t size() const { return value.size(); }
};

class ParameterStore {
public:
    // Returns the index of the new tensor; values and gradients start at zero.
    size_t add(std::string name, ParamGroup group, size_t rows, size_t cols);

    Parameter& operator[](size_t i) { return params_[i]; }
    const Parameter& operator[](size_t i) const { return params_[i]; }
    Parameter& find(std::string_view name);
    const Parameter& find(std::string_view name) const;

    size_t size() const { return params_.size(); }
    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    void zero_grad();
    size_t scalar_count() const;

private:
    std::vector<Parameter> params_;
};

/// Static description of one CPL configuration.
///
/// The six named variants are hard-linear/euclidean-t, hard-semicircular/cosine
/// and soft-free with Poisson or Binomial smoothing under euclidean-t or cosine.
/// Ablations (negative Euclidean similarity, exponential and triangular
/// smoothing, the UPL baseline, fixed |v0|) are accepted as well; any other
/// structurally valid combination needs `experimental`.
struct ProblemSpec {
    int classes = 8;
    int input_dim = 16;
    int hidden = 64;
    int dim = 512;
    Similarity similarity = Similarity::euclidean_t();
    LayoutType layout = LayoutType::HardLinear;
    NormMode norm_mode = NormMode::Learnable;
    double fixed_norm = 1.0;
    LossConfig loss;
    Smoothing smoothing;
    // If set, v0 is rescaled to this norm right after initialization.
    std::optional<double> init_v0_norm;
    bool experimental = false;

    void validate() const;
    // "H-L", "H-S", "S-P", "S-B", ... with the similarity appended.
    std::string variant_name() const;
};

nlohmann::json to_json(const ProblemSpec& spec);
ProblemSpec problem_spec_from_json(const nlohmann::json& j);

// Two-layer perceptron x -> ReLU(W1 x + b1) -> W2 h + b2 standing in for the
// image backbone.
class FeatureExtractor {
public:
    struct Cache {
        Vector pre_hidden;
        Vector hidden;
        Vector feature;
    };

    FeatureExtractor() = default;
    FeatureExtractor(ParameterStore& store, int input_dim, int hidden, int dim);

    int input_dim() const { return input_dim_; }
    int hidden() const { return hidden_; }
    int dim() const { return dim_; }

    Vector forward(const ParameterStore& store, std::span<const double> x) const;
    void forward(const ParameterStore& store, std::span<const double> x, Cache& cache) const;
    // Accumulates parameter gradients for dL/df into the store's grad buffers.
    void backward(ParameterStore& store, std::span<const double> x, const Cache& cache,
                  std::span<const double> d_feature) const;

private:
    int input_dim_ = 0, hidden_ = 0, dim_ = 0;
    size_t w1_ = 0, b1_ = 0, w2_ = 0, b2_ = 0;
};

struct SampleRef {
    std::span<const double> x;
    int label = 0;
};

struct BatchLoss {
    double value = 0.0;
    int singular_count = 0;
};

class CplModel {
public:
    explicit CplModel(ProblemSpec spec);

    CplModel(const CplModel&) = default;
    CplModel& operator=(const CplModel&) = default;

    const ProblemSpec& spec() const { return spec_; }
    ParameterStore& parameters() { return store_; }
    const ParameterStore& parameters() const { return store_; }
    const ProxyLearner& proxy_learner() const { return learner_; }
    const FeatureExtractor& extractor() const { return extractor_; }

    Parameter& proxy_params() { return store_[proxy_index_]; }
    const Parameter& proxy_params() const { return store_[proxy_index_]; }

    Vector extract(std::span<const double> x) const;
    ProxySet proxies() const;

    // argmax_k sim(F(x), p_k), smallest index on ties.
    int predict_rank(std::span<const double> x) const;
    int predict_from_feature(std::span<const double> f, const ProxySet& proxies) const;

    // Stop-gradient targets for the current proxy parameters.
    LossTargets loss_targets() const;

    // Mean loss over the batch without touching gradients.
    double batch_loss(std::span<const SampleRef> batch, const LossTargets& targets) const;

    // Zeroes gradients, then fills them with the batch-mean gradient.
    BatchLoss forward_backward(std::span<const SampleRef> batch, const LossTargets& targets);

    // Post-step constraint (fixed |v0|).
    void project();

private:
    ProblemSpec spec_;
    ParameterStore store_;
    FeatureExtractor extractor_;
    ProxyLearner learner_;
    size_t proxy_index_ = 0;
};

// Xavier-normal weights and proxy parameters, zero biases, from one seed.
CplModel init_model(const ProblemSpec& spec, std::uint64_t seed);

struct Checkpoint {
    CplModel model;
    std::uint64_t seed = 0;
    int epoch = 0;
};

nlohmann::json checkpoint_to_json(const CplModel& model, std::uint64_t seed, int epoch);
Checkpoint checkpoint_from_json(const nlohmann::json& j);
void save_checkpoint(const std::filesystem::path& path, const CplModel& model, std::uint64_t seed,
                     int epoch);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace cpl
