#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "muxai/grid.hpp"
#include "muxai/rng.hpp"
#include "muxai/scenegen.hpp"

namespace muxai {

struct ConvBlockSpec {
    int out_channels = 16;
    int kernel_size = 3;
    int padding = 1;
    friend bool operator==(const ConvBlockSpec&, const ConvBlockSpec&) = default;
};

struct FeatureShape {
    int channels = 0;
    int height = 0;
    int width = 0;
    friend bool operator==(const FeatureShape&, const FeatureShape&) = default;
};

// conv -> ReLU -> 2x2 max-pool per block, then GAP -> dense(hidden) -> ReLU -> dense(1).
struct ArchConfig {
    int input_height = 64;
    int input_width = 64;
    std::vector<ConvBlockSpec> conv_blocks{{16, 3, 1}, {32, 3, 1}, {64, 3, 1}};
    int hidden_width = 32;

    // Throws ConfigError when a block produces an empty map or a size is non-positive.
    void validate() const;
    FeatureShape feature_shape() const;
    friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

enum class Provenance { original, retrain, finetune, prune, reinit, confuse };

std::string_view provenance_name(Provenance p) noexcept;
Provenance provenance_from_name(std::string_view name);

enum class TensorKind { conv_weight, conv_bias, dense_weight, dense_bias };

std::string_view tensor_kind_name(TensorKind k) noexcept;
TensorKind tensor_kind_from_name(std::string_view name);

struct Tensor {
    std::string name;
    TensorKind kind = TensorKind::conv_weight;
    std::vector<int> shape;
    std::vector<float> values;

    bool is_weight() const noexcept { return kind == TensorKind::conv_weight || kind == TensorKind::dense_weight; }
    // Fan-in of one output unit; the initializer's scale.
    int fan_in() const noexcept;
    friend bool operator==(const Tensor&, const Tensor&) = default;
};

inline constexpr std::string_view kInitScheme = "fan_in_uniform";

// Weights and architecture of one counting regressor. The provenance tag is
// fixed at construction.
class ModelSnapshot {
public:
    ModelSnapshot(ArchConfig arch, std::vector<Tensor> tensors, Provenance tag, std::uint64_t init_seed);
    // Copies the weights of `source` into a new snapshot carrying `tag`.
    ModelSnapshot(const ModelSnapshot& source, Provenance tag);

    ModelSnapshot(const ModelSnapshot&) = default;
    ModelSnapshot(ModelSnapshot&&) noexcept = default;
    ModelSnapshot& operator=(const ModelSnapshot&) = default;
    ModelSnapshot& operator=(ModelSnapshot&&) noexcept = default;

    const ArchConfig& arch() const noexcept { return arch_; }
    Provenance tag() const noexcept { return tag_; }
    std::uint64_t init_seed() const noexcept { return init_seed_; }

    std::span<const Tensor> tensors() const noexcept { return tensors_; }
    std::span<Tensor> tensors() noexcept { return tensors_; }
    const Tensor& tensor(std::string_view name) const;

    std::size_t parameter_count() const noexcept;
    // FNV-1a over the raw bits of every tensor, in storage order.
    std::uint64_t weights_hash() const noexcept;

    bool same_weights(const ModelSnapshot& o) const { return arch_ == o.arch_ && tensors_ == o.tensors_; }

private:
    ArchConfig arch_;
    std::vector<Tensor> tensors_;
    Provenance tag_;
    std::uint64_t init_seed_;
};

// Empty tensors in the canonical layer order, shaped for `arch`.
std::vector<Tensor> tensor_layout(const ArchConfig& arch);

// Fan-in uniform: w ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)); biases zero.
ModelSnapshot init_model(const ArchConfig& arch, std::uint64_t seed, Provenance tag = Provenance::original);

// Redraws one weight of `t` with its initialization distribution.
float draw_init_weight(const Tensor& t, Rng& rng);

struct ForwardOutput {
    double prediction = 0.0;
    std::vector<float> feature_maps;  // C x h x w, row-major per channel
    FeatureShape shape;

    float feature(int c, int y, int x) const noexcept {
        return feature_maps[(static_cast<std::size_t>(c) * shape.height + y) * shape.width + x];
    }
};

ForwardOutput forward(const ModelSnapshot& model, const Image& image);

// Batched inference; ordering is preserved.
std::vector<double> predict(const ModelSnapshot& model, std::span<const Image> images);
std::vector<double> predict(const ModelSnapshot& model, const DatasetSplit& data);

// Parameters converted to a working precision, one vector per tensor.
template <typename T>
using ParamSet = std::vector<std::vector<T>>;

template <typename T>
ParamSet<T> params_of(const ModelSnapshot& model);

template <typename T>
struct LossGradient {
    T loss{};
    ParamSet<T> gradient;
};

// Mean squared error over the batch and its gradient w.r.t. every tensor.
template <typename T>
LossGradient<T> loss_and_gradient(const ArchConfig& arch, const ParamSet<T>& params,
                                  std::span<const Image* const> images, std::span<const double> targets);

template <typename T>
T batch_loss(const ArchConfig& arch, const ParamSet<T>& params, std::span<const Image* const> images,
             std::span<const double> targets);

struct TrainConfig {
    int batch_size = 50;
    double learning_rate = 5e-4;
    int epochs = 10;
    std::uint64_t seed = 0;

    void validate() const;
    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainResult {
    ModelSnapshot model;
    std::vector<double> epoch_losses;
};

// Plain mini-batch SGD on mean squared error; the input snapshot is untouched
// and the result keeps its provenance tag.
TrainResult train(const ModelSnapshot& model, const DatasetSplit& data, const TrainConfig& cfg);

struct RegressionMetrics {
    double mae = 0.0;
    double rmse = 0.0;
};

RegressionMetrics regression_metrics(std::span<const double> predictions, std::span<const double> labels);
RegressionMetrics evaluate_regression(const ModelSnapshot& model, const DatasetSplit& data);

}  // namespace muxai
