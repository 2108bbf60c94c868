#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "muxai/model.hpp"

namespace muxai {

// fixed: kernel width = sd_sigma; adaptive: max(sd_sigma, sd_sigma * |p_o|).
enum class SdSigmaMode { fixed, adaptive };

std::string_view sd_sigma_mode_name(SdSigmaMode m) noexcept;
SdSigmaMode sd_sigma_mode_from_name(std::string_view name);

struct SiduConfig {
    double binarize_threshold = 0.5;
    double sd_sigma = 0.25;
    SdSigmaMode sd_sigma_mode = SdSigmaMode::fixed;

    void validate() const;
};

struct MaskSet {
    std::vector<Image> masks;  // one per feature channel, input resolution, values in [0,1]
    FeatureShape source_shape;
};

// Bilinear resize with half-pixel centres and edge clamping.
Image upsample_bilinear(const Image& src, int height, int width);

MaskSet masks_from_features(const ForwardOutput& features, int height, int width, const SiduConfig& cfg);
MaskSet extract_masks(const ModelSnapshot& model, const Image& image, const SiduConfig& cfg);

struct MaskedPredictions {
    double original = 0.0;
    std::vector<double> masked;
};

MaskedPredictions masked_predictions(const ModelSnapshot& model, const Image& image, const MaskSet& masks);

std::vector<double> similarity_difference(double p_original, std::span<const double> p_masked, double sd_sigma);
std::vector<double> uniqueness(std::span<const double> p_masked);

struct Heatmap {
    Image values;
    std::string model_tag;
    bool degenerate = false;  // raw map was constant; values are all zero
};

// (R - min R) / (max R - min R) of R = sum_k weight_k * mask_k.
Heatmap compose_heatmap(const MaskSet& masks, std::span<const double> weights, std::string model_tag);

struct Explanation {
    Heatmap heatmap;
    MaskedPredictions predictions;
    std::vector<double> similarity;
    std::vector<double> uniqueness;
    std::vector<double> weights;
    double sd_sigma_used = 0.0;
};

Explanation explain_detailed(const ModelSnapshot& model, const Image& image, const SiduConfig& cfg);
Heatmap explain(const ModelSnapshot& model, const Image& image, const SiduConfig& cfg);

}  // namespace muxai
