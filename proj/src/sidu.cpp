#include "muxai/sidu.hpp"

#include <algorithm>
#include <cmath>

namespace muxai {

std::string_view sd_sigma_mode_name(SdSigmaMode m) noexcept {
    return m == SdSigmaMode::fixed ? "fixed" : "adaptive";
}

SdSigmaMode sd_sigma_mode_from_name(std::string_view name) {
    if (name == "fixed") return SdSigmaMode::fixed;
    if (name == "adaptive") return SdSigmaMode::adaptive;
    throw ConfigError("unknown sd_sigma mode '" + std::string(name) + "'");
}

void SiduConfig::validate() const {
    if (!(binarize_threshold > 0.0 && binarize_threshold < 1.0)) throw ConfigError("binarize threshold must lie in (0, 1)");
    if (!(sd_sigma > 0.0) || !std::isfinite(sd_sigma)) throw ConfigError("sd_sigma must be > 0");
}

Image upsample_bilinear(const Image& src, int height, int width) {
    if (src.empty()) throw InputError("cannot resize an empty map");
    Image out(height, width);
    const double sy = static_cast<double>(src.height()) / height;
    const double sx = static_cast<double>(src.width()) / width;
    for (int y = 0; y < height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height() - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, src.height() - 1);
        const double ty = fy - y0;
        for (int x = 0; x < width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width() - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, src.width() - 1);
            const double tx = fx - x0;
            const double top = src(y0, x0) * (1.0 - tx) + src(y0, x1) * tx;
            const double bot = src(y1, x0) * (1.0 - tx) + src(y1, x1) * tx;
            out(y, x) = static_cast<float>(std::clamp(top * (1.0 - ty) + bot * ty, 0.0, 1.0));
        }
    }
    return out;
}

MaskSet masks_from_features(const ForwardOutput& features, int height, int width, const SiduConfig& cfg) {
    cfg.validate();
    const FeatureShape fs = features.shape;
    MaskSet set;
    set.source_shape = fs;
    set.masks.reserve(static_cast<std::size_t>(fs.channels));
    Image binary(fs.height, fs.width);
    for (int c = 0; c < fs.channels; ++c) {
        float lo = features.feature(c, 0, 0), hi = lo;
        for (int y = 0; y < fs.height; ++y)
            for (int x = 0; x < fs.width; ++x) {
                lo = std::min(lo, features.feature(c, y, x));
                hi = std::max(hi, features.feature(c, y, x));
            }
        for (int y = 0; y < fs.height; ++y) {
            for (int x = 0; x < fs.width; ++x) {
                float v = 0.0f;
                if (hi > lo) {
                    const double n = (static_cast<double>(features.feature(c, y, x)) - lo) / (static_cast<double>(hi) - lo);
                    v = n > cfg.binarize_threshold ? 1.0f : 0.0f;
                }
                binary(y, x) = v;
            }
        }
        set.masks.push_back(upsample_bilinear(binary, height, width));
    }
    return set;
}

MaskSet extract_masks(const ModelSnapshot& model, const Image& image, const SiduConfig& cfg) {
    return masks_from_features(forward(model, image), image.height(), image.width(), cfg);
}

MaskedPredictions masked_predictions(const ModelSnapshot& model, const Image& image, const MaskSet& masks) {
    std::vector<Image> inputs;
    inputs.reserve(masks.masks.size() + 1);
    inputs.push_back(image);
    for (const auto& m : masks.masks) {
        if (!m.same_shape(image)) throw InputError("mask shape differs from image shape");
        Image masked(image.height(), image.width());
        for (std::size_t i = 0; i < image.size(); ++i) masked.storage()[i] = image.storage()[i] * m.storage()[i];
        inputs.push_back(std::move(masked));
    }
    const auto preds = predict(model, inputs);
    return {preds.front(), std::vector<double>(preds.begin() + 1, preds.end())};
}

std::vector<double> similarity_difference(double p_original, std::span<const double> p_masked, double sd_sigma) {
    if (!(sd_sigma > 0.0)) throw ConfigError("sd_sigma must be > 0");
    std::vector<double> sd;
    sd.reserve(p_masked.size());
    const double denom = 2.0 * sd_sigma * sd_sigma;
    for (double p : p_masked) {
        const double d = p_original - p;
        sd.push_back(std::exp(-(d * d) / denom));
    }
    return sd;
}

std::vector<double> uniqueness(std::span<const double> p_masked) {
    if (p_masked.empty()) throw EmptyInputError("uniqueness of an empty prediction list");
    std::vector<double> u(p_masked.size(), 0.0);
    for (std::size_t k = 0; k < p_masked.size(); ++k)
        for (std::size_t j = 0; j < p_masked.size(); ++j) u[k] += std::abs(p_masked[k] - p_masked[j]);
    return u;
}

Heatmap compose_heatmap(const MaskSet& masks, std::span<const double> weights, std::string model_tag) {
    if (masks.masks.empty()) throw EmptyInputError("no masks to compose");
    if (masks.masks.size() != weights.size()) throw InputError("mask and weight counts differ");
    const Image& first = masks.masks.front();
    std::vector<double> raw(first.size(), 0.0);
    for (std::size_t k = 0; k < masks.masks.size(); ++k) {
        const auto& m = masks.masks[k].storage();
        for (std::size_t i = 0; i < raw.size(); ++i) raw[i] += weights[k] * static_cast<double>(m[i]);
    }
    const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
    const double lo = *lo_it, hi = *hi_it;

    Heatmap h{Image(first.height(), first.width()), std::move(model_tag), !(hi > lo)};
    if (!h.degenerate)
        for (std::size_t i = 0; i < raw.size(); ++i) h.values.storage()[i] = static_cast<float>((raw[i] - lo) / (hi - lo));
    return h;
}

Explanation explain_detailed(const ModelSnapshot& model, const Image& image, const SiduConfig& cfg) {
    cfg.validate();
    Explanation ex;
    const MaskSet masks = extract_masks(model, image, cfg);
    ex.predictions = masked_predictions(model, image, masks);
    ex.sd_sigma_used = cfg.sd_sigma_mode == SdSigmaMode::fixed
                           ? cfg.sd_sigma
                           : std::max(cfg.sd_sigma, cfg.sd_sigma * std::abs(ex.predictions.original));
    ex.similarity = similarity_difference(ex.predictions.original, ex.predictions.masked, ex.sd_sigma_used);
    ex.uniqueness = uniqueness(ex.predictions.masked);
    ex.weights.resize(ex.similarity.size());
    for (std::size_t k = 0; k < ex.weights.size(); ++k) ex.weights[k] = ex.similarity[k] * ex.uniqueness[k];
    ex.heatmap = compose_heatmap(masks, ex.weights, std::string(provenance_name(model.tag())));
    return ex;
}

Heatmap explain(const ModelSnapshot& model, const Image& image, const SiduConfig& cfg) {
    return explain_detailed(model, image, cfg).heatmap;
}

}  // namespace muxai
