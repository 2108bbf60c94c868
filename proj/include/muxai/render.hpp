#pragma once

#include <span>

#include "muxai/png_io.hpp"
#include "muxai/sidu.hpp"

namespace muxai {

// Jet-style ramp: 0 -> dark blue, 0.5 -> green/yellow, 1 -> dark red.
Rgb colormap_blue_red(double t) noexcept;

struct OverlayOptions {
    double alpha_min = 0.35;  // colormap weight where the heatmap is 0
    double alpha_max = 0.75;  // colormap weight where the heatmap is 1
};

RgbImage render_overlay(const Image& image, const Heatmap& heatmap, const OverlayOptions& opts = {});

// Green where the unlearned map gained weight, red where it lost weight,
// white where |difference| <= epsilon.
RgbImage render_attention_diff(const Heatmap& original, const Heatmap& unlearned, double epsilon = 0.02);

RgbImage gray_to_rgb(const Image& image);

// Horizontal strip of equally sized tiles separated by `gap` white columns.
RgbImage hconcat(std::span<const RgbImage> tiles, int gap = 2);

}  // namespace muxai
