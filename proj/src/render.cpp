#include "muxai/render.hpp"

#include <algorithm>
#include <cmath>

namespace muxai {

namespace {

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

Rgb colormap_blue_red(double t) noexcept {
    t = std::clamp(t, 0.0, 1.0);
    const double r = std::clamp(1.5 - std::abs(4.0 * t - 3.0), 0.0, 1.0);
    const double g = std::clamp(1.5 - std::abs(4.0 * t - 2.0), 0.0, 1.0);
    const double b = std::clamp(1.5 - std::abs(4.0 * t - 1.0), 0.0, 1.0);
    return {to_byte(r), to_byte(g), to_byte(b)};
}

RgbImage render_overlay(const Image& image, const Heatmap& heatmap, const OverlayOptions& opts) {
    if (!image.same_shape(heatmap.values)) throw InputError("image and heatmap shapes differ");
    RgbImage out(image.height(), image.width());
    for (std::size_t i = 0; i < image.size(); ++i) {
        const double h = std::clamp(static_cast<double>(heatmap.values.storage()[i]), 0.0, 1.0);
        const double g = std::clamp(static_cast<double>(image.storage()[i]), 0.0, 1.0);
        const double a = opts.alpha_min + (opts.alpha_max - opts.alpha_min) * h;
        const Rgb c = colormap_blue_red(h);
        out.storage()[i] = {to_byte((1.0 - a) * g + a * c.r / 255.0), to_byte((1.0 - a) * g + a * c.g / 255.0),
                            to_byte((1.0 - a) * g + a * c.b / 255.0)};
    }
    return out;
}

RgbImage render_attention_diff(const Heatmap& original, const Heatmap& unlearned, double epsilon) {
    if (!original.values.same_shape(unlearned.values)) throw InputError("heatmap shapes differ");
    RgbImage out(original.values.height(), original.values.width());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double d = static_cast<double>(unlearned.values.storage()[i]) - static_cast<double>(original.values.storage()[i]);
        const double fade = 1.0 - std::min(std::abs(d), 1.0);
        Rgb px{255, 255, 255};
        if (d > epsilon) {
            px = {to_byte(fade), 255, to_byte(fade)};
        } else if (d < -epsilon) {
            px = {255, to_byte(fade), to_byte(fade)};
        }
        out.storage()[i] = px;
    }
    return out;
}

RgbImage gray_to_rgb(const Image& image) {
    RgbImage out(image.height(), image.width());
    for (std::size_t i = 0; i < image.size(); ++i) {
        const auto v = to_byte(image.storage()[i]);
        out.storage()[i] = {v, v, v};
    }
    return out;
}

RgbImage hconcat(std::span<const RgbImage> tiles, int gap) {
    if (tiles.empty()) throw EmptyInputError("no tiles to concatenate");
    const int h = tiles.front().height();
    int w = 0;
    for (const auto& t : tiles) {
        if (t.height() != h) throw InputError("tiles differ in height");
        w += t.width();
    }
    w += gap * static_cast<int>(tiles.size() - 1);
    RgbImage out(h, w, Rgb{255, 255, 255});
    int x0 = 0;
    for (const auto& t : tiles) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < t.width(); ++x) out(y, x0 + x) = t(y, x);
        x0 += t.width() + gap;
    }
    return out;
}

}  // namespace muxai
