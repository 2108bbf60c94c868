#include "muxai/heatmap_io.hpp"

#include <bit>

#include "muxai/png_io.hpp"

namespace muxai {

namespace {

std::filesystem::path with_suffix(std::filesystem::path stem, const char* suffix) {
    stem += suffix;
    return stem;
}

}  // namespace

void to_json(nlohmann::json& j, const SiduConfig& c) {
    j = {{"binarize_threshold", c.binarize_threshold}, {"sd_sigma", c.sd_sigma},
         {"sd_sigma_mode", sd_sigma_mode_name(c.sd_sigma_mode)}, {"upsample", "bilinear"}};
}

void from_json(const nlohmann::json& j, SiduConfig& c) {
    c = SiduConfig{};
    c.binarize_threshold = j.value("binarize_threshold", c.binarize_threshold);
    c.sd_sigma = j.value("sd_sigma", c.sd_sigma);
    c.sd_sigma_mode = sd_sigma_mode_from_name(j.value("sd_sigma_mode", std::string("fixed")));
    if (j.value("upsample", std::string("bilinear")) != "bilinear") throw ConfigError("only bilinear upsampling is supported");
}

void save_heatmap(const Heatmap& h, const SiduConfig& cfg, const std::filesystem::path& stem) {
    std::vector<std::uint8_t> blob;
    blob.reserve(h.values.size() * 4);
    for (float v : h.values.values()) {
        const auto bits = std::bit_cast<std::uint32_t>(v);
        for (int i = 0; i < 4; ++i) blob.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
    write_file(with_suffix(stem, ".bin"), blob);
    const nlohmann::json header = {{"shape", {h.values.height(), h.values.width()}},
                                   {"dtype", "float32-le"},
                                   {"layout", "row-major"},
                                   {"model_tag", h.model_tag},
                                   {"degenerate", h.degenerate},
                                   {"config", cfg}};
    const std::string text = header.dump(2) + "\n";
    write_file(with_suffix(stem, ".json"), std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Heatmap load_heatmap(const std::filesystem::path& stem) {
    const auto text = read_file(with_suffix(stem, ".json"));
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed heatmap header: " + std::string(e.what()));
    }
    const int height = header.at("shape").at(0).get<int>();
    const int width = header.at("shape").at(1).get<int>();
    const auto blob = read_file(with_suffix(stem, ".bin"));
    if (blob.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * 4)
        throw IoError("heatmap blob size does not match its header");
    Heatmap h{Image(height, width), header.at("model_tag").get<std::string>(), header.value("degenerate", false)};
    for (std::size_t i = 0; i < h.values.size(); ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(blob[4 * i + static_cast<std::size_t>(b)]) << (8 * b);
        h.values.storage()[i] = std::bit_cast<float>(bits);
    }
    return h;
}

}  // namespace muxai
