#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "muxai/grid.hpp"

namespace muxai {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

using RgbImage = BasicGrid<Rgb>;

std::vector<std::uint8_t> encode_png(const BasicGrid<std::uint8_t>& gray);
std::vector<std::uint8_t> encode_png(const RgbImage& rgb);

BasicGrid<std::uint8_t> decode_png_gray(std::span<const std::uint8_t> bytes);
RgbImage decode_png_rgb(std::span<const std::uint8_t> bytes);

// Quantizes [0,1] intensities to 8 bits (round to nearest).
BasicGrid<std::uint8_t> to_gray8(const Image& img);
Image from_gray8(const BasicGrid<std::uint8_t>& img);

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace muxai
