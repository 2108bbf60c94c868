#include "muxai/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>

#include "muxai/error.hpp"

namespace muxai {

namespace {

struct ReadCursor {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;
};

void on_write(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

void on_read(png_structp png, png_bytep data, png_size_t length) {
    auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cur->pos + length > cur->bytes.size()) png_error(png, "truncated PNG stream");
    std::memcpy(data, cur->bytes.data() + cur->pos, length);
    cur->pos += length;
}

[[noreturn]] void on_error(png_structp, png_const_charp msg) { throw IoError(std::string("libpng: ") + msg); }
void on_warning(png_structp, png_const_charp) {}

std::vector<std::uint8_t> encode(int width, int height, int color_type, int channels, const std::uint8_t* rows) {
    if (width <= 0 || height <= 0) throw InputError("cannot encode an empty image");
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, on_error, on_warning);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_write_struct(p, i); }
    } guard{&png, &info};
    if (!info) throw IoError("png_create_info_struct failed");

    png_set_write_fn(png, &out, on_write, nullptr);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
    for (int y = 0; y < height; ++y)
        png_write_row(png, const_cast<png_bytep>(rows + static_cast<std::size_t>(y) * stride));
    png_write_end(png, nullptr);
    return out;
}

// Decodes to 8-bit rows with the requested channel count (1 = gray, 3 = RGB).
std::vector<std::uint8_t> decode(std::span<const std::uint8_t> bytes, int channels, int& width, int& height) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw IoError("not a PNG stream");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, on_error, on_warning);
    if (!png) throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_read_struct(p, i, nullptr); }
    } guard{&png, &info};
    if (!info) throw IoError("png_create_info_struct failed");

    ReadCursor cur{bytes, 0};
    png_set_read_fn(png, &cur, on_read);
    png_read_info(png, info);
    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    const bool is_gray = (color & PNG_COLOR_MASK_COLOR) == 0;
    if (channels == 3 && is_gray) png_set_gray_to_rgb(png);
    if (channels == 1 && !is_gray) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    png_read_update_info(png, info);

    const std::size_t stride = png_get_rowbytes(png, info);
    if (stride != static_cast<std::size_t>(width) * static_cast<std::size_t>(channels))
        throw IoError("unexpected PNG row layout");
    std::vector<std::uint8_t> pixels(stride * static_cast<std::size_t>(height));
    std::vector<png_bytep> rows(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) rows[static_cast<std::size_t>(y)] = pixels.data() + stride * static_cast<std::size_t>(y);
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    return pixels;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const BasicGrid<std::uint8_t>& gray) {
    return encode(gray.width(), gray.height(), PNG_COLOR_TYPE_GRAY, 1, gray.storage().data());
}

std::vector<std::uint8_t> encode_png(const RgbImage& rgb) {
    static_assert(sizeof(Rgb) == 3);
    return encode(rgb.width(), rgb.height(), PNG_COLOR_TYPE_RGB, 3,
                  reinterpret_cast<const std::uint8_t*>(rgb.storage().data()));
}

BasicGrid<std::uint8_t> decode_png_gray(std::span<const std::uint8_t> bytes) {
    int w = 0, h = 0;
    auto px = decode(bytes, 1, w, h);
    BasicGrid<std::uint8_t> out(h, w);
    std::copy(px.begin(), px.end(), out.storage().begin());
    return out;
}

RgbImage decode_png_rgb(std::span<const std::uint8_t> bytes) {
    int w = 0, h = 0;
    auto px = decode(bytes, 3, w, h);
    RgbImage out(h, w);
    for (std::size_t i = 0; i < out.size(); ++i) out.storage()[i] = Rgb{px[3 * i], px[3 * i + 1], px[3 * i + 2]};
    return out;
}

BasicGrid<std::uint8_t> to_gray8(const Image& img) {
    BasicGrid<std::uint8_t> out(img.height(), img.width());
    for (std::size_t i = 0; i < img.size(); ++i) {
        const float v = std::clamp(img.storage()[i], 0.0f, 1.0f);
        out.storage()[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    return out;
}

Image from_gray8(const BasicGrid<std::uint8_t>& img) {
    Image out(img.height(), img.width());
    for (std::size_t i = 0; i < img.size(); ++i) out.storage()[i] = static_cast<float>(img.storage()[i]) / 255.0f;
    return out;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace muxai
