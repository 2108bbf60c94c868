#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "muxai/error.hpp"

namespace muxai {

// Dense row-major 2D array.
template <typename T>
class BasicGrid {
public:
    BasicGrid() = default;
    BasicGrid(int height, int width, T fill = T{})
        : height_(height), width_(width),
          data_(static_cast<std::size_t>(checked(height)) * static_cast<std::size_t>(checked(width)), fill) {}

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(int y, int x) noexcept { return data_[index(y, x)]; }
    const T& operator()(int y, int x) const noexcept { return data_[index(y, x)]; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    std::vector<T>& storage() noexcept { return data_; }
    const std::vector<T>& storage() const noexcept { return data_; }

    bool same_shape(const BasicGrid& o) const noexcept {
        return height_ == o.height_ && width_ == o.width_;
    }

    template <typename U>
    bool same_shape(const BasicGrid<U>& o) const noexcept {
        return height_ == o.height() && width_ == o.width();
    }

    friend bool operator==(const BasicGrid&, const BasicGrid&) = default;

private:
    static int checked(int n) {
        if (n < 0) throw InputError("grid dimension must be non-negative");
        return n;
    }
    std::size_t index(int y, int x) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<T> data_;
};

using Image = BasicGrid<float>;

}  // namespace muxai
