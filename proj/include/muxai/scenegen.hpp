#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "muxai/grid.hpp"

namespace muxai {

enum class ObjectClass : std::uint8_t { human = 0, bicycle = 1, vehicle = 2, motorcycle = 3 };

inline constexpr std::size_t kNumClasses = 4;
inline constexpr std::array<ObjectClass, kNumClasses> kAllClasses{
    ObjectClass::human, ObjectClass::bicycle, ObjectClass::vehicle, ObjectClass::motorcycle};

std::string_view class_name(ObjectClass c) noexcept;
ObjectClass class_from_name(std::string_view name);

constexpr std::size_t class_index(ObjectClass c) noexcept { return static_cast<std::size_t>(c); }

// Small bitset over the four object classes.
class ClassSet {
public:
    constexpr ClassSet() = default;
    constexpr ClassSet(std::initializer_list<ObjectClass> classes) {
        for (auto c : classes) insert(c);
    }

    static constexpr ClassSet all() { return {ObjectClass::human, ObjectClass::bicycle, ObjectClass::vehicle, ObjectClass::motorcycle}; }
    static constexpr ClassSet retained(ObjectClass forget) {
        ClassSet s = all();
        s.bits_ &= static_cast<std::uint8_t>(~(1u << class_index(forget)));
        return s;
    }

    constexpr void insert(ObjectClass c) { bits_ |= static_cast<std::uint8_t>(1u << class_index(c)); }
    constexpr bool contains(ObjectClass c) const { return (bits_ >> class_index(c)) & 1u; }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr bool is_subset_of(ClassSet o) const { return (bits_ & ~o.bits_) == 0; }
    std::vector<ObjectClass> members() const;

    friend constexpr bool operator==(ClassSet, ClassSet) = default;

private:
    std::uint8_t bits_ = 0;
};

// Half-open pixel box [x0, x1) x [y0, y1).
struct BoundingBox {
    ObjectClass cls = ObjectClass::human;
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    int area() const noexcept { return (x1 - x0) * (y1 - y0); }
    bool contains(int x, int y) const noexcept { return x >= x0 && x < x1 && y >= y0 && y < y1; }
    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

class ClassCounts {
public:
    int& operator[](ObjectClass c) noexcept { return v_[class_index(c)]; }
    int operator[](ObjectClass c) const noexcept { return v_[class_index(c)]; }
    int total() const noexcept { return v_[0] + v_[1] + v_[2] + v_[3]; }
    friend bool operator==(const ClassCounts&, const ClassCounts&) = default;

private:
    std::array<int, kNumClasses> v_{};
};

struct SceneSample {
    Image image;
    std::vector<BoundingBox> boxes;
    ClassCounts counts;
    int label = 0;

    friend bool operator==(const SceneSample&, const SceneSample&) = default;
};

enum class SplitTag { train, val, test };

std::string_view split_name(SplitTag t) noexcept;
SplitTag split_from_name(std::string_view name);

struct DatasetSplit {
    std::vector<SceneSample> samples;
    SplitTag split_tag = SplitTag::train;
    std::uint64_t generation_seed = 0;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }
    friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

struct GenConfig {
    int image_width = 64;
    int image_height = 64;
    // Human-dominant rates, roughly the class balance of a street scene corpus.
    std::array<double, kNumClasses> lambda_per_class{2.0, 0.6, 0.6, 0.3};
    int max_objects = 16;
    double background_level = 0.0;
    double noise_std = 0.05;
    int train_count = 2000;
    int val_count = 300;
    int test_count = 300;
    std::uint64_t seed = 0;

    // Throws ConfigError.
    void validate() const;
};

SceneSample generate_sample(const GenConfig& config, std::uint64_t seed);

struct Dataset {
    DatasetSplit train;
    DatasetSplit val;
    DatasetSplit test;
};

// Per-split seed used to derive per-sample seeds; streams are disjoint.
std::uint64_t split_seed(std::uint64_t master_seed, SplitTag tag) noexcept;

DatasetSplit generate_split(const GenConfig& config, SplitTag tag, int count);
Dataset generate_dataset(const GenConfig& config);

// label' = label - counts[forget]; images, boxes and counts are kept.
DatasetSplit relabel(const DatasetSplit& dataset, ObjectClass forget_class);

struct RebalanceConfig {
    double hi_percentile = 0.70;
    double lo_percentile = 0.10;
    double keep_probability = 0.5;
    int duplication_factor = 2;
};

// Nearest-rank percentile of an ascending-sorted sequence.
int nearest_rank_value(const std::vector<int>& sorted_labels, double percentile);

DatasetSplit rebalance(const DatasetSplit& train, const RebalanceConfig& cfg, std::uint64_t seed);

using RoiMask = BasicGrid<std::uint8_t>;

RoiMask roi_mask(const SceneSample& sample, ClassSet classes);

}  // namespace muxai
