#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "muxai/scenegen.hpp"
#include "muxai/sidu.hpp"

namespace muxai {

// How a zero-mass heatmap enters heatmap coverage: dropped, or counted as 0.
enum class ZeroMassPolicy { skip, zero };

std::string_view zero_mass_policy_name(ZeroMassPolicy p) noexcept;
ZeroMassPolicy zero_mass_policy_from_name(std::string_view name);

inline constexpr std::string_view kStdConvention = "population";

struct MetricResult {
    std::string metric;
    double value = 0.0;
    std::size_t n_samples = 0;   // contributing samples
    std::size_t n_skipped = 0;
    ZeroMassPolicy policy = ZeroMassPolicy::skip;
};

nlohmann::json to_json(const MetricResult& r);

// mean_j sum(H_j * M_j) / sum(H_j)
MetricResult heatmap_coverage(std::span<const Heatmap> heatmaps, std::span<const RoiMask> masks,
                              ZeroMassPolicy policy = ZeroMassPolicy::skip);

// Heatmap coverage against ROI masks of `classes`; samples whose mask is
// empty are skipped and counted in n_skipped.
MetricResult class_coverage(std::span<const Heatmap> heatmaps, std::span<const SceneSample> samples, ClassSet classes,
                            ZeroMassPolicy policy = ZeroMassPolicy::skip);

// Population standard deviation over all cells.
double population_std(std::span<const float> a, std::span<const float> b);

// mean_j std(H_u^j - H_o^j)
MetricResult attention_shift(std::span<const Heatmap> unlearned, std::span<const Heatmap> original);

}  // namespace muxai
