#pragma once

#include "stconf/cost_volume.hpp"
#include "stconf/image.hpp"
#include "stconf/parallel.hpp"

#include <array>
#include <span>
#include <vector>

namespace stconf {

struct CrossArms {
    std::uint16_t left = 0;
    std::uint16_t right = 0;
    std::uint16_t up = 0;
    std::uint16_t down = 0;
};

using CrossMap = Image2D<CrossArms>;

/// Each arm grows while |I(q) - I(p)| < tau_color and the distance stays below max_arm.
CrossMap build_cross(const GrayImage& img, int max_arm = 17, int tau_color = 20);

/// Averages each hypothesis over U_d(p): the left support at p intersected with the
/// right support at p - d (column clamped to 0). Repeats `iterations` times.
CostVolume cbca_aggregate(const CostVolume& vol, const CrossMap& cross_left, const CrossMap& cross_right,
                          int iterations = 2, Exec exec = {});

enum class ScanDirection { left_to_right, right_to_left, top_to_bottom, bottom_to_top };
inline constexpr std::array<ScanDirection, 4> kSgmPaths = {
    ScanDirection::left_to_right, ScanDirection::right_to_left, ScanDirection::top_to_bottom,
    ScanDirection::bottom_to_top};
const char* to_string(ScanDirection d);

struct SgmParams {
    double p1 = 0.03;
    double p2 = 0.12;
};

/// Outputs of the four scanline optimizations.
/// `paths[s]` holds C_s / (1 + P2); `total` holds sum_s C_s / (|S| (1 + P2)),
/// both in [0, 1]. `path_wta[s]` is argmin_d C_s with ties to the lowest d.
struct ScanlineResult {
    std::array<CostVolume, 4> paths;
    std::array<Image2D<std::int32_t>, 4> path_wta;
    CostVolume total;
    SgmParams params;
};

/// One scanline of the SGM recurrence over a row-major sequence of curves,
/// accumulated in double. `costs` holds n * levels entries; returns n * levels.
std::vector<double> sgm_scanline(std::span<const double> costs, int levels, double p1, double p2);

ScanlineResult sgm_aggregate(const CostVolume& vol, SgmParams params = {}, Exec exec = {});

/// Single directional pass, unnormalized (L values straight from the recurrence).
CostVolume sgm_path(const CostVolume& vol, ScanDirection dir, SgmParams params, Exec exec = {});

} // namespace stconf
