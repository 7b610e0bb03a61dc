#pragma once

#include "stconf/cost_volume.hpp"
#include "stconf/image.hpp"
#include "stconf/parallel.hpp"

#include <span>

namespace stconf {

/// Summary of one cost curve. When no second local minimum exists, d2m/c_d2m
/// fall back to d2/c_d2 and has_d2m is false.
struct PixelCurveStats {
    int d1 = 0;
    double c_d1 = 0.0;
    int d2 = 0;
    double c_d2 = 0.0;
    int d2m = 0;
    double c_d2m = 0.0;
    bool has_d2m = false;
    int n_local_minima = 0;
    double sum_costs = 0.0;
    double sum_exp_neg = 0.0;
};

using CurveStats = Image2D<PixelCurveStats>;

/// c_i < c_{i-1} and c_i < c_{i+1}; boundary indices compare against their single neighbor.
bool is_local_minimum(std::span<const float> curve, int i);
bool is_local_minimum(std::span<const double> curve, int i);

/// argmin with ties to the lowest index.
int argmin_lowest(std::span<const float> curve);

PixelCurveStats analyze_curve(std::span<const float> curve);
PixelCurveStats analyze_curve(std::span<const double> curve);

DisparityMap wta(const CostVolume& vol, Exec exec = {});
CurveStats curve_stats(const CostVolume& vol, Exec exec = {});

} // namespace stconf
