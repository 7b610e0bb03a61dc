#pragma once

#include "stconf/image.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stconf {

/// Fraction of `subset` pixels with |disp - gt| > tau. An empty subset mask means all valid GT pixels.
double d1_rate(const DisparityMap& disp, const GroundTruth& gt, double tau, const Image2D<std::uint8_t>& subset = {});

struct SparsificationCurve {
    std::vector<double> densities;
    std::vector<double> error_rates;
    int k = 0;
    double tau = 0.0;
    /// Error rate over every valid pixel.
    double epsilon = 0.0;
};

struct SparsifyOptions {
    int k = 20;
    /// Break confidence ties by a seeded random permutation instead of raster order.
    std::optional<std::uint64_t> shuffle_seed;
};

/// `confidence` must already be oriented so that larger means more reliable.
SparsificationCurve sparsify(const RealMap& confidence, const DisparityMap& disp, const GroundTruth& gt, double tau,
                             const SparsifyOptions& options = {});

/// Mean of the sampled error rates.
double auc(const SparsificationCurve& curve);
/// eps + (1 - eps) ln(1 - eps), for eps in [0, 1).
double optimal_auc(double epsilon);
double macro_average(std::span<const double> values);

struct EvalRecord {
    std::string measure;
    std::string image;
    double auc = 0.0;
    double opt = 0.0;
    double d1 = 0.0;
};

struct MeasureSummary {
    std::string measure;
    double mean_auc = 0.0;
    double mean_opt = 0.0;
    double mean_d1 = 0.0;
    int images = 0;
    int rank = 0;
};

/// Per-measure macro averages, ranked by ascending mean AUC (ties share a rank).
/// Rows keep the first-appearance order of the measures.
std::vector<MeasureSummary> summarize(const std::vector<EvalRecord>& records);

/// Fixed-point rendering of v * 100.
std::string format_x100(double v, int decimals);

/// One row per record: measure,image,auc_x100,opt_x100,d1_pct.
std::string report_csv(const std::vector<EvalRecord>& records);
/// Macro rows: measure,images,auc_x100,opt_x100,d1_pct,rank.
std::string macro_csv(const std::vector<EvalRecord>& records);
std::string report_markdown(const std::vector<EvalRecord>& records);
/// density,error_rate
std::string curve_csv(const SparsificationCurve& curve);

void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace stconf
