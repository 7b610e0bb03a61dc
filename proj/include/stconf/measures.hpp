#pragma once

#include "stconf/aggregate.hpp"
#include "stconf/cost_volume.hpp"
#include "stconf/curve.hpp"
#include "stconf/image.hpp"
#include "stconf/parallel.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stconf {

enum class MeasureKind {
    // minimum cost and local properties
    MSM, MM, MMN, NLM, NLMN, CUR, LC, PKR, PKRN, DAM,
    APKR, APKRN, WPKR, WPKRN, LMN, SGE,
    // entire cost curve
    PER, MLM, ALM, NEM, NOI, WMN, WMNN, PWCFA,
    // left-right consistency
    LRC, LRD, ZSAD, ACC, UC, UCC, UCO,
    // disparity map analysis
    DTD, DMV, VAR, SKEW, MDD, MND, DA, DS, MED,
    // reference image analysis
    DB, DLB, HGM, DTE, IVAR,
    // self-matching
    DTS, DSM, SAMM,
    // semi-global matching
    SCS, PS,
};

enum class MeasureFamily { local_curve, windowed_peak, full_curve, left_right, disparity_map, image, self_matching, sgm };
const char* to_string(MeasureFamily f);

/// Input components a measure reads. Bit flags.
enum Requirement : unsigned {
    kNeedsVolume = 1u << 0,
    kNeedsRightView = 1u << 1,
    kNeedsLeftImage = 1u << 2,
    kNeedsRightImage = 1u << 3,
    kNeedsSelfVolumes = 1u << 4,
    kNeedsScanlines = 1u << 5,
    kNeedsPreAggregation = 1u << 6,
    kNeedsDisparity = 1u << 7,
};

/// Which image the WPKR weight compares l(p) against.
enum class WpkrMode { same_image, cross_image };

struct MeasureParams {
    double sigma_nlm = 0.5;
    double sigma_mlm = 0.15;
    double s_per = 0.1;
    double gamma_lc = 0.5;
    double gamma_ps = 4.0;
    double wpkr_threshold = 10.0;
    WpkrMode wpkr_mode = WpkrMode::same_image;
    int window = 5;
    double epsilon_div = 1e-6;
    double edge_threshold_disparity = 2.0;
    double edge_threshold_intensity = 20.0;
    double sge_p1 = 0.03;
    double sge_p2 = 0.12;

    /// Throws when a positive parameter is not positive or the window is off the sweep list.
    void validate() const;
};

inline constexpr int kWindowSweep[] = {5, 7, 9, 11, 13, 15, 17, 19, 21, 31};
bool is_sweep_window(int window);

struct MeasureInfo {
    MeasureKind kind;
    std::string_view id;
    std::string_view name;
    MeasureFamily family;
    std::string_view formula;
    unsigned needs;
    bool windowed;
    /// Sign of the verbatim formula as printed.
    int verbatim_sign;
    /// Multiplier giving "larger = more confident" for evaluation.
    int evaluation_sign;
    /// Part of the default evaluation set only for SGM pipelines.
    bool sgm_only;
    /// A feature channel rather than a stand-alone confidence (excluded from "all").
    bool feature_only;
    std::string_view params;
};

std::span<const MeasureInfo> measure_catalog();
const MeasureInfo& measure_info(MeasureKind kind);
/// Looks up a bare id ("MSM") and returns nullptr if unknown.
const MeasureInfo* find_measure(std::string_view id);

/// A catalog id with an optional window suffix, e.g. "DA_31".
struct MeasureRequest {
    MeasureKind kind;
    std::optional<int> window;

    std::string id() const;
};
MeasureRequest parse_measure_id(std::string_view text);

/// Default evaluation set: every stand-alone measure, dropping SGM-tailored ones unless `sgm`.
std::vector<MeasureRequest> default_measure_set(bool sgm);
/// Expands "all" or a comma separated id list.
std::vector<MeasureRequest> resolve_measures(const std::string& list, bool sgm);

/// Machine-readable catalog listing (JSON array).
std::string catalog_json();

struct ConfidenceMap {
    std::string id;
    MeasureKind kind = MeasureKind::MSM;
    RealMap scores;
    /// Multiply raw scores by this to make larger values more confident.
    int evaluation_sign = 1;
    MeasureParams params;

    RealMap oriented() const;
};

/// Everything the catalog reads. Optional parts are empty when not computed.
struct MeasureInputs {
    CostVolume left_volume;
    CurveStats left_stats;
    DisparityMap left_disparity;
    CostVolume right_volume;
    CurveStats right_stats;
    DisparityMap right_disparity;
    SelfCostVolume self_left;
    SelfCostVolume self_right;
    GrayImage left_image;
    GrayImage right_image;
    std::optional<ScanlineResult> scanlines;
    CostVolume pre_aggregation;

    /// Dimensions of whichever reference-view component is present.
    int width() const;
    int height() const;
    int d_max() const { return left_volume.d_max(); }
    unsigned available() const;
};

/// Derives statistics, WTA maps, the right-reference view and (when images are
/// given) the self-matching volumes from a left-reference volume.
MeasureInputs make_measure_inputs(CostVolume left_volume, GrayImage left_image, GrayImage right_image,
                                  int census_window = 9, Exec exec = {});

using MeasureKinds = std::span<const MeasureKind>;

std::vector<ConfidenceMap> local_curve_measures(const MeasureInputs& in, const MeasureParams& p, MeasureKinds kinds);
std::vector<ConfidenceMap> windowed_peak_measures(const MeasureInputs& in, const MeasureParams& p, MeasureKinds kinds);
std::vector<ConfidenceMap> full_curve_measures(const MeasureInputs& in, const MeasureParams& p, MeasureKinds kinds);
std::vector<ConfidenceMap> lr_measures(const MeasureInputs& in, const MeasureParams& p, MeasureKinds kinds);
std::vector<ConfidenceMap> disparity_map_measures(const MeasureInputs& in, const MeasureParams& p, MeasureKinds kinds);
std::vector<ConfidenceMap> image_measures(const MeasureInputs& in, const MeasureParams& p, MeasureKinds kinds);
std::vector<ConfidenceMap> self_matching_measures(const MeasureInputs& in, const MeasureParams& p, MeasureKinds kinds);
std::vector<ConfidenceMap> sgm_measures(const MeasureInputs& in, const MeasureParams& p, MeasureKinds kinds);

ConfidenceMap compute_measure(const MeasureInputs& in, const MeasureParams& p, MeasureKind kind);
/// Dispatches by id; a "_<window>" suffix overrides params.window.
ConfidenceMap compute_measure(const MeasureInputs& in, const MeasureParams& p, std::string_view id);
ConfidenceMap compute_measure(const MeasureInputs& in, const MeasureParams& p, const MeasureRequest& req);

// Shared helpers, exposed for reuse by the feature stacks and tests.

/// Central-difference gradient with replicated borders.
void central_gradient(const RealMap& map, RealMap& gx, RealMap& gy);
/// Distance to the nearest set pixel under the 8-connected (1, sqrt 2) chamfer metric;
/// pixels of a map without any edge get width + height.
RealMap chamfer_distance(const Image2D<std::uint8_t>& edges);
RealMap to_real(const GrayImage& img);

} // namespace stconf
