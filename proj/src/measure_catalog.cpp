#include "stconf/measures.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace stconf {

namespace {

using F = MeasureFamily;
using K = MeasureKind;

constexpr unsigned V = kNeedsVolume;
constexpr unsigned RV = kNeedsRightView;
constexpr unsigned LI = kNeedsLeftImage;
constexpr unsigned RI = kNeedsRightImage;
constexpr unsigned SV = kNeedsSelfVolumes;
constexpr unsigned SL = kNeedsScanlines;
constexpr unsigned PA = kNeedsPreAggregation;
constexpr unsigned DM = kNeedsDisparity;

// clang-format off
constexpr std::array<MeasureInfo, 50> kCatalog = {{
    {K::MSM,   "MSM",   "Matching Score Measure",            F::local_curve,   "-c_d1",                                   V,  false, -1, +1, false, false, ""},
    {K::MM,    "MM",    "Maximum Margin",                    F::local_curve,   "c_d2m - c_d1",                            V,  false, +1, +1, false, false, ""},
    {K::MMN,   "MMN",   "Maximum Margin Naive",              F::local_curve,   "c_d2 - c_d1",                             V,  false, +1, +1, false, false, ""},
    {K::NLM,   "NLM",   "Non-Linear Margin",                 F::local_curve,   "exp((c_d2m - c_d1) / (2 sigma^2))",       V,  false, +1, +1, false, false, "sigma_nlm"},
    {K::NLMN,  "NLMN",  "Non-Linear Margin Naive",           F::local_curve,   "exp((c_d2 - c_d1) / (2 sigma^2))",        V,  false, +1, +1, false, false, "sigma_nlm"},
    {K::CUR,   "CUR",   "Curvature",                         F::local_curve,   "-2 c_d1 + c_(d1-1) + c_(d1+1)",           V,  false, +1, +1, false, false, ""},
    {K::LC,    "LC",    "Local Curve",                       F::local_curve,   "(max(c_(d1-1), c_(d1+1)) - c_d1) / gamma", V, false, +1, +1, false, false, "gamma_lc"},
    {K::PKR,   "PKR",   "Peak Ratio",                        F::local_curve,   "c_d2m / c_d1",                            V,  false, +1, +1, false, false, "epsilon_div"},
    {K::PKRN,  "PKRN",  "Peak Ratio Naive",                  F::local_curve,   "c_d2 / c_d1",                             V,  false, +1, +1, false, false, "epsilon_div"},
    {K::DAM,   "DAM",   "Disparity Ambiguity Measure",       F::local_curve,   "|d1 - d2|",                               V,  false, +1, -1, false, false, ""},
    {K::APKR,  "APKR",  "Average Peak Ratio",                F::windowed_peak, "sum_q c_d2m(p)(q) / c_d1(p)(q)",          V,  true,  +1, +1, false, false, "window,epsilon_div"},
    {K::APKRN, "APKRN", "Average Peak Ratio Naive",          F::windowed_peak, "sum_q c_d2(p)(q) / c_d1(p)(q)",           V,  true,  +1, +1, false, false, "window,epsilon_div"},
    {K::WPKR,  "WPKR",  "Weighted Peak Ratio",               F::windowed_peak, "sum_q alpha(p,q) c_d2m(p)(q) / c_d1(p)(q)", V | LI | RI, true, +1, +1, false, false, "window,epsilon_div,wpkr_threshold,wpkr_mode"},
    {K::WPKRN, "WPKRN", "Weighted Peak Ratio Naive",         F::windowed_peak, "sum_q alpha(p,q) c_d2(p)(q) / c_d1(p)(q)",  V | LI | RI, true, +1, +1, false, false, "window,epsilon_div,wpkr_threshold,wpkr_mode"},
    {K::LMN,   "LMN",   "Local Minima in Neighborhood",      F::windowed_peak, "#{q : c_d1(p)(q) < c_d1(p)+-1(q)}",        V,  true,  +1, +1, false, false, "window"},
    {K::SGE,   "SGE",   "Semi-Global Energy",                F::windowed_peak, "sum_s sum_q c_d1(q) + P1 t[|dd|=1] + P2 t[|dd|>1]", V, true, +1, -1, true, false, "window,sge_p1,sge_p2"},
    {K::PER,   "PER",   "Perturbation measure",              F::full_curve,    "sum_{i!=d1} exp(-(c_d1 - c_i)^2 / s^2)",  V,  false, +1, -1, false, false, "s_per"},
    {K::MLM,   "MLM",   "Maximum Likelihood Measure",        F::full_curve,    "exp(-c_d1/(2 sigma)) / sum_i exp(-c_i/(2 sigma))", V, false, +1, +1, false, false, "sigma_mlm"},
    {K::ALM,   "ALM",   "Attainable Likelihood Measure",     F::full_curve,    "1 / sum_i exp(-c_i/(2 sigma))",           V,  false, +1, +1, false, false, "sigma_mlm,epsilon_div"},
    {K::NEM,   "NEM",   "Negative Entropy Measure",          F::full_curve,    "P log P, P = exp(-c_d1) / sum_i exp(-c_i)", V, false, +1, +1, false, false, ""},
    {K::NOI,   "NOI",   "Number of Inflections",             F::full_curve,    "#{i : c_i < c_(i+-1)}",                   V,  false, +1, -1, false, false, ""},
    {K::WMN,   "WMN",   "Winner Margin",                     F::full_curve,    "(c_d2m - c_d1) / sum_i c_i",              V,  false, +1, +1, false, false, "epsilon_div"},
    {K::WMNN,  "WMNN",  "Winner Margin Naive",               F::full_curve,    "(c_d2 - c_d1) / sum_i c_i",               V,  false, +1, +1, false, false, "epsilon_div"},
    {K::PWCFA, "PWCFA", "Pixel-Wise Cost Function Analysis", F::full_curve,    "1 / sum_i max(min(|i-d1|-1, 1/3), 0)^2 / max(c_i - c_d1 - sum c / (3 d_max), 1)", V, false, +1, +1, false, false, "epsilon_div"},
    {K::LRC,   "LRC",   "Left-Right Consistency",            F::left_right,    "-|d1(p) - d1r(p^r)|",                     V | RV, false, -1, +1, false, false, ""},
    {K::LRD,   "LRD",   "Left-Right Difference",             F::left_right,    "(c_d2 - c_d1) / |c_d1(p) - c^r_d1r(p^r)|", V | RV, false, +1, +1, false, false, "epsilon_div"},
    {K::ZSAD,  "ZSAD",  "Zero-Mean Sum of Absolute Differences", F::left_right, "sum_q |l(q) - mu_l(p) - r(q^r) + mu_r(p^r)|", V | LI | RI, true, +1, -1, false, false, "window"},
    {K::ACC,   "ACC",   "Asymmetric Consistency Check",      F::left_right,    "0 if colliding and (d1 != max d1(Q) or c_d1 != min c_d1(Q)), else 1", V, false, +1, +1, false, false, ""},
    {K::UC,    "UC",    "Uniqueness Constraint",             F::left_right,    "0 if colliding and c_d1 != min c_d1(Q), else 1", V, false, +1, +1, false, false, ""},
    {K::UCC,   "UCC",   "Uniqueness Constraint Cost",        F::left_right,    "0 if colliding and c_d1 != min c_d1(Q), else -c_d1", V, false, -1, +1, false, false, ""},
    {K::UCO,   "UCO",   "Uniqueness Constraint Occurrence",  F::left_right,    "-#{q != p : q^r = p^r}",                  V,  false, -1, +1, false, false, ""},
    {K::DTD,   "DTD",   "Distance To Discontinuities",       F::disparity_map, "min_{q in edges(d1)} |p - q|",            DM, false, +1, +1, false, false, "edge_threshold_disparity"},
    {K::DMV,   "DMV",   "Disparity Map Variance",            F::disparity_map, "||grad d1(p)||",                          DM, false, +1, -1, false, false, ""},
    {K::VAR,   "VAR",   "Disparity Variance",                F::disparity_map, "-(1/#N) sum_q (d1(q) - mu)^2",            DM, true,  -1, +1, false, false, "window"},
    {K::SKEW,  "SKEW",  "Disparity skewness",                F::disparity_map, "-(1/#N) sum_q (d1(q) - mu)^3",            DM, true,  -1, +1, false, false, "window"},
    {K::MDD,   "MDD",   "Median Disparity Deviation",        F::disparity_map, "-|d1(p) - MED(p)|",                       DM, true,  -1, +1, false, false, "window"},
    {K::MND,   "MND",   "Mean Disparity Deviation",          F::disparity_map, "-|d1(p) - mu(p)|",                        DM, true,  -1, +1, false, false, "window"},
    {K::DA,    "DA",    "Disparity Agreement",               F::disparity_map, "H[d1(p)](p)",                             DM, true,  +1, +1, false, false, "window"},
    {K::DS,    "DS",    "Disparity Scattering",              F::disparity_map, "-log(#{i : H[i](p) > 0} / #N)",           DM, true,  -1, +1, false, false, "window"},
    {K::MED,   "MED",   "Median Disparity",                  F::disparity_map, "median_{q in N(p)} d1(q)",                DM, true,  +1, +1, false, true,  "window"},
    {K::DB,    "DB",    "Distance from Border",              F::image,         "min(x, y, W - x, H - y)",                 0,  false, +1, +1, false, false, ""},
    {K::DLB,   "DLB",   "Distance from Left Border",         F::image,         "min(x, d_max)",                           V,  false, +1, +1, false, false, ""},
    {K::HGM,   "HGM",   "Horizontal Gradient Magnitude",     F::image,         "|d l(p) / dx|",                           LI, false, +1, +1, false, false, ""},
    {K::DTE,   "DTE",   "Distance to image Edge",            F::image,         "min_{q in edges(l)} |p - q|",             LI, false, +1, +1, false, false, "edge_threshold_intensity"},
    {K::IVAR,  "IVAR",  "Intensity Variance",                F::image,         "(1/#N) sum_q (l(q) - mu)^2",              LI, true,  +1, +1, false, false, "window"},
    {K::DTS,   "DTS",   "Distinctiveness",                   F::self_matching, "min_{i in D^ll, i != 0} c^ll_i(p)",       SV, false, +1, +1, false, false, ""},
    {K::DSM,   "DSM",   "Distinctive Similarity Measure",    F::self_matching, "DTS^l(p) DTS^r(p^r) / c_d1(p)^2",         V | SV | RV, false, +1, +1, false, false, "epsilon_div"},
    {K::SAMM,  "SAMM",  "Self-Aware Matching Measure",       F::self_matching, "corr(c_(i)(p), c^ll_(i-d1)(p))",          V | SV, false, +1, +1, false, false, ""},
    {K::SCS,   "SCS",   "Sum of Consistent Scanlines",       F::sgm,           "#{s : d1^s(p) = d1(p)}",                  SL, false, +1, +1, true, false, ""},
    {K::PS,    "PS",    "Local-global relationship",         F::sgm,           "(c*_d2 - c*_d1)/c*_d1 (1 - min(|d*2-d*1|,g)/g) (1 - min(|d*1-d1|,g)/g)", SL | PA, false, +1, +1, true, false, "gamma_ps,epsilon_div"},
}};
// clang-format on

} // namespace

const char* to_string(MeasureFamily f)
{
    switch (f) {
    case F::local_curve: return "local";
    case F::windowed_peak: return "local-windowed";
    case F::full_curve: return "full-curve";
    case F::left_right: return "left-right";
    case F::disparity_map: return "disparity";
    case F::image: return "image";
    case F::self_matching: return "self-matching";
    case F::sgm: return "sgm";
    }
    return "?";
}

std::span<const MeasureInfo> measure_catalog() { return kCatalog; }

const MeasureInfo& measure_info(MeasureKind kind)
{
    for (const auto& m : kCatalog)
        if (m.kind == kind)
            return m;
    throw Error("measure kind missing from catalog");
}

const MeasureInfo* find_measure(std::string_view id)
{
    for (const auto& m : kCatalog)
        if (m.id == id)
            return &m;
    return nullptr;
}

bool is_sweep_window(int window)
{
    return std::find(std::begin(kWindowSweep), std::end(kWindowSweep), window) != std::end(kWindowSweep);
}

void MeasureParams::validate() const
{
    const bool positive = sigma_nlm > 0 && sigma_mlm > 0 && s_per > 0 && gamma_lc > 0 && gamma_ps > 0
                          && epsilon_div > 0;
    if (!positive)
        throw Error("measure parameters: sigma, s, gamma and epsilon must be > 0");
    if (wpkr_threshold < 0 || edge_threshold_disparity < 0 || edge_threshold_intensity < 0)
        throw Error("measure parameters: thresholds must be >= 0");
    if (sge_p1 < 0 || sge_p2 < sge_p1)
        throw Error("measure parameters: SGE penalties must satisfy 0 <= P1 <= P2");
    if (!is_sweep_window(window))
        throw Error("measure window " + std::to_string(window) + " is not one of 5,7,9,11,13,15,17,19,21,31");
}

std::string MeasureRequest::id() const
{
    std::string s(measure_info(kind).id);
    if (window)
        s += "_" + std::to_string(*window);
    return s;
}

MeasureRequest parse_measure_id(std::string_view text)
{
    std::string_view base = text;
    std::optional<int> window;
    if (const auto us = text.rfind('_'); us != std::string_view::npos) {
        base = text.substr(0, us);
        const std::string_view digits = text.substr(us + 1);
        if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })
            || digits.size() > 4)
            throw Error("unknown measure '" + std::string(text) + "'");
        window = std::stoi(std::string(digits));
    }
    const MeasureInfo* info = find_measure(base);
    if (!info)
        throw Error("unknown measure '" + std::string(text) + "'");
    if (window && !info->windowed)
        throw Error("measure '" + std::string(base) + "' takes no window");
    if (window && !is_sweep_window(*window))
        throw Error("measure '" + std::string(text) + "': window not in the sweep list");
    return {info->kind, window};
}

std::vector<MeasureRequest> default_measure_set(bool sgm)
{
    std::vector<MeasureRequest> out;
    for (const auto& m : kCatalog) {
        if (m.feature_only || (m.sgm_only && !sgm))
            continue;
        out.push_back({m.kind, std::nullopt});
    }
    return out;
}

std::vector<MeasureRequest> resolve_measures(const std::string& list, bool sgm)
{
    if (list == "all")
        return default_measure_set(sgm);
    std::vector<MeasureRequest> out;
    std::stringstream ss(list);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok.erase(0, tok.find_first_not_of(" \t"));
        tok.erase(tok.find_last_not_of(" \t") + 1);
        if (tok.empty())
            continue;
        if (tok == "all") {
            const auto all = default_measure_set(sgm);
            out.insert(out.end(), all.begin(), all.end());
        } else {
            out.push_back(parse_measure_id(tok));
        }
    }
    if (out.empty())
        throw Error("no measures requested");
    return out;
}

std::string catalog_json()
{
    auto needs_list = [](unsigned n) {
        nlohmann::json arr = nlohmann::json::array();
        const std::pair<unsigned, const char*> names[] = {
            {kNeedsVolume, "volume"},          {kNeedsRightView, "right-view"},
            {kNeedsLeftImage, "left-image"},   {kNeedsRightImage, "right-image"},
            {kNeedsSelfVolumes, "self-volumes"}, {kNeedsScanlines, "scanlines"},
            {kNeedsPreAggregation, "pre-aggregation"}, {kNeedsDisparity, "disparity"}};
        for (const auto& [bit, name] : names)
            if (n & bit)
                arr.push_back(name);
        return arr;
    };
    nlohmann::json out = nlohmann::json::array();
    for (const auto& m : kCatalog) {
        nlohmann::json params = nlohmann::json::array();
        std::stringstream ss{std::string(m.params)};
        std::string p;
        while (std::getline(ss, p, ','))
            if (!p.empty())
                params.push_back(p);
        out.push_back({
            {"id", m.id},
            {"name", m.name},
            {"family", to_string(m.family)},
            {"formula", m.formula},
            {"requires", needs_list(m.needs)},
            {"windowed", m.windowed},
            {"params", params},
            {"polarity", {{"verbatim_sign", m.verbatim_sign}, {"evaluation_sign", m.evaluation_sign}}},
            {"sgm_only", m.sgm_only},
            {"feature_only", m.feature_only},
        });
    }
    return out.dump(2);
}

RealMap ConfidenceMap::oriented() const
{
    RealMap out = scores;
    if (evaluation_sign != 1)
        for (auto& v : out.data())
            v *= evaluation_sign;
    return out;
}

} // namespace stconf
