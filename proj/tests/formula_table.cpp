#include "formula_table.hpp"

#include "support.hpp"

#include "stconf/aggregate.hpp"
#include "stconf/cost_volume.hpp"
#include "stconf/curve.hpp"
#include "stconf/dataio.hpp"
#include "stconf/evaluation.hpp"
#include "stconf/features.hpp"
#include "stconf/measures.hpp"

#include <cmath>
#include <fstream>

namespace stconf::test {

bool FormulaCase::pass() const
{
    if (!std::isfinite(got))
        return false;
    if (abs_tol >= 0.0)
        return std::abs(got - expected) <= abs_tol;
    if (expected == 0.0)
        return std::abs(got) <= 5e-5;
    const double unit = std::pow(10.0, std::floor(std::log10(std::abs(expected))) - 3);
    return std::abs(got - expected) <= 0.5 * unit + 1e-12;
}

namespace {

MeasureInputs curve_inputs(const std::vector<float>& curve)
{
    MeasureInputs in;
    in.left_volume = volume_from_curves({curve});
    in.left_stats = curve_stats(in.left_volume);
    in.left_disparity = wta(in.left_volume);
    return in;
}

double measure_at(const MeasureInputs& in, const MeasureParams& p, MeasureKind k, int x = 0, int y = 0)
{
    return compute_measure(in, p, k).scores.at(x, y);
}

MeasureInputs disparity_inputs(const DisparityMap& d)
{
    MeasureInputs in;
    in.left_disparity = d;
    return in;
}

} // namespace

std::vector<FormulaCase> formula_cases()
{
    using K = MeasureKind;
    std::vector<FormulaCase> out;
    MeasureParams p;

    // census and matching costs
    {
        GrayImage patch(3, 3);
        const std::uint8_t v[] = {5, 1, 2, 4, 3, 9, 8, 7, 6};
        std::copy(std::begin(v), std::end(v), patch.data().begin());
        const CensusImage c = census_transform(patch, 3);
        const int expected[] = {0, 1, 1, 0, 0, 0, 0, 0, 0};
        int mismatches = 0;
        for (int j = 0; j < 9; ++j)
            mismatches += c.bit(1, 1, j) != static_cast<bool>(expected[j]) ? 1 : 0;
        out.push_back({"census 3x3 bits 011000000 (mismatches)", static_cast<double>(mismatches), 0.0, 0.0});
        const std::uint64_t a[] = {0b110};
        const std::uint64_t b[] = {0};
        out.push_back({"hamming 011000000 vs 0 over 9 bits", hamming_distance(a, b) / 9.0, 0.2222});
    }
    {
        CostVolume vol(10, 1, 5, 1.0f);
        vol.at(7, 0, 3) = 0.0f;
        const CostVolume right = derive_right_volume(vol);
        out.push_back({"right remap of zero at (x=7,i=3) lands on x=4", right.at(4, 0, 3), 0.0, 0.0});
    }
    {
        const auto dir = scratch_dir("formula_ingest");
        CostVolume prob(1, 1, 3);
        prob.at(0, 0, 0) = 0.7f;
        prob.at(0, 0, 1) = 0.2f;
        prob.at(0, 0, 2) = 0.1f;
        write_stcvol(prob, dir / "p.stcvol");
        const CostVolume costs = ingest_cost_volume(dir / "p.stcvol", IngestMode::probabilities);
        out.push_back({"probability ingest [0.7,0.2,0.1] -> c_1", costs.at(0, 0, 1), 0.8333});
        out.push_back({"probability ingest [0.7,0.2,0.1] -> c_2", costs.at(0, 0, 2), 1.0});
    }

    // aggregation
    {
        CostVolume vol(3, 1, 1);
        vol.at(0, 0, 0) = 0.0f;
        vol.at(1, 0, 0) = 1.0f;
        vol.at(2, 0, 0) = 0.0f;
        const GrayImage flat(3, 1, 100);
        const CrossMap cross = build_cross(flat, 17, 20);
        const CostVolume agg = cbca_aggregate(vol, cross, cross, 1);
        out.push_back({"CBCA mean of [0,1,0] at the center", agg.at(1, 0, 0), 1.0 / 3.0});
    }
    {
        const std::vector<double> costs = {0, 1, 1, 0, 0, 1};
        const auto L = sgm_scanline(costs, 2, 1.0, 2.0);
        out.push_back({"SGM toy L(p1, 0)", L[2], 1.0});
        out.push_back({"SGM toy L(p1, 1)", L[3], 1.0});
        out.push_back({"SGM toy L(p2, 0)", L[4], 0.0, 1e-12});
        out.push_back({"SGM toy L(p2, 1)", L[5], 1.0});
    }

    // curve statistics
    const std::vector<float> ambiguous = {0.9f, 0.3f, 0.6f, 0.8f, 0.1f, 0.5f, 0.4f, 0.7f};
    const std::vector<float> distinguishing = {0.5f, 0.2f, 0.1f, 0.3f, 0.25f, 0.4f};
    {
        const auto s = analyze_curve(std::span<const float>(ambiguous));
        out.push_back({"d1 of the 8-level curve", static_cast<double>(s.d1), 4.0, 0.0});
        out.push_back({"d2 of the 8-level curve", static_cast<double>(s.d2), 1.0, 0.0});
        out.push_back({"number of local minima", static_cast<double>(s.n_local_minima), 3.0, 0.0});
        const auto t = analyze_curve(std::span<const float>(distinguishing));
        out.push_back({"d2m of the distinguishing curve", static_cast<double>(t.d2m), 4.0, 0.0});
    }

    // local curve measures
    {
        const MeasureInputs in = curve_inputs(ambiguous);
        out.push_back({"MSM", measure_at(in, p, K::MSM), -0.1});
        out.push_back({"MM", measure_at(in, p, K::MM), 0.2});
        out.push_back({"CUR", measure_at(in, p, K::CUR), 1.1});
        out.push_back({"DAM", measure_at(in, p, K::DAM), 3.0});
        MeasureParams lc = p;
        lc.gamma_lc = 1.0;
        out.push_back({"LC (gamma 1)", measure_at(in, lc, K::LC), 0.7});
        out.push_back({"NLM (sigma 0.5)", measure_at(in, p, K::NLM), 1.4918});
        out.push_back({"WMNN", measure_at(in, p, K::WMNN), 0.04651});
        out.push_back({"NOI", measure_at(in, p, K::NOI), 3.0});
    }
    {
        const MeasureInputs in = curve_inputs(distinguishing);
        out.push_back({"PKR", measure_at(in, p, K::PKR), 2.5});
        out.push_back({"PKRN", measure_at(in, p, K::PKRN), 2.0});
    }
    {
        MeasureParams m = p;
        m.sigma_mlm = 0.5;
        const MeasureInputs in = curve_inputs({0.0f, 1.0f, 1.0f, 1.0f});
        out.push_back({"MLM [0,1,1,1]", measure_at(in, m, K::MLM), 0.47537});
        out.push_back({"ALM [0,1,1,1]", measure_at(in, m, K::ALM), 0.47537});
    }
    {
        // Right ray of a 1x2 image contributes 0.1 + 0.2 + P1 = 1.3; the other three rays hold p alone.
        MeasureInputs in;
        in.left_volume = volume_from_curves({{0.1f, 0.9f, 0.9f}, {0.9f, 0.2f, 0.9f}});
        in.left_stats = curve_stats(in.left_volume);
        in.left_disparity = wta(in.left_volume);
        MeasureParams s = p;
        s.sge_p1 = 1.0;
        s.sge_p2 = 2.0;
        s.window = 5;
        out.push_back({"SGE on a 1x2 image (1.3 + 3 x 0.1)", measure_at(in, s, K::SGE), 1.6});
    }

    // left-right
    {
        MeasureInputs in;
        in.left_volume = volume_from_curves({{0.9f, 0.9f}, {0.3f, 0.1f}});
        in.left_stats = curve_stats(in.left_volume);
        in.left_disparity = wta(in.left_volume);
        in.right_volume = volume_from_curves({{0.15f, 0.5f}, {0.6f, 0.7f}});
        in.right_stats = curve_stats(in.right_volume);
        in.right_disparity = wta(in.right_volume);
        out.push_back({"LRD (0.3 - 0.1) / |0.1 - 0.15|", measure_at(in, p, K::LRD, 1, 0), 4.0});
    }

    // disparity map
    {
        const DisparityMap flat(5, 5, 3.0);
        const MeasureInputs in = disparity_inputs(flat);
        out.push_back({"DA on a constant 5x5 window", measure_at(in, p, K::DA, 2, 2), 25.0});
        out.push_back({"VAR on a constant 5x5 window", measure_at(in, p, K::VAR, 2, 2), 0.0, 1e-12});
        out.push_back({"MDD on a constant 5x5 window", measure_at(in, p, K::MDD, 2, 2), 0.0, 1e-12});
        out.push_back({"DS on a constant 5x5 window", measure_at(in, p, K::DS, 2, 2), 3.2189});
        DisparityMap distinct(5, 5);
        for (int i = 0; i < 25; ++i)
            distinct.data()[i] = i + 1;
        out.push_back({"DS over 25 distinct disparities", measure_at(disparity_inputs(distinct), p, K::DS, 2, 2), 0.0,
                       1e-12});
    }

    // image
    {
        MeasureInputs in;
        in.left_image = GrayImage(100, 50);
        out.push_back({"DB at (50,25) of 100x50", measure_at(in, p, K::DB, 50, 25), 25.0});
        const MeasureInputs dl = make_measure_inputs(CostVolume(8, 1, 65), GrayImage(8, 1), {});
        out.push_back({"DLB at x=3 with d_max 64", measure_at(dl, p, K::DLB, 3, 0), 3.0});
    }

    // self-matching
    {
        GrayImage stripes(24, 12);
        for (int y = 0; y < 12; ++y)
            for (int x = 0; x < 24; ++x)
                stripes.at(x, y) = static_cast<std::uint8_t>(x % 4 * 60);
        MeasureInputs in;
        in.left_image = stripes;
        in.self_left = build_self_volume(stripes, 6, 3);
        in.self_right = in.self_left;
        out.push_back({"DTS on period-4 stripes", compute_measure(in, p, K::DTS).scores.at(12, 6), 0.0, 1e-12});
    }

    // SGM-specific
    {
        ScanlineResult sl;
        sl.total = volume_from_curves({{0.5f, 0.4f, 0.1f, 0.3f}});
        const int path_d[4] = {2, 2, 3, 2};
        for (int s = 0; s < 4; ++s) {
            sl.paths[s] = sl.total;
            sl.path_wta[s] = Image2D<std::int32_t>(1, 1, path_d[s]);
        }
        MeasureInputs in = curve_inputs({0.5f, 0.4f, 0.1f, 0.3f});
        in.scanlines = sl;
        out.push_back({"SCS with path WTAs [2,2,3,2]", measure_at(in, p, K::SCS), 3.0});
    }
    {
        ScanlineResult sl;
        std::vector<float> star(8, 0.9f);
        star[1] = 0.1f;
        star[6] = 0.3f;
        sl.total = volume_from_curves({star});
        for (int s = 0; s < 4; ++s) {
            sl.paths[s] = sl.total;
            sl.path_wta[s] = Image2D<std::int32_t>(1, 1, 1);
        }
        MeasureInputs in = curve_inputs(star);
        in.scanlines = sl;
        in.pre_aggregation = sl.total;
        MeasureParams g = p;
        g.gamma_ps = 10.0;
        out.push_back({"PS = 2.0 x 0.5 x 1.0", measure_at(in, g, K::PS), 1.0});
    }

    // evaluation
    {
        DisparityMap disp(4, 1);
        GroundTruth gt{DisparityMap(4, 1, 10.0), Image2D<std::uint8_t>(4, 1, 1)};
        const double err[] = {0, 1, 4, 5};
        for (int i = 0; i < 4; ++i)
            disp.data()[i] = 10.0 + err[i];
        out.push_back({"D1 of errors {0,1,4,5} at tau 3", d1_rate(disp, gt, 3.0), 0.5});
        out.push_back({"optimal AUC at 0.5", optimal_auc(0.5), 0.153426, 5e-7});
        out.push_back({"optimal AUC at 0.25", optimal_auc(0.25), 0.0342384, 5e-7});
        const double two[] = {0.1, 0.3};
        out.push_back({"macro average of [0.1, 0.3]", macro_average(two), 0.2});
        out.push_back({"0.1128 rendered x100", std::stod(format_x100(0.1128, 2)), 11.28, 0.0});
    }
    {
        // 400 pixels, every 4th wrong, oracle confidence, k = 100.
        const int n = 400;
        DisparityMap disp(n, 1);
        GroundTruth gt{DisparityMap(n, 1), Image2D<std::uint8_t>(n, 1, 1)};
        RealMap conf(n, 1);
        for (int i = 0; i < n; ++i) {
            const bool wrong = i % 4 == 0;
            disp.data()[i] = wrong ? 10.0 : 0.0;
            conf.data()[i] = wrong ? 0.0 : 1.0;
        }
        const double a = auc(sparsify(conf, disp, gt, 3.0, {100}));
        double brute = 0.0;
        for (int j = 1; j <= 100; ++j)
            if (j / 100.0 > 0.75)
                brute += (j / 100.0 - 0.75) / (j / 100.0);
        out.push_back({"oracle AUC at eps 0.25, k 100 vs discrete sum", a, brute / 100.0, 1e-12});
        out.push_back({"oracle AUC at eps 0.25, k 100 vs closed form", a, optimal_auc(0.25), 0.005});
    }

    // data formats
    {
        const auto dir = scratch_dir("formula_png");
        RealMap d(2, 1);
        d.at(0, 0) = 100.0;
        d.at(1, 0) = -1.0;
        save_map(d, dir / "d.png", MapEncoding::png16_scaled);
        const auto raw = load_png16(dir / "d.png");
        out.push_back({"100.0 as png16-scaled", double(raw.at(0, 0)), 25600.0, 0.0});
        out.push_back({"-1 as png16-scaled clamps", double(raw.at(1, 0)), 0.0, 0.0});
        const GroundTruth gt = load_ground_truth(dir / "d.png", GtEncoding::kitti_png16);
        out.push_back({"KITTI raw 25600 -> disparity", gt.disparity.at(0, 0), 100.0});
        out.push_back({"KITTI raw 0 -> invalid", double(gt.valid.at(1, 0)), 0.0, 0.0});
    }

    // feature stacks and catalog
    out.push_back({"half-level d_max from 64", static_cast<double>(scaled_d_max(64, 1)), 32.0, 0.0});
    out.push_back({"quarter-level d_max from 64", static_cast<double>(scaled_d_max(64, 2)), 16.0, 0.0});
    out.push_back({"GCP channel count", static_cast<double>(stack_channel_count(StackKind::GCP)), 8.0, 0.0});
    out.push_back({"default measure set without SGM", static_cast<double>(default_measure_set(false).size()), 46.0, 0.0});
    out.push_back({"default measure set with SGM", static_cast<double>(default_measure_set(true).size()), 49.0, 0.0});
    return out;
}

} // namespace stconf::test
