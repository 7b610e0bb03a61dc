#include "stconf/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

namespace stconf {

CrossMap build_cross(const GrayImage& img, int max_arm, int tau_color)
{
    if (max_arm < 1)
        throw Error("build_cross: max_arm must be >= 1");
    const int w = img.width();
    const int h = img.height();
    CrossMap cross(w, h);
    auto extend = [&](int x, int y, int dx, int dy) {
        const int anchor = img.at(x, y);
        int len = 0;
        for (int k = 1; k < max_arm; ++k) {
            const int qx = x + k * dx;
            const int qy = y + k * dy;
            if (qx < 0 || qy < 0 || qx >= w || qy >= h)
                break;
            if (std::abs(static_cast<int>(img.at(qx, qy)) - anchor) >= tau_color)
                break;
            len = k;
        }
        return static_cast<std::uint16_t>(len);
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            auto& a = cross.at(x, y);
            a.left = extend(x, y, -1, 0);
            a.right = extend(x, y, 1, 0);
            a.up = extend(x, y, 0, -1);
            a.down = extend(x, y, 0, 1);
        }
    }
    return cross;
}

namespace {

void cbca_pass(const CostVolume& src, CostVolume& dst, const CrossMap& cl, const CrossMap& cr, Exec exec)
{
    const int w = src.width();
    const int h = src.height();
    parallel_for(0, src.levels(), exec, [&](int d) {
        std::vector<double> row_prefix(static_cast<std::size_t>(w) + 1);
        // Horizontal segment sums/counts, then their column prefixes.
        std::vector<double> hsum_prefix(static_cast<std::size_t>(w) * (h + 1), 0.0);
        std::vector<double> hcnt_prefix(static_cast<std::size_t>(w) * (h + 1), 0.0);
        for (int y = 0; y < h; ++y) {
            row_prefix[0] = 0.0;
            for (int x = 0; x < w; ++x)
                row_prefix[x + 1] = row_prefix[x] + src.at(x, y, d);
            for (int x = 0; x < w; ++x) {
                const CrossArms& a = cl.at(x, y);
                const CrossArms& b = cr.at(std::max(x - d, 0), y);
                const int lo = x - std::min(a.left, b.left);
                const int hi = x + std::min(a.right, b.right);
                const std::size_t at = static_cast<std::size_t>(y + 1) * w + x;
                const std::size_t above = static_cast<std::size_t>(y) * w + x;
                hsum_prefix[at] = hsum_prefix[above] + (row_prefix[hi + 1] - row_prefix[lo]);
                hcnt_prefix[at] = hcnt_prefix[above] + (hi - lo + 1);
            }
        }
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const CrossArms& a = cl.at(x, y);
                const CrossArms& b = cr.at(std::max(x - d, 0), y);
                const int top = y - std::min(a.up, b.up);
                const int bottom = y + std::min(a.down, b.down);
                const std::size_t hi = static_cast<std::size_t>(bottom + 1) * w + x;
                const std::size_t lo = static_cast<std::size_t>(top) * w + x;
                const double sum = hsum_prefix[hi] - hsum_prefix[lo];
                const double cnt = hcnt_prefix[hi] - hcnt_prefix[lo];
                dst.at(x, y, d) = static_cast<float>(sum / cnt);
            }
        }
    });
}

} // namespace

CostVolume cbca_aggregate(const CostVolume& vol, const CrossMap& cross_left, const CrossMap& cross_right,
                          int iterations, Exec exec)
{
    if (!cross_left.same_shape(vol.width(), vol.height()) || !cross_right.same_shape(vol.width(), vol.height()))
        throw Error("cbca_aggregate: cross map and volume dimensions differ");
    if (iterations < 0)
        throw Error("cbca_aggregate: iterations must be >= 0");
    CostVolume current = vol;
    CostVolume next(vol.width(), vol.height(), vol.levels());
    for (int it = 0; it < iterations; ++it) {
        cbca_pass(current, next, cross_left, cross_right, exec);
        std::swap(current, next);
    }
    normalize_if_out_of_range(current);
    return current;
}

const char* to_string(ScanDirection d)
{
    switch (d) {
    case ScanDirection::left_to_right: return "lr";
    case ScanDirection::right_to_left: return "rl";
    case ScanDirection::top_to_bottom: return "tb";
    case ScanDirection::bottom_to_top: return "bt";
    }
    return "?";
}

namespace {

void validate(const SgmParams& p)
{
    if (!(p.p1 >= 0.0) || !(p.p2 >= p.p1) || !std::isfinite(p.p2))
        throw Error("sgm: penalties must satisfy 0 <= P1 <= P2");
}

// prev: L(q, .) of the predecessor, cur_cost: C(p, .), out: L(p, .).
template <typename CostT>
void sgm_step(const double* prev, const CostT* cur_cost, double* out, int levels, double p1, double p2)
{
    double prev_min = prev[0];
    for (int d = 1; d < levels; ++d)
        prev_min = std::min(prev_min, prev[d]);
    const double jump = prev_min + p2;
    for (int d = 0; d < levels; ++d) {
        double best = std::min(prev[d], jump);
        if (d > 0)
            best = std::min(best, prev[d - 1] + p1);
        if (d + 1 < levels)
            best = std::min(best, prev[d + 1] + p1);
        out[d] = static_cast<double>(cur_cost[d]) + best - prev_min;
    }
}

} // namespace

std::vector<double> sgm_scanline(std::span<const double> costs, int levels, double p1, double p2)
{
    validate({p1, p2});
    if (levels < 1 || costs.size() % static_cast<std::size_t>(levels) != 0)
        throw Error("sgm_scanline: cost sequence length is not a multiple of levels");
    std::vector<double> out(costs.begin(), costs.end());
    const std::size_t n = costs.size() / levels;
    for (std::size_t i = 1; i < n; ++i)
        sgm_step(out.data() + (i - 1) * levels, costs.data() + i * levels, out.data() + i * levels, levels, p1, p2);
    return out;
}

CostVolume sgm_path(const CostVolume& vol, ScanDirection dir, SgmParams params, Exec exec)
{
    validate(params);
    const int w = vol.width();
    const int h = vol.height();
    const int levels = vol.levels();
    CostVolume out(w, h, levels);
    const bool horizontal = dir == ScanDirection::left_to_right || dir == ScanDirection::right_to_left;
    const bool forward = dir == ScanDirection::left_to_right || dir == ScanDirection::top_to_bottom;
    const int lines = horizontal ? h : w;
    const int length = horizontal ? w : h;

    parallel_for(0, lines, exec, [&](int line) {
        std::vector<double> prev(levels), cur(levels);
        for (int step = 0; step < length; ++step) {
            const int k = forward ? step : length - 1 - step;
            const int x = horizontal ? k : line;
            const int y = horizontal ? line : k;
            const float* c = vol.curve(x, y).data();
            if (step == 0) {
                for (int d = 0; d < levels; ++d)
                    cur[d] = c[d];
            } else {
                sgm_step(prev.data(), c, cur.data(), levels, params.p1, params.p2);
            }
            auto o = out.curve(x, y);
            for (int d = 0; d < levels; ++d)
                o[d] = static_cast<float>(cur[d]);
            std::swap(prev, cur);
        }
    });
    return out;
}

ScanlineResult sgm_aggregate(const CostVolume& vol, SgmParams params, Exec exec)
{
    validate(params);
    if (!std::all_of(vol.data().begin(), vol.data().end(), [](float c) { return std::isfinite(c); }))
        throw Error("sgm_aggregate: volume contains non-finite costs");
    const int w = vol.width();
    const int h = vol.height();
    const int levels = vol.levels();
    const double path_scale = 1.0 / (1.0 + params.p2);
    const double total_scale = path_scale / static_cast<double>(kSgmPaths.size());

    ScanlineResult result;
    result.params = params;
    CostVolume sum(w, h, levels);
    std::vector<double> acc(vol.data().size(), 0.0);
    for (std::size_t s = 0; s < kSgmPaths.size(); ++s) {
        CostVolume path = sgm_path(vol, kSgmPaths[s], params, exec);
        for (std::size_t i = 0; i < acc.size(); ++i)
            acc[i] += path.data()[i];
        for (auto& c : path.data())
            c = static_cast<float>(std::clamp(c * path_scale, 0.0, 1.0));

        Image2D<std::int32_t> wta(w, h);
        parallel_for(0, h, exec, [&](int y) {
            for (int x = 0; x < w; ++x) {
                const auto c = path.curve(x, y);
                wta.at(x, y) = static_cast<std::int32_t>(std::min_element(c.begin(), c.end()) - c.begin());
            }
        });
        result.paths[s] = std::move(path);
        result.path_wta[s] = std::move(wta);
    }
    for (std::size_t i = 0; i < acc.size(); ++i)
        sum.data()[i] = static_cast<float>(std::clamp(acc[i] * total_scale, 0.0, 1.0));
    result.total = std::move(sum);
    return result;
}

} // namespace stconf
