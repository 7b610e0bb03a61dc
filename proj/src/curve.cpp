#include "stconf/curve.hpp"

#include <cmath>

namespace stconf {

namespace {

template <typename T>
bool local_min(std::span<const T> c, int i)
{
    const int n = static_cast<int>(c.size());
    if (n < 2)
        return false;
    const bool below_prev = i == 0 || c[i] < c[i - 1];
    const bool below_next = i == n - 1 || c[i] < c[i + 1];
    return below_prev && below_next;
}

template <typename T>
PixelCurveStats analyze(std::span<const T> c)
{
    const int n = static_cast<int>(c.size());
    if (n < 2)
        throw Error("curve statistics require at least two hypotheses");
    PixelCurveStats s;
    s.d1 = 0;
    for (int i = 1; i < n; ++i)
        if (c[i] < c[s.d1])
            s.d1 = i;
    s.d2 = s.d1 == 0 ? 1 : 0;
    for (int i = 0; i < n; ++i)
        if (i != s.d1 && c[i] < c[s.d2])
            s.d2 = i;

    int best_local = -1;
    for (int i = 0; i < n; ++i) {
        const double v = c[i];
        s.sum_costs += v;
        s.sum_exp_neg += std::exp(-v);
        if (local_min(c, i)) {
            ++s.n_local_minima;
            if (i != s.d1 && (best_local < 0 || c[i] < c[best_local]))
                best_local = i;
        }
    }
    s.c_d1 = c[s.d1];
    s.c_d2 = c[s.d2];
    if (best_local >= 0) {
        s.has_d2m = true;
        s.d2m = best_local;
        s.c_d2m = c[best_local];
    } else {
        s.d2m = s.d2;
        s.c_d2m = s.c_d2;
    }
    return s;
}

} // namespace

bool is_local_minimum(std::span<const float> curve, int i) { return local_min(curve, i); }
bool is_local_minimum(std::span<const double> curve, int i) { return local_min(curve, i); }

int argmin_lowest(std::span<const float> curve)
{
    int best = 0;
    for (int i = 1; i < static_cast<int>(curve.size()); ++i)
        if (curve[i] < curve[best])
            best = i;
    return best;
}

PixelCurveStats analyze_curve(std::span<const float> curve) { return analyze(curve); }
PixelCurveStats analyze_curve(std::span<const double> curve) { return analyze(curve); }

DisparityMap wta(const CostVolume& vol, Exec exec)
{
    DisparityMap out(vol.width(), vol.height());
    parallel_for(0, vol.height(), exec, [&](int y) {
        for (int x = 0; x < vol.width(); ++x)
            out.at(x, y) = argmin_lowest(vol.curve(x, y));
    });
    return out;
}

CurveStats curve_stats(const CostVolume& vol, Exec exec)
{
    if (vol.levels() < 2)
        throw Error("curve_stats: at least two disparity hypotheses required");
    CurveStats out(vol.width(), vol.height());
    parallel_for(0, vol.height(), exec, [&](int y) {
        for (int x = 0; x < vol.width(); ++x)
            out.at(x, y) = analyze(vol.curve(x, y));
    });
    return out;
}

} // namespace stconf
