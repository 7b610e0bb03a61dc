#include "reference_measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace stconf::test {

namespace {

using Curve = std::vector<double>;

int clampi(int v, int lo, int hi) { return std::max(lo, std::min(v, hi)); }

Curve left_curve(const RefScene& s, int x, int y)
{
    Curve out(s.levels);
    for (int d = 0; d < s.levels; ++d)
        out[d] = s.c(x, y, d);
    return out;
}

Curve right_curve(const RefScene& s, int x, int y)
{
    Curve out(s.levels);
    for (int d = 0; d < s.levels; ++d)
        out[d] = s.c(std::min(x + d, s.w - 1), y, d);
    return out;
}

int first_argmin(const Curve& c)
{
    int best = 0;
    for (int i = 0; i < static_cast<int>(c.size()); ++i)
        if (c[i] < c[best])
            best = i;
    return best;
}

int second_argmin(const Curve& c)
{
    const int d1 = first_argmin(c);
    int best = -1;
    for (int i = 0; i < static_cast<int>(c.size()); ++i)
        if (i != d1 && (best < 0 || c[i] < c[best]))
            best = i;
    return best;
}

bool is_min(const Curve& c, int i)
{
    const int n = static_cast<int>(c.size());
    if (i > 0 && !(c[i] < c[i - 1]))
        return false;
    if (i < n - 1 && !(c[i] < c[i + 1]))
        return false;
    return true;
}

int second_local_min(const Curve& c)
{
    const int d1 = first_argmin(c);
    int best = -1;
    for (int i = 0; i < static_cast<int>(c.size()); ++i)
        if (i != d1 && is_min(c, i) && (best < 0 || c[i] < c[best]))
            best = i;
    return best < 0 ? second_argmin(c) : best;
}

double sum_of(const Curve& c)
{
    double s = 0.0;
    for (double v : c)
        s += v;
    return s;
}

int d1_left(const RefScene& s, int x, int y) { return first_argmin(left_curve(s, x, y)); }
int d1_right(const RefScene& s, int x, int y) { return first_argmin(right_curve(s, x, y)); }

std::vector<std::pair<int, int>> window_pixels(const RefScene& s, int x, int y, int win)
{
    std::vector<std::pair<int, int>> out;
    const int r = win / 2;
    for (int qy = y - r; qy <= y + r; ++qy)
        for (int qx = x - r; qx <= x + r; ++qx)
            if (qx >= 0 && qy >= 0 && qx < s.w && qy < s.h)
                out.emplace_back(qx, qy);
    return out;
}

double gradient_x(const std::vector<double>& m, int w, int h, int x, int y)
{
    (void)h;
    return (m[y * w + std::min(x + 1, w - 1)] - m[y * w + std::max(x - 1, 0)]) / 2.0;
}

double gradient_y(const std::vector<double>& m, int w, int h, int x, int y)
{
    return (m[std::min(y + 1, h - 1) * w + x] - m[std::max(y - 1, 0) * w + x]) / 2.0;
}

double distance_to_edge(const std::vector<double>& m, int w, int h, int x, int y, double threshold)
{
    double best = std::numeric_limits<double>::infinity();
    bool any = false;
    for (int qy = 0; qy < h; ++qy)
        for (int qx = 0; qx < w; ++qx) {
            const double gx = gradient_x(m, w, h, qx, qy);
            const double gy = gradient_y(m, w, h, qx, qy);
            if (std::sqrt(gx * gx + gy * gy) < threshold)
                continue;
            any = true;
            const double ax = std::abs(qx - x);
            const double ay = std::abs(qy - y);
            // shortest 8-connected path with unit and diagonal sqrt(2) steps
            best = std::min(best, std::max(ax, ay) + (std::sqrt(2.0) - 1.0) * std::min(ax, ay));
        }
    return any ? best : static_cast<double>(w + h);
}

std::vector<double> left_disparities(const RefScene& s)
{
    std::vector<double> d(static_cast<std::size_t>(s.w) * s.h);
    for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x)
            d[y * s.w + x] = d1_left(s, x, y);
    return d;
}

std::vector<bool> census_bits(const std::vector<int>& img, int w, int h, int win, int x, int y)
{
    std::vector<bool> bits;
    const int r = win / 2;
    const int center = img[y * w + x];
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            bits.push_back(img[clampi(y + dy, 0, h - 1) * w + clampi(x + dx, 0, w - 1)] < center);
    return bits;
}

double self_cost(const std::vector<int>& img, int w, int h, int win, int x, int y, int offset)
{
    const auto a = census_bits(img, w, h, win, x, y);
    const auto b = census_bits(img, w, h, win, clampi(x - offset, 0, w - 1), y);
    int diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        diff += a[i] != b[i] ? 1 : 0;
    return static_cast<double>(diff) / (win * win);
}

double distinctiveness(const RefScene& s, const std::vector<int>& img, int x, int y)
{
    const int dm = s.levels - 1;
    double best = std::numeric_limits<double>::infinity();
    for (int o = -dm; o <= dm; ++o)
        if (o != 0)
            best = std::min(best, self_cost(img, s.w, s.h, s.census_window, x, y, o));
    return best;
}

// Collision group of p: pixels on the row whose match column x - d1 equals that of p.
std::vector<int> collisions(const RefScene& s, int x, int y)
{
    std::vector<int> out;
    const int target = x - d1_left(s, x, y);
    for (int qx = 0; qx < s.w; ++qx)
        if (qx - d1_left(s, qx, y) == target)
            out.push_back(qx);
    return out;
}

double lower_median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    return v[(v.size() - 1) / 2];
}

} // namespace

RefScene make_scene(const CostVolume& vol, const GrayImage& left, const GrayImage& right)
{
    RefScene s;
    s.w = vol.width();
    s.h = vol.height();
    s.levels = vol.levels();
    s.costs.assign(vol.data().begin(), vol.data().end());
    s.left.assign(left.data().begin(), left.data().end());
    s.right.assign(right.data().begin(), right.data().end());
    return s;
}

double reference_measure(const RefScene& s, MeasureKind kind, const MeasureParams& p, int x, int y)
{
    using K = MeasureKind;
    const Curve c = left_curve(s, x, y);
    const int n = s.levels;
    const int d1 = first_argmin(c);
    const int d2 = second_argmin(c);
    const int d2m = second_local_min(c);
    const double eps = p.epsilon_div;
    const int xr = std::max(x - d1, 0);
    switch (kind) {
    case K::MSM: return -c[d1];
    case K::MM: return c[d2m] - c[d1];
    case K::MMN: return c[d2] - c[d1];
    case K::NLM: return std::exp((c[d2m] - c[d1]) / (2 * p.sigma_nlm * p.sigma_nlm));
    case K::NLMN: return std::exp((c[d2] - c[d1]) / (2 * p.sigma_nlm * p.sigma_nlm));
    case K::CUR:
    case K::LC: {
        const double lo = d1 == 0 ? c[1] : c[d1 - 1];
        const double hi = d1 == n - 1 ? c[n - 2] : c[d1 + 1];
        return kind == K::CUR ? -2 * c[d1] + lo + hi : (std::max(lo, hi) - c[d1]) / p.gamma_lc;
    }
    case K::PKR: return c[d2m] / std::max(c[d1], eps);
    case K::PKRN: return c[d2] / std::max(c[d1], eps);
    case K::DAM: return std::abs(d1 - d2);
    case K::APKR:
    case K::APKRN:
    case K::WPKR:
    case K::WPKRN: {
        const bool naive = kind == K::APKRN || kind == K::WPKRN;
        const bool weighted = kind == K::WPKR || kind == K::WPKRN;
        double sum = 0;
        for (auto [qx, qy] : window_pixels(s, x, y, p.window)) {
            if (weighted) {
                const auto& other = p.wpkr_mode == WpkrMode::same_image ? s.left : s.right;
                if (!(std::abs(s.left[y * s.w + x] - other[qy * s.w + qx]) < p.wpkr_threshold))
                    continue;
            }
            sum += s.c(qx, qy, naive ? d2 : d2m) / std::max(s.c(qx, qy, d1), eps);
        }
        return sum;
    }
    case K::LMN: {
        int count = 0;
        for (auto [qx, qy] : window_pixels(s, x, y, p.window))
            count += is_min(left_curve(s, qx, qy), d1) ? 1 : 0;
        return count;
    }
    case K::SGE: {
        const int r = p.window / 2;
        double total = 0;
        const int dirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        for (auto& dir : dirs) {
            std::vector<std::pair<int, int>> ray;
            for (int k = 0; k <= r; ++k) {
                const int qx = x + k * dir[0], qy = y + k * dir[1];
                if (qx < 0 || qy < 0 || qx >= s.w || qy >= s.h)
                    break;
                ray.emplace_back(qx, qy);
            }
            for (std::size_t i = 0; i < ray.size(); ++i) {
                const int dq = d1_left(s, ray[i].first, ray[i].second);
                total += s.c(ray[i].first, ray[i].second, dq);
                if (i + 1 < ray.size()) {
                    const int gap = std::abs(dq - d1_left(s, ray[i + 1].first, ray[i + 1].second));
                    total += gap == 1 ? p.sge_p1 : (gap > 1 ? p.sge_p2 : 0.0);
                }
            }
        }
        return total;
    }
    case K::PER: {
        double sum = 0;
        for (int i = 0; i < n; ++i)
            if (i != d1)
                sum += std::exp(-std::pow(c[d1] - c[i], 2) / (p.s_per * p.s_per));
        return sum;
    }
    case K::MLM:
    case K::ALM: {
        double den = 0;
        for (int i = 0; i < n; ++i)
            den += std::exp(-c[i] / (2 * p.sigma_mlm));
        const double num = kind == K::MLM ? std::exp(-c[d1] / (2 * p.sigma_mlm)) : 1.0;
        return num / std::max(den, eps * num);
    }
    case K::NEM: {
        double den = 0;
        for (int i = 0; i < n; ++i)
            den += std::exp(-c[i]);
        const double pr = std::exp(-c[d1]) / den;
        return pr * std::log(pr);
    }
    case K::NOI: {
        int count = 0;
        for (int i = 0; i < n; ++i)
            count += is_min(c, i) ? 1 : 0;
        return count;
    }
    case K::WMN: return (c[d2m] - c[d1]) / std::max(sum_of(c), eps);
    case K::WMNN: return (c[d2] - c[d1]) / std::max(sum_of(c), eps);
    case K::PWCFA: {
        double den = 0;
        for (int i = 0; i < n; ++i) {
            const double a = std::max(std::min(std::abs(i - d1) - 1.0, 1.0 / 3.0), 0.0);
            den += a * a / std::max(c[i] - c[d1] - sum_of(c) / (3.0 * (n - 1)), 1.0);
        }
        return 1.0 / std::max(den, eps);
    }
    case K::LRC: return -std::abs(d1 - d1_right(s, xr, y));
    case K::LRD: {
        const Curve cr = right_curve(s, xr, y);
        return (c[d2] - c[d1]) / std::max(std::abs(c[d1] - cr[first_argmin(cr)]), eps);
    }
    case K::ZSAD: {
        const auto win = window_pixels(s, x, y, p.window);
        double ml = 0, mr = 0;
        for (auto [qx, qy] : win) {
            ml += s.left[qy * s.w + qx];
            mr += s.right[qy * s.w + clampi(qx - d1, 0, s.w - 1)];
        }
        ml /= win.size();
        mr /= win.size();
        double sum = 0;
        for (auto [qx, qy] : win)
            sum += std::abs(s.left[qy * s.w + qx] - ml - s.right[qy * s.w + clampi(qx - d1, 0, s.w - 1)] + mr);
        return sum;
    }
    case K::ACC:
    case K::UC:
    case K::UCC:
    case K::UCO: {
        const auto group = collisions(s, x, y);
        if (kind == K::UCO)
            return -static_cast<double>(group.size() - 1);
        double min_cost = std::numeric_limits<double>::infinity();
        int max_d = -1;
        for (int qx : group) {
            const int dq = d1_left(s, qx, y);
            min_cost = std::min(min_cost, s.c(qx, y, dq));
            max_d = std::max(max_d, dq);
        }
        const bool collide = group.size() > 1;
        const bool not_min = c[d1] != min_cost;
        if (kind == K::ACC)
            return collide && (d1 != max_d || not_min) ? 0.0 : 1.0;
        if (collide && not_min)
            return 0.0;
        return kind == K::UC ? 1.0 : -c[d1];
    }
    case K::DTD:
    case K::DMV: {
        const auto d = left_disparities(s);
        if (kind == K::DMV)
            return std::hypot(gradient_x(d, s.w, s.h, x, y), gradient_y(d, s.w, s.h, x, y));
        return distance_to_edge(d, s.w, s.h, x, y, p.edge_threshold_disparity);
    }
    case K::VAR:
    case K::SKEW:
    case K::MND:
    case K::MDD:
    case K::MED:
    case K::DA:
    case K::DS: {
        const auto win = window_pixels(s, x, y, p.window);
        std::vector<double> vals;
        for (auto [qx, qy] : win)
            vals.push_back(d1_left(s, qx, qy));
        const double mu = sum_of(vals) / vals.size();
        double m2 = 0, m3 = 0;
        for (double v : vals) {
            m2 += (v - mu) * (v - mu);
            m3 += (v - mu) * (v - mu) * (v - mu);
        }
        switch (kind) {
        case K::VAR: return -m2 / vals.size();
        case K::SKEW: return -m3 / vals.size();
        case K::MND: return -std::abs(d1 - mu);
        case K::MDD: return -std::abs(d1 - lower_median(vals));
        case K::MED: return lower_median(vals);
        case K::DA: return static_cast<double>(std::count(vals.begin(), vals.end(), static_cast<double>(d1)));
        default: return -std::log(static_cast<double>(std::set<double>(vals.begin(), vals.end()).size()) / vals.size());
        }
    }
    case K::DB: return std::min({x, y, s.w - x, s.h - y});
    case K::DLB: return std::min(x, n - 1);
    case K::HGM:
    case K::DTE: {
        std::vector<double> img(s.left.begin(), s.left.end());
        if (kind == K::HGM)
            return std::abs(gradient_x(img, s.w, s.h, x, y));
        return distance_to_edge(img, s.w, s.h, x, y, p.edge_threshold_intensity);
    }
    case K::IVAR: {
        const auto win = window_pixels(s, x, y, p.window);
        double mu = 0;
        for (auto [qx, qy] : win)
            mu += s.left[qy * s.w + qx];
        mu /= win.size();
        double var = 0;
        for (auto [qx, qy] : win)
            var += std::pow(s.left[qy * s.w + qx] - mu, 2);
        return var / win.size();
    }
    case K::DTS: return distinctiveness(s, s.left, x, y);
    case K::DSM:
        return distinctiveness(s, s.left, x, y) * distinctiveness(s, s.right, xr, y) / std::max(c[d1] * c[d1], eps);
    case K::SAMM: {
        const int dm = n - 1;
        std::vector<double> a, b;
        for (int k = 0; k < n; ++k) {
            const int off = k - d1;
            if (off < -dm || off > dm)
                continue;
            a.push_back(c[k]);
            b.push_back(self_cost(s.left, s.w, s.h, s.census_window, x, y, off));
        }
        const double ma = sum_of(a) / a.size(), mb = sum_of(b) / b.size();
        double sab = 0, saa = 0, sbb = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            sab += (a[i] - ma) * (b[i] - mb);
            saa += (a[i] - ma) * (a[i] - ma);
            sbb += (b[i] - mb) * (b[i] - mb);
        }
        return saa > 0 && sbb > 0 ? sab / std::sqrt(saa * sbb) : 0.0;
    }
    case K::SCS:
    case K::PS: {
        if (!s.sgm)
            throw std::runtime_error("reference: SGM measures need scanline results");
        Curve total(n);
        for (int d = 0; d < n; ++d)
            total[d] = s.sgm->total.at(x, y, d);
        const int star1 = first_argmin(total);
        if (kind == K::SCS) {
            int agree = 0;
            for (const auto& m : s.sgm->path_wta)
                agree += m.at(x, y) == star1 ? 1 : 0;
            return agree;
        }
        const int star2 = second_argmin(total);
        Curve pre(n);
        for (int d = 0; d < n; ++d)
            pre[d] = s.pre[(static_cast<std::size_t>(y) * s.w + x) * n + d];
        const int local = first_argmin(pre);
        const double g = p.gamma_ps;
        return (total[star2] - total[star1]) / std::max(total[star1], eps)
               * (1 - std::min<double>(std::abs(star2 - star1), g) / g)
               * (1 - std::min<double>(std::abs(star1 - local), g) / g);
    }
    }
    throw std::runtime_error("reference: unhandled measure");
}

RefComparison compare_with_reference(const CostVolume& vol, const GrayImage& left, const GrayImage& right,
                                     const MeasureParams& params, double tol)
{
    MeasureInputs in = make_measure_inputs(vol, left, right, 9);
    in.scanlines = sgm_aggregate(vol, {params.sge_p1, params.sge_p2});
    in.pre_aggregation = vol;

    RefScene scene = make_scene(vol, left, right);
    scene.pre = scene.costs;
    scene.sgm = &*in.scanlines;

    RefComparison out;
    for (const MeasureInfo& info : measure_catalog()) {
        const ConfidenceMap map = compute_measure(in, params, info.kind);
        for (int y = 0; y < vol.height(); ++y)
            for (int x = 0; x < vol.width(); ++x) {
                const double got = map.scores.at(x, y);
                const double expected = reference_measure(scene, info.kind, params, x, y);
                ++out.compared;
                if (!(std::abs(got - expected) <= tol * std::max(1.0, std::abs(expected))))
                    out.mismatches.push_back({std::string(info.id), x, y, got, expected});
            }
    }
    return out;
}

} // namespace stconf::test
