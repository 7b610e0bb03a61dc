#include "stconf/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace stconf {

int MeasureInputs::width() const
{
    if (!left_volume.empty())
        return left_volume.width();
    if (!left_disparity.empty())
        return left_disparity.width();
    return left_image.width();
}

int MeasureInputs::height() const
{
    if (!left_volume.empty())
        return left_volume.height();
    if (!left_disparity.empty())
        return left_disparity.height();
    return left_image.height();
}

unsigned MeasureInputs::available() const
{
    unsigned a = 0;
    if (!left_volume.empty() && !left_stats.empty())
        a |= kNeedsVolume;
    if (!left_disparity.empty())
        a |= kNeedsDisparity;
    if (!right_volume.empty() && !right_stats.empty() && !right_disparity.empty())
        a |= kNeedsRightView;
    if (!left_image.empty())
        a |= kNeedsLeftImage;
    if (!right_image.empty())
        a |= kNeedsRightImage;
    if (!self_left.costs.empty() && !self_right.costs.empty())
        a |= kNeedsSelfVolumes;
    if (scanlines)
        a |= kNeedsScanlines;
    if (!pre_aggregation.empty())
        a |= kNeedsPreAggregation;
    return a;
}

MeasureInputs make_measure_inputs(CostVolume left_volume, GrayImage left_image, GrayImage right_image,
                                  int census_window, Exec exec)
{
    MeasureInputs in;
    in.left_volume = std::move(left_volume);
    in.left_stats = curve_stats(in.left_volume, exec);
    in.left_disparity = wta(in.left_volume, exec);
    in.right_volume = derive_right_volume(in.left_volume);
    in.right_stats = curve_stats(in.right_volume, exec);
    in.right_disparity = wta(in.right_volume, exec);
    if (!left_image.empty()) {
        if (!left_image.same_shape(in.left_volume.width(), in.left_volume.height()))
            throw Error("left image and volume dimensions differ");
        in.self_left = build_self_volume(left_image, in.d_max(), census_window, exec);
    }
    if (!right_image.empty()) {
        if (!right_image.same_shape(in.left_volume.width(), in.left_volume.height()))
            throw Error("right image and volume dimensions differ");
        in.self_right = build_self_volume(right_image, in.d_max(), census_window, exec);
    }
    in.left_image = std::move(left_image);
    in.right_image = std::move(right_image);
    return in;
}

RealMap to_real(const GrayImage& img)
{
    RealMap out(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i)
        out.data()[i] = img.data()[i];
    return out;
}

void central_gradient(const RealMap& map, RealMap& gx, RealMap& gy)
{
    const int w = map.width();
    const int h = map.height();
    gx = RealMap(w, h);
    gy = RealMap(w, h);
    for (int y = 0; y < h; ++y) {
        const int ym = std::max(y - 1, 0);
        const int yp = std::min(y + 1, h - 1);
        for (int x = 0; x < w; ++x) {
            const int xm = std::max(x - 1, 0);
            const int xp = std::min(x + 1, w - 1);
            gx.at(x, y) = 0.5 * (map.at(xp, y) - map.at(xm, y));
            gy.at(x, y) = 0.5 * (map.at(x, yp) - map.at(x, ym));
        }
    }
}

RealMap chamfer_distance(const Image2D<std::uint8_t>& edges)
{
    const int w = edges.width();
    const int h = edges.height();
    const double cap = static_cast<double>(w + h);
    const double diag = std::sqrt(2.0);
    RealMap dist(w, h, std::numeric_limits<double>::infinity());
    bool any = false;
    for (std::size_t i = 0; i < edges.size(); ++i)
        if (edges.data()[i]) {
            dist.data()[i] = 0.0;
            any = true;
        }
    if (!any) {
        std::fill(dist.data().begin(), dist.data().end(), cap);
        return dist;
    }
    auto relax = [&](int x, int y, int qx, int qy, double step) {
        if (qx < 0 || qy < 0 || qx >= w || qy >= h)
            return;
        dist.at(x, y) = std::min(dist.at(x, y), dist.at(qx, qy) + step);
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            relax(x, y, x - 1, y, 1.0);
            relax(x, y, x - 1, y - 1, diag);
            relax(x, y, x, y - 1, 1.0);
            relax(x, y, x + 1, y - 1, diag);
        }
    for (int y = h - 1; y >= 0; --y)
        for (int x = w - 1; x >= 0; --x) {
            relax(x, y, x + 1, y, 1.0);
            relax(x, y, x + 1, y + 1, diag);
            relax(x, y, x, y + 1, 1.0);
            relax(x, y, x - 1, y + 1, diag);
        }
    return dist;
}

namespace {

const char* describe_missing(unsigned missing)
{
    if (missing & kNeedsVolume)
        return "cost volume";
    if (missing & kNeedsDisparity)
        return "disparity map";
    if (missing & kNeedsRightView)
        return "right-reference view";
    if (missing & kNeedsLeftImage)
        return "left image";
    if (missing & kNeedsRightImage)
        return "right image";
    if (missing & kNeedsSelfVolumes)
        return "self-matching volumes";
    if (missing & kNeedsScanlines)
        return "SGM scanline results";
    return "pre-aggregation volume";
}

ConfidenceMap start_map(const MeasureInputs& in, const MeasureParams& p, MeasureKind kind, MeasureFamily family)
{
    const MeasureInfo& info = measure_info(kind);
    if (info.family != family)
        throw Error("measure " + std::string(info.id) + " is not in the " + to_string(family) + " family");
    const unsigned missing = info.needs & ~in.available();
    if (missing)
        throw Error("measure " + std::string(info.id) + ": missing input (" + describe_missing(missing) + ")");
    p.validate();
    ConfidenceMap map;
    map.kind = kind;
    map.id = std::string(info.id);
    if (info.windowed)
        map.id += "_" + std::to_string(p.window);
    map.evaluation_sign = info.evaluation_sign;
    map.params = p;
    map.scores = RealMap(in.width(), in.height());
    return map;
}

int disparity_at(const DisparityMap& d, int x, int y)
{
    return static_cast<int>(std::lround(d.at(x, y)));
}

// Column of the matching right pixel for p, clamped into the image.
int right_column(const MeasureInputs& in, int x, int y)
{
    return std::max(x - in.left_stats.at(x, y).d1, 0);
}

struct ClippedWindow {
    int x0, x1, y0, y1;
    int count() const { return (x1 - x0 + 1) * (y1 - y0 + 1); }
};

ClippedWindow clip_window(int x, int y, int r, int w, int h)
{
    return {std::max(x - r, 0), std::min(x + r, w - 1), std::max(y - r, 0), std::min(y + r, h - 1)};
}

// Integral images of (v - offset)^k, k = 1..3, for O(1) window moments.
class BoxMoments {
public:
    explicit BoxMoments(const RealMap& m)
        : w_(m.width()), h_(m.height())
    {
        double mean = 0.0;
        for (double v : m.data())
            mean += v;
        offset_ = m.empty() ? 0.0 : mean / static_cast<double>(m.size());
        for (auto& t : tables_)
            t.assign(static_cast<std::size_t>(w_ + 1) * (h_ + 1), 0.0);
        for (int y = 0; y < h_; ++y) {
            double row[3] = {0.0, 0.0, 0.0};
            for (int x = 0; x < w_; ++x) {
                const double v = m.at(x, y) - offset_;
                row[0] += v;
                row[1] += v * v;
                row[2] += v * v * v;
                for (int k = 0; k < 3; ++k)
                    tables_[k][idx(x + 1, y + 1)] = tables_[k][idx(x + 1, y)] + row[k];
            }
        }
    }

    double offset() const { return offset_; }

    /// Sum of (v - offset)^order over the window.
    double sum(int order, const ClippedWindow& win) const
    {
        const auto& t = tables_[order - 1];
        return t[idx(win.x1 + 1, win.y1 + 1)] - t[idx(win.x0, win.y1 + 1)] - t[idx(win.x1 + 1, win.y0)]
               + t[idx(win.x0, win.y0)];
    }

private:
    std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * (w_ + 1) + x; }

    int w_, h_;
    double offset_ = 0.0;
    std::vector<double> tables_[3];
};

// ---------------------------------------------------------------------------
// local curve

double local_curve_value(MeasureKind kind, std::span<const float> c, const PixelCurveStats& s, const MeasureParams& p)
{
    const int n = static_cast<int>(c.size());
    // Missing neighbor at a curve end mirrors the existing one.
    const double below = s.d1 > 0 ? c[s.d1 - 1] : c[s.d1 + 1];
    const double above = s.d1 + 1 < n ? c[s.d1 + 1] : c[s.d1 - 1];
    switch (kind) {
    case MeasureKind::MSM: return -s.c_d1;
    case MeasureKind::MM: return s.c_d2m - s.c_d1;
    case MeasureKind::MMN: return s.c_d2 - s.c_d1;
    case MeasureKind::NLM: return std::exp((s.c_d2m - s.c_d1) / (2.0 * p.sigma_nlm * p.sigma_nlm));
    case MeasureKind::NLMN: return std::exp((s.c_d2 - s.c_d1) / (2.0 * p.sigma_nlm * p.sigma_nlm));
    case MeasureKind::CUR: return -2.0 * s.c_d1 + below + above;
    case MeasureKind::LC: return (std::max(below, above) - s.c_d1) / p.gamma_lc;
    case MeasureKind::PKR: return s.c_d2m / std::max(s.c_d1, p.epsilon_div);
    case MeasureKind::PKRN: return s.c_d2 / std::max(s.c_d1, p.epsilon_div);
    case MeasureKind::DAM: return std::abs(s.d1 - s.d2);
    default: break;
    }
    throw Error("not a local curve measure");
}

// ---------------------------------------------------------------------------
// entire curve

double full_curve_value(MeasureKind kind, std::span<const float> c, const PixelCurveStats& s, const MeasureParams& p)
{
    const int n = static_cast<int>(c.size());
    switch (kind) {
    case MeasureKind::PER: {
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            if (i == s.d1)
                continue;
            const double diff = s.c_d1 - c[i];
            sum += std::exp(-(diff * diff) / (p.s_per * p.s_per));
        }
        return sum;
    }
    case MeasureKind::MLM: {
        double denom = 0.0;
        for (int i = 0; i < n; ++i)
            denom += std::exp(-(c[i] - s.c_d1) / (2.0 * p.sigma_mlm));
        return 1.0 / std::max(denom, p.epsilon_div);
    }
    case MeasureKind::ALM: {
        double denom = 0.0;
        for (int i = 0; i < n; ++i)
            denom += std::exp(-static_cast<double>(c[i]) / (2.0 * p.sigma_mlm));
        return 1.0 / std::max(denom, p.epsilon_div);
    }
    case MeasureKind::NEM: {
        const double prob = std::exp(-s.c_d1) / s.sum_exp_neg;
        return prob * std::log(prob);
    }
    case MeasureKind::NOI: return s.n_local_minima;
    case MeasureKind::WMN: return (s.c_d2m - s.c_d1) / std::max(s.sum_costs, p.epsilon_div);
    case MeasureKind::WMNN: return (s.c_d2 - s.c_d1) / std::max(s.sum_costs, p.epsilon_div);
    case MeasureKind::PWCFA: {
        // The (d_max - d_min) / 3 clamp becomes 1/3 for costs in [0, 1].
        const double span = std::max(n - 1, 1);
        const double shift = s.sum_costs / (3.0 * span);
        double denom = 0.0;
        for (int i = 0; i < n; ++i) {
            const double gap = std::max(std::min(std::abs(i - s.d1) - 1.0, 1.0 / 3.0), 0.0);
            denom += gap * gap / std::max(c[i] - s.c_d1 - shift, 1.0);
        }
        return 1.0 / std::max(denom, p.epsilon_div);
    }
    default: break;
    }
    throw Error("not a full curve measure");
}

// ---------------------------------------------------------------------------
// windowed peak ratios, local minima and energy

void windowed_peak(const MeasureInputs& in, const MeasureParams& p, ConfidenceMap& out)
{
    const int w = in.width();
    const int h = in.height();
    const int r = p.window / 2;
    const auto kind = out.kind;
    if (kind == MeasureKind::SGE) {
        constexpr int dirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double energy = 0.0;
                for (const auto& dir : dirs) {
                    for (int k = 0; k <= r; ++k) {
                        const int qx = x + k * dir[0];
                        const int qy = y + k * dir[1];
                        if (qx < 0 || qy < 0 || qx >= w || qy >= h)
                            break;
                        const auto& sq = in.left_stats.at(qx, qy);
                        energy += sq.c_d1;
                        const int nx = qx + dir[0];
                        const int ny = qy + dir[1];
                        if (k == r || nx < 0 || ny < 0 || nx >= w || ny >= h)
                            break;
                        const int jump = std::abs(sq.d1 - in.left_stats.at(nx, ny).d1);
                        if (jump == 1)
                            energy += p.sge_p1;
                        else if (jump > 1)
                            energy += p.sge_p2;
                    }
                }
                out.scores.at(x, y) = energy;
            }
        return;
    }

    const bool naive = kind == MeasureKind::APKRN || kind == MeasureKind::WPKRN;
    const bool weighted = kind == MeasureKind::WPKR || kind == MeasureKind::WPKRN;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const auto& s = in.left_stats.at(x, y);
            const ClippedWindow win = clip_window(x, y, r, w, h);
            double acc = 0.0;
            for (int qy = win.y0; qy <= win.y1; ++qy)
                for (int qx = win.x0; qx <= win.x1; ++qx) {
                    const auto c = in.left_volume.curve(qx, qy);
                    if (kind == MeasureKind::LMN) {
                        acc += is_local_minimum(c, s.d1) ? 1.0 : 0.0;
                        continue;
                    }
                    if (weighted) {
                        const GrayImage& other = p.wpkr_mode == WpkrMode::same_image ? in.left_image : in.right_image;
                        const double diff = std::abs(static_cast<double>(in.left_image.at(x, y)) - other.at(qx, qy));
                        if (!(diff < p.wpkr_threshold))
                            continue;
                    }
                    const int second = naive ? s.d2 : s.d2m;
                    acc += c[second] / std::max(static_cast<double>(c[s.d1]), p.epsilon_div);
                }
            out.scores.at(x, y) = acc;
        }
}

// ---------------------------------------------------------------------------
// left-right

void zsad(const MeasureInputs& in, const MeasureParams& p, ConfidenceMap& out)
{
    const int w = in.width();
    const int h = in.height();
    const int r = p.window / 2;
    std::vector<double> lv, rv;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int d1 = in.left_stats.at(x, y).d1;
            lv.clear();
            rv.clear();
            for (int dy = -r; dy <= r; ++dy) {
                const int qy = y + dy;
                if (qy < 0 || qy >= h)
                    continue;
                for (int dx = -r; dx <= r; ++dx) {
                    const int qx = x + dx;
                    if (qx < 0 || qx >= w)
                        continue;
                    lv.push_back(in.left_image.at(qx, qy));
                    rv.push_back(in.right_image.at(clamp_index(qx - d1, 0, w - 1), qy));
                }
            }
            const double n = static_cast<double>(lv.size());
            const double ml = std::accumulate(lv.begin(), lv.end(), 0.0) / n;
            const double mr = std::accumulate(rv.begin(), rv.end(), 0.0) / n;
            double sum = 0.0;
            for (std::size_t i = 0; i < lv.size(); ++i)
                sum += std::abs(lv[i] - ml - rv[i] + mr);
            out.scores.at(x, y) = sum;
        }
}

// Collision-based measures: pixels in a row colliding on the same (unclamped) right column.
void uniqueness(const MeasureInputs& in, ConfidenceMap& out)
{
    const int w = in.width();
    const int h = in.height();
    const int d_max = in.d_max();
    const int slots = w + d_max + 1;
    std::vector<int> count(slots);
    std::vector<double> min_cost(slots);
    std::vector<int> max_disp(slots);
    for (int y = 0; y < h; ++y) {
        std::fill(count.begin(), count.end(), 0);
        std::fill(min_cost.begin(), min_cost.end(), std::numeric_limits<double>::infinity());
        std::fill(max_disp.begin(), max_disp.end(), std::numeric_limits<int>::min());
        for (int x = 0; x < w; ++x) {
            const auto& s = in.left_stats.at(x, y);
            const int slot = x - s.d1 + d_max;
            ++count[slot];
            min_cost[slot] = std::min(min_cost[slot], s.c_d1);
            max_disp[slot] = std::max(max_disp[slot], s.d1);
        }
        for (int x = 0; x < w; ++x) {
            const auto& s = in.left_stats.at(x, y);
            const int slot = x - s.d1 + d_max;
            const bool colliding = count[slot] > 1;
            const bool cost_loses = s.c_d1 != min_cost[slot];
            double v = 0.0;
            switch (out.kind) {
            case MeasureKind::UC: v = colliding && cost_loses ? 0.0 : 1.0; break;
            case MeasureKind::ACC: v = colliding && (s.d1 != max_disp[slot] || cost_loses) ? 0.0 : 1.0; break;
            case MeasureKind::UCC: v = colliding && cost_loses ? 0.0 : -s.c_d1; break;
            case MeasureKind::UCO: v = -static_cast<double>(count[slot] - 1); break;
            default: throw Error("not a uniqueness measure");
            }
            out.scores.at(x, y) = v;
        }
    }
}

// ---------------------------------------------------------------------------
// disparity histograms

struct HistogramMaps {
    RealMap agreement, scattering, median;
};

HistogramMaps disparity_histograms(const DisparityMap& disp, int r)
{
    const int w = disp.width();
    const int h = disp.height();
    Image2D<int> bins(w, h);
    int max_bin = 0;
    for (std::size_t i = 0; i < disp.size(); ++i) {
        bins.data()[i] = std::max(0, static_cast<int>(std::lround(disp.data()[i])));
        max_bin = std::max(max_bin, bins.data()[i]);
    }
    HistogramMaps out{RealMap(w, h), RealMap(w, h), RealMap(w, h)};
    std::vector<int> hist(static_cast<std::size_t>(max_bin) + 1);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(y - r, 0);
        const int y1 = std::min(y + r, h - 1);
        std::fill(hist.begin(), hist.end(), 0);
        int distinct = 0;
        int total = 0;
        auto add_column = [&](int cx, int delta) {
            for (int qy = y0; qy <= y1; ++qy) {
                int& slot = hist[bins.at(cx, qy)];
                if (delta > 0 && slot == 0)
                    ++distinct;
                slot += delta;
                if (delta < 0 && slot == 0)
                    --distinct;
                total += delta;
            }
        };
        for (int cx = 0; cx <= std::min(r, w - 1); ++cx)
            add_column(cx, +1);
        for (int x = 0; x < w; ++x) {
            if (x > 0) {
                if (x - r - 1 >= 0)
                    add_column(x - r - 1, -1);
                if (x + r < w)
                    add_column(x + r, +1);
            }
            out.agreement.at(x, y) = hist[bins.at(x, y)];
            out.scattering.at(x, y) = -std::log(static_cast<double>(distinct) / total);
            // lower median
            const int rank = (total - 1) / 2;
            int seen = 0;
            int med = 0;
            for (int b = 0; b <= max_bin; ++b) {
                seen += hist[b];
                if (seen > rank) {
                    med = b;
                    break;
                }
            }
            out.median.at(x, y) = med;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// self-matching

double distinctiveness(const SelfCostVolume& self, int x, int y)
{
    double best = std::numeric_limits<double>::infinity();
    for (int off = -self.d_max; off <= self.d_max; ++off)
        if (off != 0)
            best = std::min(best, static_cast<double>(self.at_offset(x, y, off)));
    return best;
}

double self_aware_correlation(std::span<const float> c, int d1, const SelfCostVolume& self, int x, int y)
{
    std::vector<double> a, b;
    for (int i = 0; i < static_cast<int>(c.size()); ++i) {
        const int off = i - d1;
        if (off < -self.d_max || off > self.d_max)
            continue;
        a.push_back(c[i]);
        b.push_back(self.at_offset(x, y, off));
    }
    if (a.size() < 2)
        return 0.0;
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0)
        return 0.0;
    return sab / std::sqrt(saa * sbb);
}

} // namespace

std::vector<ConfidenceMap> local_curve_measures(const MeasureInputs& in, const MeasureParams& p, MeasureKinds kinds)
{
    std::vector<ConfidenceMap> out;
    for (auto kind : kinds) {
        ConfidenceMap m = start_map(in, p, kind, MeasureFamily::local_curve);
        for (int y = 0; y < in.height(); ++y)
            for (int x = 0; x < in.width(); ++x)
                m.scores.at(x, y) = local_curve_value(kind, in.left_volume.curve(x, y), in.left_stats.at(x, y), p);
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<ConfidenceMap> windowed_peak_measures(const MeasureInputs& in, const MeasureParams& p, MeasureKinds kinds)
{
    std::vector<ConfidenceMap> out;
    for (auto kind : kinds) {
        ConfidenceMap m = start_map(in, p, kind, MeasureFamily::windowed_peak);
        windowed_peak(in, p, m);
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<ConfidenceMap> full_curve_measures(const MeasureInputs& in, const MeasureParams& p, MeasureKinds kinds)
{
    std::vector<ConfidenceMap> out;
    for (auto kind : kinds) {
        ConfidenceMap m = start_map(in, p, kind, MeasureFamily::full_curve);
        for (int y = 0; y < in.height(); ++y)
            for (int x = 0; x < in.width(); ++x)
                m.scores.at(x, y) = full_curve_value(kind, in.left_volume.curve(x, y), in.left_stats.at(x, y), p);
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<ConfidenceMap> lr_measures(const MeasureInputs& in, const MeasureParams& p, MeasureKinds kinds)
{
    std::vector<ConfidenceMap> out;
    for (auto kind : kinds) {
        ConfidenceMap m = start_map(in, p, kind, MeasureFamily::left_right);
        switch (kind) {
        case MeasureKind::LRC:
            for (int y = 0; y < in.height(); ++y)
                for (int x = 0; x < in.width(); ++x) {
                    const int d1 = in.left_stats.at(x, y).d1;
                    m.scores.at(x, y) = -std::abs(d1 - disparity_at(in.right_disparity, right_column(in, x, y), y));
                }
            break;
        case MeasureKind::LRD:
            for (int y = 0; y < in.height(); ++y)
                for (int x = 0; x < in.width(); ++x) {
                    const auto& s = in.left_stats.at(x, y);
                    const double cr = in.right_stats.at(right_column(in, x, y), y).c_d1;
                    m.scores.at(x, y) = (s.c_d2 - s.c_d1) / std::max(std::abs(s.c_d1 - cr), p.epsilon_div);
                }
            break;
        case MeasureKind::ZSAD: zsad(in, p, m); break;
        default: uniqueness(in, m); break;
        }
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<ConfidenceMap> disparity_map_measures(const MeasureInputs& in, const MeasureParams& p, MeasureKinds kinds)
{
    std::vector<ConfidenceMap> out;
    const int w = in.width();
    const int h = in.height();
    const int r = p.window / 2;
    std::optional<BoxMoments> moments;
    std::optional<HistogramMaps> hist;
    for (auto kind : kinds) {
        ConfidenceMap m = start_map(in, p, kind, MeasureFamily::disparity_map);
        const DisparityMap& d = in.left_disparity;
        switch (kind) {
        case MeasureKind::DTD:
        case MeasureKind::DMV: {
            RealMap gx, gy;
            central_gradient(d, gx, gy);
            Image2D<std::uint8_t> edges(w, h);
            for (std::size_t i = 0; i < d.size(); ++i) {
                const double mag = std::hypot(gx.data()[i], gy.data()[i]);
                if (kind == MeasureKind::DMV)
                    m.scores.data()[i] = mag;
                edges.data()[i] = mag >= p.edge_threshold_disparity ? 1 : 0;
            }
            if (kind == MeasureKind::DTD)
                m.scores = chamfer_distance(edges);
            break;
        }
        case MeasureKind::VAR:
        case MeasureKind::SKEW:
        case MeasureKind::MND: {
            if (!moments)
                moments.emplace(d);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const ClippedWindow win = clip_window(x, y, r, w, h);
                    const double n = win.count();
                    const double mu = moments->sum(1, win) / n;
                    if (kind == MeasureKind::MND) {
                        m.scores.at(x, y) = -std::abs(d.at(x, y) - moments->offset() - mu);
                        continue;
                    }
                    const double m2 = moments->sum(2, win) / n;
                    if (kind == MeasureKind::VAR) {
                        m.scores.at(x, y) = -(m2 - mu * mu);
                    } else {
                        const double m3 = moments->sum(3, win) / n;
                        m.scores.at(x, y) = -(m3 - 3.0 * mu * m2 + 2.0 * mu * mu * mu);
                    }
                }
            break;
        }
        default: {
            if (!hist)
                hist = disparity_histograms(d, r);
            if (kind == MeasureKind::DA)
                m.scores = hist->agreement;
            else if (kind == MeasureKind::DS)
                m.scores = hist->scattering;
            else if (kind == MeasureKind::MED)
                m.scores = hist->median;
            else
                for (std::size_t i = 0; i < d.size(); ++i)
                    m.scores.data()[i] = -std::abs(d.data()[i] - hist->median.data()[i]);
            break;
        }
        }
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<ConfidenceMap> image_measures(const MeasureInputs& in, const MeasureParams& p, MeasureKinds kinds)
{
    std::vector<ConfidenceMap> out;
    const int w = in.width();
    const int h = in.height();
    for (auto kind : kinds) {
        ConfidenceMap m = start_map(in, p, kind, MeasureFamily::image);
        switch (kind) {
        case MeasureKind::DB:
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    m.scores.at(x, y) = std::min({x, y, w - x, h - y});
            break;
        case MeasureKind::DLB:
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    m.scores.at(x, y) = std::min(x, in.d_max());
            break;
        case MeasureKind::HGM:
        case MeasureKind::DTE: {
            RealMap gx, gy;
            central_gradient(to_real(in.left_image), gx, gy);
            if (kind == MeasureKind::HGM) {
                for (std::size_t i = 0; i < gx.size(); ++i)
                    m.scores.data()[i] = std::abs(gx.data()[i]);
            } else {
                Image2D<std::uint8_t> edges(w, h);
                for (std::size_t i = 0; i < gx.size(); ++i)
                    edges.data()[i] = std::hypot(gx.data()[i], gy.data()[i]) >= p.edge_threshold_intensity ? 1 : 0;
                m.scores = chamfer_distance(edges);
            }
            break;
        }
        case MeasureKind::IVAR: {
            const BoxMoments moments(to_real(in.left_image));
            const int r = p.window / 2;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    const ClippedWindow win = clip_window(x, y, r, w, h);
                    const double n = win.count();
                    const double mu = moments.sum(1, win) / n;
                    m.scores.at(x, y) = std::max(moments.sum(2, win) / n - mu * mu, 0.0);
                }
            break;
        }
        default: throw Error("not an image measure");
        }
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<ConfidenceMap> self_matching_measures(const MeasureInputs& in, const MeasureParams& p, MeasureKinds kinds)
{
    std::vector<ConfidenceMap> out;
    for (auto kind : kinds) {
        ConfidenceMap m = start_map(in, p, kind, MeasureFamily::self_matching);
        for (int y = 0; y < in.height(); ++y)
            for (int x = 0; x < in.width(); ++x) {
                double v = 0.0;
                if (kind == MeasureKind::DTS) {
                    v = distinctiveness(in.self_left, x, y);
                } else if (kind == MeasureKind::DSM) {
                    const auto& s = in.left_stats.at(x, y);
                    const double num = distinctiveness(in.self_left, x, y)
                                       * distinctiveness(in.self_right, right_column(in, x, y), y);
                    v = num / std::max(s.c_d1 * s.c_d1, p.epsilon_div);
                } else {
                    v = self_aware_correlation(in.left_volume.curve(x, y), in.left_stats.at(x, y).d1, in.self_left, x, y);
                }
                m.scores.at(x, y) = v;
            }
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<ConfidenceMap> sgm_measures(const MeasureInputs& in, const MeasureParams& p, MeasureKinds kinds)
{
    std::vector<ConfidenceMap> out;
    for (auto kind : kinds) {
        ConfidenceMap m = start_map(in, p, kind, MeasureFamily::sgm);
        const ScanlineResult& sl = *in.scanlines;
        if (sl.total.width() != in.width() || sl.total.height() != in.height())
            throw Error("SGM scanline results do not match the input dimensions");
        for (int y = 0; y < in.height(); ++y)
            for (int x = 0; x < in.width(); ++x) {
                const PixelCurveStats star = analyze_curve(sl.total.curve(x, y));
                if (kind == MeasureKind::SCS) {
                    int agree = 0;
                    for (const auto& wta_map : sl.path_wta)
                        agree += wta_map.at(x, y) == star.d1 ? 1 : 0;
                    m.scores.at(x, y) = agree;
                } else {
                    const int d1_local = argmin_lowest(in.pre_aggregation.curve(x, y));
                    const double g = p.gamma_ps;
                    const double ratio = (star.c_d2 - star.c_d1) / std::max(star.c_d1, p.epsilon_div);
                    const double spread = 1.0 - std::min<double>(std::abs(star.d2 - star.d1), g) / g;
                    const double drift = 1.0 - std::min<double>(std::abs(star.d1 - d1_local), g) / g;
                    m.scores.at(x, y) = ratio * spread * drift;
                }
            }
        out.push_back(std::move(m));
    }
    return out;
}

ConfidenceMap compute_measure(const MeasureInputs& in, const MeasureParams& p, MeasureKind kind)
{
    const MeasureKind kinds[] = {kind};
    std::vector<ConfidenceMap> maps;
    switch (measure_info(kind).family) {
    case MeasureFamily::local_curve: maps = local_curve_measures(in, p, kinds); break;
    case MeasureFamily::windowed_peak: maps = windowed_peak_measures(in, p, kinds); break;
    case MeasureFamily::full_curve: maps = full_curve_measures(in, p, kinds); break;
    case MeasureFamily::left_right: maps = lr_measures(in, p, kinds); break;
    case MeasureFamily::disparity_map: maps = disparity_map_measures(in, p, kinds); break;
    case MeasureFamily::image: maps = image_measures(in, p, kinds); break;
    case MeasureFamily::self_matching: maps = self_matching_measures(in, p, kinds); break;
    case MeasureFamily::sgm: maps = sgm_measures(in, p, kinds); break;
    }
    return std::move(maps.front());
}

ConfidenceMap compute_measure(const MeasureInputs& in, const MeasureParams& p, const MeasureRequest& req)
{
    MeasureParams local = p;
    if (req.window)
        local.window = *req.window;
    return compute_measure(in, local, req.kind);
}

ConfidenceMap compute_measure(const MeasureInputs& in, const MeasureParams& p, std::string_view id)
{
    return compute_measure(in, p, parse_measure_id(id));
}

} // namespace stconf
