#include "stconf/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace stconf {

double d1_rate(const DisparityMap& disp, const GroundTruth& gt, double tau, const Image2D<std::uint8_t>& subset)
{
    if (!disp.same_shape(gt.disparity))
        throw Error("disparity and ground truth dimensions differ");
    if (!subset.empty() && !subset.same_shape(gt.disparity))
        throw Error("subset mask dimensions differ");
    std::size_t n = 0;
    std::size_t bad = 0;
    for (std::size_t i = 0; i < disp.size(); ++i) {
        if (!gt.valid.data()[i] || (!subset.empty() && !subset.data()[i]))
            continue;
        ++n;
        if (std::abs(disp.data()[i] - gt.disparity.data()[i]) > tau)
            ++bad;
    }
    if (n == 0)
        throw Error("D1 over an empty pixel subset");
    return static_cast<double>(bad) / static_cast<double>(n);
}

SparsificationCurve sparsify(const RealMap& confidence, const DisparityMap& disp, const GroundTruth& gt, double tau,
                             const SparsifyOptions& options)
{
    if (options.k < 1)
        throw Error("sparsification needs k >= 1");
    if (!confidence.same_shape(gt.disparity) || !disp.same_shape(gt.disparity))
        throw Error("confidence, disparity and ground truth dimensions differ");

    std::vector<std::uint32_t> order;
    for (std::size_t i = 0; i < gt.valid.size(); ++i)
        if (gt.valid.data()[i]) {
            if (!std::isfinite(confidence.data()[i]))
                throw Error("non-finite confidence value");
            order.push_back(static_cast<std::uint32_t>(i));
        }
    const std::size_t n = order.size();
    if (n == 0)
        throw Error("no valid ground-truth pixels");
    if (n < static_cast<std::size_t>(options.k))
        throw Error("fewer valid pixels than sparsification steps");

    const auto& conf = confidence.data();
    if (options.shuffle_seed) {
        std::mt19937_64 rng(*options.shuffle_seed);
        std::vector<std::uint64_t> key(confidence.size());
        for (auto& v : key)
            v = rng();
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            if (conf[a] != conf[b])
                return conf[a] > conf[b];
            return key[a] != key[b] ? key[a] < key[b] : a < b;
        });
    } else {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return conf[a] > conf[b]; });
    }

    std::vector<std::size_t> errors(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto px = order[i];
        const bool bad = std::abs(disp.data()[px] - gt.disparity.data()[px]) > tau;
        errors[i + 1] = errors[i] + (bad ? 1 : 0);
    }

    SparsificationCurve curve;
    curve.k = options.k;
    curve.tau = tau;
    curve.epsilon = static_cast<double>(errors[n]) / static_cast<double>(n);
    const auto k = static_cast<std::uint64_t>(options.k);
    for (std::uint64_t j = 1; j <= k; ++j) {
        const std::uint64_t m = (j * n + k - 1) / k;
        curve.densities.push_back(static_cast<double>(j) / static_cast<double>(k));
        curve.error_rates.push_back(static_cast<double>(errors[m]) / static_cast<double>(m));
    }
    return curve;
}

double auc(const SparsificationCurve& curve)
{
    if (curve.error_rates.empty())
        throw Error("empty sparsification curve");
    return std::accumulate(curve.error_rates.begin(), curve.error_rates.end(), 0.0)
           / static_cast<double>(curve.error_rates.size());
}

double optimal_auc(double epsilon)
{
    if (!(epsilon >= 0.0 && epsilon < 1.0))
        throw Error("optimal AUC needs epsilon in [0, 1)");
    return epsilon + (1.0 - epsilon) * std::log1p(-epsilon);
}

double macro_average(std::span<const double> values)
{
    if (values.empty())
        throw Error("macro average of an empty list");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

std::vector<MeasureSummary> summarize(const std::vector<EvalRecord>& records)
{
    std::vector<MeasureSummary> rows;
    std::map<std::string, std::size_t> index;
    for (const auto& r : records) {
        auto [it, inserted] = index.try_emplace(r.measure, rows.size());
        if (inserted)
            rows.push_back({r.measure});
        auto& row = rows[it->second];
        row.mean_auc += r.auc;
        row.mean_opt += r.opt;
        row.mean_d1 += r.d1;
        ++row.images;
    }
    for (auto& row : rows) {
        row.mean_auc /= row.images;
        row.mean_opt /= row.images;
        row.mean_d1 /= row.images;
    }
    for (auto& row : rows) {
        row.rank = 1;
        for (const auto& other : rows)
            if (other.mean_auc < row.mean_auc)
                ++row.rank;
    }
    return rows;
}

std::string format_x100(double v, int decimals)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v * 100.0);
    return buf;
}

std::string report_csv(const std::vector<EvalRecord>& records)
{
    std::ostringstream os;
    os << "measure,image,auc_x100,opt_x100,d1_pct\n";
    for (const auto& r : records)
        os << r.measure << ',' << r.image << ',' << format_x100(r.auc, 4) << ',' << format_x100(r.opt, 4) << ','
           << format_x100(r.d1, 4) << '\n';
    return os.str();
}

std::string macro_csv(const std::vector<EvalRecord>& records)
{
    std::ostringstream os;
    os << "measure,images,auc_x100,opt_x100,d1_pct,rank\n";
    for (const auto& s : summarize(records))
        os << s.measure << ',' << s.images << ',' << format_x100(s.mean_auc, 4) << ','
           << format_x100(s.mean_opt, 4) << ',' << format_x100(s.mean_d1, 4) << ',' << s.rank << '\n';
    return os.str();
}

std::string report_markdown(const std::vector<EvalRecord>& records)
{
    auto rows = summarize(records);
    std::stable_sort(rows.begin(), rows.end(),
                     [](const MeasureSummary& a, const MeasureSummary& b) { return a.rank < b.rank; });
    std::ostringstream os;
    os << "# Confidence evaluation\n\n";
    os << "AUC, optimal AUC and D1 are macro-averaged over images and multiplied by 100.\n\n";
    os << "| R. | Measure | AUC | Opt. | D1 | Images |\n";
    os << "|---:|:--------|----:|-----:|---:|-------:|\n";
    for (const auto& s : rows)
        os << "| " << s.rank << " | " << s.measure << " | " << format_x100(s.mean_auc, 2) << " | "
           << format_x100(s.mean_opt, 2) << " | " << format_x100(s.mean_d1, 2) << " | " << s.images << " |\n";
    if (!rows.empty()) {
        // D1 and the optimum do not depend on the measure.
        const auto& s = rows.front();
        os << "\nOpt. (mean of per-image optima): " << format_x100(s.mean_opt, 2) << "\n";
        os << "Opt. (closed form on mean D1): " << format_x100(optimal_auc(std::min(s.mean_d1, 1.0 - 1e-12)), 2)
           << "\n";
    }
    return os.str();
}

std::string curve_csv(const SparsificationCurve& curve)
{
    std::ostringstream os;
    os << "density,error_rate\n";
    char buf[96];
    for (std::size_t i = 0; i < curve.densities.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.8f\n", curve.densities[i], curve.error_rates[i]);
        os << buf;
    }
    return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw Error("cannot open " + path.string() + " for writing");
    os << text;
    if (!os)
        throw Error("write failure on " + path.string());
}

} // namespace stconf
