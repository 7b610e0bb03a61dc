#pragma once

#include "stconf/cost_volume.hpp"
#include "stconf/dataio.hpp"
#include "stconf/image.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

namespace stconf::test {

/// Width x 1 x levels volume from explicit curves.
inline CostVolume volume_from_curves(const std::vector<std::vector<float>>& curves, int width = -1)
{
    const int n = static_cast<int>(curves.size());
    const int w = width < 0 ? n : width;
    const int h = n / w;
    CostVolume vol(w, h, static_cast<int>(curves.front().size()));
    for (int i = 0; i < n; ++i)
        for (int d = 0; d < vol.levels(); ++d)
            vol.at(i % w, i / w, d) = curves[i][d];
    return vol;
}

inline CostVolume random_volume(int w, int h, int levels, std::mt19937_64& rng, bool quantized = false)
{
    std::uniform_real_distribution<float> uni(0.0f, 1.0f);
    std::uniform_int_distribution<int> q(0, 16);
    CostVolume vol(w, h, levels);
    for (auto& v : vol.data())
        v = quantized ? static_cast<float>(q(rng)) / 16.0f : uni(rng);
    return vol;
}

inline GrayImage random_image(int w, int h, std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> u(0, 255);
    GrayImage img(w, h);
    for (auto& v : img.data())
        v = static_cast<std::uint8_t>(u(rng));
    return img;
}

/// Random noise smoothed by a 3x3 box, wide intensity range.
inline GrayImage textured_image(int w, int h, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    const GrayImage noise = random_image(w, h, rng);
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int sum = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    sum += noise.at(clamp_index(x + dx, 0, w - 1), clamp_index(y + dy, 0, h - 1));
            const int stretched = (sum / 9 - 128) * 3 + 128;
            out.at(x, y) = static_cast<std::uint8_t>(std::clamp(stretched, 0, 255));
        }
    return out;
}

/// Stereo pair with left(x) = right(x - shift) on every column x >= shift.
struct ShiftedPair {
    GrayImage left, right;
};

inline ShiftedPair shifted_pair(int w, int h, int shift, std::uint64_t seed)
{
    const GrayImage base = textured_image(w + shift, h, seed);
    ShiftedPair p{GrayImage(w, h), GrayImage(w, h)};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            p.left.at(x, y) = base.at(x, y);
            p.right.at(x, y) = base.at(x + shift, y);
        }
    return p;
}

/// Fresh scratch directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("stconf_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Writes shifted pairs (PGM) with PFM ground truth and a manifest.json into `dir`.
/// Columns without a match in the right view carry non-finite (invalid) ground truth.
inline std::filesystem::path write_shifted_dataset(const std::filesystem::path& dir, const std::vector<int>& shifts,
                                                   int w, int h, int d_max, double tau = 3.0)
{
    std::filesystem::create_directories(dir);
    std::string manifest = "[";
    for (std::size_t i = 0; i < shifts.size(); ++i) {
        const int s = shifts[i];
        const auto pair = shifted_pair(w, h, s, 100 + i);
        const std::string stem = "pair" + std::to_string(i);
        save_gray_image(pair.left, dir / (stem + "_l.pgm"));
        save_gray_image(pair.right, dir / (stem + "_r.pgm"));
        RealMap gt(w, h, static_cast<double>(s));
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < s; ++x)
                gt.at(x, y) = std::numeric_limits<double>::infinity();
        save_map(gt, dir / (stem + "_gt.pfm"), MapEncoding::pfm);
        manifest += std::string(i ? "," : "") + "{\"left\":\"" + stem + "_l.pgm\",\"right\":\"" + stem
                    + "_r.pgm\",\"gt\":\"" + stem + "_gt.pfm\",\"d_max\":" + std::to_string(d_max)
                    + ",\"tau\":" + std::to_string(tau) + "}";
    }
    manifest += "]";
    std::ofstream(dir / "manifest.json") << manifest;
    return dir / "manifest.json";
}

} // namespace stconf::test
