#pragma once

#include "stconf/image.hpp"
#include "stconf/parallel.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace stconf {

/// H x W x D matching costs stored [y][x][d]. Hypothesis i covers [0, levels()).
class CostVolume {
public:
    CostVolume() = default;
    CostVolume(int width, int height, int levels, float fill = 0.0f);

    int width() const { return width_; }
    int height() const { return height_; }
    /// Number of hypotheses D (= d_max + 1 for a left/right volume).
    int levels() const { return levels_; }
    int d_max() const { return levels_ - 1; }
    bool empty() const { return costs_.empty(); }

    float& at(int x, int y, int d) { return costs_[offset(x, y) + d]; }
    float at(int x, int y, int d) const { return costs_[offset(x, y) + d]; }

    std::span<float> curve(int x, int y) { return {costs_.data() + offset(x, y), static_cast<std::size_t>(levels_)}; }
    std::span<const float> curve(int x, int y) const
    {
        return {costs_.data() + offset(x, y), static_cast<std::size_t>(levels_)};
    }

    std::vector<float>& data() { return costs_; }
    const std::vector<float>& data() const { return costs_; }

    std::size_t offset(int x, int y) const
    {
        return (static_cast<std::size_t>(y) * width_ + x) * static_cast<std::size_t>(levels_);
    }

private:
    int width_ = 0;
    int height_ = 0;
    int levels_ = 0;
    std::vector<float> costs_;
};

/// Self-matching volume over symmetric offsets [-d_max, d_max]. Level j maps to offset j - d_max.
struct SelfCostVolume {
    CostVolume costs;
    int d_max = 0;

    float at_offset(int x, int y, int offset) const { return costs.at(x, y, offset + d_max); }
};

/// Per-pixel census bit strings packed into 64-bit words.
class CensusImage {
public:
    CensusImage() = default;
    CensusImage(int width, int height, int window);

    int width() const { return width_; }
    int height() const { return height_; }
    int window() const { return window_; }
    int bits() const { return window_ * window_; }
    int words() const { return words_; }

    std::span<std::uint64_t> descriptor(int x, int y)
    {
        return {data_.data() + (static_cast<std::size_t>(y) * width_ + x) * words_, static_cast<std::size_t>(words_)};
    }
    std::span<const std::uint64_t> descriptor(int x, int y) const
    {
        return {data_.data() + (static_cast<std::size_t>(y) * width_ + x) * words_, static_cast<std::size_t>(words_)};
    }
    bool bit(int x, int y, int j) const { return (descriptor(x, y)[j / 64] >> (j % 64)) & 1u; }

private:
    int width_ = 0;
    int height_ = 0;
    int window_ = 0;
    int words_ = 0;
    std::vector<std::uint64_t> data_;
};

int hamming_distance(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

/// Bit j (raster order over the window) is set iff neighbor < center. Borders replicate.
CensusImage census_transform(const GrayImage& img, int window = 9, Exec exec = {});

/// c_i(x, y) = hamming(left(x, y), right(max(x - i, 0), y)) / window^2.
CostVolume build_cost_volume(const CensusImage& left, const CensusImage& right, int d_max, Exec exec = {});

/// c^r_i(x, y) = c_i(min(x + i, W - 1), y).
CostVolume derive_right_volume(const CostVolume& left);
/// Inverse remap: c_i(x, y) = c^r_i(max(x - i, 0), y).
CostVolume derive_left_volume(const CostVolume& right);

SelfCostVolume build_self_volume(const GrayImage& img, int d_max, int window = 9, Exec exec = {});
SelfCostVolume build_self_volume(const CensusImage& census, int d_max, Exec exec = {});

enum class IngestMode { costs, probabilities };
IngestMode parse_ingest_mode(const std::string& name);

/// Reads an STCVOL file. Probabilities are negated and min-max normalized;
/// costs are min-max normalized only when some value falls outside [0, 1].
CostVolume ingest_cost_volume(const std::filesystem::path& path, IngestMode mode = IngestMode::costs);
/// Raw STCVOL read with no normalization.
CostVolume read_stcvol(const std::filesystem::path& path);
void write_stcvol(const CostVolume& vol, const std::filesystem::path& path);

/// Min-max rescale to [0, 1] when any cost is outside it; a constant volume maps to 0.
void normalize_if_out_of_range(CostVolume& vol);
void min_max_normalize(CostVolume& vol);

} // namespace stconf
