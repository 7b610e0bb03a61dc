#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stconf {

/// Thrown for malformed inputs, unsupported formats and violated preconditions.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense row-major 2D raster.
template <typename T>
class Image2D {
public:
    Image2D() = default;
    Image2D(int width, int height, T fill = T{})
        : width_(width), height_(height)
    {
        if (width < 0 || height < 0)
            throw Error("negative image dimensions");
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& at(int x, int y) { return data_[index(x, y)]; }
    const T& at(int x, int y) const { return data_[index(x, y)]; }

    T* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_; }
    const T* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * width_; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool same_shape(int w, int h) const { return w == width_ && h == height_; }
    template <typename U>
    bool same_shape(const Image2D<U>& o) const { return same_shape(o.width(), o.height()); }

    std::size_t index(int x, int y) const
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

/// 8-bit intensity image; arithmetic promotes to double.
using GrayImage = Image2D<std::uint8_t>;
/// Generic per-pixel real raster (disparities, confidences, feature channels).
using RealMap = Image2D<double>;
using DisparityMap = RealMap;

/// Ground-truth disparities with a validity mask. Invalid pixels carry 0.
struct GroundTruth {
    RealMap disparity;
    Image2D<std::uint8_t> valid;

    int width() const { return disparity.width(); }
    int height() const { return disparity.height(); }
    std::size_t valid_count() const;
};

inline int clamp_index(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

} // namespace stconf
