#pragma once

#include "stconf/cost_volume.hpp"
#include "stconf/image.hpp"
#include "stconf/measures.hpp"
#include "stconf/parallel.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace stconf {

enum class StackKind { GCP, ENS7, ENS23, LEV22, LEV50, O1, O2, FA1, FA2, SGMF };

const char* to_string(StackKind k);
StackKind parse_stack_kind(const std::string& name);
/// Channel count of a stack kind.
int stack_channel_count(StackKind k);

struct FeatureChannel {
    std::string name;
    RealMap values;
};

struct FeatureStack {
    std::string kind;
    std::vector<FeatureChannel> channels;

    int width() const { return channels.empty() ? 0 : channels.front().values.width(); }
    int height() const { return channels.empty() ? 0 : channels.front().values.height(); }
};

/// Full, half and quarter resolution.
struct ImagePyramid {
    std::array<GrayImage, 3> levels;
};

/// 2x2 box filter, dimensions halved with floor.
GrayImage downsample_half(const GrayImage& img);
/// Requires both dimensions >= 4.
ImagePyramid build_pyramid(const GrayImage& img);
/// d_max at pyramid level `level` (0 = full): d_max / 2^level, at least 1.
int scaled_d_max(int d_max, int level);
RealMap upsample_nearest(const RealMap& map, int width, int height);

/// Window of a feature with apex i.
inline int apex_window(int i) { return 3 + 2 * i; }

/// Recomputes a left-reference volume for a downsampled pair.
using StereoRunner = std::function<CostVolume(const GrayImage& left, const GrayImage& right, int d_max)>;

/// Gathers the channels of `kind` from the full-resolution inputs. Multi-scale kinds
/// (ENS7, ENS23) rerun `runner` on the half and quarter levels and upsample back.
FeatureStack assemble_stack(StackKind kind, const MeasureInputs& in, const MeasureParams& params,
                            const StereoRunner& runner = {}, Exec exec = {});

void export_stack(const FeatureStack& stack, const std::filesystem::path& path);
FeatureStack read_stack(const std::filesystem::path& path);

} // namespace stconf
