#pragma once

#include "stconf/image.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace stconf {

enum class GtEncoding { pfm, kitti_png16 };
enum class MapEncoding { pfm, png16_scaled };

GtEncoding parse_gt_encoding(const std::string& name);
std::string to_string(GtEncoding e);

/// Reads an 8-bit binary PGM (P5) or a PNG (gray or color, 8 or 16 bit).
/// 16-bit samples are shifted down to 8 bit; color uses luma 0.299/0.587/0.114.
GrayImage load_gray_image(const std::filesystem::path& path);

/// Writes P5 PGM when the extension is .pgm, 8-bit gray PNG otherwise.
void save_gray_image(const GrayImage& img, const std::filesystem::path& path);

GroundTruth load_ground_truth(const std::filesystem::path& path, GtEncoding encoding);

/// Saves a real raster. PFM stores float32 little-endian bottom-to-top rows;
/// png16-scaled stores round(v * 256) clamped to [0, 65535].
void save_map(const Image2D<float>& map, const std::filesystem::path& path, MapEncoding encoding);
void save_map(const RealMap& map, const std::filesystem::path& path, MapEncoding encoding);

/// Reads a single-channel PFM ("Pf") into float precision.
Image2D<float> load_pfm(const std::filesystem::path& path);

/// Raw 16-bit single-channel PNG samples (no scaling).
Image2D<std::uint16_t> load_png16(const std::filesystem::path& path);

struct ManifestEntry {
    std::string left;
    std::string right;
    std::string gt;
    GtEncoding gt_encoding = GtEncoding::pfm;
    int d_max = 0;
    double tau = 0.0;
    // Only used by the external-volume algorithm.
    std::string volume;
    std::string volume_mode = "costs";
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
};

/// Parses the JSON manifest. Relative paths resolve against the manifest's directory.
DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir = {});

} // namespace stconf
