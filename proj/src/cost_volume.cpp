#include "stconf/cost_volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace stconf {

CostVolume::CostVolume(int width, int height, int levels, float fill)
    : width_(width), height_(height), levels_(levels)
{
    if (width < 1 || height < 1 || levels < 1)
        throw Error("cost volume dimensions must be positive");
    costs_.assign(static_cast<std::size_t>(width) * height * levels, fill);
}

CensusImage::CensusImage(int width, int height, int window)
    : width_(width), height_(height), window_(window), words_((window * window + 63) / 64)
{
    data_.assign(static_cast<std::size_t>(width) * height * words_, 0);
}

int hamming_distance(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b)
{
    int n = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        n += std::popcount(a[i] ^ b[i]);
    return n;
}

CensusImage census_transform(const GrayImage& img, int window, Exec exec)
{
    if (window < 3 || window % 2 == 0)
        throw Error("census window must be odd and >= 3");
    if (img.empty())
        throw Error("census: empty image");
    const int r = window / 2;
    const int w = img.width();
    const int h = img.height();
    CensusImage out(w, h, window);
    parallel_for(0, h, exec, [&](int y) {
        for (int x = 0; x < w; ++x) {
            const std::uint8_t center = img.at(x, y);
            auto desc = out.descriptor(x, y);
            int j = 0;
            for (int dy = -r; dy <= r; ++dy) {
                const int qy = clamp_index(y + dy, 0, h - 1);
                const std::uint8_t* row = img.row(qy);
                for (int dx = -r; dx <= r; ++dx, ++j) {
                    const int qx = clamp_index(x + dx, 0, w - 1);
                    if (row[qx] < center)
                        desc[j / 64] |= std::uint64_t{1} << (j % 64);
                }
            }
        }
    });
    return out;
}

CostVolume build_cost_volume(const CensusImage& left, const CensusImage& right, int d_max, Exec exec)
{
    if (left.width() != right.width() || left.height() != right.height() || left.window() != right.window())
        throw Error("build_cost_volume: dimension mismatch between left and right census images");
    if (d_max < 1 || d_max >= left.width())
        throw Error("build_cost_volume: d_max must be in [1, image width)");
    const int w = left.width();
    CostVolume vol(w, left.height(), d_max + 1);
    const float scale = 1.0f / static_cast<float>(left.bits());
    parallel_for(0, left.height(), exec, [&](int y) {
        for (int x = 0; x < w; ++x) {
            auto curve = vol.curve(x, y);
            const auto l = left.descriptor(x, y);
            for (int i = 0; i <= d_max; ++i)
                curve[i] = static_cast<float>(hamming_distance(l, right.descriptor(std::max(x - i, 0), y))) * scale;
        }
    });
    return vol;
}

CostVolume derive_right_volume(const CostVolume& left)
{
    CostVolume out(left.width(), left.height(), left.levels());
    const int last = left.width() - 1;
    for (int y = 0; y < left.height(); ++y)
        for (int x = 0; x < left.width(); ++x)
            for (int i = 0; i < left.levels(); ++i)
                out.at(x, y, i) = left.at(std::min(x + i, last), y, i);
    return out;
}

CostVolume derive_left_volume(const CostVolume& right)
{
    CostVolume out(right.width(), right.height(), right.levels());
    for (int y = 0; y < right.height(); ++y)
        for (int x = 0; x < right.width(); ++x)
            for (int i = 0; i < right.levels(); ++i)
                out.at(x, y, i) = right.at(std::max(x - i, 0), y, i);
    return out;
}

SelfCostVolume build_self_volume(const CensusImage& census, int d_max, Exec exec)
{
    if (d_max < 1)
        throw Error("build_self_volume: d_max must be >= 1");
    const int w = census.width();
    SelfCostVolume out{CostVolume(w, census.height(), 2 * d_max + 1), d_max};
    const float scale = 1.0f / static_cast<float>(census.bits());
    parallel_for(0, census.height(), exec, [&](int y) {
        for (int x = 0; x < w; ++x) {
            const auto p = census.descriptor(x, y);
            auto curve = out.costs.curve(x, y);
            for (int off = -d_max; off <= d_max; ++off) {
                const int qx = clamp_index(x - off, 0, w - 1);
                curve[off + d_max] = static_cast<float>(hamming_distance(p, census.descriptor(qx, y))) * scale;
            }
        }
    });
    return out;
}

SelfCostVolume build_self_volume(const GrayImage& img, int d_max, int window, Exec exec)
{
    return build_self_volume(census_transform(img, window, exec), d_max, exec);
}

IngestMode parse_ingest_mode(const std::string& name)
{
    if (name == "costs")
        return IngestMode::costs;
    if (name == "probabilities")
        return IngestMode::probabilities;
    throw Error("unknown ingest mode '" + name + "'");
}

void min_max_normalize(CostVolume& vol)
{
    if (vol.empty())
        return;
    const auto [lo, hi] = std::minmax_element(vol.data().begin(), vol.data().end());
    const double mn = *lo;
    const double range = static_cast<double>(*hi) - mn;
    for (auto& c : vol.data())
        c = range > 0.0 ? static_cast<float>((c - mn) / range) : 0.0f;
}

void normalize_if_out_of_range(CostVolume& vol)
{
    const bool outside = std::any_of(vol.data().begin(), vol.data().end(), [](float c) { return c < 0.0f || c > 1.0f; });
    if (outside)
        min_max_normalize(vol);
}

namespace {

constexpr char kMagic[8] = {'S', 'T', 'C', 'V', 'O', 'L', '0', '1'};

std::uint32_t read_u32_le(const unsigned char* p)
{
    return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
}

void put_u32_le(std::string& out, std::uint32_t v)
{
    for (int k = 0; k < 4; ++k)
        out.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

} // namespace

CostVolume read_stcvol(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open '" + path.string() + "'");
    unsigned char header[20];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (in.gcount() != sizeof(header) || std::memcmp(header, kMagic, 8) != 0)
        throw Error("bad magic: '" + path.string() + "' is not an STCVOL file");
    const std::uint32_t h = read_u32_le(header + 8);
    const std::uint32_t w = read_u32_le(header + 12);
    const std::uint32_t d = read_u32_le(header + 16);
    if (h == 0 || w == 0 || d == 0 || h > (1u << 20) || w > (1u << 20) || d > (1u << 16))
        throw Error("STCVOL: invalid header dimensions");
    const std::uint64_t count = std::uint64_t{h} * w * d;

    in.seekg(0, std::ios::end);
    const std::uint64_t payload = static_cast<std::uint64_t>(in.tellg()) - sizeof(header);
    if (payload != count * 4)
        throw Error("STCVOL: header H*W*D does not match payload length");
    in.seekg(sizeof(header));

    CostVolume vol(static_cast<int>(w), static_cast<int>(h), static_cast<int>(d));
    std::vector<unsigned char> raw(count * 4);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::uint64_t>(in.gcount()) != count * 4)
        throw Error("STCVOL: truncated payload");
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint32_t bits = read_u32_le(raw.data() + 4 * i);
        vol.data()[i] = std::bit_cast<float>(bits);
    }
    return vol;
}

void write_stcvol(const CostVolume& vol, const std::filesystem::path& path)
{
    std::string bytes(kMagic, kMagic + 8);
    put_u32_le(bytes, static_cast<std::uint32_t>(vol.height()));
    put_u32_le(bytes, static_cast<std::uint32_t>(vol.width()));
    put_u32_le(bytes, static_cast<std::uint32_t>(vol.levels()));
    bytes.reserve(bytes.size() + vol.data().size() * 4);
    for (float c : vol.data())
        put_u32_le(bytes, std::bit_cast<std::uint32_t>(c));
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error("write failure for '" + path.string() + "'");
}

CostVolume ingest_cost_volume(const std::filesystem::path& path, IngestMode mode)
{
    CostVolume vol = read_stcvol(path);
    if (!std::all_of(vol.data().begin(), vol.data().end(), [](float c) { return std::isfinite(c); }))
        throw Error("STCVOL: non-finite values in '" + path.string() + "'");
    if (mode == IngestMode::probabilities) {
        for (auto& c : vol.data())
            c = -c;
        min_max_normalize(vol);
    } else {
        normalize_if_out_of_range(vol);
    }
    return vol;
}

} // namespace stconf
