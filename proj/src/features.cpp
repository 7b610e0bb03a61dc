#include "stconf/features.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace stconf {

namespace {

struct KindName {
    StackKind kind;
    const char* name;
    int channels;
};

constexpr KindName kKinds[] = {
    {StackKind::GCP, "GCP", 8},     {StackKind::ENS7, "ENS7", 7},   {StackKind::ENS23, "ENS23", 23},
    {StackKind::LEV22, "LEV22", 22}, {StackKind::LEV50, "LEV50", 50}, {StackKind::O1, "O1", 20},
    {StackKind::O2, "O2", 47},      {StackKind::FA1, "FA1", 8},     {StackKind::FA2, "FA2", 8},
    {StackKind::SGMF, "SGMF", 20},
};

const KindName& lookup(StackKind k)
{
    for (const auto& e : kKinds)
        if (e.kind == k)
            return e;
    throw Error("unknown feature stack kind");
}

struct Item {
    MeasureKind kind;
    int window; // 0 = params.window
    std::string name;
};

Item scalar(MeasureKind k) { return {k, 0, std::string(measure_info(k).id)}; }

Item windowed(MeasureKind k, int apex)
{
    const int win = apex_window(apex);
    return {k, win, std::string(measure_info(k).id) + "_" + std::to_string(win)};
}

void add_apexes(std::vector<Item>& items, MeasureKind k, std::initializer_list<int> apexes)
{
    for (int i : apexes)
        items.push_back(windowed(k, i));
}

void add_apex_range(std::vector<Item>& items, MeasureKind k, int last)
{
    for (int i = 1; i <= last; ++i)
        items.push_back(windowed(k, i));
}

// Computes items, batching measures of one family that share a window.
std::vector<FeatureChannel> gather(const MeasureInputs& in, const MeasureParams& params, const std::vector<Item>& items)
{
    std::map<std::pair<int, int>, std::vector<MeasureKind>> batches;
    for (const auto& it : items) {
        const int win = it.window ? it.window : params.window;
        batches[{static_cast<int>(measure_info(it.kind).family), win}].push_back(it.kind);
    }
    std::map<std::pair<int, int>, RealMap> results; // (kind, window)
    for (auto& [key, kinds] : batches) {
        MeasureParams p = params;
        p.window = key.second;
        std::vector<ConfidenceMap> maps;
        switch (static_cast<MeasureFamily>(key.first)) {
        case MeasureFamily::local_curve: maps = local_curve_measures(in, p, kinds); break;
        case MeasureFamily::windowed_peak: maps = windowed_peak_measures(in, p, kinds); break;
        case MeasureFamily::full_curve: maps = full_curve_measures(in, p, kinds); break;
        case MeasureFamily::left_right: maps = lr_measures(in, p, kinds); break;
        case MeasureFamily::disparity_map: maps = disparity_map_measures(in, p, kinds); break;
        case MeasureFamily::image: maps = image_measures(in, p, kinds); break;
        case MeasureFamily::self_matching: maps = self_matching_measures(in, p, kinds); break;
        case MeasureFamily::sgm: maps = sgm_measures(in, p, kinds); break;
        }
        for (auto& m : maps)
            results[{static_cast<int>(m.kind), key.second}] = std::move(m.scores);
    }
    std::vector<FeatureChannel> out;
    out.reserve(items.size());
    for (const auto& it : items) {
        const int win = it.window ? it.window : params.window;
        out.push_back({it.name, results.at({static_cast<int>(it.kind), win})});
    }
    return out;
}

std::vector<FeatureChannel> multi_scale(const MeasureInputs& in, const MeasureParams& params,
                                        const std::vector<MeasureKind>& kinds, const StereoRunner& runner, Exec exec)
{
    if (!runner)
        throw Error("multi-scale features need a stereo runner for the half and quarter levels");
    if (in.left_image.empty() || in.right_image.empty())
        throw Error("missing constituent: multi-scale features need both images");
    const ImagePyramid pl = build_pyramid(in.left_image);
    const ImagePyramid pr = build_pyramid(in.right_image);
    const char* suffix[3] = {"f", "h", "q"};
    std::vector<std::vector<FeatureChannel>> per_level(3);
    for (int level = 0; level < 3; ++level) {
        std::vector<Item> items;
        for (auto k : kinds)
            items.push_back({k, 0, std::string(measure_info(k).id) + "@" + suffix[level]});
        if (level == 0) {
            per_level[0] = gather(in, params, items);
            continue;
        }
        const GrayImage& l = pl.levels[level];
        const GrayImage& r = pr.levels[level];
        MeasureInputs sub = make_measure_inputs(runner(l, r, scaled_d_max(in.d_max(), level)), {}, {}, 9, exec);
        sub.left_image = l;
        sub.right_image = r;
        per_level[level] = gather(sub, params, items);
        for (auto& ch : per_level[level])
            ch.values = upsample_nearest(ch.values, in.width(), in.height());
    }
    // Grouped per measure: PKR@f, PKR@h, PKR@q, NEM@f, ...
    std::vector<FeatureChannel> out;
    for (std::size_t i = 0; i < kinds.size(); ++i)
        for (int level = 0; level < 3; ++level)
            out.push_back(std::move(per_level[level][i]));
    return out;
}

std::vector<FeatureChannel> sgm_forest(const MeasureInputs& in)
{
    if (!in.scanlines)
        throw Error("missing constituent: SGMF needs SGM scanline results");
    const ScanlineResult& sl = *in.scanlines;
    const int w = sl.total.width();
    const int h = sl.total.height();
    std::vector<FeatureChannel> out;
    for (std::size_t s = 0; s < kSgmPaths.size(); ++s) {
        FeatureChannel ch{std::string("d1@") + to_string(kSgmPaths[s]), RealMap(w, h)};
        for (std::size_t i = 0; i < ch.values.size(); ++i)
            ch.values.data()[i] = sl.path_wta[s].data()[i];
        out.push_back(std::move(ch));
    }
    for (std::size_t s = 0; s < kSgmPaths.size(); ++s)
        for (std::size_t z = 0; z < kSgmPaths.size(); ++z) {
            FeatureChannel ch{std::string("c@") + to_string(kSgmPaths[z]) + "(d1@" + to_string(kSgmPaths[s]) + ")",
                              RealMap(w, h)};
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    ch.values.at(x, y) = sl.paths[z].at(x, y, sl.path_wta[s].at(x, y));
            out.push_back(std::move(ch));
        }
    return out;
}

template <typename T>
void put(std::ostream& os, T v)
{
    const auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
    if constexpr (std::endian::native == std::endian::little)
        os.write(bytes.data(), bytes.size());
    else
        for (std::size_t i = sizeof(T); i-- > 0;)
            os.put(bytes[i]);
}

template <typename T>
T get(std::istream& is)
{
    std::array<char, sizeof(T)> bytes;
    if (!is.read(bytes.data(), bytes.size()))
        throw Error("truncated STFEAT file");
    if constexpr (std::endian::native != std::endian::little)
        std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
}

constexpr char kMagic[8] = {'S', 'T', 'F', 'E', 'A', 'T', '0', '1'};

} // namespace

const char* to_string(StackKind k) { return lookup(k).name; }

int stack_channel_count(StackKind k) { return lookup(k).channels; }

StackKind parse_stack_kind(const std::string& name)
{
    for (const auto& e : kKinds)
        if (name == e.name)
            return e.kind;
    throw Error("unknown feature stack kind: " + name);
}

GrayImage downsample_half(const GrayImage& img)
{
    const int w = img.width() / 2;
    const int h = img.height() / 2;
    if (w < 1 || h < 1)
        throw Error("image too small to downsample");
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int sum = img.at(2 * x, 2 * y) + img.at(2 * x + 1, 2 * y) + img.at(2 * x, 2 * y + 1)
                            + img.at(2 * x + 1, 2 * y + 1);
            out.at(x, y) = static_cast<std::uint8_t>(sum / 4);
        }
    return out;
}

ImagePyramid build_pyramid(const GrayImage& img)
{
    if (img.width() < 4 || img.height() < 4)
        throw Error("image too small for a three-level pyramid (need at least 4x4)");
    ImagePyramid p;
    p.levels[0] = img;
    p.levels[1] = downsample_half(p.levels[0]);
    p.levels[2] = downsample_half(p.levels[1]);
    return p;
}

int scaled_d_max(int d_max, int level) { return std::max(d_max >> level, 1); }

RealMap upsample_nearest(const RealMap& map, int width, int height)
{
    RealMap out(width, height);
    for (int y = 0; y < height; ++y) {
        const int sy = std::min(static_cast<int>(static_cast<long long>(y) * map.height() / height), map.height() - 1);
        for (int x = 0; x < width; ++x) {
            const int sx = std::min(static_cast<int>(static_cast<long long>(x) * map.width() / width), map.width() - 1);
            out.at(x, y) = map.at(sx, sy);
        }
    }
    return out;
}

FeatureStack assemble_stack(StackKind kind, const MeasureInputs& in, const MeasureParams& params,
                            const StereoRunner& runner, Exec exec)
{
    using K = MeasureKind;
    FeatureStack stack;
    stack.kind = to_string(kind);
    std::vector<Item> items;
    switch (kind) {
    case StackKind::GCP:
        items = {scalar(K::MSM), scalar(K::DB),  scalar(K::MMN), scalar(K::ALM),
                 scalar(K::LRC), scalar(K::LRD), scalar(K::DTD), windowed(K::MDD, 1)};
        break;
    case StackKind::ENS7: {
        stack.channels = gather(in, params, {{K::LRC, 0, "LRC@f"}});
        auto ms = multi_scale(in, params, {K::HGM, K::DMV}, runner, exec);
        std::move(ms.begin(), ms.end(), std::back_inserter(stack.channels));
        break;
    }
    case StackKind::ENS23: {
        auto head = multi_scale(in, params, {K::PKR, K::NEM, K::PER}, runner, exec);
        auto lrc = gather(in, params, {{K::LRC, 0, "LRC@f"}});
        auto tail = multi_scale(in, params, {K::HGM, K::DMV, K::DAM, K::ZSAD}, runner, exec);
        auto sge = gather(in, params, {{K::SGE, 0, "SGE@f"}});
        for (auto* part : {&head, &lrc, &tail, &sge})
            std::move(part->begin(), part->end(), std::back_inserter(stack.channels));
        break;
    }
    case StackKind::LEV22:
        for (auto k : {K::PKR, K::PKRN, K::MSM, K::MM, K::WMN, K::MLM, K::PER, K::NEM, K::LRD, K::LC})
            items.push_back(scalar(k));
        add_apex_range(items, K::VAR, 4);
        items.push_back(scalar(K::DTD));
        add_apex_range(items, K::MDD, 4);
        for (auto k : {K::LRC, K::HGM, K::DLB})
            items.push_back(scalar(k));
        break;
    case StackKind::LEV50:
        for (auto k : {K::MSM, K::PKR, K::PKRN, K::MM,  K::MMN, K::WMN, K::WMNN, K::MLM, K::PER, K::NEM,
                       K::LRD, K::LC,  K::ALM,  K::DTD, K::DTE, K::LRC, K::HGM,  K::DLB, K::DB,  K::NOI})
            items.push_back(scalar(k));
        for (auto k : {K::VAR, K::MDD, K::MND, K::SKEW, K::IVAR})
            add_apexes(items, k, {1, 3, 4, 6, 9, 14});
        break;
    case StackKind::O1:
    case StackKind::O2: {
        const int last = kind == StackKind::O1 ? 4 : 9;
        for (auto k : {K::DA, K::DS, K::MED, K::MDD, K::VAR})
            add_apex_range(items, k, last);
        if (kind == StackKind::O2) {
            items.push_back(scalar(K::DLB));
            items.push_back(scalar(K::UC));
        }
        break;
    }
    case StackKind::FA1:
        items = {scalar(K::LRC), scalar(K::DB), scalar(K::LRD)};
        add_apex_range(items, K::MDD, 3);
        items.push_back(scalar(K::MLM));
        items.push_back(scalar(K::MSM));
        break;
    case StackKind::FA2:
        items = {scalar(K::LRD), scalar(K::PKRN)};
        add_apex_range(items, K::MDD, 4);
        items.push_back(scalar(K::MLM));
        items.push_back(scalar(K::NEM));
        break;
    case StackKind::SGMF: stack.channels = sgm_forest(in); break;
    }
    if (!items.empty())
        stack.channels = gather(in, params, items);
    if (static_cast<int>(stack.channels.size()) != stack_channel_count(kind))
        throw Error(std::string("feature stack ") + stack.kind + " assembled "
                    + std::to_string(stack.channels.size()) + " channels, expected "
                    + std::to_string(stack_channel_count(kind)));
    return stack;
}

void export_stack(const FeatureStack& stack, const std::filesystem::path& path)
{
    if (stack.channels.empty())
        throw Error("cannot export an empty feature stack");
    const int w = stack.width();
    const int h = stack.height();
    for (const auto& ch : stack.channels) {
        if (!ch.values.same_shape(w, h))
            throw Error("feature channel " + ch.name + " has mismatched dimensions");
        if (ch.name.size() > 0xFFFF)
            throw Error("feature channel name too long");
    }
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw Error("cannot open " + path.string() + " for writing");
    os.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(h));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(w));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(stack.channels.size()));
    for (const auto& ch : stack.channels) {
        put<std::uint16_t>(os, static_cast<std::uint16_t>(ch.name.size()));
        os.write(ch.name.data(), static_cast<std::streamsize>(ch.name.size()));
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (const auto& ch : stack.channels)
                put<float>(os, static_cast<float>(ch.values.at(x, y)));
    if (!os)
        throw Error("write failure on " + path.string());
}

FeatureStack read_stack(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw Error("cannot open " + path.string());
    char magic[8];
    if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw Error("malformed header: not an STFEAT file");
    const auto h = get<std::uint32_t>(is);
    const auto w = get<std::uint32_t>(is);
    const auto c = get<std::uint32_t>(is);
    if (h == 0 || w == 0 || c == 0)
        throw Error("zero-sized feature stack");
    if (static_cast<unsigned long long>(h) * w * c > (1ull << 34))
        throw Error("dimension overflow");
    FeatureStack stack;
    for (std::uint32_t i = 0; i < c; ++i) {
        const auto len = get<std::uint16_t>(is);
        std::string name(len, '\0');
        if (!is.read(name.data(), len))
            throw Error("truncated STFEAT file");
        stack.channels.push_back({std::move(name), RealMap(static_cast<int>(w), static_cast<int>(h))});
    }
    for (std::uint32_t y = 0; y < h; ++y)
        for (std::uint32_t x = 0; x < w; ++x)
            for (auto& ch : stack.channels)
                ch.values.at(static_cast<int>(x), static_cast<int>(y)) = get<float>(is);
    return stack;
}

} // namespace stconf
