#include "stconf/dataio.hpp"

#include <nlohmann/json.hpp>
#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

namespace stconf {

std::size_t GroundTruth::valid_count() const
{
    std::size_t n = 0;
    for (auto v : valid.data())
        n += v ? 1 : 0;
    return n;
}

GtEncoding parse_gt_encoding(const std::string& name)
{
    if (name == "pfm")
        return GtEncoding::pfm;
    if (name == "kitti-png16")
        return GtEncoding::kitti_png16;
    throw Error("unknown ground-truth encoding '" + name + "'");
}

std::string to_string(GtEncoding e)
{
    return e == GtEncoding::pfm ? "pfm" : "kitti-png16";
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open '" + path.string() + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

bool has_png_signature(const std::vector<unsigned char>& bytes)
{
    return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

// Raw decoded PNG: interleaved samples, 1..4 channels, 8 or 16 bit.
struct PngRaster {
    int width = 0;
    int height = 0;
    int channels = 0;
    int bit_depth = 0;
    bool has_color = false;
    bool has_alpha = false;
    std::vector<std::uint16_t> samples;
};

struct PngReadSource {
    const std::vector<unsigned char>* bytes;
    std::size_t offset;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t count)
{
    auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
    if (src->offset + count > src->bytes->size())
        png_error(png, "truncated PNG");
    std::memcpy(out, src->bytes->data() + src->offset, count);
    src->offset += count;
}

PngRaster decode_png(const std::vector<unsigned char>& bytes)
{
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        throw Error("png: out of memory");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw Error("png: out of memory");
    }
    PngRaster out;
    std::vector<png_bytep> rows;
    std::vector<unsigned char> buffer;
    PngReadSource src{&bytes, 0};

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("unsupported format: corrupt PNG");
    }
    png_set_read_fn(png, &src, png_read_from_memory);
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int color_type = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    if (color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png);
    if (depth == 16 && std::endian::native == std::endian::little)
        png_set_swap(png);
    png_read_update_info(png, info);

    depth = png_get_bit_depth(png, info);
    out.width = static_cast<int>(w);
    out.height = static_cast<int>(h);
    out.channels = png_get_channels(png, info);
    out.bit_depth = depth;
    const int final_type = png_get_color_type(png, info);
    out.has_color = (final_type & PNG_COLOR_MASK_COLOR) != 0;
    out.has_alpha = (final_type & PNG_COLOR_MASK_ALPHA) != 0;

    const std::size_t rowbytes = png_get_rowbytes(png, info);
    buffer.resize(rowbytes * h);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = buffer.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    const std::size_t count = static_cast<std::size_t>(w) * h * out.channels;
    out.samples.resize(count);
    if (depth == 16) {
        for (std::size_t i = 0; i < count; ++i) {
            std::uint16_t v;
            std::memcpy(&v, buffer.data() + 2 * i, 2);
            out.samples[i] = v;
        }
    } else {
        for (std::size_t i = 0; i < count; ++i)
            out.samples[i] = buffer[i];
    }
    return out;
}

void encode_png(const std::filesystem::path& path, int width, int height, int bit_depth,
                const std::vector<std::uint16_t>& samples)
{
    std::FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (!fp)
        throw Error("cannot write '" + path.string() + "'");
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> guard(fp, &std::fclose);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error("png: out of memory");
    }
    const int bytes_per_sample = bit_depth / 8;
    std::vector<unsigned char> buffer(static_cast<std::size_t>(width) * height * bytes_per_sample);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (bit_depth == 16) {
            buffer[2 * i] = static_cast<unsigned char>(samples[i] >> 8);
            buffer[2 * i + 1] = static_cast<unsigned char>(samples[i] & 0xff);
        } else {
            buffer[i] = static_cast<unsigned char>(samples[i]);
        }
    }
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = buffer.data() + static_cast<std::size_t>(y) * width * bytes_per_sample;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("png: write failure for '" + path.string() + "'");
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// Skips whitespace and '#' comments in a netpbm-style header.
bool next_token(const std::vector<unsigned char>& b, std::size_t& pos, std::string& tok)
{
    while (pos < b.size()) {
        if (b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n')
                ++pos;
        } else if (std::isspace(b[pos])) {
            ++pos;
        } else {
            break;
        }
    }
    tok.clear();
    while (pos < b.size() && !std::isspace(b[pos]) && b[pos] != '#')
        tok.push_back(static_cast<char>(b[pos++]));
    return !tok.empty();
}

bool parse_positive(const std::string& tok, long long& out)
{
    if (tok.empty() || tok.size() > 10)
        return false;
    for (char c : tok)
        if (c < '0' || c > '9')
            return false;
    out = std::stoll(tok);
    return true;
}

GrayImage decode_pgm(const std::vector<unsigned char>& b)
{
    std::size_t pos = 0;
    std::string magic, ws, hs, ms;
    long long w = 0, h = 0, maxval = 0;
    if (!next_token(b, pos, magic) || magic != "P5" || !next_token(b, pos, ws) || !next_token(b, pos, hs)
        || !next_token(b, pos, ms) || !parse_positive(ws, w) || !parse_positive(hs, h)
        || !parse_positive(ms, maxval))
        throw Error("unsupported format: malformed PGM header");
    if (maxval < 1 || maxval > 255)
        throw Error("unsupported format: only 8-bit PGM is supported");
    if (w == 0 || h == 0)
        throw Error("zero-sized image");
    if (pos >= b.size())
        throw Error("unsupported format: truncated PGM");
    ++pos; // single whitespace after maxval
    const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (b.size() - pos < need)
        throw Error("unsupported format: truncated PGM payload");
    GrayImage img(static_cast<int>(w), static_cast<int>(h));
    std::memcpy(img.data().data(), b.data() + pos, need);
    return img;
}

std::uint8_t luma(std::uint16_t r, std::uint16_t g, std::uint16_t b)
{
    const double y = 0.299 * r + 0.587 * g + 0.114 * b;
    return static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error("write failure for '" + path.string() + "'");
}

} // namespace

GrayImage load_gray_image(const std::filesystem::path& path)
{
    const auto bytes = read_file(path);
    if (has_png_signature(bytes)) {
        const PngRaster png = decode_png(bytes);
        if (png.width == 0 || png.height == 0)
            throw Error("zero-sized image");
        GrayImage img(png.width, png.height);
        const int shift = png.bit_depth == 16 ? 8 : 0;
        for (std::size_t i = 0; i < img.size(); ++i) {
            const std::uint16_t* px = png.samples.data() + i * png.channels;
            if (png.has_color)
                img.data()[i] = luma(px[0] >> shift, px[1] >> shift, px[2] >> shift);
            else
                img.data()[i] = static_cast<std::uint8_t>(px[0] >> shift);
        }
        return img;
    }
    if (bytes.size() >= 2 && bytes[0] == 'P')
        return decode_pgm(bytes);
    throw Error("unsupported format: '" + path.string() + "' is neither PGM nor PNG");
}

void save_gray_image(const GrayImage& img, const std::filesystem::path& path)
{
    if (img.empty())
        throw Error("zero-sized image");
    if (path.extension() == ".pgm") {
        std::ostringstream os;
        os << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
        os.write(reinterpret_cast<const char*>(img.data().data()), static_cast<std::streamsize>(img.size()));
        write_bytes(path, os.str());
        return;
    }
    std::vector<std::uint16_t> samples(img.data().begin(), img.data().end());
    encode_png(path, img.width(), img.height(), 8, samples);
}

Image2D<std::uint16_t> load_png16(const std::filesystem::path& path)
{
    const auto bytes = read_file(path);
    if (!has_png_signature(bytes))
        throw Error("malformed header: '" + path.string() + "' is not a PNG");
    const PngRaster png = decode_png(bytes);
    if (png.channels != 1 || png.bit_depth != 16)
        throw Error("malformed header: expected 16-bit single-channel PNG");
    Image2D<std::uint16_t> out(png.width, png.height);
    out.data() = png.samples;
    return out;
}

Image2D<float> load_pfm(const std::filesystem::path& path)
{
    const auto b = read_file(path);
    std::size_t pos = 0;
    std::string magic, ws, hs, ss;
    long long w = 0, h = 0;
    if (!next_token(b, pos, magic) || magic != "Pf")
        throw Error("malformed header: expected single-channel PFM ('Pf')");
    if (!next_token(b, pos, ws) || !next_token(b, pos, hs) || !next_token(b, pos, ss) || !parse_positive(ws, w)
        || !parse_positive(hs, h))
        throw Error("malformed header: bad PFM dimensions");
    double scale = 0.0;
    try {
        scale = std::stod(ss);
    } catch (const std::exception&) {
        throw Error("malformed header: bad PFM scale");
    }
    if (scale == 0.0 || w == 0 || h == 0)
        throw Error("malformed header: bad PFM scale or size");
    if (pos >= b.size())
        throw Error("malformed header: truncated PFM");
    ++pos;
    const unsigned long long count = static_cast<unsigned long long>(w) * static_cast<unsigned long long>(h);
    if (count > (std::numeric_limits<std::size_t>::max() / 4) || b.size() - pos < count * 4)
        throw Error("dimension overflow: PFM payload shorter than header dimensions");
    const bool little = scale < 0.0;
    Image2D<float> map(static_cast<int>(w), static_cast<int>(h));
    for (long long fy = 0; fy < h; ++fy) {
        const int y = static_cast<int>(h - 1 - fy);
        for (long long x = 0; x < w; ++x) {
            unsigned char raw[4];
            std::memcpy(raw, b.data() + pos, 4);
            pos += 4;
            if (little != (std::endian::native == std::endian::little))
                std::swap(raw[0], raw[3]), std::swap(raw[1], raw[2]);
            float v;
            std::memcpy(&v, raw, 4);
            map.at(static_cast<int>(x), y) = v;
        }
    }
    return map;
}

GroundTruth load_ground_truth(const std::filesystem::path& path, GtEncoding encoding)
{
    GroundTruth gt;
    if (encoding == GtEncoding::pfm) {
        const auto raw = load_pfm(path);
        gt.disparity = RealMap(raw.width(), raw.height());
        gt.valid = Image2D<std::uint8_t>(raw.width(), raw.height());
        for (std::size_t i = 0; i < raw.size(); ++i) {
            const float v = raw.data()[i];
            const bool ok = std::isfinite(v) && v > 0.0f;
            gt.valid.data()[i] = ok ? 1 : 0;
            gt.disparity.data()[i] = ok ? v : 0.0;
        }
        return gt;
    }
    const auto raw = load_png16(path);
    gt.disparity = RealMap(raw.width(), raw.height());
    gt.valid = Image2D<std::uint8_t>(raw.width(), raw.height());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const std::uint16_t v = raw.data()[i];
        gt.valid.data()[i] = v > 0 ? 1 : 0;
        gt.disparity.data()[i] = v > 0 ? v / 256.0 : 0.0;
    }
    return gt;
}

void save_map(const Image2D<float>& map, const std::filesystem::path& path, MapEncoding encoding)
{
    if (map.empty())
        throw Error("cannot save an empty map");
    if (encoding == MapEncoding::png16_scaled) {
        std::vector<std::uint16_t> samples(map.size());
        for (std::size_t i = 0; i < map.size(); ++i) {
            const float v = map.data()[i];
            if (!std::isfinite(v))
                throw Error("png16-scaled encoding requires finite values");
            const double scaled = std::round(static_cast<double>(v) * 256.0);
            samples[i] = static_cast<std::uint16_t>(std::clamp(scaled, 0.0, 65535.0));
        }
        encode_png(path, map.width(), map.height(), 16, samples);
        return;
    }
    std::ostringstream os;
    os << "Pf\n" << map.width() << ' ' << map.height() << "\n-1.0\n";
    std::string bytes = os.str();
    const std::size_t header = bytes.size();
    bytes.resize(header + map.size() * 4);
    std::size_t pos = header;
    for (int y = map.height() - 1; y >= 0; --y) {
        for (int x = 0; x < map.width(); ++x) {
            unsigned char raw[4];
            const float v = map.at(x, y);
            std::memcpy(raw, &v, 4);
            if constexpr (std::endian::native == std::endian::big)
                std::swap(raw[0], raw[3]), std::swap(raw[1], raw[2]);
            std::memcpy(bytes.data() + pos, raw, 4);
            pos += 4;
        }
    }
    write_bytes(path, bytes);
}

void save_map(const RealMap& map, const std::filesystem::path& path, MapEncoding encoding)
{
    Image2D<float> f(map.width(), map.height());
    for (std::size_t i = 0; i < map.size(); ++i)
        f.data()[i] = static_cast<float>(map.data()[i]);
    save_map(f, path, encoding);
}

DatasetManifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("manifest: invalid JSON: ") + e.what());
    }
    if (!doc.is_array())
        throw Error("manifest: top level must be an array");
    auto resolve = [&](const std::string& p) {
        if (p.empty() || base_dir.empty() || std::filesystem::path(p).is_absolute())
            return p;
        return (base_dir / p).lexically_normal().string();
    };

    DatasetManifest manifest;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& obj = doc[i];
        const std::string where = "manifest entry " + std::to_string(i) + ": ";
        if (!obj.is_object())
            throw Error(where + "must be an object");
        ManifestEntry e;
        try {
            e.left = obj.at("left").get<std::string>();
            e.right = obj.at("right").get<std::string>();
            e.gt = obj.at("gt").get<std::string>();
            e.gt_encoding = parse_gt_encoding(obj.value("gt_encoding", std::string("pfm")));
            e.d_max = obj.at("d_max").get<int>();
            e.tau = obj.at("tau").get<double>();
            e.volume = obj.value("volume", std::string());
            e.volume_mode = obj.value("volume_mode", std::string("costs"));
        } catch (const nlohmann::json::exception& ex) {
            throw Error(where + ex.what());
        }
        if (e.left.empty() || e.right.empty() || e.gt.empty())
            throw Error(where + "paths must be non-empty");
        if (e.d_max < 1)
            throw Error(where + "d_max must be >= 1");
        if (!(e.tau > 0.0))
            throw Error(where + "tau must be > 0");
        if (e.volume_mode != "costs" && e.volume_mode != "probabilities")
            throw Error(where + "volume_mode must be 'costs' or 'probabilities'");
        e.left = resolve(e.left);
        e.right = resolve(e.right);
        e.gt = resolve(e.gt);
        e.volume = resolve(e.volume);
        manifest.entries.push_back(std::move(e));
    }
    return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path)
{
    const auto bytes = read_file(path);
    return parse_manifest(std::string(bytes.begin(), bytes.end()), path.parent_path());
}

} // namespace stconf
