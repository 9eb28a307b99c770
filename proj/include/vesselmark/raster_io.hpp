#pragma once

// Grayscale / label raster containers (PNG, binary PGM) and the mapping from
// dataset label values to per-vessel-type binary masks.

#include "raster.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace vesselmark {

enum class Container { Png, Pgm };

struct LoadOptions {
    // Channel to keep when the file has more than one. Unset rejects
    // multi-channel input.
    std::optional<int> channel;
};

namespace detail {

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error("write failed for '" + path.string() + "'");
}

inline bool is_png(const std::vector<unsigned char>& bytes)
{
    return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

inline bool is_pgm(const std::vector<unsigned char>& bytes)
{
    return bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5';
}

struct PngReadState {
    const std::vector<unsigned char>* bytes = nullptr;
    std::size_t offset = 0;
};

inline void png_read_from_buffer(png_structp png, png_bytep out, png_size_t count)
{
    auto* state = static_cast<PngReadState*>(png_get_io_ptr(png));
    if (state->offset + count > state->bytes->size())
        png_error(png, "truncated PNG stream");
    std::memcpy(out, state->bytes->data() + state->offset, count);
    state->offset += count;
}

inline void png_write_to_buffer(png_structp png, png_bytep data, png_size_t count)
{
    auto* out = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + count);
}

inline void png_flush_noop(png_structp) {}

inline void png_error_to_longjmp(png_structp png, png_const_charp message)
{
    auto* msg = static_cast<std::string*>(png_get_error_ptr(png));
    if (msg != nullptr)
        *msg = message;
    png_longjmp(png, 1);
}

inline void png_warning_ignore(png_structp, png_const_charp) {}

inline GrayImage decode_png(const std::vector<unsigned char>& bytes, const LoadOptions& options)
{
    std::string error_message;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error_message,
                                             png_error_to_longjmp, png_warning_ignore);
    if (png == nullptr)
        throw Error("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw Error("libpng initialisation failed");
    }

    PngReadState state{&bytes, 0};
    std::vector<unsigned char> raw;
    std::vector<png_bytep> rows;
    png_uint_32 width = 0, height = 0;
    int depth = 0, channels = 0;
    png_size_t rowbytes = 0;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("corrupt PNG: " + error_message);
    }

    png_set_read_fn(png, &state, png_read_from_buffer);
    png_read_info(png, info);

    int color_type = 0;
    png_get_IHDR(png, info, &width, &height, &depth, &color_type, nullptr, nullptr, nullptr);
    if (color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);

    depth = png_get_bit_depth(png, info);
    channels = png_get_channels(png, info);
    rowbytes = png_get_rowbytes(png, info);
    raw.resize(rowbytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y)
        rows[y] = raw.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    int channel = 0;
    if (channels > 1) {
        if (!options.channel)
            throw Error("multi-channel PNG (" + std::to_string(channels) +
                        " channels) requires a configured channel selection");
        channel = *options.channel;
        if (channel < 0 || channel >= channels)
            throw Error("selected channel " + std::to_string(channel) + " out of range");
    }

    GrayImage image;
    image.bit_depth = depth == 16 ? 16 : 8;
    image.max_value = depth == 16 ? 65535 : 255;
    image.pixels = Raster<std::uint16_t>(static_cast<int>(width), static_cast<int>(height));
    const int bytes_per_sample = depth == 16 ? 2 : 1;
    for (png_uint_32 y = 0; y < height; ++y) {
        const unsigned char* row = raw.data() + y * rowbytes;
        for (png_uint_32 x = 0; x < width; ++x) {
            const unsigned char* s = row + (static_cast<std::size_t>(x) * channels + channel) * bytes_per_sample;
            std::uint16_t v = bytes_per_sample == 2 ? static_cast<std::uint16_t>((s[0] << 8) | s[1]) : s[0];
            image.pixels(static_cast<int>(x), static_cast<int>(y)) = v;
        }
    }
    return image;
}

inline std::vector<unsigned char> encode_png(const GrayImage& image)
{
    if (image.bit_depth != 8 && image.bit_depth != 16)
        throw Error("PNG output supports 8- or 16-bit depth only");
    if (image.width() == 0 || image.height() == 0)
        throw Error("cannot encode an empty raster");

    std::string error_message;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error_message,
                                              png_error_to_longjmp, png_warning_ignore);
    if (png == nullptr)
        throw Error("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_write_struct(&png, nullptr);
        throw Error("libpng initialisation failed");
    }

    std::vector<unsigned char> out;
    const int bytes_per_sample = image.bit_depth / 8;
    const std::size_t rowbytes = static_cast<std::size_t>(image.width()) * bytes_per_sample;
    std::vector<unsigned char> raw(rowbytes * static_cast<std::size_t>(image.height()));
    for (int y = 0; y < image.height(); ++y) {
        unsigned char* row = raw.data() + static_cast<std::size_t>(y) * rowbytes;
        for (int x = 0; x < image.width(); ++x) {
            const std::uint16_t v = image.pixels(x, y);
            if (bytes_per_sample == 2) {
                row[2 * x] = static_cast<unsigned char>(v >> 8);
                row[2 * x + 1] = static_cast<unsigned char>(v & 0xff);
            } else {
                row[x] = static_cast<unsigned char>(std::min<std::uint16_t>(v, 255));
            }
        }
    }
    std::vector<png_bytep> rows(static_cast<std::size_t>(image.height()));
    for (int y = 0; y < image.height(); ++y)
        rows[static_cast<std::size_t>(y)] = raw.data() + static_cast<std::size_t>(y) * rowbytes;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("PNG encoding failed: " + error_message);
    }
    png_set_write_fn(png, &out, png_write_to_buffer, png_flush_noop);
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()), static_cast<png_uint_32>(image.height()),
                 image.bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

inline GrayImage decode_pgm(const std::vector<unsigned char>& bytes)
{
    std::size_t pos = 2;
    auto next_token = [&]() -> long {
        for (;;) {
            while (pos < bytes.size() && std::isspace(bytes[pos]))
                ++pos;
            if (pos < bytes.size() && bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n')
                    ++pos;
                continue;
            }
            break;
        }
        if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
            throw Error("corrupt PGM header");
        long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1'000'000'000)
                throw Error("corrupt PGM header");
            ++pos;
        }
        return v;
    };
    const long width = next_token();
    const long height = next_token();
    const long maxval = next_token();
    if (maxval <= 0 || maxval > 65535)
        throw Error("PGM maxval out of range");
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw Error("corrupt PGM header");
    ++pos; // single whitespace before the raster

    const int bytes_per_sample = maxval > 255 ? 2 : 1;
    const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * bytes_per_sample;
    if (bytes.size() - pos < need)
        throw Error("truncated PGM raster");

    GrayImage image;
    image.bit_depth = bytes_per_sample == 2 ? 16 : 8;
    image.max_value = static_cast<int>(maxval);
    image.pixels = Raster<std::uint16_t>(static_cast<int>(width), static_cast<int>(height));
    for (auto& v : image.pixels) {
        v = bytes_per_sample == 2 ? static_cast<std::uint16_t>((bytes[pos] << 8) | bytes[pos + 1]) : bytes[pos];
        pos += bytes_per_sample;
    }
    return image;
}

inline std::vector<unsigned char> encode_pgm(const GrayImage& image)
{
    std::ostringstream header;
    header << "P5\n" << image.width() << ' ' << image.height() << '\n' << image.max_value << '\n';
    const std::string h = header.str();
    std::vector<unsigned char> out(h.begin(), h.end());
    const bool wide = image.max_value > 255;
    out.reserve(out.size() + image.pixels.size() * (wide ? 2 : 1));
    for (std::uint16_t v : image.pixels) {
        if (wide) {
            out.push_back(static_cast<unsigned char>(v >> 8));
            out.push_back(static_cast<unsigned char>(v & 0xff));
        } else {
            out.push_back(static_cast<unsigned char>(v));
        }
    }
    return out;
}

} // namespace detail

inline GrayImage decode_gray(const std::vector<unsigned char>& bytes, const LoadOptions& options = {})
{
    if (detail::is_png(bytes))
        return detail::decode_png(bytes, options);
    if (detail::is_pgm(bytes))
        return detail::decode_pgm(bytes);
    throw Error("unsupported container");
}

// Loads raw intensities; no normalization is applied.
inline GrayImage load_gray(const std::filesystem::path& path, const LoadOptions& options = {})
{
    if (!std::filesystem::exists(path))
        throw Error("missing file '" + path.string() + "'");
    try {
        return decode_gray(detail::read_file_bytes(path), options);
    } catch (const Error& e) {
        throw Error(std::string(e.what()) + " ('" + path.string() + "')");
    }
}

inline Container container_for(const std::filesystem::path& path)
{
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png")
        return Container::Png;
    if (ext == ".pgm" || ext == ".pnm")
        return Container::Pgm;
    throw Error("unsupported container for '" + path.string() + "'");
}

inline std::vector<unsigned char> encode_gray(const GrayImage& image, Container container)
{
    return container == Container::Png ? detail::encode_png(image) : detail::encode_pgm(image);
}

inline void save_gray(const std::filesystem::path& path, const GrayImage& image)
{
    detail::write_file_bytes(path, encode_gray(image, container_for(path)));
}

inline LabelRaster load_labels(const std::filesystem::path& path, const LoadOptions& options = {})
{
    return load_gray(path, options).pixels;
}

// Divides by the declared container maximum.
inline Field normalize(const GrayImage& image)
{
    if (image.pixels.empty())
        throw Error("cannot normalize an empty raster");
    Field out(image.width(), image.height());
    const double scale = 1.0 / static_cast<double>(image.max_value);
    std::transform(image.pixels.begin(), image.pixels.end(), out.begin(),
                   [scale](std::uint16_t v) { return std::min(1.0, v * scale); });
    return out;
}

// Values are clamped to [0,1] before rounding to the container's integer range.
inline GrayImage quantize(const Field& field, int bit_depth)
{
    if (bit_depth != 8 && bit_depth != 16)
        throw Error("bit depth must be 8 or 16");
    GrayImage image;
    image.bit_depth = bit_depth;
    image.max_value = bit_depth == 16 ? 65535 : 255;
    image.pixels = Raster<std::uint16_t>(field.width(), field.height());
    const double maxv = image.max_value;
    std::transform(field.begin(), field.end(), image.pixels.begin(), [maxv](double v) {
        const double c = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
        return static_cast<std::uint16_t>(std::lround(c * maxv));
    });
    return image;
}

// Label values assigned to each vessel type. Values in `ignored` (for example
// the FAZ label) are accepted but routed to no vessel type.
struct LabelMapping {
    PerVessel<std::set<std::uint16_t>> vessels;
    std::set<std::uint16_t> ignored;

    void validate() const
    {
        std::set<std::uint16_t> seen;
        auto claim = [&seen](std::uint16_t v, const std::string& owner) {
            if (v == 0)
                throw Error("label value 0 is reserved for background (" + owner + ")");
            if (!seen.insert(v).second)
                throw Error("label value " + std::to_string(v) + " is mapped more than once (" + owner + ")");
        };
        for (VesselType t : kVesselTypes) {
            if (vessels[t].empty())
                throw Error(std::string("label mapping has no values for ") + to_string(t));
            for (auto v : vessels[t])
                claim(v, to_string(t));
        }
        for (auto v : ignored)
            claim(v, "ignored");
    }
};

enum class UnmappedPolicy { Error, Warn };

struct SplitResult {
    PerVessel<BinaryMask> masks;
    std::vector<std::string> warnings;
};

inline SplitResult split_labels(const LabelRaster& labels, const LabelMapping& mapping,
                                UnmappedPolicy policy = UnmappedPolicy::Error)
{
    mapping.validate();

    std::map<std::uint16_t, int> route; // -1 ignored, else vessel index
    for (VesselType t : kVesselTypes)
        for (auto v : mapping.vessels[t])
            route[v] = static_cast<int>(t);
    for (auto v : mapping.ignored)
        route[v] = -1;

    SplitResult result;
    for (VesselType t : kVesselTypes)
        result.masks[t] = BinaryMask(labels.width(), labels.height());

    std::set<std::uint16_t> unmapped;
    for (int y = 0; y < labels.height(); ++y) {
        for (int x = 0; x < labels.width(); ++x) {
            const std::uint16_t v = labels(x, y);
            if (v == 0)
                continue;
            auto it = route.find(v);
            if (it == route.end()) {
                unmapped.insert(v);
                continue;
            }
            if (it->second >= 0)
                result.masks[static_cast<VesselType>(it->second)](x, y) = 1;
        }
    }

    if (!unmapped.empty()) {
        std::string list;
        for (auto v : unmapped)
            list += (list.empty() ? "" : ",") + std::to_string(v);
        const std::string message = "label values {" + list + "} are not in the label mapping";
        if (policy == UnmappedPolicy::Error)
            throw Error(message);
        result.warnings.push_back(message);
    }
    return result;
}

} // namespace vesselmark
