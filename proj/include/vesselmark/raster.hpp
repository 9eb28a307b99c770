#pragma once

// Dense 2D rasters and the small value types shared by every stage.

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vesselmark {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Point {
    int x = 0;
    int y = 0;

    friend constexpr bool operator==(Point, Point) = default;
    friend constexpr auto operator<=>(Point, Point) = default;
};

// Row-major raster of T. Width and height are fixed at construction.
template <typename T>
class Raster {
public:
    using value_type = T;

    Raster() = default;

    Raster(int width, int height, T fill = T{})
        : width_(width), height_(height)
    {
        if (width < 0 || height < 0)
            throw Error("raster dimensions must be non-negative");
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    Raster(int width, int height, std::vector<T> data)
        : width_(width), height_(height), data_(std::move(data))
    {
        if (width < 0 || height < 0)
            throw Error("raster dimensions must be non-negative");
        if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            throw Error("raster data length does not match width x height");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    bool contains(int x, int y) const noexcept
    {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }
    bool contains(Point p) const noexcept { return contains(p.x, p.y); }

    T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }
    T& operator[](Point p) noexcept { return data_[index(p.x, p.y)]; }
    const T& operator[](Point p) const noexcept { return data_[index(p.x, p.y)]; }

    // Out-of-range reads return zero (zero padding).
    T at_or_zero(int x, int y) const noexcept
    {
        return contains(x, y) ? data_[index(x, y)] : T{};
    }

    std::vector<T>& data() noexcept { return data_; }
    const std::vector<T>& data() const noexcept { return data_; }

    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }
    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }

    bool same_shape(const auto& other) const noexcept
    {
        return width_ == other.width() && height_ == other.height();
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    std::size_t index(int x, int y) const noexcept
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

// Normalized scalar field. Heatmaps, attention maps and fused images live here.
using Field = Raster<double>;

// Foreground 1, background 0.
using BinaryMask = Raster<std::uint8_t>;

// A mask whose foreground is a thinned, 1-pixel-wide structure.
using Skeleton = BinaryMask;

using LabelRaster = Raster<std::uint16_t>;

// Raw intensities as stored in the file, plus the declared maximum of the
// container (255 / 65535 for PNG, maxval for PGM).
struct GrayImage {
    Raster<std::uint16_t> pixels;
    int bit_depth = 8;
    int max_value = 255;

    int width() const noexcept { return pixels.width(); }
    int height() const noexcept { return pixels.height(); }
};

enum class VesselType { Artery, Vein, Capillary };

inline constexpr VesselType kVesselTypes[] = {VesselType::Artery, VesselType::Vein, VesselType::Capillary};

inline const char* to_string(VesselType t) noexcept
{
    switch (t) {
    case VesselType::Artery: return "artery";
    case VesselType::Vein: return "vein";
    case VesselType::Capillary: return "capillary";
    }
    return "unknown";
}

inline VesselType vessel_type_from_string(const std::string& s)
{
    if (s == "artery") return VesselType::Artery;
    if (s == "vein") return VesselType::Vein;
    if (s == "capillary") return VesselType::Capillary;
    throw Error("unknown vessel type '" + s + "'");
}

// One value per vessel type, indexed by VesselType.
template <typename T>
struct PerVessel {
    std::array<T, 3> values{};

    T& operator[](VesselType t) noexcept { return values[static_cast<std::size_t>(t)]; }
    const T& operator[](VesselType t) const noexcept { return values[static_cast<std::size_t>(t)]; }

    friend bool operator==(const PerVessel&, const PerVessel&) = default;
};

enum class Family { Tortuosity, Dropout };

inline constexpr Family kFamilies[] = {Family::Tortuosity, Family::Dropout};

inline const char* to_string(Family f) noexcept
{
    return f == Family::Tortuosity ? "tortuosity" : "dropout";
}

template <typename T>
inline std::size_t count_nonzero(const Raster<T>& r)
{
    std::size_t n = 0;
    for (const auto& v : r)
        n += (v != T{}) ? 1 : 0;
    return n;
}

template <typename T>
inline double total(const Raster<T>& r)
{
    double s = 0.0;
    for (const auto& v : r)
        s += static_cast<double>(v);
    return s;
}

// 8-neighbourhood, clockwise from east with y pointing down.
inline constexpr Point kNeighbors8[8] = {
    {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1},
};

} // namespace vesselmark
