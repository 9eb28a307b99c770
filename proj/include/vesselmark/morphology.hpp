#pragma once

// Binarization, small-component removal and thinning of vessel masks.
// Connectivity is 8 for foreground everywhere in this file.

#include "raster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace vesselmark {

inline constexpr int kOtsuBins = 256;

struct OtsuResult {
    double threshold = 0.0;
    // Zero-variance input: threshold is the constant value and the mask is empty.
    bool degenerate = false;
};

// Histogram bin of a normalized value; bins are centred on k/255.
inline int otsu_bin(double v) noexcept
{
    const long b = std::lround(std::clamp(v, 0.0, 1.0) * (kOtsuBins - 1));
    return static_cast<int>(b);
}

inline std::array<double, kOtsuBins> intensity_histogram(const Field& raster)
{
    std::array<double, kOtsuBins> hist{};
    for (double v : raster)
        hist[static_cast<std::size_t>(otsu_bin(v))] += 1.0;
    return hist;
}

// Threshold maximizing between-class variance over a 256-bin histogram of a
// normalized raster. Pixels with v > threshold are foreground. Among
// candidates whose variance is within 1e-12 (relative) of the maximum the
// lowest bin wins.
inline OtsuResult otsu_threshold(const Field& raster)
{
    if (raster.empty())
        throw Error("otsu_threshold: empty raster");

    const auto [lo, hi] = std::minmax_element(raster.begin(), raster.end());
    if (*lo == *hi)
        return {*lo, true};

    const auto hist = intensity_histogram(raster);
    const double n = static_cast<double>(raster.size());

    double total_sum = 0.0;
    for (int k = 0; k < kOtsuBins; ++k)
        total_sum += k * hist[static_cast<std::size_t>(k)];

    std::array<double, kOtsuBins - 1> between{};
    double w0 = 0.0, sum0 = 0.0;
    for (int k = 0; k < kOtsuBins - 1; ++k) {
        w0 += hist[static_cast<std::size_t>(k)];
        sum0 += k * hist[static_cast<std::size_t>(k)];
        const double w1 = n - w0;
        if (w0 == 0.0 || w1 == 0.0)
            continue;
        const double mu0 = sum0 / w0;
        const double mu1 = (total_sum - sum0) / w1;
        between[static_cast<std::size_t>(k)] = (w0 / n) * (w1 / n) * (mu0 - mu1) * (mu0 - mu1);
    }

    const double best = *std::max_element(between.begin(), between.end());
    int chosen = 0;
    for (int k = 0; k < kOtsuBins - 1; ++k) {
        if (between[static_cast<std::size_t>(k)] >= best * (1.0 - 1e-12)) {
            chosen = k;
            break;
        }
    }
    // Upper edge of the chosen bin, so that v > t matches bin(v) > k.
    return {(chosen + 0.5) / (kOtsuBins - 1), false};
}

inline BinaryMask binarize(const Field& raster, double threshold)
{
    BinaryMask mask(raster.width(), raster.height());
    std::transform(raster.begin(), raster.end(), mask.begin(),
                   [threshold](double v) { return static_cast<std::uint8_t>(v > threshold ? 1 : 0); });
    return mask;
}

// True when every pixel is exactly 0 or 1.
inline bool is_binary(const Field& raster)
{
    return std::all_of(raster.begin(), raster.end(), [](double v) { return v == 0.0 || v == 1.0; });
}

inline BinaryMask to_mask(const Field& binary_raster)
{
    return binarize(binary_raster, 0.5);
}

struct ComponentLabels {
    Raster<int> labels; // 0 background, 1..count foreground components
    std::vector<std::size_t> sizes; // sizes[i] is the size of component i+1
    int count() const noexcept { return static_cast<int>(sizes.size()); }
};

inline ComponentLabels label_components(const BinaryMask& mask)
{
    ComponentLabels out{Raster<int>(mask.width(), mask.height()), {}};
    std::vector<Point> stack;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask(x, y) == 0 || out.labels(x, y) != 0)
                continue;
            const int id = out.count() + 1;
            std::size_t size = 0;
            stack.push_back({x, y});
            out.labels(x, y) = id;
            while (!stack.empty()) {
                const Point p = stack.back();
                stack.pop_back();
                ++size;
                for (const Point d : kNeighbors8) {
                    const Point q{p.x + d.x, p.y + d.y};
                    if (mask.contains(q) && mask[q] != 0 && out.labels[q] == 0) {
                        out.labels[q] = id;
                        stack.push_back(q);
                    }
                }
            }
            out.sizes.push_back(size);
        }
    }
    return out;
}

inline int count_components(const BinaryMask& mask)
{
    return label_components(mask).count();
}

// Zeroes every 8-connected component with fewer than min_size pixels.
inline BinaryMask remove_small_components(const BinaryMask& mask, std::size_t min_size = 5)
{
    const auto comps = label_components(mask);
    BinaryMask out(mask.width(), mask.height());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const int id = comps.labels.data()[i];
        if (id != 0 && comps.sizes[static_cast<std::size_t>(id - 1)] >= min_size)
            out.data()[i] = 1;
    }
    return out;
}

namespace detail {

// Neighbours in Yokoi order: E, NE, N, NW, W, SW, S, SE (y down).
inline std::array<int, 8> yokoi_ring(const BinaryMask& m, int x, int y)
{
    return {m.at_or_zero(x + 1, y), m.at_or_zero(x + 1, y - 1), m.at_or_zero(x, y - 1),
            m.at_or_zero(x - 1, y - 1), m.at_or_zero(x - 1, y), m.at_or_zero(x - 1, y + 1),
            m.at_or_zero(x, y + 1), m.at_or_zero(x + 1, y + 1)};
}

} // namespace detail

inline int neighbor_count(const BinaryMask& m, int x, int y)
{
    int n = 0;
    for (const Point d : kNeighbors8)
        n += m.at_or_zero(x + d.x, y + d.y) != 0 ? 1 : 0;
    return n;
}

// Yokoi 8-connectivity number. A foreground pixel is simple (deletable
// without changing topology) iff this equals 1.
inline int connectivity_number8(const BinaryMask& m, int x, int y)
{
    const auto ring = detail::yokoi_ring(m, x, y);
    int c = 0;
    for (int k = 0; k < 8; k += 2) {
        const int a = 1 - (ring[static_cast<std::size_t>(k)] != 0);
        const int b = 1 - (ring[static_cast<std::size_t>((k + 1) % 8)] != 0);
        const int d = 1 - (ring[static_cast<std::size_t>((k + 2) % 8)] != 0);
        c += a - a * b * d;
    }
    return c;
}

inline bool is_simple(const BinaryMask& m, int x, int y)
{
    return connectivity_number8(m, x, y) == 1;
}

// Topology-preserving thinning. Each pass peels one border layer from the
// north, south, east and west in turn; a candidate is removed only if it is
// still simple and not an endpoint when visited. Stops when a full pass
// removes nothing, so the output contains no simple non-endpoint pixel.
inline Skeleton skeletonize(const BinaryMask& mask)
{
    Skeleton img(mask.width(), mask.height());
    std::transform(mask.begin(), mask.end(), img.begin(),
                   [](std::uint8_t v) { return static_cast<std::uint8_t>(v != 0); });

    constexpr Point directions[4] = {{0, -1}, {0, 1}, {1, 0}, {-1, 0}};
    std::vector<Point> candidates;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const Point dir : directions) {
            candidates.clear();
            for (int y = 0; y < img.height(); ++y)
                for (int x = 0; x < img.width(); ++x)
                    if (img(x, y) != 0 && img.at_or_zero(x + dir.x, y + dir.y) == 0)
                        candidates.push_back({x, y});
            for (const Point p : candidates) {
                if (neighbor_count(img, p.x, p.y) < 2 || !is_simple(img, p.x, p.y))
                    continue;
                img[p] = 0;
                changed = true;
            }
        }
    }
    return img;
}

} // namespace vesselmark
