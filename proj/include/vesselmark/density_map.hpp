#pragma once

// Local vessel density by disk counting, sparsity, thresholded sparsity
// impulses and 99th-percentile normalization of blurred dropout maps.

#include "gaussian.hpp"
#include "raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace vesselmark {

// Half-width of the disk row at vertical offset dy: largest dx with
// dx^2 + dy^2 <= r^2.
inline int disk_half_width(int r, int dy)
{
    int hw = static_cast<int>(std::floor(std::sqrt(static_cast<double>(r) * r - static_cast<double>(dy) * dy)));
    while ((hw + 1) * (hw + 1) + dy * dy <= r * r)
        ++hw;
    while (hw > 0 && hw * hw + dy * dy > r * r)
        --hw;
    return hw;
}

// Pixel count of the discrete disk of radius r.
inline std::size_t disk_area(int r)
{
    std::size_t n = 0;
    for (int dy = -r; dy <= r; ++dy)
        n += static_cast<std::size_t>(2 * disk_half_width(r, dy) + 1);
    return n;
}

struct DensityField {
    Raster<int> counts; // foreground pixels within distance r
    int radius = 0;

    int max() const { return counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end()); }
};

// D(x,y) = #{p in mask : |p - (x,y)| <= r}, zero padded. Computed with
// row prefix sums, one disk row at a time.
inline DensityField local_density(const BinaryMask& mask, int r = 10)
{
    if (r < 1)
        throw Error("local_density: radius must be at least 1");
    const int w = mask.width();
    const int h = mask.height();

    // prefix(x + 1, y) = number of foreground pixels in row y with column <= x
    Raster<int> prefix(w + 1, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            prefix(x + 1, y) = prefix(x, y) + (mask(x, y) != 0 ? 1 : 0);

    std::vector<int> half(static_cast<std::size_t>(2 * r + 1));
    for (int dy = -r; dy <= r; ++dy)
        half[static_cast<std::size_t>(dy + r)] = disk_half_width(r, dy);

    DensityField out{Raster<int>(w, h), r};
    for (int y = 0; y < h; ++y) {
        for (int dy = -r; dy <= r; ++dy) {
            const int yy = y + dy;
            if (yy < 0 || yy >= h)
                continue;
            const int hw = half[static_cast<std::size_t>(dy + r)];
            for (int x = 0; x < w; ++x) {
                const int lo = std::max(0, x - hw);
                const int hi = std::min(w - 1, x + hw);
                out.counts(x, y) += prefix(hi + 1, yy) - prefix(lo, yy);
            }
        }
    }
    return out;
}

struct SparsityField {
    Field sparsity;           // 1 - D / max(D)
    bool degenerate = false;  // max(D) == 0, sparsity is 1 everywhere
};

inline SparsityField sparsity(const DensityField& density)
{
    const int peak = density.max();
    SparsityField out{Field(density.counts.width(), density.counts.height(), 1.0), peak == 0};
    if (peak == 0)
        return out;
    const double inv = 1.0 / static_cast<double>(peak);
    std::transform(density.counts.begin(), density.counts.end(), out.sparsity.begin(),
                   [inv](int d) { return 1.0 - d * inv; });
    return out;
}

// I = S where the support mask is set and S >= threshold, else 0.
inline Field sparsity_impulse(const BinaryMask& support, const Field& sparsity_map, double threshold)
{
    if (!support.same_shape(sparsity_map))
        throw Error("sparsity_impulse: mask and sparsity map differ in size");
    if (threshold < 0.0 || threshold > 1.0)
        throw Error("sparsity_impulse: threshold must lie in [0, 1]");
    Field impulse(support.width(), support.height());
    for (std::size_t i = 0; i < impulse.size(); ++i) {
        const double s = sparsity_map.data()[i];
        if (support.data()[i] != 0 && s >= threshold)
            impulse.data()[i] = s;
    }
    return impulse;
}

inline HeatmapSet dropout_multiscale(const Field& impulse, std::span<const double> factors,
                                     VesselType vessel = VesselType::Artery)
{
    return gaussian_multiscale(impulse, factors, vessel, Family::Dropout);
}

struct P99Result {
    Field map;
    double p99 = 0.0;
    bool degenerate = false; // p99 == 0, output all zero
};

// Divides by the 99th percentile over all pixels (zeros included) and clamps
// to [0, 1].
inline P99Result normalize_p99(const Field& map)
{
    if (std::any_of(map.begin(), map.end(), [](double v) { return v < 0.0; }))
        throw Error("normalize_p99: map must be non-negative");
    P99Result out{Field(map.width(), map.height()), 0.0, false};
    if (map.empty()) {
        out.degenerate = true;
        return out;
    }
    out.p99 = percentile(map.data(), 99.0);
    if (out.p99 <= 0.0) {
        out.degenerate = true;
        return out;
    }
    std::transform(map.begin(), map.end(), out.map.begin(),
                   [p = out.p99](double v) { return std::min(1.0, v / p); });
    return out;
}

} // namespace vesselmark
