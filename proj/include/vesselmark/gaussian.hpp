#pragma once

// Separable Gaussian smoothing with a 3-sigma truncated, unit-sum kernel and
// zero padding, plus the multi-scale driver shared by both heatmap families.

#include "raster.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace vesselmark {

inline constexpr double kMinSigma = 0.5;
inline constexpr double kTruncationSigmas = 3.0;

inline int gaussian_radius(double sigma)
{
    return static_cast<int>(std::ceil(kTruncationSigmas * sigma));
}

// Sampled 1D Gaussian on [-R, R], R = ceil(3 sigma), renormalized to unit
// sum. The outer product of two of these is the truncated 2D kernel.
inline std::vector<double> gaussian_kernel_1d(double sigma)
{
    if (!(sigma >= kMinSigma))
        throw Error("gaussian sigma " + std::to_string(sigma) + " is below raster resolution (0.5 px)");
    const int radius = gaussian_radius(sigma);
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    const double denom = 2.0 * sigma * sigma;
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-(i * i) / denom);
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : k)
        v /= sum;
    return k;
}

// Zero-padded separable convolution.
inline Field gaussian_blur(const Field& in, double sigma)
{
    const auto kernel = gaussian_kernel_1d(sigma);
    const int radius = static_cast<int>(kernel.size() / 2);
    const int w = in.width();
    const int h = in.height();

    Field rows(w, h);
    for (int y = 0; y < h; ++y) {
        const double* src = in.data().data() + static_cast<std::size_t>(y) * w;
        double* dst = rows.data().data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            const int lo = std::max(-radius, -x);
            const int hi = std::min(radius, w - 1 - x);
            double acc = 0.0;
            for (int j = lo; j <= hi; ++j)
                acc += kernel[static_cast<std::size_t>(j + radius)] * src[x + j];
            dst[x] = acc;
        }
    }

    Field out(w, h);
    for (int y = 0; y < h; ++y) {
        double* dst = out.data().data() + static_cast<std::size_t>(y) * w;
        const int lo = std::max(-radius, -y);
        const int hi = std::min(radius, h - 1 - y);
        for (int j = lo; j <= hi; ++j) {
            const double kv = kernel[static_cast<std::size_t>(j + radius)];
            const double* src = rows.data().data() + static_cast<std::size_t>(y + j) * w;
            for (int x = 0; x < w; ++x)
                dst[x] += kv * src[x];
        }
    }
    return out;
}

// sigma = f * max(H, W)
inline double scale_sigma(double factor, int width, int height)
{
    return factor * static_cast<double>(std::max(width, height));
}

inline const std::vector<double>& default_scale_factors()
{
    static const std::vector<double> factors{0.02, 0.04, 0.06, 0.08};
    return factors;
}

struct HeatmapSet {
    VesselType vessel = VesselType::Artery;
    Family family = Family::Tortuosity;
    std::vector<double> factors;
    std::vector<double> sigmas;
    std::vector<Field> maps;
    int largest_dimension = 0;
};

inline HeatmapSet gaussian_multiscale(const Field& impulse, std::span<const double> factors,
                                      VesselType vessel = VesselType::Artery,
                                      Family family = Family::Tortuosity)
{
    HeatmapSet set;
    set.vessel = vessel;
    set.family = family;
    set.largest_dimension = std::max(impulse.width(), impulse.height());
    for (double f : factors) {
        if (!(f > 0.0))
            throw Error("scale factors must be positive");
        const double sigma = scale_sigma(f, impulse.width(), impulse.height());
        set.factors.push_back(f);
        set.sigmas.push_back(sigma);
        set.maps.push_back(gaussian_blur(impulse, sigma));
    }
    return set;
}

// Percentile (0..100) with linear interpolation between order statistics,
// h = (n - 1) * p / 100.
inline double percentile(std::vector<double> values, double pct)
{
    if (values.empty())
        throw Error("percentile of an empty sample");
    if (pct < 0.0 || pct > 100.0)
        throw Error("percentile must lie in [0, 100]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * pct / 100.0;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

} // namespace vesselmark
