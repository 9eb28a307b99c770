#pragma once

// Bounded multiplicative attention: W = lo + A (hi - lo), R_fused = R * W.

#include "raster.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vesselmark {

struct AttentionBounds {
    double atten_min = 0.5;
    double atten_max = 1.5;

    void validate() const
    {
        if (!(atten_min > 0.0) || !(atten_min <= atten_max))
            throw Error("attention bounds must satisfy 0 < min <= max");
    }
};

inline Field attention_weights(const Field& attention, AttentionBounds bounds = {})
{
    bounds.validate();
    Field w(attention.width(), attention.height());
    const double range = bounds.atten_max - bounds.atten_min;
    for (std::size_t i = 0; i < attention.size(); ++i) {
        const double a = attention.data()[i];
        if (!(a >= 0.0 && a <= 1.0))
            throw Error("attention_weights: attention value " + std::to_string(a) + " outside [0, 1]");
        w.data()[i] = bounds.atten_min + a * range;
    }
    return w;
}

// Unclamped pointwise product; clamping happens only when quantizing for a file.
inline Field fuse(const Field& image, const Field& weights)
{
    if (!image.same_shape(weights))
        throw Error("fuse: image is " + std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                    " but weights are " + std::to_string(weights.width()) + "x" + std::to_string(weights.height()));
    Field out(image.width(), image.height());
    std::transform(image.begin(), image.end(), weights.begin(), out.begin(),
                   [](double r, double w) { return r * w; });
    return out;
}

// Bilinear resampling with pixel centres aligned (half-pixel convention) and
// edge clamping.
inline Field resample_bilinear(const Field& in, int width, int height)
{
    if (in.empty())
        throw Error("resample_bilinear: empty input");
    if (in.width() == width && in.height() == height)
        return in;
    Field out(width, height);
    const double sx = static_cast<double>(in.width()) / width;
    const double sy = static_cast<double>(in.height()) / height;
    for (int y = 0; y < height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, in.height() - 1.0);
        const int y0 = static_cast<int>(std::floor(fy));
        const int y1 = std::min(y0 + 1, in.height() - 1);
        const double ty = fy - y0;
        for (int x = 0; x < width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, in.width() - 1.0);
            const int x0 = static_cast<int>(std::floor(fx));
            const int x1 = std::min(x0 + 1, in.width() - 1);
            const double tx = fx - x0;
            const double top = in(x0, y0) * (1.0 - tx) + in(x1, y0) * tx;
            const double bottom = in(x0, y1) * (1.0 - tx) + in(x1, y1) * tx;
            out(x, y) = top * (1.0 - ty) + bottom * ty;
        }
    }
    return out;
}

} // namespace vesselmark
