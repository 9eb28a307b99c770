#pragma once

// Rasterized vessel phantoms with analytically known geometry. Tests and the
// acceptance suite use these as ground truth for tortuosity and density.

#include "raster.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace vesselmark::phantom {

struct StraightLine {
    Point from;
    Point to;
};

// Arc of a circle centred at (cx, cy), from start_angle sweeping `sweep`
// radians counter-clockwise in image coordinates (y down).
struct CircularArc {
    double cx = 0.0;
    double cy = 0.0;
    double radius = 40.0;
    double start_angle = 0.0;
    double sweep = std::numbers::pi;
};

// y = y0 + amplitude * sin(2 pi (x - x0) / wavelength) for x in
// [x0, x0 + cycles * wavelength]. cycles = 0.5 is a single arch.
struct SineArch {
    double x0 = 0.0;
    double y0 = 0.0;
    double amplitude = 30.0;
    double wavelength = 240.0;
    double cycles = 0.5;
};

// Lines of `line_width` pixels every `spacing` pixels in both directions,
// the first one starting at column / row `offset`.
struct Grid {
    int spacing = 20;
    int line_width = 1;
    int offset = 0;
};

// Unit-step random walk whose heading changes by N(0, turn_sigma) radians
// per step; the heading reflects off a 2-pixel margin.
struct RandomWalkVessel {
    int steps = 200;
    double turn_sigma = 0.2;
    std::uint64_t seed = 1;
    double start_x = -1.0; // negative: raster centre
    double start_y = -1.0;
};

using Shape = std::variant<StraightLine, CircularArc, SineArch, Grid, RandomWalkVessel>;

struct PhantomSpec {
    Shape shape;
    int width = 256;
    int height = 256;
};

inline const char* kind_name(const Shape& s)
{
    struct Visitor {
        const char* operator()(const StraightLine&) const { return "straight_line"; }
        const char* operator()(const CircularArc&) const { return "circular_arc"; }
        const char* operator()(const SineArch&) const { return "sine_arch"; }
        const char* operator()(const Grid&) const { return "grid"; }
        const char* operator()(const RandomWalkVessel&) const { return "random_walk"; }
    };
    return std::visit(Visitor{}, s);
}

// Bresenham segment, both ends included.
inline std::vector<Point> line_pixels(Point a, Point b)
{
    std::vector<Point> out;
    int x = a.x, y = a.y;
    const int dx = std::abs(b.x - a.x), dy = -std::abs(b.y - a.y);
    const int sx = a.x < b.x ? 1 : -1, sy = a.y < b.y ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        out.push_back({x, y});
        if (x == b.x && y == b.y)
            break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y += sy;
        }
    }
    return out;
}

inline bool adjacent8(Point a, Point b)
{
    return a != b && std::abs(a.x - b.x) <= 1 && std::abs(a.y - b.y) <= 1;
}

// Drops pixels whose predecessor and successor are already 8-adjacent, so the
// chain has no 4-connected corners.
inline std::vector<Point> minimal_chain(std::vector<Point> chain)
{
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<Point> kept;
        kept.reserve(chain.size());
        for (std::size_t i = 0; i < chain.size(); ++i) {
            if (!kept.empty() && i + 1 < chain.size() && adjacent8(kept.back(), chain[i + 1])) {
                changed = true;
                continue;
            }
            kept.push_back(chain[i]);
        }
        chain.swap(kept);
    }
    return chain;
}

// Pixel chain through the rounded positions of a densely sampled curve.
template <typename Curve>
std::vector<Point> sample_curve(Curve&& curve, double t0, double t1, int samples)
{
    std::vector<Point> chain;
    for (int i = 0; i <= samples; ++i) {
        const double t = t0 + (t1 - t0) * i / samples;
        const auto [fx, fy] = curve(t);
        const Point p{static_cast<int>(std::lround(fx)), static_cast<int>(std::lround(fy))};
        if (chain.empty()) {
            chain.push_back(p);
        } else if (p != chain.back()) {
            if (adjacent8(chain.back(), p)) {
                chain.push_back(p);
            } else {
                auto bridge = line_pixels(chain.back(), p);
                chain.insert(chain.end(), bridge.begin() + 1, bridge.end());
            }
        }
    }
    return minimal_chain(std::move(chain));
}

struct CurvePoint {
    double x;
    double y;
};

// Ordered centreline pixels of an open-curve phantom.
inline std::vector<Point> centerline(const PhantomSpec& spec)
{
    struct Visitor {
        std::vector<Point> operator()(const StraightLine& s) const { return line_pixels(s.from, s.to); }
        std::vector<Point> operator()(const CircularArc& a) const
        {
            const int samples = std::max(64, static_cast<int>(std::ceil(a.radius * std::abs(a.sweep) * 8)));
            return sample_curve(
                [&](double t) {
                    return CurvePoint{a.cx + a.radius * std::cos(t), a.cy + a.radius * std::sin(t)};
                },
                a.start_angle, a.start_angle + a.sweep, samples);
        }
        std::vector<Point> operator()(const SineArch& s) const
        {
            const double span = s.cycles * s.wavelength;
            const double k = 2.0 * std::numbers::pi / s.wavelength;
            const double slope = std::abs(s.amplitude * k);
            const int samples = std::max(64, static_cast<int>(std::ceil(span * (1.0 + slope) * 8)));
            return sample_curve(
                [&](double t) { return CurvePoint{s.x0 + t, s.y0 + s.amplitude * std::sin(k * t)}; }, 0.0, span,
                samples);
        }
        std::vector<Point> operator()(const Grid&) const
        {
            throw Error("grid phantoms have no single centreline");
        }
        std::vector<Point> operator()(const RandomWalkVessel&) const
        {
            throw Error("random-walk phantoms have no analytic centreline");
        }
    };
    return std::visit(Visitor{}, spec.shape);
}

namespace detail {

inline std::vector<Point> random_walk_chain(const RandomWalkVessel& walk, int width, int height)
{
    std::mt19937_64 rng(walk.seed);
    std::normal_distribution<double> turn(0.0, walk.turn_sigma);
    std::uniform_real_distribution<double> heading0(0.0, 2.0 * std::numbers::pi);
    double x = walk.start_x >= 0.0 ? walk.start_x : (width - 1) / 2.0;
    double y = walk.start_y >= 0.0 ? walk.start_y : (height - 1) / 2.0;
    double heading = heading0(rng);
    const double lo = 2.0, hx = width - 3.0, hy = height - 3.0;

    std::vector<Point> chain{{static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y))}};
    for (int i = 0; i < walk.steps; ++i) {
        heading += turn(rng);
        double nx = x + std::cos(heading);
        double ny = y + std::sin(heading);
        if (nx < lo || nx > hx) {
            heading = std::numbers::pi - heading;
            nx = x + std::cos(heading);
        }
        if (ny < lo || ny > hy) {
            heading = -heading;
            ny = y + std::sin(heading);
        }
        x = std::clamp(nx, lo, hx);
        y = std::clamp(ny, lo, hy);
        const Point p{static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y))};
        if (p == chain.back())
            continue;
        if (adjacent8(chain.back(), p)) {
            chain.push_back(p);
        } else {
            auto bridge = line_pixels(chain.back(), p);
            chain.insert(chain.end(), bridge.begin() + 1, bridge.end());
        }
    }
    return chain;
}

} // namespace detail

inline BinaryMask rasterize(const PhantomSpec& spec)
{
    if (spec.width <= 0 || spec.height <= 0)
        throw Error("phantom dimensions must be positive");
    BinaryMask mask(spec.width, spec.height);

    if (const auto* grid = std::get_if<Grid>(&spec.shape)) {
        if (grid->spacing < 1 || grid->line_width < 1 || grid->line_width > grid->spacing || grid->offset < 0)
            throw Error("grid phantom needs 1 <= line_width <= spacing and offset >= 0");
        auto on_line = [&](int c) { return c >= grid->offset && (c - grid->offset) % grid->spacing < grid->line_width; };
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x)
                if (on_line(x) || on_line(y))
                    mask(x, y) = 1;
        return mask;
    }

    std::vector<Point> chain;
    if (const auto* walk = std::get_if<RandomWalkVessel>(&spec.shape)) {
        if (walk->steps < 1 || walk->turn_sigma < 0.0 || spec.width < 6 || spec.height < 6)
            throw Error("random-walk phantom needs steps >= 1, turn_sigma >= 0 and a raster of at least 6x6");
        chain = detail::random_walk_chain(*walk, spec.width, spec.height);
    } else {
        chain = centerline(spec);
    }
    for (const Point p : chain) {
        if (!mask.contains(p))
            throw Error(std::string(kind_name(spec.shape)) + " phantom exceeds the raster (" +
                        std::to_string(p.x) + "," + std::to_string(p.y) + ")");
        mask[p] = 1;
    }
    return mask;
}

// Continuous arc length over chord length of an open-curve phantom.
inline double analytic_tortuosity(const PhantomSpec& spec)
{
    struct Visitor {
        double operator()(const StraightLine& s) const
        {
            if (s.from == s.to)
                throw Error("degenerate straight line");
            return 1.0;
        }
        double operator()(const CircularArc& a) const
        {
            const double sweep = std::abs(a.sweep);
            if (sweep <= 0.0 || sweep >= 2.0 * std::numbers::pi)
                throw Error("closed or empty arc has no tortuosity");
            return sweep / (2.0 * std::sin(sweep / 2.0));
        }
        double operator()(const SineArch& s) const
        {
            const double span = s.cycles * s.wavelength;
            if (span <= 0.0)
                throw Error("empty sine arch");
            const double k = 2.0 * std::numbers::pi / s.wavelength;
            auto speed = [&](double t) {
                const double d = s.amplitude * k * std::cos(k * t);
                return std::sqrt(1.0 + d * d);
            };
            const double arc =
                boost::math::quadrature::gauss_kronrod<double, 61>::integrate(speed, 0.0, span, 15, 1e-12);
            const double chord = std::hypot(span, s.amplitude * std::sin(k * span));
            return arc / chord;
        }
        double operator()(const Grid&) const { throw Error("grid phantoms are not a single open curve"); }
        double operator()(const RandomWalkVessel&) const
        {
            throw Error("random-walk phantoms have no analytic tortuosity");
        }
    };
    return std::visit(Visitor{}, spec.shape);
}

} // namespace vesselmark::phantom
