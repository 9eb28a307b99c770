#pragma once

// High-tortuosity segment selection, weighted impulse maps and the
// nonzero-support normalization used before attention fusion.

#include "gaussian.hpp"
#include "raster.hpp"
#include "vessel_graph.hpp"

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace vesselmark {

struct WeightExponents {
    double alpha = 1.0; // length exponent
    double beta = 1.0;  // excess-tortuosity exponent
};

// w = N^alpha * excess^beta. A zero excess with beta > 0 yields 0.
inline double segment_weight(std::size_t pixel_count, double excess, WeightExponents exps)
{
    if (pixel_count < 1)
        throw Error("segment_weight: pixel count must be at least 1");
    if (excess < 0.0)
        throw Error("segment_weight: negative excess tortuosity");
    return std::pow(static_cast<double>(pixel_count), exps.alpha) * std::pow(excess, exps.beta);
}

struct Selection {
    std::vector<std::size_t> indices; // into the stats list, ascending
    std::optional<double> cutoff;     // unset when no segment is eligible
};

// Marks eligible segments whose excess tortuosity is strictly above the given
// percentile of the eligible distribution. Fills in weights for the
// selected ones.
inline Selection select_high_tortuosity(std::vector<SegmentStats>& stats, double pct = 85.0,
                                        WeightExponents exps = {})
{
    std::vector<double> distribution;
    for (const auto& s : stats)
        if (s.eligible)
            distribution.push_back(s.excess);

    Selection sel;
    for (auto& s : stats) {
        s.selected = false;
        s.weight = 0.0;
    }
    if (distribution.empty())
        return sel;

    sel.cutoff = percentile(distribution, pct);
    for (std::size_t i = 0; i < stats.size(); ++i) {
        auto& s = stats[i];
        if (s.eligible && s.excess > *sel.cutoff) {
            s.selected = true;
            s.weight = segment_weight(s.pixel_count, s.excess, exps);
            sel.indices.push_back(i);
        }
    }
    return sel;
}

// Spreads each selected segment's weight uniformly over its distinct
// pixels; pixels shared between segments accumulate.
inline Field build_impulse_map(const VesselGraph& graph, std::span<const SegmentStats> stats)
{
    if (stats.size() != graph.edges.size())
        throw Error("build_impulse_map: one stats record per edge is required");
    Field impulse(graph.width, graph.height);
    for (std::size_t i = 0; i < stats.size(); ++i) {
        if (!stats[i].selected)
            continue;
        const auto& edge = graph.edges[i];
        const std::size_t n = edge.closed ? edge.pixels.size() - 1 : edge.pixels.size();
        const double share = stats[i].weight / static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) {
            const Point p = edge.pixels[j];
            if (!impulse.contains(p))
                throw Error("build_impulse_map: segment pixel outside raster");
            impulse[p] += share;
        }
    }
    return impulse;
}

struct NormalizedMap {
    Field map;
    bool degenerate = false; // input had no nonzero pixel
};

// Min-max scaling over the nonzero support; zeros stay zero. A constant
// nonzero support maps to 1.
inline NormalizedMap normalize_attention(const Field& map)
{
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (double v : map) {
        if (v == 0.0)
            continue;
        if (!any) {
            lo = hi = v;
            any = true;
        } else {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!any)
        return {map, true};

    Field out(map.width(), map.height());
    const double span = hi - lo;
    for (std::size_t i = 0; i < map.size(); ++i) {
        const double v = map.data()[i];
        if (v == 0.0)
            continue;
        out.data()[i] = span > 0.0 ? (v - lo) / span : 1.0;
    }
    return {std::move(out), false};
}

} // namespace vesselmark
