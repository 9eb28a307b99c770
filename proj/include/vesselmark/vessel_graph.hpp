#pragma once

// Skeleton -> graph of endpoint/bifurcation nodes and pixel-chain edges, and
// the arc/chord geometry of each edge.

#include "morphology.hpp"
#include "raster.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace vesselmark {

enum class NodeKind {
    Endpoint,    // exactly one skeleton neighbour
    Bifurcation, // cluster of pixels with three or more neighbours
    Isolated,    // lone pixel, no edges
    Loop,        // anchor pixel of a closed chain with no other node
};

inline const char* to_string(NodeKind k) noexcept
{
    switch (k) {
    case NodeKind::Endpoint: return "endpoint";
    case NodeKind::Bifurcation: return "bifurcation";
    case NodeKind::Isolated: return "isolated";
    case NodeKind::Loop: return "loop";
    }
    return "unknown";
}

struct GraphNode {
    Point position;
    NodeKind kind = NodeKind::Endpoint;
    std::vector<Point> pixels; // skeleton pixels owned by the node

    friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct VesselEdge {
    // Ordered chain; consecutive pixels are 8-neighbours. The first and last
    // pixels belong to the end nodes. Closed edges repeat the first pixel at
    // the end and are otherwise repetition-free.
    std::vector<Point> pixels;
    std::array<std::size_t, 2> nodes{};
    bool closed = false;

    friend bool operator==(const VesselEdge&, const VesselEdge&) = default;
};

struct VesselGraph {
    int width = 0;
    int height = 0;
    std::vector<GraphNode> nodes;
    std::vector<VesselEdge> edges;

    friend bool operator==(const VesselGraph&, const VesselGraph&) = default;
};

namespace detail {

inline bool lex_less(Point a, Point b)
{
    return a.x < b.x || (a.x == b.x && a.y < b.y);
}

inline bool lex_less(const std::vector<Point>& a, const std::vector<Point>& b)
{
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                        [](Point p, Point q) { return lex_less(p, q); });
}

} // namespace detail

// Traversal is deterministic: nodes are created in row-major order of their
// first pixel, neighbours are visited clockwise from east, and the final
// edge list is sorted by pixel chain. Open edges start at the
// lexicographically smaller (x, then y) end pixel.
inline VesselGraph extract_graph(const Skeleton& skeleton)
{
    const int w = skeleton.width();
    const int h = skeleton.height();
    VesselGraph graph{w, h, {}, {}};

    Raster<int> degree(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (skeleton(x, y) != 0)
                degree(x, y) = neighbor_count(skeleton, x, y);

    constexpr int kNone = -1;
    Raster<int> node_of(w, h, kNone);

    std::vector<Point> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (skeleton(x, y) == 0 || degree(x, y) == 2 || node_of(x, y) != kNone)
                continue;
            const int id = static_cast<int>(graph.nodes.size());
            GraphNode node;
            node.position = {x, y};
            if (degree(x, y) == 0) {
                node.kind = NodeKind::Isolated;
                node.pixels = {{x, y}};
                node_of(x, y) = id;
            } else if (degree(x, y) == 1) {
                node.kind = NodeKind::Endpoint;
                node.pixels = {{x, y}};
                node_of(x, y) = id;
            } else {
                // Merge the 8-connected cluster of junction pixels.
                node.kind = NodeKind::Bifurcation;
                stack.push_back({x, y});
                node_of(x, y) = id;
                while (!stack.empty()) {
                    const Point p = stack.back();
                    stack.pop_back();
                    node.pixels.push_back(p);
                    for (const Point d : kNeighbors8) {
                        const Point q{p.x + d.x, p.y + d.y};
                        if (skeleton.contains(q) && skeleton[q] != 0 && degree[q] >= 3 && node_of[q] == kNone) {
                            node_of[q] = id;
                            stack.push_back(q);
                        }
                    }
                }
                std::sort(node.pixels.begin(), node.pixels.end(),
                          [](Point a, Point b) { return a.y < b.y || (a.y == b.y && a.x < b.x); });
                double cx = 0.0, cy = 0.0;
                for (const Point p : node.pixels) {
                    cx += p.x;
                    cy += p.y;
                }
                cx /= static_cast<double>(node.pixels.size());
                cy /= static_cast<double>(node.pixels.size());
                double best = std::numeric_limits<double>::infinity();
                for (const Point p : node.pixels) {
                    const double d2 = (p.x - cx) * (p.x - cx) + (p.y - cy) * (p.y - cy);
                    if (d2 < best) {
                        best = d2;
                        node.position = p;
                    }
                }
            }
            graph.nodes.push_back(std::move(node));
        }
    }

    Raster<std::uint8_t> visited(w, h);
    auto is_fg = [&](Point p) { return skeleton.contains(p) && skeleton[p] != 0; };
    auto is_node = [&](Point p) { return node_of[p] != kNone; };

    auto finish_edge = [&](std::vector<Point> pixels, bool closed) {
        VesselEdge edge;
        if (!closed && detail::lex_less(pixels.back(), pixels.front()))
            std::reverse(pixels.begin(), pixels.end());
        edge.nodes = {static_cast<std::size_t>(node_of[pixels.front()]),
                      static_cast<std::size_t>(node_of[pixels.back()])};
        edge.pixels = std::move(pixels);
        edge.closed = closed;
        graph.edges.push_back(std::move(edge));
    };

    // Walks a degree-2 chain starting with the step start -> first.
    auto trace = [&](Point start, Point first) {
        std::vector<Point> path{start, first};
        visited[first] = 1;
        Point prev = start;
        Point cur = first;
        for (;;) {
            std::optional<Point> next;
            for (const Point d : kNeighbors8) {
                const Point q{cur.x + d.x, cur.y + d.y};
                if (is_fg(q) && q != prev) {
                    next = q;
                    break;
                }
            }
            if (!next)
                break;
            path.push_back(*next);
            if (is_node(*next) || visited[*next] != 0)
                break;
            visited[*next] = 1;
            prev = cur;
            cur = *next;
        }
        return path;
    };

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Point p{x, y};
            if (skeleton[p] == 0 || !is_node(p))
                continue;
            for (const Point d : kNeighbors8) {
                const Point q{x + d.x, y + d.y};
                if (!is_fg(q))
                    continue;
                if (is_node(q)) {
                    const bool q_after_p = q.y > y || (q.y == y && q.x > x);
                    if (node_of[q] != node_of[p] && q_after_p)
                        finish_edge({p, q}, false);
                    continue;
                }
                if (visited[q] != 0)
                    continue;
                auto path = trace(p, q);
                const bool closed = path.back() == path.front();
                finish_edge(std::move(path), closed);
            }
        }
    }

    // Remaining unvisited chain pixels form cycles with no node pixel.
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Point s{x, y};
            if (skeleton[s] == 0 || is_node(s) || visited[s] != 0)
                continue;
            const int id = static_cast<int>(graph.nodes.size());
            graph.nodes.push_back({s, NodeKind::Loop, {s}});
            node_of[s] = id;
            visited[s] = 1;
            std::optional<Point> first;
            for (const Point d : kNeighbors8) {
                const Point q{x + d.x, y + d.y};
                if (is_fg(q)) {
                    first = q;
                    break;
                }
            }
            if (!first)
                continue;
            auto path = trace(s, *first);
            finish_edge(std::move(path), true);
        }
    }

    std::sort(graph.edges.begin(), graph.edges.end(),
              [](const VesselEdge& a, const VesselEdge& b) { return detail::lex_less(a.pixels, b.pixels); });
    return graph;
}

// Sum of Euclidean steps along the chain; each 8-connected step is 1 or sqrt(2).
inline double curve_length(std::span<const Point> pixels)
{
    if (pixels.size() < 2)
        throw Error("curve_length: an edge needs at least 2 pixels");
    double length = 0.0;
    for (std::size_t j = 0; j + 1 < pixels.size(); ++j)
        length += std::hypot(static_cast<double>(pixels[j + 1].x - pixels[j].x),
                             static_cast<double>(pixels[j + 1].y - pixels[j].y));
    return length;
}

// Straight-line distance between the first and last pixel.
inline double chord_length(std::span<const Point> pixels)
{
    if (pixels.size() < 2)
        throw Error("chord_length: an edge needs at least 2 pixels");
    return std::hypot(static_cast<double>(pixels.back().x - pixels.front().x),
                      static_cast<double>(pixels.back().y - pixels.front().y));
}

// Tortuosity in excess of a straight segment.
inline double excess_tortuosity(double tortuosity) noexcept
{
    return tortuosity - 1.0;
}

struct Tortuosity {
    double ratio = 1.0;  // arc / chord
    double excess = 0.0; // excess_tortuosity(ratio)
};

// Empty when the chord vanishes (closed chains).
inline std::optional<Tortuosity> tortuosity(std::span<const Point> pixels)
{
    const double chord = chord_length(pixels);
    if (chord <= 0.0)
        return std::nullopt;
    const double ratio = curve_length(pixels) / chord;
    return Tortuosity{ratio, excess_tortuosity(ratio)};
}

struct SegmentStats {
    std::size_t pixel_count = 0;
    double curve_length = 0.0;
    double chord_length = 0.0;
    double tortuosity = 0.0;
    double excess = 0.0;
    double weight = 0.0;
    bool degenerate = false; // zero chord; tortuosity undefined
    bool eligible = false;   // enters the percentile distribution
    bool selected = false;   // above the percentile cut
};

// Per-edge statistics. Edges shorter than min_pixels, or degenerate, are not
// eligible for the tortuosity distribution.
inline SegmentStats segment_stats(const VesselEdge& edge, std::size_t min_pixels = 3)
{
    SegmentStats s;
    const std::span<const Point> pixels(edge.pixels);
    s.pixel_count = edge.closed ? pixels.size() - 1 : pixels.size();
    s.curve_length = curve_length(pixels);
    s.chord_length = chord_length(pixels);
    if (auto t = tortuosity(pixels)) {
        s.tortuosity = t->ratio;
        s.excess = t->excess;
    } else {
        s.degenerate = true;
        s.tortuosity = std::numeric_limits<double>::quiet_NaN();
        s.excess = std::numeric_limits<double>::quiet_NaN();
    }
    s.eligible = !s.degenerate && s.pixel_count >= min_pixels;
    return s;
}

inline std::vector<SegmentStats> segment_stats(const VesselGraph& graph, std::size_t min_pixels = 3)
{
    std::vector<SegmentStats> out;
    out.reserve(graph.edges.size());
    for (const auto& e : graph.edges)
        out.push_back(segment_stats(e, min_pixels));
    return out;
}

} // namespace vesselmark
