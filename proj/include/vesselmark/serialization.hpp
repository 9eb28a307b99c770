#pragma once

// Segment statistics CSV and versioned graph dumps.

#include "raster.hpp"
#include "vessel_graph.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace vesselmark {

inline constexpr const char* kGraphSchema = "vesselmark.graph/1";
inline constexpr const char* kStatsHeader = "eye_id,vessel_type,edge_id,N,L,C,T,T_excess,selected,w\n";

// Fixed-precision formatting; NaN prints as "nan".
inline std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

struct VesselStatsTable {
    VesselType vessel;
    std::span<const SegmentStats> stats;
};

inline std::string stats_csv(const std::string& eye_id, std::span<const VesselStatsTable> tables)
{
    std::string out = kStatsHeader;
    for (const auto& table : tables) {
        for (std::size_t i = 0; i < table.stats.size(); ++i) {
            const auto& s = table.stats[i];
            out += eye_id;
            out += ',';
            out += to_string(table.vessel);
            out += ',' + std::to_string(i);
            out += ',' + std::to_string(s.pixel_count);
            out += ',' + format_number(s.curve_length);
            out += ',' + format_number(s.chord_length);
            out += ',' + format_number(s.tortuosity);
            out += ',' + format_number(s.excess);
            out += s.selected ? ",true" : ",false";
            out += ',' + format_number(s.weight);
            out += '\n';
        }
    }
    return out;
}

inline void emit_stats(const std::filesystem::path& path, const std::string& eye_id,
                       std::span<const VesselStatsTable> tables)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write '" + path.string() + "'");
    out << stats_csv(eye_id, tables);
    if (!out)
        throw Error("write failed for '" + path.string() + "'");
}

inline nlohmann::json graph_json(const VesselGraph& graph, std::span<const SegmentStats> stats)
{
    using nlohmann::json;
    json nodes = json::array();
    for (const auto& n : graph.nodes)
        nodes.push_back({{"x", n.position.x}, {"y", n.position.y}, {"kind", to_string(n.kind)}});
    json edges = json::array();
    for (std::size_t i = 0; i < graph.edges.size(); ++i) {
        const auto& e = graph.edges[i];
        json pixels = json::array();
        for (const Point p : e.pixels)
            pixels.push_back({p.x, p.y});
        json entry{{"pixels", pixels}, {"nodes", {e.nodes[0], e.nodes[1]}}, {"closed", e.closed}};
        if (i < stats.size()) {
            const auto& s = stats[i];
            auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
            entry["stats"] = {{"N", s.pixel_count}, {"L", num(s.curve_length)}, {"C", num(s.chord_length)},
                              {"T", num(s.tortuosity)}, {"T_excess", num(s.excess)}, {"w", s.weight},
                              {"selected", s.selected}, {"degenerate", s.degenerate}};
        }
        edges.push_back(std::move(entry));
    }
    return {{"schema", kGraphSchema},
            {"width", graph.width},
            {"height", graph.height},
            {"nodes", nodes},
            {"edges", edges}};
}

} // namespace vesselmark
