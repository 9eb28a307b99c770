#pragma once

// JSON form of phantom specs, as consumed by `vesselmark gen-phantom`:
//
//   {"kind": "circular_arc", "width": 300, "height": 300,
//    "params": {"cx": 150, "cy": 150, "radius": 40, "start_angle": 0, "sweep": 3.14159}}

#include "phantoms.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace vesselmark::phantom {

inline PhantomSpec spec_from_json(const nlohmann::json& j)
{
    try {
        PhantomSpec spec;
        spec.width = j.at("width").get<int>();
        spec.height = j.at("height").get<int>();
        const std::string kind = j.at("kind").get<std::string>();
        const nlohmann::json params = j.value("params", nlohmann::json::object());
        auto get = [&](const char* key, auto fallback) { return params.value(key, fallback); };
        if (kind == "straight_line") {
            const auto from = params.at("from").get<std::array<int, 2>>();
            const auto to = params.at("to").get<std::array<int, 2>>();
            spec.shape = StraightLine{{from[0], from[1]}, {to[0], to[1]}};
        } else if (kind == "circular_arc") {
            spec.shape = CircularArc{get("cx", spec.width / 2.0), get("cy", spec.height / 2.0), get("radius", 40.0),
                                     get("start_angle", 0.0), get("sweep", std::numbers::pi)};
        } else if (kind == "sine_arch") {
            spec.shape = SineArch{get("x0", 0.0), get("y0", spec.height / 2.0), get("amplitude", 30.0),
                                  get("wavelength", 240.0), get("cycles", 0.5)};
        } else if (kind == "grid") {
            spec.shape = Grid{get("spacing", 20), get("line_width", 1), get("offset", 0)};
        } else if (kind == "random_walk") {
            spec.shape = RandomWalkVessel{get("steps", 200), get("turn_sigma", 0.2),
                                          get("seed", std::uint64_t{1}), get("start_x", -1.0), get("start_y", -1.0)};
        } else {
            throw Error("unknown phantom kind '" + kind + "'");
        }
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("phantom spec: ") + e.what());
    }
}

inline nlohmann::json spec_to_json(const PhantomSpec& spec)
{
    using nlohmann::json;
    struct Visitor {
        json operator()(const StraightLine& s) const
        {
            return {{"from", {s.from.x, s.from.y}}, {"to", {s.to.x, s.to.y}}};
        }
        json operator()(const CircularArc& a) const
        {
            return {{"cx", a.cx}, {"cy", a.cy}, {"radius", a.radius}, {"start_angle", a.start_angle}, {"sweep", a.sweep}};
        }
        json operator()(const SineArch& s) const
        {
            return {{"x0", s.x0}, {"y0", s.y0}, {"amplitude", s.amplitude}, {"wavelength", s.wavelength},
                    {"cycles", s.cycles}};
        }
        json operator()(const Grid& g) const
        {
            return {{"spacing", g.spacing}, {"line_width", g.line_width}, {"offset", g.offset}};
        }
        json operator()(const RandomWalkVessel& r) const
        {
            return {{"steps", r.steps}, {"turn_sigma", r.turn_sigma}, {"seed", r.seed}, {"start_x", r.start_x},
                    {"start_y", r.start_y}};
        }
    };
    return {{"kind", kind_name(spec.shape)},
            {"width", spec.width},
            {"height", spec.height},
            {"params", std::visit(Visitor{}, spec.shape)}};
}

} // namespace vesselmark::phantom
