#pragma once

// Pipeline configuration and its JSON file format.

#include "attention.hpp"
#include "gaussian.hpp"
#include "raster.hpp"
#include "raster_io.hpp"
#include "tortuosity_map.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace vesselmark {

struct PreprocessFlags {
    // Otsu-binarize masks that arrive as non-binary gray images.
    bool otsu_if_nonbinary = true;
    bool remove_small_components = false;
    // Optional per-type mask file (pattern within the eye directory). When
    // unset the mask comes from the label raster.
    std::optional<std::string> mask_pattern;

    friend bool operator==(const PreprocessFlags&, const PreprocessFlags&) = default;
};

enum class TortuosityNormalization { NonzeroMinMax, P99ThenNonzero };
enum class DropoutSupport { Mask, Skeleton };

struct PipelineConfig {
    std::string input_root;
    std::string output_root;
    std::string projection_pattern = "projection.png";
    std::string labels_pattern = "labels.png";
    std::optional<int> channel;

    // Dataset-specific; the values below are placeholders that must be
    // checked against the dataset's own label documentation.
    LabelMapping label_mapping = default_label_mapping();
    UnmappedPolicy unmapped = UnmappedPolicy::Error;

    double percentile = 85.0;
    WeightExponents exponents{};
    std::size_t min_edge_pixels = 3;
    std::vector<double> scale_factors = default_scale_factors();
    PerVessel<int> disk_radius{{10, 10, 10}};
    double sparsity_threshold = 0.6;
    AttentionBounds attention{};
    std::size_t min_component_size = 5;
    PerVessel<PreprocessFlags> preprocess = default_preprocess();
    TortuosityNormalization tortuosity_normalization = TortuosityNormalization::NonzeroMinMax;
    DropoutSupport dropout_support = DropoutSupport::Mask;
    bool write_graphs = false;
    int workers = 1;

    static LabelMapping default_label_mapping()
    {
        LabelMapping m;
        m.vessels[VesselType::Artery] = {1};
        m.vessels[VesselType::Vein] = {2};
        m.vessels[VesselType::Capillary] = {3};
        m.ignored = {4};
        return m;
    }

    static PerVessel<PreprocessFlags> default_preprocess()
    {
        PerVessel<PreprocessFlags> p;
        p[VesselType::Capillary].remove_small_components = true;
        return p;
    }

    void validate() const
    {
        auto fail = [](const std::string& what) { throw Error("config: " + what); };
        label_mapping.validate();
        if (!(percentile >= 0.0 && percentile <= 100.0))
            fail("percentile must lie in [0, 100]");
        if (!(exponents.alpha >= 0.0) || !(exponents.beta >= 0.0))
            fail("alpha and beta must be non-negative");
        if (min_edge_pixels < 2)
            fail("min_edge_pixels must be at least 2");
        if (scale_factors.empty())
            fail("at least one scale factor is required");
        for (double f : scale_factors)
            if (!(f > 0.0 && f <= 1.0))
                fail("scale factors must lie in (0, 1]");
        for (VesselType t : kVesselTypes)
            if (disk_radius[t] < 1 || disk_radius[t] > 1000)
                fail("disk radius must lie in [1, 1000]");
        if (!(sparsity_threshold >= 0.0 && sparsity_threshold <= 1.0))
            fail("sparsity_threshold must lie in [0, 1]");
        attention.validate();
        if (min_component_size < 1)
            fail("min_component_size must be at least 1");
        if (workers < 1 || workers > 256)
            fail("workers must lie in [1, 256]");
        if (channel && *channel < 0)
            fail("channel must be non-negative");
    }

    friend bool operator==(const PipelineConfig& a, const PipelineConfig& b)
    {
        return nlohmann::json(a) == nlohmann::json(b);
    }

    friend void to_json(nlohmann::json& j, const PipelineConfig& c);
    friend void from_json(const nlohmann::json& j, PipelineConfig& c);
};

namespace detail {

inline nlohmann::json label_set_json(const std::set<std::uint16_t>& s)
{
    return nlohmann::json(std::vector<std::uint16_t>(s.begin(), s.end()));
}

template <typename T>
void read_optional(const nlohmann::json& j, const char* key, T& out)
{
    if (j.contains(key))
        j.at(key).get_to(out);
}

} // namespace detail

inline void to_json(nlohmann::json& j, const PipelineConfig& c)
{
    using nlohmann::json;
    json mapping;
    for (VesselType t : kVesselTypes)
        mapping[to_string(t)] = detail::label_set_json(c.label_mapping.vessels[t]);
    mapping["ignored"] = detail::label_set_json(c.label_mapping.ignored);

    json radii, pre;
    for (VesselType t : kVesselTypes) {
        radii[to_string(t)] = c.disk_radius[t];
        const auto& p = c.preprocess[t];
        json entry{{"otsu_if_nonbinary", p.otsu_if_nonbinary},
                   {"remove_small_components", p.remove_small_components}};
        entry["mask_pattern"] = p.mask_pattern ? json(*p.mask_pattern) : json(nullptr);
        pre[to_string(t)] = entry;
    }

    j = json{
        {"input_root", c.input_root},
        {"output_root", c.output_root},
        {"projection_pattern", c.projection_pattern},
        {"labels_pattern", c.labels_pattern},
        {"channel", c.channel ? json(*c.channel) : json(nullptr)},
        {"label_mapping", mapping},
        {"unmapped_labels", c.unmapped == UnmappedPolicy::Error ? "error" : "warn"},
        {"percentile", c.percentile},
        {"alpha", c.exponents.alpha},
        {"beta", c.exponents.beta},
        {"min_edge_pixels", c.min_edge_pixels},
        {"scale_factors", c.scale_factors},
        {"disk_radius", radii},
        {"sparsity_threshold", c.sparsity_threshold},
        {"attention", {{"min", c.attention.atten_min}, {"max", c.attention.atten_max}}},
        {"min_component_size", c.min_component_size},
        {"preprocess", pre},
        {"tortuosity_normalization",
         c.tortuosity_normalization == TortuosityNormalization::NonzeroMinMax ? "nonzero_minmax" : "p99_then_nonzero"},
        {"dropout_support", c.dropout_support == DropoutSupport::Mask ? "mask" : "skeleton"},
        {"write_graphs", c.write_graphs},
        {"workers", c.workers},
    };
}

// Missing keys keep their defaults; unknown keys are rejected.
inline void from_json(const nlohmann::json& j, PipelineConfig& c)
{
    static const std::set<std::string> known{
        "input_root", "output_root", "projection_pattern", "labels_pattern", "channel", "label_mapping",
        "unmapped_labels", "percentile", "alpha", "beta", "min_edge_pixels", "scale_factors", "disk_radius",
        "sparsity_threshold", "attention", "min_component_size", "preprocess", "tortuosity_normalization",
        "dropout_support", "write_graphs", "workers"};
    if (!j.is_object())
        throw Error("config: top level must be an object");
    for (const auto& [key, _] : j.items())
        if (!known.contains(key))
            throw Error("config: unknown key '" + key + "'");

    detail::read_optional(j, "input_root", c.input_root);
    detail::read_optional(j, "output_root", c.output_root);
    detail::read_optional(j, "projection_pattern", c.projection_pattern);
    detail::read_optional(j, "labels_pattern", c.labels_pattern);
    if (j.contains("channel"))
        c.channel = j.at("channel").is_null() ? std::nullopt : std::optional<int>(j.at("channel").get<int>());

    if (j.contains("label_mapping")) {
        const auto& m = j.at("label_mapping");
        LabelMapping mapping;
        for (VesselType t : kVesselTypes) {
            if (!m.contains(to_string(t)))
                throw Error(std::string("config: label_mapping lacks '") + to_string(t) + "'");
            for (auto v : m.at(to_string(t)).get<std::vector<std::uint16_t>>())
                mapping.vessels[t].insert(v);
        }
        if (m.contains("ignored"))
            for (auto v : m.at("ignored").get<std::vector<std::uint16_t>>())
                mapping.ignored.insert(v);
        c.label_mapping = mapping;
    }
    if (j.contains("unmapped_labels")) {
        const auto s = j.at("unmapped_labels").get<std::string>();
        if (s != "error" && s != "warn")
            throw Error("config: unmapped_labels must be 'error' or 'warn'");
        c.unmapped = s == "error" ? UnmappedPolicy::Error : UnmappedPolicy::Warn;
    }
    detail::read_optional(j, "percentile", c.percentile);
    detail::read_optional(j, "alpha", c.exponents.alpha);
    detail::read_optional(j, "beta", c.exponents.beta);
    detail::read_optional(j, "min_edge_pixels", c.min_edge_pixels);
    detail::read_optional(j, "scale_factors", c.scale_factors);
    if (j.contains("disk_radius")) {
        const auto& r = j.at("disk_radius");
        if (r.is_number()) {
            for (VesselType t : kVesselTypes)
                c.disk_radius[t] = r.get<int>();
        } else {
            for (VesselType t : kVesselTypes)
                detail::read_optional(r, to_string(t), c.disk_radius[t]);
        }
    }
    detail::read_optional(j, "sparsity_threshold", c.sparsity_threshold);
    if (j.contains("attention")) {
        detail::read_optional(j.at("attention"), "min", c.attention.atten_min);
        detail::read_optional(j.at("attention"), "max", c.attention.atten_max);
    }
    detail::read_optional(j, "min_component_size", c.min_component_size);
    if (j.contains("preprocess")) {
        for (VesselType t : kVesselTypes) {
            if (!j.at("preprocess").contains(to_string(t)))
                continue;
            const auto& p = j.at("preprocess").at(to_string(t));
            auto& flags = c.preprocess[t];
            detail::read_optional(p, "otsu_if_nonbinary", flags.otsu_if_nonbinary);
            detail::read_optional(p, "remove_small_components", flags.remove_small_components);
            if (p.contains("mask_pattern"))
                flags.mask_pattern = p.at("mask_pattern").is_null()
                                         ? std::nullopt
                                         : std::optional<std::string>(p.at("mask_pattern").get<std::string>());
        }
    }
    if (j.contains("tortuosity_normalization")) {
        const auto s = j.at("tortuosity_normalization").get<std::string>();
        if (s == "nonzero_minmax")
            c.tortuosity_normalization = TortuosityNormalization::NonzeroMinMax;
        else if (s == "p99_then_nonzero")
            c.tortuosity_normalization = TortuosityNormalization::P99ThenNonzero;
        else
            throw Error("config: tortuosity_normalization must be 'nonzero_minmax' or 'p99_then_nonzero'");
    }
    if (j.contains("dropout_support")) {
        const auto s = j.at("dropout_support").get<std::string>();
        if (s != "mask" && s != "skeleton")
            throw Error("config: dropout_support must be 'mask' or 'skeleton'");
        c.dropout_support = s == "mask" ? DropoutSupport::Mask : DropoutSupport::Skeleton;
    }
    detail::read_optional(j, "write_graphs", c.write_graphs);
    detail::read_optional(j, "workers", c.workers);
}

inline PipelineConfig parse_config(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("config: ") + e.what());
    }
    PipelineConfig c;
    try {
        from_json(j, c);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("config: cannot open '" + path.string() + "'");
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_config(text);
}

inline std::string dump_config(const PipelineConfig& c)
{
    return nlohmann::json(c).dump(2) + "\n";
}

} // namespace vesselmark
