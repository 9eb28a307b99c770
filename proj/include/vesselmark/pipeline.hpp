#pragma once

// Batch driver: discovers eyes under the input root and, for every vessel
// type, family and scale, writes a heatmap, a fused image and their sidecars,
// plus one segment-statistics CSV per eye and a run manifest.

#include "attention.hpp"
#include "config.hpp"
#include "density_map.hpp"
#include "gaussian.hpp"
#include "morphology.hpp"
#include "raster.hpp"
#include "raster_io.hpp"
#include "serialization.hpp"
#include "tortuosity_map.hpp"
#include "vessel_graph.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fnmatch.h>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace vesselmark {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kManifestSchema = "vesselmark.manifest/1";
inline constexpr const char* kHeatmapSchema = "vesselmark.heatmap/1";
inline constexpr const char* kFusedSchema = "vesselmark.fused/1";
inline constexpr const char* kManifestName = "manifest.json";

// Usage or configuration problem (exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

enum class LogLevel { Debug, Info, Warn, Error };
using LogSink = std::function<void(LogLevel, const std::string&)>;

namespace exit_code {
inline constexpr int kSuccess = 0;
inline constexpr int kUsage = 2;
inline constexpr int kPartial = 3;
inline constexpr int kTotal = 4;
} // namespace exit_code

struct EyeInputs {
    std::string id;
    std::filesystem::path dir;
};

inline std::string sha256_hex(const std::vector<unsigned char>& bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 failed");
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

// First file (by name) in dir matching the shell pattern.
inline std::optional<std::filesystem::path> find_matching(const std::filesystem::path& dir, const std::string& pattern)
{
    std::vector<std::filesystem::path> hits;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
        if (!entry.is_regular_file())
            continue;
        if (::fnmatch(pattern.c_str(), entry.path().filename().c_str(), 0) == 0)
            hits.push_back(entry.path());
    }
    if (hits.empty())
        return std::nullopt;
    std::sort(hits.begin(), hits.end());
    return hits.front();
}

// Every subdirectory of the input root is an eye, sorted by name.
inline std::vector<EyeInputs> discover_eyes(const PipelineConfig& config)
{
    const std::filesystem::path root(config.input_root);
    if (config.input_root.empty() || !std::filesystem::is_directory(root))
        throw ConfigError("input root '" + config.input_root + "' is not a directory");
    std::vector<EyeInputs> eyes;
    for (const auto& entry : std::filesystem::directory_iterator(root))
        if (entry.is_directory())
            eyes.push_back({entry.path().filename().string(), entry.path()});
    std::sort(eyes.begin(), eyes.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return eyes;
}

struct LoadedEye {
    GrayImage projection;
    PerVessel<BinaryMask> masks;
    std::vector<std::pair<std::string, std::string>> input_hashes; // relative name, sha256
    std::vector<std::string> warnings;
};

inline LoadedEye load_eye(const EyeInputs& eye, const PipelineConfig& config)
{
    LoadedEye out;
    const LoadOptions options{config.channel};
    auto read_hashed = [&](const std::filesystem::path& p) {
        auto bytes = detail::read_file_bytes(p);
        out.input_hashes.emplace_back(p.filename().string(), sha256_hex(bytes));
        return bytes;
    };
    auto decode = [&](const std::filesystem::path& p) {
        try {
            return decode_gray(read_hashed(p), options);
        } catch (const Error& e) {
            throw Error(std::string(e.what()) + " ('" + p.string() + "')");
        }
    };

    const auto projection = find_matching(eye.dir, config.projection_pattern);
    if (!projection)
        throw Error("no file matching '" + config.projection_pattern + "' in " + eye.dir.string());
    out.projection = decode(*projection);

    bool need_labels = false;
    for (VesselType t : kVesselTypes)
        need_labels = need_labels || !config.preprocess[t].mask_pattern;

    PerVessel<BinaryMask> from_labels;
    if (need_labels) {
        const auto labels_path = find_matching(eye.dir, config.labels_pattern);
        if (!labels_path)
            throw Error("no file matching '" + config.labels_pattern + "' in " + eye.dir.string());
        auto split = split_labels(decode(*labels_path).pixels, config.label_mapping, config.unmapped);
        from_labels = std::move(split.masks);
        for (auto& w : split.warnings)
            out.warnings.push_back(std::move(w));
    }

    for (VesselType t : kVesselTypes) {
        const auto& flags = config.preprocess[t];
        BinaryMask mask;
        if (flags.mask_pattern) {
            const auto path = find_matching(eye.dir, *flags.mask_pattern);
            if (!path)
                throw Error("no file matching '" + *flags.mask_pattern + "' in " + eye.dir.string());
            const Field gray = normalize(decode(*path));
            if (is_binary(gray)) {
                mask = to_mask(gray);
            } else if (flags.otsu_if_nonbinary) {
                const auto otsu = otsu_threshold(gray);
                if (otsu.degenerate)
                    out.warnings.push_back(std::string(to_string(t)) + " mask is constant; Otsu yields an empty mask");
                mask = binarize(gray, otsu.threshold);
            } else {
                mask = binarize(gray, 0.0);
            }
        } else {
            mask = std::move(from_labels[t]);
        }
        if (flags.remove_small_components)
            mask = remove_small_components(mask, config.min_component_size);
        out.masks[t] = std::move(mask);
    }
    return out;
}

struct VesselAnalysis {
    Skeleton skeleton;
    VesselGraph graph;
    std::vector<SegmentStats> stats;
    Selection selection;
};

inline VesselAnalysis analyze_vessel(const BinaryMask& mask, const PipelineConfig& config)
{
    VesselAnalysis a;
    a.skeleton = skeletonize(mask);
    a.graph = extract_graph(a.skeleton);
    a.stats = segment_stats(a.graph, config.min_edge_pixels);
    a.selection = select_high_tortuosity(a.stats, config.percentile, config.exponents);
    return a;
}

inline std::string factor_label(double f)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", f);
    return buf;
}

inline std::string map_stem(VesselType t, Family f, double factor)
{
    return std::string(to_string(t)) + "_" + to_string(f) + "_f" + factor_label(factor);
}

struct OutputFile {
    std::string relative; // relative to the output root, '/' separated
    std::vector<unsigned char> bytes;
};

struct EyeProduct {
    std::vector<OutputFile> files;
    nlohmann::json maps = nlohmann::json::array();
    std::vector<std::string> warnings;
    std::vector<std::pair<std::string, std::string>> input_hashes;
};

inline std::vector<unsigned char> to_bytes(const std::string& s)
{
    return {s.begin(), s.end()};
}

// Computes every output of one eye in memory; nothing touches disk.
inline EyeProduct process_eye(const EyeInputs& eye, const PipelineConfig& config)
{
    using nlohmann::json;
    LoadedEye loaded = load_eye(eye, config);
    EyeProduct product;
    product.warnings = std::move(loaded.warnings);
    product.input_hashes = std::move(loaded.input_hashes);

    const Field projection = normalize(loaded.projection);
    const int fused_depth = loaded.projection.bit_depth == 16 ? 16 : 8;
    const std::string eye_prefix = eye.id + "/";

    std::vector<std::vector<SegmentStats>> all_stats;
    std::vector<VesselType> stats_types;

    for (VesselType vessel : kVesselTypes) {
        const BinaryMask& mask = loaded.masks[vessel];
        VesselAnalysis analysis = analyze_vessel(mask, config);
        if (!analysis.selection.cutoff)
            product.warnings.push_back(std::string(to_string(vessel)) +
                                       ": no eligible segments; tortuosity heatmaps are zero");

        const Field tort_impulse = build_impulse_map(analysis.graph, analysis.stats);
        const double tort_mass = total(tort_impulse);

        const DensityField density = local_density(mask, config.disk_radius[vessel]);
        const SparsityField sparse = sparsity(density);
        if (sparse.degenerate)
            product.warnings.push_back(std::string(to_string(vessel)) + ": empty mask; sparsity is 1 everywhere");
        const BinaryMask& support = config.dropout_support == DropoutSupport::Mask ? mask : analysis.skeleton;
        const Field drop_impulse = sparsity_impulse(support, sparse.sparsity, config.sparsity_threshold);
        const double drop_mass = total(drop_impulse);

        if (config.write_graphs) {
            product.files.push_back({eye_prefix + "graphs/" + to_string(vessel) + ".json",
                                     to_bytes(graph_json(analysis.graph, analysis.stats).dump(1) + "\n")});
        }

        for (Family family : kFamilies) {
            const Field& impulse = family == Family::Tortuosity ? tort_impulse : drop_impulse;
            const HeatmapSet set = gaussian_multiscale(impulse, config.scale_factors, vessel, family);
            for (std::size_t j = 0; j < set.maps.size(); ++j) {
                const std::string stem = map_stem(vessel, family, set.factors[j]);
                json heat{{"schema", kHeatmapSchema},
                          {"eye_id", eye.id},
                          {"vessel_type", to_string(vessel)},
                          {"family", to_string(family)},
                          {"factor", set.factors[j]},
                          {"sigma", set.sigmas[j]},
                          {"largest_dimension", set.largest_dimension},
                          {"width", impulse.width()},
                          {"height", impulse.height()}};

                Field pre = set.maps[j];
                const bool use_p99 = family == Family::Dropout ||
                                     config.tortuosity_normalization == TortuosityNormalization::P99ThenNonzero;
                if (use_p99) {
                    P99Result p = normalize_p99(pre);
                    heat["p99"] = p.p99;
                    heat["p99_degenerate"] = p.degenerate;
                    pre = std::move(p.map);
                }
                NormalizedMap attention = normalize_attention(pre);
                heat["normalization"] = use_p99 ? "p99_then_nonzero" : "nonzero_minmax";
                heat["attention_degenerate"] = attention.degenerate;
                if (family == Family::Tortuosity) {
                    heat["percentile"] = config.percentile;
                    heat["percentile_cutoff"] = analysis.selection.cutoff ? json(*analysis.selection.cutoff) : json(nullptr);
                    heat["alpha"] = config.exponents.alpha;
                    heat["beta"] = config.exponents.beta;
                    heat["selected_segments"] = analysis.selection.indices.size();
                    heat["impulse_mass"] = tort_mass;
                } else {
                    heat["radius"] = density.radius;
                    heat["sparsity_threshold"] = config.sparsity_threshold;
                    heat["sparsity_degenerate"] = sparse.degenerate;
                    heat["dropout_support"] = config.dropout_support == DropoutSupport::Mask ? "mask" : "skeleton";
                    heat["impulse_mass"] = drop_mass;
                }

                const std::string heat_png = eye_prefix + "heatmaps/" + stem + ".png";
                product.files.push_back({heat_png, encode_gray(quantize(attention.map, 16), Container::Png)});
                product.files.push_back({eye_prefix + "heatmaps/" + stem + ".json", to_bytes(heat.dump(2) + "\n")});

                Field a = attention.map;
                if (!a.same_shape(projection)) {
                    product.warnings.push_back(stem + ": heatmap resampled from " + std::to_string(a.width()) + "x" +
                                               std::to_string(a.height()) + " to projection size");
                    a = resample_bilinear(a, projection.width(), projection.height());
                }
                const Field fused = fuse(projection, attention_weights(a, config.attention));
                std::size_t clamped = 0;
                for (double v : fused)
                    clamped += v > 1.0 ? 1 : 0;

                json fused_meta{{"schema", kFusedSchema},
                                {"eye_id", eye.id},
                                {"vessel_type", to_string(vessel)},
                                {"family", to_string(family)},
                                {"factor", set.factors[j]},
                                {"sigma", set.sigmas[j]},
                                {"attention", {{"min", config.attention.atten_min}, {"max", config.attention.atten_max}}},
                                {"heatmap", heat_png},
                                {"bit_depth", fused_depth},
                                {"clamped_pixels", clamped}};
                const std::string fused_png = eye_prefix + stem + ".png";
                product.files.push_back({fused_png, encode_gray(quantize(fused, fused_depth), Container::Png)});
                product.files.push_back({eye_prefix + stem + ".json", to_bytes(fused_meta.dump(2) + "\n")});

                product.maps.push_back({{"heatmap", heat_png}, {"fused", fused_png}, {"sidecar", heat}});
            }
        }
        stats_types.push_back(vessel);
        all_stats.push_back(std::move(analysis.stats));
    }

    std::vector<VesselStatsTable> tables;
    for (std::size_t i = 0; i < all_stats.size(); ++i)
        tables.push_back({stats_types[i], all_stats[i]});
    product.files.push_back({eye_prefix + "segment_stats.csv", to_bytes(stats_csv(eye.id, tables))});
    return product;
}

// Segment statistics of one eye as CSV, without producing any heatmap.
inline std::string eye_stats_csv(const EyeInputs& eye, const PipelineConfig& config)
{
    const LoadedEye loaded = load_eye(eye, config);
    std::vector<std::vector<SegmentStats>> all_stats;
    for (VesselType vessel : kVesselTypes)
        all_stats.push_back(analyze_vessel(loaded.masks[vessel], config).stats);
    std::vector<VesselStatsTable> tables;
    for (std::size_t i = 0; i < all_stats.size(); ++i)
        tables.push_back({kVesselTypes[i], all_stats[i]});
    return stats_csv(eye.id, tables);
}

inline void write_outputs(const std::filesystem::path& root, const std::vector<OutputFile>& files)
{
    for (const auto& f : files) {
        const auto path = root / f.relative;
        std::filesystem::create_directories(path.parent_path());
        detail::write_file_bytes(path, f.bytes);
    }
}

struct EyeRecord {
    std::string id;
    bool ok = false;
    std::string error;
    std::vector<std::string> files;
    nlohmann::json maps = nlohmann::json::array();
    std::vector<std::string> warnings;
    std::vector<std::pair<std::string, std::string>> input_hashes;
    double seconds = 0.0;
};

struct RunManifest {
    nlohmann::json document;
    std::vector<EyeRecord> eyes;
    int exit_code = exit_code::kSuccess;

    std::size_t failures() const
    {
        return static_cast<std::size_t>(std::count_if(eyes.begin(), eyes.end(), [](const auto& e) { return !e.ok; }));
    }
};

inline nlohmann::json manifest_json(const PipelineConfig& config, const std::vector<EyeRecord>& eyes)
{
    using nlohmann::json;
    json eye_list = json::array();
    json files = json::array();
    std::size_t ok = 0;
    for (const auto& e : eyes) {
        json inputs = json::array();
        for (const auto& [name, hash] : e.input_hashes)
            inputs.push_back({{"file", name}, {"sha256", hash}});
        json entry{{"eye_id", e.id},
                   {"status", e.ok ? "ok" : "failed"},
                   {"inputs", inputs},
                   {"outputs", e.files},
                   {"maps", e.maps},
                   {"warnings", e.warnings},
                   {"seconds", e.seconds}};
        if (!e.ok)
            entry["error"] = e.error;
        eye_list.push_back(std::move(entry));
        for (const auto& f : e.files)
            files.push_back(f);
        ok += e.ok ? 1 : 0;
    }
    files.push_back(kManifestName);
    return {{"schema", kManifestSchema},
            {"tool_version", kToolVersion},
            {"config", json(config)},
            {"eyes", eye_list},
            {"files", files},
            {"summary", {{"eyes", eyes.size()}, {"succeeded", ok}, {"failed", eyes.size() - ok}}}};
}

// Runs every eye (one eye per worker), writes outputs and the manifest.
// Throws ConfigError for usage problems; per-eye failures are recorded.
inline RunManifest run_pipeline(const PipelineConfig& config, const LogSink& log = {})
{
    auto emit = [&](LogLevel level, const std::string& msg) {
        if (log)
            log(level, msg);
    };
    try {
        config.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    if (config.output_root.empty())
        throw ConfigError("output root is not set");

    const auto eyes = discover_eyes(config);
    if (eyes.empty())
        throw ConfigError("no eyes found under '" + config.input_root + "'");
    const std::filesystem::path out_root(config.output_root);
    std::filesystem::create_directories(out_root);

    std::vector<EyeRecord> records(eyes.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto locked_emit = [&](LogLevel level, const std::string& msg) {
        std::lock_guard lock(log_mutex);
        emit(level, msg);
    };

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= eyes.size())
                return;
            EyeRecord& rec = records[i];
            rec.id = eyes[i].id;
            const auto start = std::chrono::steady_clock::now();
            try {
                EyeProduct product = process_eye(eyes[i], config);
                write_outputs(out_root, product.files);
                for (const auto& f : product.files)
                    rec.files.push_back(f.relative);
                rec.maps = std::move(product.maps);
                rec.warnings = std::move(product.warnings);
                rec.input_hashes = std::move(product.input_hashes);
                rec.ok = true;
                for (const auto& w : rec.warnings)
                    locked_emit(LogLevel::Warn, rec.id + ": " + w);
                locked_emit(LogLevel::Info, rec.id + ": wrote " + std::to_string(rec.files.size()) + " files");
            } catch (const std::exception& e) {
                rec.ok = false;
                rec.error = e.what();
                locked_emit(LogLevel::Error, rec.id + ": " + rec.error);
            }
            rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
    };

    const int n_workers = std::min<int>(config.workers, static_cast<int>(eyes.size()));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < n_workers; ++i)
            pool.emplace_back(worker);
    }

    RunManifest manifest;
    manifest.eyes = std::move(records);
    manifest.document = manifest_json(config, manifest.eyes);
    detail::write_file_bytes(out_root / kManifestName, to_bytes(manifest.document.dump(2) + "\n"));

    const std::size_t failed = manifest.failures();
    manifest.exit_code = failed == 0 ? exit_code::kSuccess
                         : failed == manifest.eyes.size() ? exit_code::kTotal
                                                          : exit_code::kPartial;
    return manifest;
}

} // namespace vesselmark
