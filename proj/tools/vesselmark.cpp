// vesselmark: tortuosity / dropout heatmaps and attention-fused OCTA images.

#include "vesselmark/phantom_json.hpp"
#include "vesselmark/vesselmark.hpp"

#include "CLI11.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace vesselmark;

namespace {

void setup_logging()
{
    auto logger = spdlog::stderr_color_mt("vesselmark");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("VESSELMARK_LOG")) {
        const auto level = spdlog::level::from_str(env);
        // from_str maps unknown names to "off"; only honour it when asked for.
        if (level != spdlog::level::off || std::string(env) == "off")
            spdlog::set_level(level);
        else
            spdlog::warn("unknown VESSELMARK_LOG level '{}', keeping 'info'", env);
    }
}

void log_to_spdlog(LogLevel level, const std::string& msg)
{
    switch (level) {
    case LogLevel::Debug: spdlog::debug("{}", msg); break;
    case LogLevel::Info: spdlog::info("{}", msg); break;
    case LogLevel::Warn: spdlog::warn("{}", msg); break;
    case LogLevel::Error: spdlog::error("{}", msg); break;
    }
}

PipelineConfig resolve_config(const std::string& config_path, const std::string& input, const std::string& output,
                              std::optional<int> workers)
{
    PipelineConfig config;
    try {
        if (!config_path.empty())
            config = load_config(config_path);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    if (!input.empty())
        config.input_root = input;
    if (!output.empty())
        config.output_root = output;
    if (workers)
        config.workers = *workers;
    try {
        config.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return config;
}

int cmd_run(const std::string& config_path, const std::string& input, const std::string& output,
            std::optional<int> workers)
{
    const PipelineConfig config = resolve_config(config_path, input, output, workers);
    if (config.input_root.empty() || config.output_root.empty())
        throw ConfigError("both an input root and an output root are required");
    const RunManifest manifest = run_pipeline(config, log_to_spdlog);
    spdlog::info("{} eyes, {} failed; manifest at {}", manifest.eyes.size(), manifest.failures(),
                 (fs::path(config.output_root) / kManifestName).string());
    return manifest.exit_code;
}

int cmd_gen_phantom(const std::string& spec_path, std::string out)
{
    nlohmann::json j;
    {
        std::ifstream in(spec_path);
        if (!in)
            throw ConfigError("cannot open phantom spec '" + spec_path + "'");
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("phantom spec: ") + e.what());
        }
    }
    if (out.empty())
        out = j.value("output", std::string{});
    if (out.empty())
        out = fs::path(spec_path).replace_extension(".png").string();

    phantom::PhantomSpec spec;
    try {
        spec = phantom::spec_from_json(j);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    const BinaryMask mask = phantom::rasterize(spec);
    Field field(mask.width(), mask.height());
    std::transform(mask.begin(), mask.end(), field.begin(), [](std::uint8_t v) { return v ? 1.0 : 0.0; });
    save_gray(out, quantize(field, 8));

    nlohmann::json meta = phantom::spec_to_json(spec);
    meta["mask"] = fs::path(out).filename().string();
    meta["foreground_pixels"] = count_nonzero(mask);
    try {
        meta["analytic_tortuosity"] = phantom::analytic_tortuosity(spec);
    } catch (const Error&) {
        meta["analytic_tortuosity"] = nullptr;
    }
    // <stem>.phantom.json, so the default output never lands on the spec file
    const auto meta_path = fs::path(out).replace_extension(".phantom.json");
    std::ofstream(meta_path) << meta.dump(2) << "\n";
    spdlog::info("wrote {} and {}", out, meta_path.string());
    return exit_code::kSuccess;
}

int cmd_stats(const std::string& config_path, const std::string& input, const std::string& eye_id,
              const std::string& out)
{
    const PipelineConfig config = resolve_config(config_path, input, "", std::nullopt);
    if (config.input_root.empty())
        throw ConfigError("an input root is required (--input or config input_root)");
    const fs::path dir = fs::path(config.input_root) / eye_id;
    if (!fs::is_directory(dir))
        throw ConfigError("eye '" + eye_id + "' not found under " + config.input_root);
    const std::string csv = eye_stats_csv({eye_id, dir}, config);
    if (out.empty()) {
        std::cout << csv;
    } else {
        std::ofstream f(out, std::ios::binary);
        f << csv;
        if (!f)
            throw Error("cannot write '" + out + "'");
    }
    return exit_code::kSuccess;
}

} // namespace

int main(int argc, char** argv)
{
    setup_logging();

    CLI::App app{"vesselmark: OCTA tortuosity and vessel-dropout attention maps"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    std::string config_path, input, output, spec_path, eye_id, out;
    std::optional<int> workers;

    auto* run = app.add_subcommand("run", "Run the full heatmap / fusion pipeline over every eye");
    run->add_option("--config", config_path, "Pipeline config (JSON)");
    run->add_option("--input", input, "Input root (overrides config)");
    run->add_option("--output", output, "Output root (overrides config)");
    run->add_option("--workers", workers, "Worker threads, one eye each")->check(CLI::Range(1, 256));

    auto* gen = app.add_subcommand("gen-phantom", "Rasterize a synthetic vessel phantom");
    gen->add_option("--spec", spec_path, "Phantom spec (JSON)")->required();
    gen->add_option("--out", out, "Output mask PNG (default: spec 'output' or <spec>.png)");

    auto* stats = app.add_subcommand("stats", "Print per-segment statistics for one eye as CSV");
    stats->add_option("--eye", eye_id, "Eye id (directory under the input root)")->required();
    stats->add_option("--config", config_path, "Pipeline config (JSON)");
    stats->add_option("--input", input, "Input root (overrides config)");
    stats->add_option("--out", out, "Write the CSV here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_code::kUsage;
    }

    try {
        if (*run)
            return cmd_run(config_path, input, output, workers);
        if (*gen)
            return cmd_gen_phantom(spec_path, out);
        if (*stats)
            return cmd_stats(config_path, input, eye_id, out);
    } catch (const ConfigError& e) {
        spdlog::error("{}", e.what());
        return exit_code::kUsage;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return exit_code::kTotal;
    }
    return exit_code::kUsage;
}
