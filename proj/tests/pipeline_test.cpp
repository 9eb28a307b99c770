#include "corpus.hpp"
#include "oracles.hpp"
#include "vesselmark/phantom_json.hpp"
#include "vesselmark/vesselmark.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

using namespace vesselmark;
namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Relative path -> bytes for every regular file under root.
std::map<std::string, std::string> tree(const fs::path& root)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file())
            out[fs::relative(e.path(), root).generic_string()] = read_text(e.path());
    return out;
}

std::size_t count_matching(const fs::path& dir, const std::string& suffix)
{
    std::size_t n = 0;
    if (!fs::is_directory(dir))
        return 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        n += e.is_regular_file() && name.size() >= suffix.size() &&
                     name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0
                 ? 1
                 : 0;
    }
    return n;
}

PipelineConfig config_for(const fs::path& in, const fs::path& out, int workers = 1)
{
    PipelineConfig c;
    c.input_root = in.string();
    c.output_root = out.string();
    c.workers = workers;
    return c;
}

int run_cli(const std::string& args, std::string* output = nullptr)
{
    const auto log = fs::temp_directory_path() / "vesselmark_cli_out.txt";
    const std::string cmd = std::string(VESSELMARK_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    if (output)
        *output = read_text(log);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(Config, DefaultsRoundTrip)
{
    const PipelineConfig c;
    EXPECT_EQ(parse_config(dump_config(c)), c);
}

TEST(Config, EveryFieldRoundTrips)
{
    PipelineConfig c;
    c.input_root = "/data/in";
    c.output_root = "/data/out";
    c.projection_pattern = "*_proj.png";
    c.labels_pattern = "*_gt.png";
    c.channel = 1;
    c.label_mapping.vessels[VesselType::Artery] = {10, 11};
    c.label_mapping.vessels[VesselType::Vein] = {20};
    c.label_mapping.vessels[VesselType::Capillary] = {30};
    c.label_mapping.ignored = {40, 255};
    c.unmapped = UnmappedPolicy::Warn;
    c.percentile = 90;
    c.exponents = {0.5, 2.0};
    c.min_edge_pixels = 5;
    c.scale_factors = {0.01, 0.03};
    c.disk_radius = PerVessel<int>{{8, 9, 12}};
    c.sparsity_threshold = 0.7;
    c.attention = {0.25, 1.75};
    c.min_component_size = 7;
    c.preprocess[VesselType::Vein].mask_pattern = "vein*.png";
    c.preprocess[VesselType::Vein].otsu_if_nonbinary = false;
    c.preprocess[VesselType::Artery].remove_small_components = true;
    c.tortuosity_normalization = TortuosityNormalization::P99ThenNonzero;
    c.dropout_support = DropoutSupport::Skeleton;
    c.write_graphs = true;
    c.workers = 3;

    const PipelineConfig back = parse_config(dump_config(c));
    EXPECT_EQ(back, c);
    EXPECT_EQ(back.channel, std::optional<int>(1));
    EXPECT_EQ(back.label_mapping.ignored, (std::set<std::uint16_t>{40, 255}));
    EXPECT_EQ(back.disk_radius[VesselType::Capillary], 12);
    EXPECT_EQ(back.preprocess[VesselType::Vein], c.preprocess[VesselType::Vein]);
    EXPECT_EQ(back.tortuosity_normalization, TortuosityNormalization::P99ThenNonzero);
    EXPECT_EQ(back.dropout_support, DropoutSupport::Skeleton);
    EXPECT_DOUBLE_EQ(back.exponents.beta, 2.0);
    EXPECT_EQ(dump_config(back), dump_config(c));
}

TEST(Config, MissingKeysKeepDefaults)
{
    const PipelineConfig c = parse_config(R"({"percentile": 80, "disk_radius": 6})");
    EXPECT_DOUBLE_EQ(c.percentile, 80);
    EXPECT_EQ(c.disk_radius[VesselType::Vein], 6);
    EXPECT_EQ(c.scale_factors, default_scale_factors());
    EXPECT_TRUE(c.preprocess[VesselType::Capillary].remove_small_components);
    EXPECT_FALSE(c.preprocess[VesselType::Artery].remove_small_components);
}

TEST(Config, InvalidInputsRejected)
{
    EXPECT_THROW(parse_config(R"({"percentil": 80})"), Error);
    EXPECT_THROW(parse_config(R"({"percentile": 180})"), Error);
    EXPECT_THROW(parse_config(R"({"scale_factors": []})"), Error);
    EXPECT_THROW(parse_config(R"({"attention": {"min": 2, "max": 1}})"), Error);
    EXPECT_THROW(parse_config(R"({"label_mapping": {"artery": [1], "vein": [1], "capillary": [3]}})"), Error);
    EXPECT_THROW(parse_config(R"({"dropout_support": "disk"})"), Error);
    EXPECT_THROW(parse_config("{not json"), Error);
    EXPECT_THROW(parse_config(R"({"workers": 0})"), Error);
}

TEST(Stats, StraightLineGivesOneUnselectedRow)
{
    Skeleton s(20, 5);
    for (int x = 2; x < 18; ++x)
        s(x, 2) = 1;
    const VesselGraph g = extract_graph(s);
    auto stats = segment_stats(g);
    select_high_tortuosity(stats);
    const auto dir = oracle::scratch_dir("stats_line");
    const std::vector<VesselStatsTable> tables{{VesselType::Artery, stats}};
    emit_stats(dir / "s.csv", "e1", tables);
    const std::string csv = read_text(dir / "s.csv");
    EXPECT_EQ(csv, std::string(kStatsHeader) + "e1,artery,0,16,15,15,1,0,false,0\n");
}

TEST(Stats, PlusSignGivesFourRows)
{
    Skeleton s(11, 11);
    for (int i = 0; i < 11; ++i)
        s(i, 5) = s(5, i) = 1;
    const auto stats = segment_stats(extract_graph(s));
    const std::vector<VesselStatsTable> tables{{VesselType::Vein, stats}};
    const std::string csv = stats_csv("e2", tables);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(Stats, EmptySkeletonGivesHeaderOnly)
{
    const auto stats = segment_stats(extract_graph(Skeleton(8, 8)));
    const std::vector<VesselStatsTable> tables{{VesselType::Capillary, stats}};
    EXPECT_EQ(stats_csv("e3", tables), kStatsHeader);
}

TEST(Stats, DegenerateRowsPrintNan)
{
    Skeleton s(9, 9);
    for (int i = 0; i < 4; ++i) {
        s(4 + i, i) = 1;
        s(8 - i, 4 + i) = 1;
        s(4 - i, 8 - i) = 1;
        s(i, 4 - i) = 1;
    }
    const auto stats = segment_stats(extract_graph(s));
    const std::vector<VesselStatsTable> tables{{VesselType::Artery, stats}};
    EXPECT_NE(stats_csv("ring", tables).find(",nan,nan,false,0"), std::string::npos);
}

TEST(Pipeline, OutputCountsForTwoEyes)
{
    const auto root = oracle::scratch_dir("pipe_counts");
    corpus::write_corpus(root / "in", 2, 96);
    const RunManifest m = run_pipeline(config_for(root / "in", root / "out"));
    EXPECT_EQ(m.exit_code, exit_code::kSuccess);
    for (const char* eye : {"eye_000", "eye_001"}) {
        const auto dir = root / "out" / eye;
        EXPECT_EQ(count_matching(dir / "heatmaps", ".png"), 24u);
        EXPECT_EQ(count_matching(dir / "heatmaps", ".json"), 24u);
        EXPECT_EQ(count_matching(dir, ".png"), 24u);
        EXPECT_EQ(count_matching(dir, ".json"), 24u);
        EXPECT_TRUE(fs::exists(dir / "segment_stats.csv"));
        EXPECT_TRUE(fs::exists(dir / "artery_tortuosity_f0.02.png"));
        EXPECT_TRUE(fs::exists(dir / "heatmaps" / "capillary_dropout_f0.08.png"));
    }
    EXPECT_EQ(tree(root / "out").size(), 2u * (48 + 48 + 1) + 1);
}

TEST(Pipeline, OutputBitDepths)
{
    const auto root = oracle::scratch_dir("pipe_depth");
    corpus::write_corpus(root / "in", 2, 64);
    ASSERT_EQ(run_pipeline(config_for(root / "in", root / "out")).exit_code, 0);
    // eye_000 has an 8-bit projection, eye_001 a 16-bit one
    EXPECT_EQ(load_gray(root / "out/eye_000/vein_dropout_f0.04.png").bit_depth, 8);
    EXPECT_EQ(load_gray(root / "out/eye_001/vein_dropout_f0.04.png").bit_depth, 16);
    EXPECT_EQ(load_gray(root / "out/eye_000/heatmaps/vein_dropout_f0.04.png").bit_depth, 16);
}

TEST(Pipeline, FusedImageFollowsAttention)
{
    const auto root = oracle::scratch_dir("pipe_fused");
    corpus::write_corpus(root / "in", 1, 64);
    ASSERT_EQ(run_pipeline(config_for(root / "in", root / "out")).exit_code, 0);
    const Field proj = normalize(load_gray(root / "in/eye_000/projection.png"));
    const Field heat = normalize(load_gray(root / "out/eye_000/heatmaps/artery_dropout_f0.06.png"));
    const GrayImage fused = load_gray(root / "out/eye_000/artery_dropout_f0.06.png");
    const Field expected = fuse(proj, attention_weights(heat));
    const GrayImage q = quantize(expected, 8);
    // heatmaps are stored at 16 bits, so allow one 8-bit step of slack
    for (std::size_t i = 0; i < q.pixels.size(); ++i)
        EXPECT_LE(std::abs(int(q.pixels.data()[i]) - int(fused.pixels.data()[i])), 1);
}

TEST(Pipeline, SidecarsDescribeTheirMaps)
{
    const auto root = oracle::scratch_dir("pipe_sidecar");
    corpus::write_corpus(root / "in", 1, 100);
    ASSERT_EQ(run_pipeline(config_for(root / "in", root / "out")).exit_code, 0);
    const auto j = nlohmann::json::parse(read_text(root / "out/eye_000/heatmaps/vein_tortuosity_f0.04.json"));
    EXPECT_EQ(j["schema"], kHeatmapSchema);
    EXPECT_EQ(j["vessel_type"], "vein");
    EXPECT_EQ(j["family"], "tortuosity");
    EXPECT_DOUBLE_EQ(j["sigma"].get<double>(), 4.0);
    EXPECT_EQ(j["normalization"], "nonzero_minmax");
    const auto d = nlohmann::json::parse(read_text(root / "out/eye_000/heatmaps/vein_dropout_f0.04.json"));
    EXPECT_EQ(d["radius"], 10);
    EXPECT_TRUE(d.contains("p99"));
    const auto f = nlohmann::json::parse(read_text(root / "out/eye_000/vein_dropout_f0.04.json"));
    EXPECT_EQ(f["heatmap"], "eye_000/heatmaps/vein_dropout_f0.04.png");
}

TEST(Pipeline, EmptyRootIsUsageError)
{
    const auto root = oracle::scratch_dir("pipe_empty");
    fs::create_directories(root / "in");
    EXPECT_THROW(run_pipeline(config_for(root / "in", root / "out")), ConfigError);
    EXPECT_THROW(run_pipeline(config_for(root / "missing", root / "out")), ConfigError);
}

TEST(Pipeline, CorruptEyeIsPartialFailure)
{
    const auto root = oracle::scratch_dir("pipe_corrupt");
    corpus::write_corpus(root / "in", 2, 64);
    std::ofstream(root / "in/eye_001/projection.png", std::ios::trunc).close();
    const RunManifest m = run_pipeline(config_for(root / "in", root / "out"));
    EXPECT_EQ(m.exit_code, exit_code::kPartial);
    EXPECT_EQ(m.failures(), 1u);
    EXPECT_FALSE(fs::exists(root / "out/eye_001"));
    EXPECT_EQ(count_matching(root / "out/eye_000", ".png"), 24u);
    EXPECT_EQ(count_matching(root / "out/eye_000/heatmaps", ".png"), 24u);
    const auto doc = nlohmann::json::parse(read_text(root / "out/manifest.json"));
    EXPECT_EQ(doc["eyes"][1]["status"], "failed");
    EXPECT_NE(doc["eyes"][1]["error"].get<std::string>().find("unsupported container"), std::string::npos);
}

TEST(Pipeline, AllEyesFailingIsTotalFailure)
{
    const auto root = oracle::scratch_dir("pipe_total");
    corpus::write_corpus(root / "in", 2, 64);
    fs::remove(root / "in/eye_000/labels.png");
    fs::remove(root / "in/eye_001/labels.png");
    EXPECT_EQ(run_pipeline(config_for(root / "in", root / "out")).exit_code, exit_code::kTotal);
}

TEST(Pipeline, ManifestListsExactlyTheWrittenFiles)
{
    const auto root = oracle::scratch_dir("pipe_manifest");
    corpus::write_corpus(root / "in", 2, 64);
    auto config = config_for(root / "in", root / "out");
    config.write_graphs = true;
    ASSERT_EQ(run_pipeline(config).exit_code, 0);
    const auto doc = nlohmann::json::parse(read_text(root / "out/manifest.json"));
    std::set<std::string> listed;
    for (const auto& f : doc["files"])
        listed.insert(f.get<std::string>());
    std::set<std::string> on_disk;
    for (const auto& [name, _] : tree(root / "out"))
        on_disk.insert(name);
    EXPECT_EQ(listed, on_disk);
    EXPECT_TRUE(on_disk.contains("eye_000/graphs/capillary.json"));

    // input hashes match the files
    const auto& inputs = doc["eyes"][0]["inputs"];
    ASSERT_EQ(inputs.size(), 2u);
    for (const auto& in : inputs) {
        const auto bytes = detail::read_file_bytes(root / "in/eye_000" / in["file"].get<std::string>());
        EXPECT_EQ(in["sha256"], sha256_hex(bytes));
    }
    EXPECT_EQ(doc["config"], nlohmann::json(config));
}

TEST(Pipeline, Sha256KnownVector)
{
    const std::string abc = "abc";
    EXPECT_EQ(sha256_hex({abc.begin(), abc.end()}),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Pipeline, DeterministicAcrossWorkerCounts)
{
    const auto root = oracle::scratch_dir("pipe_determinism");
    corpus::write_corpus(root / "in", 3, 64);
    ASSERT_EQ(run_pipeline(config_for(root / "in", root / "a", 1)).exit_code, 0);
    ASSERT_EQ(run_pipeline(config_for(root / "in", root / "b", 4)).exit_code, 0);
    auto a = tree(root / "a");
    auto b = tree(root / "b");
    a.erase(kManifestName);
    b.erase(kManifestName);
    EXPECT_EQ(a.size(), b.size());
    EXPECT_TRUE(a == b);
}

TEST(Pipeline, MaskPatternOverridesLabels)
{
    const auto root = oracle::scratch_dir("pipe_maskfile");
    corpus::write_corpus(root / "in", 1, 64);
    // gray (non-binary) capillary mask: Otsu picks the bright lines
    Field gray(64, 64, 0.1);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            if (x % 8 == 0 || y % 8 == 0)
                gray(x, y) = 0.9;
    save_gray(root / "in/eye_000/capillary_mask.png", quantize(gray, 8));
    auto config = config_for(root / "in", root / "out");
    config.preprocess[VesselType::Capillary].mask_pattern = "capillary_*.png";
    const auto eyes = discover_eyes(config);
    const LoadedEye loaded = load_eye(eyes[0], config);
    EXPECT_EQ(count_nonzero(loaded.masks[VesselType::Capillary]), 8u * 64 + 8u * 64 - 64u);
}

TEST(Cli, RunGenPhantomAndStats)
{
    const auto root = oracle::scratch_dir("cli");
    corpus::write_corpus(root / "in", 1, 64);
    EXPECT_EQ(run_cli("run --input " + (root / "in").string() + " --output " + (root / "out").string()), 0);
    EXPECT_TRUE(fs::exists(root / "out/manifest.json"));

    std::string out;
    EXPECT_EQ(run_cli("run --input " + (root / "nothing").string() + " --output " + (root / "o2").string(), &out), 2);
    EXPECT_EQ(run_cli("run", &out), 2);
    EXPECT_EQ(run_cli("bogus-subcommand", &out), 2);

    std::ofstream(root / "bad.json") << R"({"percentle": 85})";
    EXPECT_EQ(run_cli("run --config " + (root / "bad.json").string() + " --input " + (root / "in").string() +
                          " --output " + (root / "o3").string(),
                      &out),
              2);
    EXPECT_NE(out.find("unknown key"), std::string::npos);

    std::ofstream(root / "arc_spec.json") << R"({"kind": "circular_arc", "width": 128, "height": 128,
        "params": {"cx": 64, "cy": 64, "radius": 40, "sweep": 1.5707963267948966}})";
    EXPECT_EQ(run_cli("gen-phantom --spec " + (root / "arc_spec.json").string() + " --out " + (root / "arc.png").string()),
              0);
    const auto meta = nlohmann::json::parse(read_text(root / "arc.phantom.json"));
    EXPECT_EQ(meta["kind"], "circular_arc");
    EXPECT_NEAR(meta["analytic_tortuosity"].get<double>(), 1.1107207345, 1e-9);
    EXPECT_EQ(count_nonzero(load_gray(root / "arc.png").pixels), phantom::centerline(phantom::spec_from_json(meta)).size());

    EXPECT_EQ(run_cli("stats --eye eye_000 --input " + (root / "in").string(), &out), 0);
    EXPECT_EQ(out.rfind(kStatsHeader, 0), 0u);
    EXPECT_EQ(out, read_text(root / "out/eye_000/segment_stats.csv"));

    // default output sits next to the spec and leaves the spec intact
    EXPECT_EQ(run_cli("gen-phantom --spec " + (root / "arc_spec.json").string()), 0);
    EXPECT_TRUE(fs::exists(root / "arc_spec.png"));
    EXPECT_EQ(nlohmann::json::parse(read_text(root / "arc_spec.json")).count("foreground_pixels"), 0u);
}
