#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "provnet/checkpoint.hpp"
#include "provnet/error.hpp"
#include "provnet/log.hpp"
#include "provnet/pipeline.hpp"

#ifndef PROVNET_CLI_PATH
#error "PROVNET_CLI_PATH must point at the provnet executable"
#endif

using namespace provnet;
using namespace provnet::pipeline;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("provnet_test_pipeline_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct QuietLog {
    log::Sink previous = log::set_sink([](log::Level, std::string_view) {});
    ~QuietLog() { log::set_sink(previous); }
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
}

synth::CompressionChain chain(std::string label, std::vector<int> qualities) {
    synth::CompressionChain c;
    c.label = std::move(label);
    for (const int q : qualities) c.stages.push_back({q, 1.0});
    return c;
}

// Small synthetic run: 128x128 frames, 64-pixel patches, desk networks.
RunConfig small_run(const fs::path& root, std::vector<synth::CompressionChain> chains, bool p_emulation) {
    RunConfig cfg;
    cfg.seed = 5;
    cfg.data_dir = root / "data";
    cfg.store = root / "store";
    cfg.run_dir = root / "runs";
    cfg.patch_size = 64;
    cfg.arch_preset = "desk";
    cfg.train.max_epochs = 1;
    cfg.train.patience = 1;
    cfg.train.lr = 1e-3;
    cfg.gen.chains = std::move(chains);
    cfg.gen.videos_per_chain = 6;
    cfg.gen.frames_per_video = 4;
    cfg.gen.width = 128;
    cfg.gen.height = 128;
    cfg.gen.p_emulation = p_emulation;
    return cfg;
}

models::ArchConfig tiny_ind(std::vector<std::string> names) {
    models::ArchConfig c;
    c.kind = models::StreamKind::ind;
    c.class_names = std::move(names);
    models::BackboneConfig b;
    b.input_size = 8;
    b.channels = {2};
    b.kernels = {{3}};
    b.feature_width = 32;
    c.ind = b;
    return c;
}

// A network that always answers `winner`: zero classifier weights, one large bias.
void save_constant_model(const fs::path& path, const std::vector<std::string>& names, std::size_t winner) {
    auto net = models::build_network(tiny_ind(names), 1);
    auto params = net.export_parameters();
    for (auto& t : params) {
        if (t.name == "head.classifier.weight") std::fill(t.values.begin(), t.values.end(), 0.0f);
        if (t.name == "head.classifier.bias") {
            std::fill(t.values.begin(), t.values.end(), 0.0f);
            t.values[winner] = 20.0f;
        }
    }
    net.import_parameters(params, true);
    fs::create_directories(path.parent_path());
    nn::save_checkpoint(path, models::to_checkpoint(net));
}

prep::Patch small_patch(std::mt19937_64& rng, const std::string& video, std::uint32_t frame) {
    prep::Patch p;
    p.tensor = nn::Tensor<float>(nn::Shape{1, 1, 8, 8});
    std::normal_distribution<float> n(0.0f, 1.0f);
    for (auto& v : p.tensor.values()) v = n(rng);
    p.label = 0;
    p.origin = {video, frame, 0, 0};
    return p;
}

int run_cli(const std::string& args, std::string* output = nullptr) {
    const fs::path log = fs::temp_directory_path() / "provnet_test_pipeline_cli.log";
    const std::string cmd = std::string("\"") + PROVNET_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    if (output) *output = slurp(log);
    fs::remove(log);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("run config resolves paths against its file and rejects unknown keys") {
    TempDir dir("config");
    write_file(dir.path / "run.json", R"({"seed": 9, "store": "s", "run_dir": "/abs/runs", "stream": "pred",
        "split_by": "patch", "split_ratios": [0.8, 0.1, 0.1], "devices": ["D01"], "arch_preset": "desk",
        "train": {"max_epochs": 5, "early_stop_patience": 2}})");
    const RunConfig cfg = load_run_config(dir.path / "run.json");
    CHECK(cfg.seed == 9);
    CHECK(cfg.store == dir.path / "s");
    CHECK(cfg.run_dir == fs::path("/abs/runs"));
    CHECK(cfg.stream == models::StreamKind::pred);
    CHECK(cfg.split_by == ingest::SplitBy::patch);
    CHECK(cfg.ratios.train == doctest::Approx(0.8));
    CHECK(cfg.devices == std::vector<std::string>{"D01"});
    CHECK(cfg.train.max_epochs == 5);
    CHECK(cfg.train.patience == 2);
    CHECK(checkpoint_path(cfg, models::StreamKind::pred) == fs::path("/abs/runs/pred.ckpt"));

    const RunConfig again = run_config_from_json(to_json(cfg));
    CHECK(to_json(again) == to_json(cfg));

    CHECK_THROWS_AS(run_config_from_json(R"({"sede": 1})"), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(R"({"arch_preset": "huge"})"), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(R"({"stream": "both"})"), ConfigError);
    CHECK_THROWS_AS(run_config_from_json(R"({"train": {"patience": 3}})"), ConfigError);
    CHECK_THROWS_AS(load_run_config(dir.path / "missing.json"), ConfigError);
}

TEST_CASE("architecture selection follows preset and overrides") {
    RunConfig cfg;
    const std::vector<std::string> names{"A", "B"};
    CHECK(arch_for(cfg, models::StreamKind::multi, names) == models::multiframe_config(names));
    cfg.arch_preset = "desk";
    CHECK(arch_for(cfg, models::StreamKind::ind, names) == models::indnet_desk_config(names));
    cfg.arch["ind"] = tiny_ind(names);
    CHECK(arch_for(cfg, models::StreamKind::ind, names) == tiny_ind(names));
    CHECK_THROWS_AS(arch_for(cfg, models::StreamKind::ind, {"A", "C"}), ConfigError);
}

TEST_CASE("ingest of a three-chain dataset gives a balanced three-class manifest, deterministically") {
    QuietLog quiet;
    TempDir dir("ingest3");
    RunConfig cfg = small_run(dir.path, {chain("SC", {90}), chain("WA", {90, 70}), chain("YT", {90, 50})}, false);
    std::ostringstream sink;
    cmd_gen(cfg, sink);

    std::array<std::string, 3> manifests;
    for (auto& m : manifests) {
        std::ostringstream out;
        const auto manifest = cmd_ingest(cfg, out);
        CHECK(manifest.class_names == std::vector<std::string>{"SC", "WA", "YT"});
        CHECK(out.str().find("I train: SC=") != std::string::npos);
        for (const auto split : {ingest::Split::train, ingest::Split::val, ingest::Split::test}) {
            std::array<std::size_t, 3> counts{};
            for (const auto& e : manifest.select(prep::PatchKind::I, split)) ++counts[static_cast<std::size_t>(e.label)];
            CHECK(counts[0] > 0);
            CHECK(counts[0] == counts[1]);
            CHECK(counts[1] == counts[2]);
        }
        ingest::verify_patch_files(manifest, cfg.store);
        m = slurp(manifest_path(cfg));
    }
    CHECK(manifests[0] == manifests[1]);
    CHECK(manifests[1] == manifests[2]);

    SUBCASE("the device filter keeps only the listed devices") {
        cfg.devices = {"D01", "D02"};
        cfg.split_by = ingest::SplitBy::patch;
        std::ostringstream out;
        const auto manifest = cmd_ingest(cfg, out);
        CHECK(!manifest.entries.empty());
        for (const auto& e : manifest.entries) CHECK((e.video_id.rfind("D01_", 0) == 0 || e.video_id.rfind("D02_", 0) == 0));
    }
}

TEST_CASE("a sidecar row pointing at a missing frame names the record") {
    QuietLog quiet;
    TempDir dir("missing");
    RunConfig cfg = small_run(dir.path, {chain("A", {90}), chain("B", {90, 70})}, false);
    std::ostringstream sink;
    const auto data = cmd_gen(cfg, sink);
    const auto& victim = data.frames[3];
    fs::remove(cfg.data_dir / victim.frame_path);
    try {
        cmd_ingest(cfg, sink);
        FAIL("ingest should fail");
    } catch (const DataError& e) {
        const std::string what = e.what();
        CHECK(what.find(victim.video_id + "#" + std::to_string(victim.frame_index)) != std::string::npos);
    }
}

TEST_CASE("infer on a one-class patch set with a perfect model is unanimous") {
    QuietLog quiet;
    TempDir dir("infer");
    RunConfig cfg;
    cfg.run_dir = dir.path / "runs";
    save_constant_model(checkpoint_path(cfg, models::StreamKind::ind), {"SC", "WA", "YT"}, 1);
    std::mt19937_64 rng(3);
    fs::create_directories(dir.path / "video");
    for (std::uint32_t k = 0; k < 6; ++k) {
        prep::save_patch(dir.path / "video" / ("p" + std::to_string(k) + ".patch"), small_patch(rng, "D01_WA_0001", k));
    }
    std::ostringstream out;
    const std::vector<fs::path> inputs{dir.path / "video"};
    const Verdict v = cmd_infer(cfg, inputs, out);
    CHECK(v.patches == 6);
    CHECK(v.class_names[v.verdict] == "WA");
    CHECK(v.confidence == 1.0);
    CHECK(v.votes == std::vector<std::size_t>{0, 6, 0});
    CHECK(out.str().find("verdict WA confidence 1.0000") != std::string::npos);

    const std::vector<fs::path> none{dir.path / "empty"};
    fs::create_directories(dir.path / "empty");
    CHECK_THROWS_AS(cmd_infer(cfg, none, out), DataError);
}

TEST_CASE("eval refuses mismatched classes before touching patch data") {
    QuietLog quiet;
    TempDir dir("mismatch");
    RunConfig cfg;
    cfg.store = dir.path / "store";
    cfg.run_dir = dir.path / "runs";
    ingest::Manifest m;
    m.class_names = {"SC", "WA"};
    ingest::ManifestEntry e;
    e.patch_path = "does/not/exist.patch";
    e.label = 0;
    e.video_id = "v";
    e.split = ingest::Split::test;
    m.entries.push_back(e);
    fs::create_directories(cfg.store);
    ingest::save_manifest(manifest_path(cfg), m);
    save_constant_model(checkpoint_path(cfg, models::StreamKind::ind), {"SC", "YT"}, 0);
    std::ostringstream out;
    CHECK_THROWS_AS(cmd_eval(cfg, out), ConfigError);
}

TEST_CASE("fused training without stream checkpoints is a config error") {
    QuietLog quiet;
    TempDir dir("multi_missing");
    RunConfig cfg;
    cfg.store = dir.path / "store";
    cfg.run_dir = dir.path / "runs";
    ingest::Manifest m;
    m.class_names = {"A", "B"};
    fs::create_directories(cfg.store);
    ingest::save_manifest(manifest_path(cfg), m);
    cfg.stream = models::StreamKind::multi;
    std::ostringstream out;
    try {
        cmd_train(cfg, out);
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("missing ind checkpoint") != std::string::npos);
    }
}

TEST_CASE("training through the pipeline is repeatable byte for byte") {
    QuietLog quiet;
    TempDir dir("repeat");
    RunConfig cfg = small_run(dir.path, {chain("A", {90}), chain("B", {90, 60})}, false);
    std::ostringstream sink;
    cmd_gen(cfg, sink);
    cmd_ingest(cfg, sink);
    const auto first = cmd_train(cfg, sink);
    const std::string ckpt = slurp(first.checkpoint);
    const std::string history = slurp(first.history);
    cmd_train(cfg, sink);
    CHECK(slurp(first.checkpoint) == ckpt);
    CHECK(slurp(first.history) == history);
    CHECK(nn::load_checkpoint(first.checkpoint).seed == cfg.seed);
}

TEST_CASE("the command-line tool wires every stage and maps failures to exit codes") {
    TempDir dir("cli");
    const fs::path config = dir.path / "run.json";
    write_file(config, R"({
      "patch_size": 64, "arch_preset": "desk",
      "train": {"max_epochs": 1, "early_stop_patience": 1, "lr": 0.001},
      "gen": {"chains": [{"label": "A", "stages": [{"quality": 90}]},
                         {"label": "B", "stages": [{"quality": 90}, {"quality": 60}]}],
              "videos_per_chain": 6, "frames_per_video": 8, "width": 128, "height": 128,
              "p_emulation": true, "gop_length": 4}})");
    const std::string c = "--config \"" + config.string() + "\"";
    const std::string data = " --out \"" + (dir.path / "data").string() + "\"";
    const std::string store = " --out \"" + (dir.path / "store").string() + "\"";
    const std::string runs = " --out \"" + (dir.path / "runs").string() + "\"";
    std::string out;

    SUBCASE("help lists every flag and unknown flags fail") {
        CHECK(run_cli("--help", &out) == 0);
        for (const char* cmd : {"gen", "ingest", "train", "eval", "infer", "report"}) CHECK(out.find(cmd) != std::string::npos);
        CHECK(run_cli("ingest --help", &out) == 0);
        for (const char* flag : {"--config", "--seed", "--split-by", "--triplet-stride", "--devices", "--out"}) {
            CHECK(out.find(flag) != std::string::npos);
        }
        CHECK(run_cli("train --help", &out) == 0);
        CHECK(out.find("--stream") != std::string::npos);
        CHECK(run_cli("train --bogus", &out) == 1);
        CHECK(run_cli("train --stream both", &out) == 1);
        CHECK(run_cli("", &out) == 1);
    }
    SUBCASE("full pipeline") {
        CHECK(run_cli("gen " + c + " --seed 3" + data, &out) == 0);
        const std::string sidecar_cfg = dir.path.string() + "/with_sidecar.json";
        write_file(sidecar_cfg, std::string(R"({"patch_size": 64, "arch_preset": "desk", "sidecar": ")") +
                                    (dir.path / "data" / "frames.csv").string() +
                                    R"(", "train": {"max_epochs": 1, "early_stop_patience": 1, "lr": 0.001}})");
        const std::string c2 = "--config \"" + sidecar_cfg + "\"";
        CHECK(run_cli("ingest " + c2 + " --seed 3 --split-by video --triplet-stride 3" + store, &out) == 0);
        CHECK(out.find("P train: A=") != std::string::npos);
        write_file(sidecar_cfg, std::string(R"({"patch_size": 64, "arch_preset": "desk", "store": ")") +
                                    (dir.path / "store").string() +
                                    R"(", "train": {"max_epochs": 1, "early_stop_patience": 1, "lr": 0.001}})");
        for (const char* stream : {"ind", "pred", "multi"}) {
            CHECK_MESSAGE(run_cli(std::string("train ") + c2 + " --seed 3 --stream " + stream + runs, &out) == 0, out);
        }
        CHECK(run_cli("eval " + c2 + " --seed 3 --stream multi" + runs, &out) == 0);
        CHECK(out.find("true \\ pred") != std::string::npos);
        CHECK(fs::exists(dir.path / "runs" / "multi_report.json"));
        CHECK(run_cli("report \"" + (dir.path / "runs" / "multi_report.json").string() + "\"", &out) == 0);
        CHECK(out.find("macro AUC") != std::string::npos);
        CHECK(run_cli("report \"" + (dir.path / "runs" / "ind_history.jsonl").string() + "\"", &out) == 0);
        CHECK(out.find("val_acc") != std::string::npos);
        CHECK(run_cli("infer " + c2 + " --stream ind" + runs + " \"" + (dir.path / "store" / "patches" / "I").string() + "\"",
                      &out) == 0);
        CHECK(out.find("verdict") != std::string::npos);
    }
    SUBCASE("missing artifacts are data errors") {
        CHECK(run_cli("train --stream ind" + runs + " " + c, &out) == 2);
        CHECK(out.find("provnet ingest") != std::string::npos);
    }
    SUBCASE("non-finite training data aborts with exit code 3") {
        const fs::path st = dir.path / "store";
        fs::create_directories(st);
        ingest::Manifest m;
        m.class_names = {"A", "B"};
        std::mt19937_64 rng(1);
        for (int k = 0; k < 8; ++k) {
            prep::Patch p = small_patch(rng, "v" + std::to_string(k), 0);
            p.label = k % 2;
            if (k < 6) p.tensor[0] = std::numeric_limits<float>::quiet_NaN();
            const std::string name = "p" + std::to_string(k) + ".patch";
            prep::save_patch(st / name, p);
            ingest::ManifestEntry e;
            e.patch_path = name;
            e.label = p.label;
            e.video_id = p.origin.video_id;
            e.split = k < 6 ? ingest::Split::train : ingest::Split::val;
            m.entries.push_back(e);
        }
        ingest::save_manifest(st / "manifest.jsonl", m);
        const fs::path tiny = dir.path / "tiny.json";
        write_file(tiny, std::string(R"({"store": ")") + st.string() + R"(", "arch": {"ind": )" +
                             models::to_json(tiny_ind({"A", "B"})) + "}}");
        CHECK(run_cli("train --config \"" + tiny.string() + "\" --stream ind" + runs, &out) == 3);
        CHECK(out.find("aborted") != std::string::npos);
        CHECK(fs::exists(dir.path / "runs" / "ind.ckpt"));
    }
}
