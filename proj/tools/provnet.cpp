// provnet: generate, ingest, train, evaluate and query provenance classifiers.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "provnet/error.hpp"
#include "provnet/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using namespace provnet;

enum Exit { ok = 0, usage = 1, data = 2, aborted = 3 };

struct Flags {
    std::string config;
    std::uint64_t seed = 0;
    std::string stream;
    std::string split_by;
    std::size_t triplet_stride = 0;
    std::vector<std::string> devices;
    std::string out;
    std::vector<std::string> inputs;
};

void add_config(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "Run config file (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seed, "Seed for generation, splits, pairing and training");
}

void add_stream(CLI::App* cmd, Flags& f) {
    cmd->add_option("--stream", f.stream, "Network stream")->check(CLI::IsMember({"ind", "pred", "multi"}));
}

pipeline::RunConfig merged(const CLI::App* cmd, const Flags& f) {
    pipeline::RunConfig cfg = f.config.empty() ? pipeline::RunConfig{} : pipeline::load_run_config(f.config);
    if (cmd->count("--seed")) cfg.seed = f.seed;
    if (cmd->get_option_no_throw("--stream") && cmd->count("--stream")) cfg.stream = models::parse_stream_kind(f.stream);
    if (cmd->get_option_no_throw("--split-by") && cmd->count("--split-by")) cfg.split_by = ingest::parse_split_by(f.split_by);
    if (cmd->get_option_no_throw("--triplet-stride") && cmd->count("--triplet-stride")) cfg.triplet_stride = f.triplet_stride;
    if (cmd->get_option_no_throw("--devices") && cmd->count("--devices")) cfg.devices = f.devices;
    if (cmd->count("--out")) {
        const std::string name = cmd->get_name();
        if (name == "gen") cfg.data_dir = f.out;
        else if (name == "ingest") cfg.store = f.out;
        else cfg.run_dir = f.out;
    }
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Platform provenance classification from video frames"};
    app.require_subcommand(1);
    Flags f;

    auto* gen = app.add_subcommand("gen", "Generate a synthetic compression-chain dataset");
    add_config(gen, f);
    gen->add_option("--out", f.out, "Output directory for frames and sidecar");

    auto* ingest_cmd = app.add_subcommand("ingest", "Extract residual patches and build the split manifest");
    add_config(ingest_cmd, f);
    ingest_cmd->add_option("--split-by", f.split_by, "Split unit")->check(CLI::IsMember({"video", "patch"}));
    ingest_cmd->add_option("--triplet-stride", f.triplet_stride, "P-frames between triplet starts")
        ->check(CLI::PositiveNumber);
    ingest_cmd->add_option("--devices", f.devices, "Comma-separated device ids to keep")->delimiter(',');
    ingest_cmd->add_option("--out", f.out, "Patch store directory");

    auto* train_cmd = app.add_subcommand("train", "Train a stream network (multi: fused head on frozen streams)");
    add_config(train_cmd, f);
    add_stream(train_cmd, f);
    train_cmd->add_option("--out", f.out, "Run directory for checkpoints and history");

    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
    add_config(eval_cmd, f);
    add_stream(eval_cmd, f);
    eval_cmd->add_option("--out", f.out, "Run directory holding the checkpoint; reports are written here");

    auto* infer_cmd = app.add_subcommand("infer", "Classify one video's patches by majority vote");
    add_config(infer_cmd, f);
    add_stream(infer_cmd, f);
    infer_cmd->add_option("--out", f.out, "Run directory holding the checkpoint");
    infer_cmd->add_option("patches", f.inputs, "Patch files or directories")->required();

    auto* report_cmd = app.add_subcommand("report", "Render a saved report (.json) or history (.jsonl)");
    report_cmd->add_option("file", f.inputs, "Report or history file")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ok : usage;
    }

    try {
        if (report_cmd->parsed()) {
            for (const auto& in : f.inputs) pipeline::cmd_report(in, std::cout);
            return ok;
        }
        if (gen->parsed()) {
            pipeline::cmd_gen(merged(gen, f), std::cout);
        } else if (ingest_cmd->parsed()) {
            pipeline::cmd_ingest(merged(ingest_cmd, f), std::cout);
        } else if (train_cmd->parsed()) {
            const auto outcome = pipeline::cmd_train(merged(train_cmd, f), std::cout);
            if (outcome.result.aborted) return aborted;
        } else if (eval_cmd->parsed()) {
            pipeline::cmd_eval(merged(eval_cmd, f), std::cout);
        } else if (infer_cmd->parsed()) {
            const std::vector<fs::path> inputs(f.inputs.begin(), f.inputs.end());
            pipeline::cmd_infer(merged(infer_cmd, f), inputs, std::cout);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return usage;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return usage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return data;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return data;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return aborted;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return data;
    }
    return ok;
}
