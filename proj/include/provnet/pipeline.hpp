#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "provnet/ingest.hpp"
#include "provnet/models.hpp"
#include "provnet/synth.hpp"
#include "provnet/training.hpp"

namespace provnet::pipeline {

namespace fs = std::filesystem;

// Merged settings for every command. Relative paths in a config file are
// resolved against the file's directory; flag values against the working
// directory. The top-level seed drives generation, splits, pairing and training.
struct RunConfig {
    std::uint64_t seed = 0;
    std::vector<std::string> class_names;  // empty: labels in sidecar order

    fs::path data_dir = "data";    // gen output
    fs::path sidecar;              // empty: data_dir/frames.csv
    fs::path store = "store";      // patch files + manifest.jsonl
    fs::path run_dir = "runs";     // checkpoints, histories, reports

    std::size_t patch_size = prep::default_patch_size;
    ingest::SplitBy split_by = ingest::SplitBy::video;
    ingest::SplitRatios ratios;
    std::size_t triplet_stride = 3;
    std::vector<std::string> devices;  // empty: all devices

    models::StreamKind stream = models::StreamKind::ind;
    std::string arch_preset = "full";  // "full" or "desk"
    std::map<std::string, models::ArchConfig> arch;  // per-stream overrides
    train::TrainConfig train;
    fs::path ind_checkpoint;   // empty: run_dir/ind.ckpt
    fs::path pred_checkpoint;  // empty: run_dir/pred.ckpt
    fs::path checkpoint;       // eval/infer model; empty: run_dir/<stream>.ckpt

    synth::DatasetOptions gen;
};

RunConfig run_config_from_json(const std::string& text, const fs::path& base_dir = {});
RunConfig load_run_config(const fs::path& path);
std::string to_json(const RunConfig& cfg);

fs::path resolved_sidecar(const RunConfig& cfg);
fs::path manifest_path(const RunConfig& cfg);
fs::path checkpoint_path(const RunConfig& cfg, models::StreamKind stream);
fs::path history_path(const RunConfig& cfg, models::StreamKind stream);
fs::path report_path(const RunConfig& cfg, models::StreamKind stream, const char* extension);

// Architecture for a stream: override if given, else the preset, with the
// manifest's class names.
models::ArchConfig arch_for(const RunConfig& cfg, models::StreamKind stream,
                            const std::vector<std::string>& class_names);

synth::GeneratedDataset cmd_gen(const RunConfig& cfg, std::ostream& out);

// parse -> select -> preprocess -> crop -> save patches -> manifest. Prints
// per-class counts for every (kind, split) cell.
ingest::Manifest cmd_ingest(const RunConfig& cfg, std::ostream& out);

struct TrainOutcome {
    train::TrainResult result;
    fs::path checkpoint;
    fs::path history;
};
// Writes the best (or, when aborted, last good) checkpoint and the history.
TrainOutcome cmd_train(const RunConfig& cfg, std::ostream& out);

// Evaluates the stream's checkpoint on the test split; writes JSON and text reports.
train::EvalReport cmd_eval(const RunConfig& cfg, std::ostream& out);

struct Verdict {
    std::vector<std::string> class_names;
    std::vector<double> mean_probabilities;
    std::vector<std::size_t> votes;
    std::size_t patches = 0;
    std::size_t verdict = 0;
    double confidence = 0.0;  // fraction of patches voting for the verdict
};
// Classifies one video's patch files (directories are expanded).
Verdict cmd_infer(const RunConfig& cfg, std::span<const fs::path> inputs, std::ostream& out);

// Renders a saved report (.json) as a text grid or a history (.jsonl) as a table.
void cmd_report(const fs::path& input, std::ostream& out);

train::EvalReport report_from_json(const std::string& text);

} // namespace provnet::pipeline
