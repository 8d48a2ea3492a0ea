#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "provnet/ingest.hpp"
#include "provnet/models.hpp"
#include "provnet/preprocess.hpp"

namespace provnet::train {

using models::Network;
using prep::Patch;

struct TrainConfig {
    double lr = 1e-4;
    double weight_decay = 5e-5;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 80;
    std::size_t patience = 10;  // "early_stop_patience" in JSON
    std::uint64_t seed = 0;

    // Throws ConfigError unless every field is positive and patience <= max_epochs.
    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

std::string to_json(const TrainConfig& cfg);
// Missing keys keep their defaults; unknown keys are a ConfigError.
TrainConfig train_config_from_json(const std::string& text);

// Monitors validation accuracy. Only a strict improvement resets the counter,
// so ties keep the earlier epoch.
class EarlyStopping {
public:
    explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

    // Returns true when training should stop after this epoch (1-based).
    bool update(std::size_t epoch, double val_acc);
    bool improved() const noexcept { return improved_; }
    std::size_t best_epoch() const noexcept { return best_epoch_; }
    double best_value() const noexcept { return best_value_; }

private:
    std::size_t patience_;
    std::size_t best_epoch_ = 0;
    double best_value_ = -1.0;
    bool improved_ = false;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_acc = 0.0;
    bool operator==(const EpochRecord&) const = default;
};

// One JSON object per line: {"epoch", "train_loss", "val_acc"}.
void write_history(std::ostream& out, std::span<const EpochRecord> history);
std::vector<EpochRecord> read_history(std::istream& in);

struct TrainResult {
    nn::Checkpoint best;              // best-validation-accuracy checkpoint
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;       // 0 when no epoch completed
    double best_val_acc = 0.0;
    bool aborted = false;             // non-finite loss or gradient
    std::string abort_reason;
};

// Stacks patches (all of one shape) into a (n, c, s, s) batch.
nn::Tensor<float> stack(std::span<const Patch* const> patches);

// Trains a single-stream network. On return `net` holds the best checkpoint's
// parameters. Empty train or val sets are a ConfigError.
TrainResult train(Network& net, std::span<const Patch> train_set, std::span<const Patch> val_set,
                  const TrainConfig& cfg);

// An I-patch and a P-patch of the same video.
struct PatchPair {
    std::size_t i_index = 0;
    std::size_t p_index = 0;
    bool operator==(const PatchPair&) const = default;
};

// One pair per P-patch: the I-patch of the same video with the nearest frame
// index, preferring the same (row, col); remaining ties are broken by `rng`.
// P-patches whose video has no I-patch are skipped.
std::vector<PatchPair> pair_patches(std::span<const Patch> i_patches, std::span<const Patch> p_patches,
                                    std::mt19937_64& rng);

struct PairedSet {
    std::span<const Patch> i_patches;
    std::span<const Patch> p_patches;
};

// Trains a multi network on I/P pairs, re-pairing the training set every epoch.
TrainResult train_paired(Network& net, PairedSet train_set, PairedSet val_set, const TrainConfig& cfg);

struct EvalReport {
    std::vector<std::string> class_names;
    std::size_t samples = 0;
    double accuracy = 0.0;
    double auc = 0.0;  // NaN when no class has both positives and negatives
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
    std::vector<double> precision;
    std::vector<double> recall;
    // Majority vote over each video's patches.
    std::size_t videos = 0;
    double video_accuracy = 0.0;
    std::vector<std::vector<std::size_t>> video_confusion;
};

// Macro one-vs-rest ROC AUC from per-class scores (rows = samples), computed
// with rank sums and average ranks for ties.
double macro_auc(std::span<const int> labels, const std::vector<std::vector<double>>& scores);

// Builds a report from scores; video_ids may be empty (no video-level part).
EvalReport make_report(std::span<const int> labels, const std::vector<std::vector<double>>& scores,
                       std::vector<std::string> class_names, std::span<const std::string> video_ids = {});

// Softmax scores of a network over a patch set, in order, in eval mode.
std::vector<std::vector<double>> predict(Network& net, std::span<const Patch> patches, std::size_t batch = 64);
std::vector<std::vector<double>> predict_paired(Network& net, PairedSet set, std::span<const PatchPair> pairs,
                                                std::size_t batch = 64);

// Errors: empty set, or class names that differ from the network's.
EvalReport evaluate(Network& net, std::span<const Patch> patches, const std::vector<std::string>& class_names);
EvalReport evaluate_paired(Network& net, PairedSet set, const std::vector<std::string>& class_names,
                           std::uint64_t seed);

std::string to_json(const EvalReport& report);
// Counts with percentages of the true-class total, truncated to two decimals,
// e.g. "1238 (96.41%)". Rows are true classes.
std::string format_cell(std::size_t count, std::size_t row_total);
std::string render_confusion(const EvalReport& report);

struct TransferResult {
    TrainResult training;
    EvalReport report;
    std::uint64_t backbone_hash_before = 0;
    std::uint64_t backbone_hash_after = 0;
};

// Freezes the scope, re-initializes the classifier if the class list changed,
// trains and evaluates on the test set.
TransferResult transfer_retrain(Network& net, models::FreezeScope scope, const std::vector<std::string>& class_names,
                                std::span<const Patch> train_set, std::span<const Patch> val_set,
                                std::span<const Patch> test_set, const TrainConfig& cfg);

// Builds the fused network from two stream checkpoints, freezes both
// backbones and trains the head on paired patches.
struct MultiframeResult {
    Network net;
    TrainResult training;
};
MultiframeResult train_multiframe_protocol(const nn::Checkpoint& ind_ckpt, const nn::Checkpoint& pred_ckpt,
                                           const models::ArchConfig& fused_cfg, PairedSet train_set,
                                           PairedSet val_set, const TrainConfig& cfg);

// Loads every patch of one (kind, split) cell; labels must agree with the manifest.
std::vector<Patch> load_split(const ingest::Manifest& manifest, const std::filesystem::path& base_dir,
                              prep::PatchKind kind, ingest::Split split);

} // namespace provnet::train
