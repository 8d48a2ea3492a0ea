#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "provnet/checkpoint.hpp"
#include "provnet/layers.hpp"

namespace provnet::models {

using nn::Mode;
using nn::Shape;
using nn::Tensor;

enum class StreamKind { ind, pred, multi };

const char* to_string(StreamKind kind);
StreamKind parse_stream_kind(const std::string& s);

// Convolutional feature extractor: one block per entry of `channels`; block b
// holds one Conv-BN-ReLU per entry of kernels[b] and ends in a 2x2 pool.
struct BackboneConfig {
    std::size_t input_channels = 1;
    std::size_t input_size = 256;
    std::vector<std::size_t> channels;
    std::vector<std::vector<std::size_t>> kernels;
    nn::PoolKind pool = nn::PoolKind::max;
    bool global_pool = false;        // true: GAP to a vector, false: flatten the last map
    std::size_t feature_width = 0;   // declared width; checked against the plan

    bool operator==(const BackboneConfig&) const = default;
};

struct ArchConfig {
    StreamKind kind = StreamKind::ind;
    std::vector<std::string> class_names;
    std::optional<BackboneConfig> ind;
    std::optional<BackboneConfig> pred;
    std::vector<std::size_t> head_hidden;  // hidden FC+ReLU widths before the final FC
    std::size_t concat_width = 0;          // declared ind + pred width (multi only)

    std::size_t num_classes() const { return class_names.size(); }
    bool operator==(const ArchConfig&) const = default;
};

// Default plans: 1x256x256 -> 4096 flatten, 3x256x256 -> 256 pooled, fused 4352.
BackboneConfig indnet_backbone();
BackboneConfig prednet_backbone();
ArchConfig indnet_config(std::vector<std::string> class_names);
ArchConfig prednet_config(std::vector<std::string> class_names);
ArchConfig multiframe_config(std::vector<std::string> class_names);

// Reduced-depth 64x64 plans with the same block structure, for desk-scale runs.
ArchConfig indnet_desk_config(std::vector<std::string> class_names);
ArchConfig prednet_desk_config(std::vector<std::string> class_names);
ArchConfig multiframe_desk_config(std::vector<std::string> class_names);

std::string to_json(const ArchConfig& cfg);  // canonical: sorted keys, no whitespace
ArchConfig arch_from_json(const std::string& text);

// FNV-1a of the canonical JSON, as 16 hex digits.
std::string fingerprint(const ArchConfig& cfg);

// Width produced by a backbone plan, or ConfigError if the plan does not fit
// its input (odd size before a pool, empty plan, zero channels).
std::size_t backbone_feature_width(const BackboneConfig& cfg);

enum class FreezeScope { none, conv_blocks };
FreezeScope parse_freeze_scope(const std::string& s);

enum class ParamGroup { all, backbone, head };

// A classifier over one stream (ind, pred) or both (multi). Parameter names
// are prefixed "ind.", "pred." or "head.". Not copyable; snapshots go through
// checkpoints.
class Network {
public:
    explicit Network(ArchConfig cfg);
    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;
    Network(Network&&) noexcept;
    Network& operator=(Network&&) noexcept;
    ~Network();

    const ArchConfig& config() const noexcept { return cfg_; }
    StreamKind kind() const noexcept { return cfg_.kind; }

    // Single-stream forward (ind or pred); logits (n, |C|, 1, 1).
    Tensor<float> forward(const Tensor<float>& input, Mode mode);
    // Two-stream forward (multi).
    Tensor<float> forward(const Tensor<float>& i_input, const Tensor<float>& p_input, Mode mode);
    // Backprop from logits. Frozen backbones receive nothing.
    void backward(const Tensor<float>& grad_logits);

    // Pre-head feature vectors, (n, width, 1, 1).
    Tensor<float> ind_features(const Tensor<float>& input, Mode mode);
    Tensor<float> pred_features(const Tensor<float>& input, Mode mode);
    // Applies the head alone to a feature batch.
    Tensor<float> head_forward(const Tensor<float>& features, Mode mode);

    std::vector<nn::Parameter<float>*> parameters(ParamGroup group = ParamGroup::all);
    std::size_t parameter_count(ParamGroup group = ParamGroup::all);  // excludes running statistics
    void zero_grad();

    // Clears trainable flags in scope (batchnorm gamma/beta included) and runs
    // frozen backbones with stored statistics.
    void freeze(FreezeScope scope);
    bool backbone_frozen() const noexcept { return frozen_; }

    // Replaces the final FC with a freshly initialized one of the new width.
    void reset_classifier(std::vector<std::string> class_names, std::mt19937_64& rng);

    // Per-layer output dims from a shape pass, and as recorded by the last forward.
    std::vector<nn::ShapeTrace> symbolic_shapes(std::size_t batch = 1) const;
    std::vector<nn::ShapeTrace> recorded_shapes() const;

    std::size_t feature_width() const noexcept { return feature_width_; }

    // Parameter values (including running statistics) keyed by name.
    std::vector<nn::NamedTensor> export_parameters(ParamGroup group = ParamGroup::all);
    // Copies every provided tensor whose name exists here; shape mismatch is a
    // ConfigError. Returns the number of tensors imported.
    std::size_t import_parameters(const std::vector<nn::NamedTensor>& tensors, bool require_all);

private:
    std::unique_ptr<nn::Sequential<float>> ind_;
    std::unique_ptr<nn::Sequential<float>> pred_;
    std::unique_ptr<nn::Sequential<float>> head_;
    ArchConfig cfg_;
    std::size_t feature_width_ = 0;
    std::size_t ind_width_ = 0;
    std::size_t batch_ = 0;
    bool frozen_ = false;

    Mode backbone_mode(Mode requested) const { return frozen_ ? Mode::eval : requested; }
    void build_head();
    void check_input(const Tensor<float>& input, const BackboneConfig& cfg, const char* stream) const;
};

// Builders check the plan against the declared widths and initialize weights
// from the seed.
Network build_network(const ArchConfig& cfg, std::uint64_t seed);
Network build_indnet(const ArchConfig& cfg, std::uint64_t seed);
Network build_prednet(const ArchConfig& cfg, std::uint64_t seed);
// Fused network with both backbones imported and frozen; the head is new.
Network build_multiframe(Network& ind, Network& pred, const ArchConfig& cfg, std::uint64_t seed);

// FNV-1a over names, dims and values of a parameter group.
std::uint64_t parameter_hash(Network& net, ParamGroup group);

// Model checkpoint: architecture JSON in metadata, every parameter as a tensor.
nn::Checkpoint to_checkpoint(Network& net);
Network from_checkpoint(const nn::Checkpoint& ckpt);

} // namespace provnet::models
