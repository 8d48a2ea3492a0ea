#include "provnet/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "json.hpp"
#include "provnet/error.hpp"
#include "provnet/hash.hpp"

namespace provnet::models {

using nlohmann::json;

namespace {

std::unique_ptr<nn::Sequential<float>> make_backbone(const std::string& prefix, const BackboneConfig& cfg) {
    if (cfg.channels.empty()) throw ConfigError(prefix + " backbone: empty channel plan");
    if (cfg.kernels.size() != cfg.channels.size()) {
        throw ConfigError(prefix + " backbone: kernel plan has " + std::to_string(cfg.kernels.size()) +
                          " blocks but channel plan has " + std::to_string(cfg.channels.size()));
    }
    if (cfg.input_channels == 0 || cfg.input_size == 0) throw ConfigError(prefix + " backbone: empty input");
    auto seq = std::make_unique<nn::Sequential<float>>(prefix);
    std::size_t in = cfg.input_channels;
    for (std::size_t b = 0; b < cfg.channels.size(); ++b) {
        const std::string block = prefix + ".block" + std::to_string(b + 1);
        const std::size_t out = cfg.channels[b];
        if (out == 0) throw ConfigError(block + ": zero channels");
        if (cfg.kernels[b].empty()) throw ConfigError(block + ": no convolutions");
        for (std::size_t j = 0; j < cfg.kernels[b].size(); ++j) {
            const std::size_t k = cfg.kernels[b][j];
            if (k == 0 || k % 2 == 0) throw ConfigError(block + ": kernel sizes must be odd, got " + std::to_string(k));
            const std::string idx = std::to_string(j + 1);
            seq->emplace<nn::Conv2d<float>>(block + ".conv" + idx, in, out, k, 1, k / 2);
            seq->emplace<nn::BatchNorm2d<float>>(block + ".bn" + idx, out);
            seq->emplace<nn::ReLU<float>>(block + ".relu" + idx);
            in = out;
        }
        seq->emplace<nn::Pool2d<float>>(block + ".pool", cfg.pool, 2);
    }
    if (cfg.global_pool) {
        seq->emplace<nn::GlobalAvgPool<float>>(prefix + ".gap");
    } else {
        seq->emplace<nn::Flatten<float>>(prefix + ".flatten");
    }
    return seq;
}

json backbone_json(const BackboneConfig& b) {
    return {{"input_channels", b.input_channels},
            {"input_size", b.input_size},
            {"channels", b.channels},
            {"kernels", b.kernels},
            {"pool", b.pool == nn::PoolKind::max ? "max" : "avg"},
            {"global_pool", b.global_pool},
            {"feature_width", b.feature_width}};
}

BackboneConfig backbone_from_json(const json& j) {
    BackboneConfig b;
    b.input_channels = j.at("input_channels").get<std::size_t>();
    b.input_size = j.at("input_size").get<std::size_t>();
    b.channels = j.at("channels").get<std::vector<std::size_t>>();
    b.kernels = j.at("kernels").get<std::vector<std::vector<std::size_t>>>();
    const auto pool = j.at("pool").get<std::string>();
    if (pool != "max" && pool != "avg") throw ConfigError("unknown pool kind '" + pool + "'");
    b.pool = pool == "max" ? nn::PoolKind::max : nn::PoolKind::avg;
    b.global_pool = j.at("global_pool").get<bool>();
    b.feature_width = j.at("feature_width").get<std::size_t>();
    return b;
}

Tensor<float> concat_features(const Tensor<float>& a, const Tensor<float>& b) {
    const Shape sa = a.shape(), sb = b.shape();
    if (sa.n != sb.n) throw ConfigError("stream batches differ: " + sa.to_string() + " vs " + sb.to_string());
    const std::size_t wa = sa.sample_size(), wb = sb.sample_size();
    Tensor<float> out(Shape{sa.n, wa + wb, 1, 1});
    for (std::size_t n = 0; n < sa.n; ++n) {
        auto dst = out.sample(n);
        std::copy_n(a.sample(n).begin(), wa, dst.begin());
        std::copy_n(b.sample(n).begin(), wb, dst.begin() + static_cast<std::ptrdiff_t>(wa));
    }
    return out;
}

void append(std::vector<nn::Parameter<float>*>& out, nn::Sequential<float>* seq) {
    if (!seq) return;
    for (auto* p : seq->parameters()) out.push_back(p);
}

} // namespace

const char* to_string(StreamKind kind) {
    switch (kind) {
    case StreamKind::ind: return "ind";
    case StreamKind::pred: return "pred";
    case StreamKind::multi: return "multi";
    }
    return "?";
}

StreamKind parse_stream_kind(const std::string& s) {
    if (s == "ind") return StreamKind::ind;
    if (s == "pred") return StreamKind::pred;
    if (s == "multi") return StreamKind::multi;
    throw ConfigError("unknown stream '" + s + "' (expected ind, pred or multi)");
}

BackboneConfig indnet_backbone() {
    BackboneConfig b;
    b.input_channels = 1;
    b.input_size = 256;
    b.channels = {32, 64, 128, 256, 256, 256};
    b.kernels = {{5, 3}, {3, 3}, {3, 3}, {3, 3, 3}, {3, 3, 3}, {3, 3, 3}};
    b.pool = nn::PoolKind::max;
    b.global_pool = false;
    b.feature_width = 4096;
    return b;
}

BackboneConfig prednet_backbone() {
    BackboneConfig b;
    b.input_channels = 3;
    b.input_size = 256;
    b.channels = {32, 64, 128, 256, 256};
    b.kernels = {{5, 5}, {5, 5}, {3, 3}, {3, 3}, {3, 3}};
    b.pool = nn::PoolKind::avg;
    b.global_pool = true;
    b.feature_width = 256;
    return b;
}

ArchConfig indnet_config(std::vector<std::string> class_names) {
    ArchConfig c;
    c.kind = StreamKind::ind;
    c.class_names = std::move(class_names);
    c.ind = indnet_backbone();
    c.head_hidden = {512, 512};
    return c;
}

ArchConfig prednet_config(std::vector<std::string> class_names) {
    ArchConfig c;
    c.kind = StreamKind::pred;
    c.class_names = std::move(class_names);
    c.pred = prednet_backbone();
    return c;
}

ArchConfig multiframe_config(std::vector<std::string> class_names) {
    ArchConfig c;
    c.kind = StreamKind::multi;
    c.class_names = std::move(class_names);
    c.ind = indnet_backbone();
    c.pred = prednet_backbone();
    c.head_hidden = {512};
    c.concat_width = 4352;
    return c;
}

ArchConfig indnet_desk_config(std::vector<std::string> class_names) {
    ArchConfig c = indnet_config(std::move(class_names));
    c.ind->input_size = 64;
    c.ind->channels = {8, 16, 32, 32};
    c.ind->kernels = {{5, 3}, {3, 3}, {3, 3, 3}, {3, 3, 3}};
    c.ind->feature_width = 512;
    c.head_hidden = {64, 64};
    return c;
}

ArchConfig prednet_desk_config(std::vector<std::string> class_names) {
    ArchConfig c = prednet_config(std::move(class_names));
    c.pred->input_size = 64;
    c.pred->channels = {8, 16, 32};
    c.pred->kernels = {{5, 5}, {5, 5}, {3, 3}};
    c.pred->feature_width = 32;
    return c;
}

ArchConfig multiframe_desk_config(std::vector<std::string> class_names) {
    ArchConfig c = multiframe_config(class_names);
    c.ind = indnet_desk_config(class_names).ind;
    c.pred = prednet_desk_config(class_names).pred;
    c.head_hidden = {64};
    c.concat_width = 544;
    return c;
}

std::string to_json(const ArchConfig& cfg) {
    json j;
    j["kind"] = to_string(cfg.kind);
    j["class_names"] = cfg.class_names;
    j["head_hidden"] = cfg.head_hidden;
    if (cfg.ind) j["ind"] = backbone_json(*cfg.ind);
    if (cfg.pred) j["pred"] = backbone_json(*cfg.pred);
    if (cfg.kind == StreamKind::multi) j["concat_width"] = cfg.concat_width;
    return j.dump();
}

ArchConfig arch_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        ArchConfig c;
        c.kind = parse_stream_kind(j.at("kind").get<std::string>());
        c.class_names = j.at("class_names").get<std::vector<std::string>>();
        c.head_hidden = j.value("head_hidden", std::vector<std::size_t>{});
        if (j.contains("ind")) c.ind = backbone_from_json(j.at("ind"));
        if (j.contains("pred")) c.pred = backbone_from_json(j.at("pred"));
        c.concat_width = j.value("concat_width", std::size_t{0});
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("architecture config: ") + e.what());
    }
}

std::string fingerprint(const ArchConfig& cfg) { return to_hex(fnv1a(to_json(cfg))); }

std::size_t backbone_feature_width(const BackboneConfig& cfg) {
    const auto seq = make_backbone("probe", cfg);
    return seq->output_shape(Shape{1, cfg.input_channels, cfg.input_size, cfg.input_size}).sample_size();
}

FreezeScope parse_freeze_scope(const std::string& s) {
    if (s == "none") return FreezeScope::none;
    if (s == "conv_blocks") return FreezeScope::conv_blocks;
    throw ConfigError("unknown freeze scope '" + s + "' (expected conv_blocks or none)");
}

// ------------------------------------------------------------- Network

Network::Network(ArchConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.class_names.size() < 2) throw ConfigError("a classifier needs at least two class names");
    const auto checked = [](const std::string& prefix, const BackboneConfig& b) {
        auto seq = make_backbone(prefix, b);
        const std::size_t width =
            seq->output_shape(Shape{1, b.input_channels, b.input_size, b.input_size}).sample_size();
        if (width != b.feature_width) {
            throw ConfigError(prefix + " backbone: plan yields feature width " + std::to_string(width) +
                              ", declared " + std::to_string(b.feature_width));
        }
        return seq;
    };
    switch (cfg_.kind) {
    case StreamKind::ind:
        if (!cfg_.ind || cfg_.pred) throw ConfigError("ind network needs exactly the ind backbone");
        ind_ = checked("ind", *cfg_.ind);
        feature_width_ = cfg_.ind->feature_width;
        break;
    case StreamKind::pred:
        if (!cfg_.pred || cfg_.ind) throw ConfigError("pred network needs exactly the pred backbone");
        ind_.reset();
        pred_ = checked("pred", *cfg_.pred);
        feature_width_ = cfg_.pred->feature_width;
        break;
    case StreamKind::multi:
        if (!cfg_.ind || !cfg_.pred) throw ConfigError("multi network needs both backbones");
        ind_ = checked("ind", *cfg_.ind);
        pred_ = checked("pred", *cfg_.pred);
        ind_width_ = cfg_.ind->feature_width;
        feature_width_ = cfg_.ind->feature_width + cfg_.pred->feature_width;
        if (feature_width_ != cfg_.concat_width) {
            throw ConfigError("concatenated feature width " + std::to_string(feature_width_) + " != declared " +
                              std::to_string(cfg_.concat_width));
        }
        break;
    }
    build_head();
}

Network::Network(Network&&) noexcept = default;
Network& Network::operator=(Network&&) noexcept = default;
Network::~Network() = default;

void Network::build_head() {
    head_ = std::make_unique<nn::Sequential<float>>("head");
    std::size_t in = feature_width_;
    for (std::size_t i = 0; i < cfg_.head_hidden.size(); ++i) {
        const std::string idx = std::to_string(i + 1);
        if (cfg_.head_hidden[i] == 0) throw ConfigError("head layer " + idx + " has zero width");
        head_->emplace<nn::Linear<float>>("head.fc" + idx, in, cfg_.head_hidden[i]);
        head_->emplace<nn::ReLU<float>>("head.relu" + idx);
        in = cfg_.head_hidden[i];
    }
    head_->emplace<nn::Linear<float>>("head.classifier", in, cfg_.class_names.size());
}

void Network::check_input(const Tensor<float>& input, const BackboneConfig& cfg, const char* stream) const {
    const Shape s = input.shape();
    if (s.c != cfg.input_channels || s.h != cfg.input_size || s.w != cfg.input_size || s.n == 0) {
        throw ConfigError(std::string(stream) + " stream expects (n, " + std::to_string(cfg.input_channels) + ", " +
                          std::to_string(cfg.input_size) + ", " + std::to_string(cfg.input_size) + ") input, got " +
                          s.to_string());
    }
}

Tensor<float> Network::ind_features(const Tensor<float>& input, Mode mode) {
    if (!ind_) throw ConfigError(std::string(to_string(cfg_.kind)) + " network has no ind stream");
    check_input(input, *cfg_.ind, "ind");
    return ind_->forward(input, backbone_mode(mode));
}

Tensor<float> Network::pred_features(const Tensor<float>& input, Mode mode) {
    if (!pred_) throw ConfigError(std::string(to_string(cfg_.kind)) + " network has no pred stream");
    check_input(input, *cfg_.pred, "pred");
    return pred_->forward(input, backbone_mode(mode));
}

Tensor<float> Network::head_forward(const Tensor<float>& features, Mode mode) {
    if (features.shape().sample_size() != feature_width_) {
        throw ConfigError("head expects " + std::to_string(feature_width_) + " features, got " +
                          features.shape().to_string());
    }
    Tensor<float> f = features;
    f.reshape(Shape{features.shape().n, feature_width_, 1, 1});
    return head_->forward(f, mode);
}

Tensor<float> Network::forward(const Tensor<float>& input, Mode mode) {
    if (cfg_.kind == StreamKind::multi) throw ConfigError("multi network needs an I and a P input");
    const Tensor<float> features = cfg_.kind == StreamKind::ind ? ind_features(input, mode) : pred_features(input, mode);
    batch_ = input.shape().n;
    return head_forward(features, mode);
}

Tensor<float> Network::forward(const Tensor<float>& i_input, const Tensor<float>& p_input, Mode mode) {
    if (cfg_.kind != StreamKind::multi) throw ConfigError("two-input forward needs a multi network");
    if (i_input.shape().n != p_input.shape().n) throw ConfigError("I and P batches differ in size");
    const Tensor<float> fi = ind_features(i_input, mode);
    const Tensor<float> fp = pred_features(p_input, mode);
    batch_ = i_input.shape().n;
    return head_forward(concat_features(fi, fp), mode);
}

void Network::backward(const Tensor<float>& grad_logits) {
    const Tensor<float> grad_features = head_->backward(grad_logits);
    if (frozen_) return;
    switch (cfg_.kind) {
    case StreamKind::ind: ind_->backward(grad_features); break;
    case StreamKind::pred: pred_->backward(grad_features); break;
    case StreamKind::multi: {
        const std::size_t n = grad_features.shape().n;
        const std::size_t wp = feature_width_ - ind_width_;
        Tensor<float> gi(Shape{n, ind_width_, 1, 1}), gp(Shape{n, wp, 1, 1});
        for (std::size_t s = 0; s < n; ++s) {
            const auto src = grad_features.sample(s);
            std::copy_n(src.begin(), ind_width_, gi.sample(s).begin());
            std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(ind_width_), wp, gp.sample(s).begin());
        }
        ind_->backward(gi);
        pred_->backward(gp);
        break;
    }
    }
}

std::vector<nn::Parameter<float>*> Network::parameters(ParamGroup group) {
    std::vector<nn::Parameter<float>*> out;
    if (group != ParamGroup::head) {
        append(out, ind_.get());
        append(out, pred_.get());
    }
    if (group != ParamGroup::backbone) append(out, head_.get());
    return out;
}

std::size_t Network::parameter_count(ParamGroup group) {
    std::size_t n = 0;
    for (const auto* p : parameters(group)) {
        if (!p->buffer) n += p->value.size();
    }
    return n;
}

void Network::zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
}

void Network::freeze(FreezeScope scope) {
    frozen_ = scope == FreezeScope::conv_blocks;
    for (auto* p : parameters(ParamGroup::backbone)) p->trainable = !frozen_;
}

void Network::reset_classifier(std::vector<std::string> class_names, std::mt19937_64& rng) {
    if (class_names.size() < 2) throw ConfigError("a classifier needs at least two class names");
    const auto hidden = export_parameters(ParamGroup::head);
    cfg_.class_names = std::move(class_names);
    build_head();
    std::vector<nn::NamedTensor> keep;
    for (const auto& t : hidden) {
        if (t.name.rfind("head.classifier", 0) != 0) keep.push_back(t);
    }
    import_parameters(keep, false);
    nn::he_uniform_init(head_->layer(head_->size() - 1), rng);
}

std::vector<nn::ShapeTrace> Network::symbolic_shapes(std::size_t batch) const {
    std::vector<nn::ShapeTrace> out;
    Shape features{batch, 0, 1, 1};
    if (ind_) {
        const auto t = ind_->symbolic_shapes(Shape{batch, cfg_.ind->input_channels, cfg_.ind->input_size, cfg_.ind->input_size});
        out.insert(out.end(), t.begin(), t.end());
        features.c += t.back().shape.sample_size();
    }
    if (pred_) {
        const auto t =
            pred_->symbolic_shapes(Shape{batch, cfg_.pred->input_channels, cfg_.pred->input_size, cfg_.pred->input_size});
        out.insert(out.end(), t.begin(), t.end());
        features.c += t.back().shape.sample_size();
    }
    if (cfg_.kind == StreamKind::multi) out.push_back({"concat", features});
    const auto h = head_->symbolic_shapes(features);
    out.insert(out.end(), h.begin(), h.end());
    return out;
}

std::vector<nn::ShapeTrace> Network::recorded_shapes() const {
    std::vector<nn::ShapeTrace> out;
    Shape features{batch_, 0, 1, 1};
    for (const auto* seq : {ind_.get(), pred_.get()}) {
        if (!seq) continue;
        const auto& t = seq->recorded_shapes();
        out.insert(out.end(), t.begin(), t.end());
        if (!t.empty()) features.c += t.back().shape.sample_size();
    }
    if (cfg_.kind == StreamKind::multi) out.push_back({"concat", features});
    const auto& h = head_->recorded_shapes();
    out.insert(out.end(), h.begin(), h.end());
    return out;
}

std::vector<nn::NamedTensor> Network::export_parameters(ParamGroup group) {
    std::vector<nn::NamedTensor> out;
    for (const auto* p : parameters(group)) {
        out.push_back({p->name, p->value.shape(), p->value.storage()});
    }
    return out;
}

std::size_t Network::import_parameters(const std::vector<nn::NamedTensor>& tensors, bool require_all) {
    std::map<std::string, const nn::NamedTensor*> by_name;
    for (const auto& t : tensors) by_name[t.name] = &t;
    std::size_t imported = 0;
    for (auto* p : parameters()) {
        const auto it = by_name.find(p->name);
        if (it == by_name.end()) {
            if (require_all) throw ConfigError("parameter " + p->name + " missing from the source");
            continue;
        }
        if (it->second->shape != p->value.shape()) {
            throw ConfigError("parameter " + p->name + " has dims " + it->second->shape.to_string() + ", expected " +
                              p->value.shape().to_string());
        }
        p->value.storage() = it->second->values;
        ++imported;
    }
    return imported;
}

// ------------------------------------------------------------- builders

Network build_network(const ArchConfig& cfg, std::uint64_t seed) {
    Network net(cfg);
    std::mt19937_64 rng(seed);
    // He-uniform in parameter order (backbones, then head); fan-in from the weight dims.
    for (auto* p : net.parameters()) {
        if (p->buffer) {
            p->value.fill(p->name.ends_with("running_var") ? 1.0f : 0.0f);
            continue;
        }
        const Shape s = p->value.shape();
        if (p->name.ends_with(".gamma")) {
            p->value.fill(1.0f);
        } else if (p->name.ends_with(".beta") || p->name.ends_with(".bias")) {
            p->value.fill(0.0f);
        } else {
            // Conv weights (out, in, k, k): fan-in in*k*k. Linear (1, 1, out, in): fan-in in.
            const bool conv = p->name.find(".conv") != std::string::npos;
            const std::size_t fan_in = conv ? s.c * s.h * s.w : s.w;
            const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (auto& v : p->value.values()) v = static_cast<float>(dist(rng));
        }
    }
    return net;
}

Network build_indnet(const ArchConfig& cfg, std::uint64_t seed) {
    if (cfg.kind != StreamKind::ind) throw ConfigError("build_indnet needs an ind config");
    return build_network(cfg, seed);
}

Network build_prednet(const ArchConfig& cfg, std::uint64_t seed) {
    if (cfg.kind != StreamKind::pred) throw ConfigError("build_prednet needs a pred config");
    return build_network(cfg, seed);
}

Network build_multiframe(Network& ind, Network& pred, const ArchConfig& cfg, std::uint64_t seed) {
    if (cfg.kind != StreamKind::multi) throw ConfigError("build_multiframe needs a multi config");
    if (ind.kind() != StreamKind::ind || pred.kind() != StreamKind::pred) {
        throw ConfigError("build_multiframe needs an ind and a pred network");
    }
    if (ind.config().class_names != cfg.class_names || pred.config().class_names != cfg.class_names) {
        throw ConfigError("stream networks and fused head disagree on class names");
    }
    if (ind.config().ind != cfg.ind || pred.config().pred != cfg.pred) {
        throw ConfigError("stream backbones do not match the fused configuration");
    }
    Network net = build_network(cfg, seed);
    net.import_parameters(ind.export_parameters(ParamGroup::backbone), false);
    net.import_parameters(pred.export_parameters(ParamGroup::backbone), false);
    net.freeze(FreezeScope::conv_blocks);
    return net;
}

std::uint64_t parameter_hash(Network& net, ParamGroup group) {
    Fnv1a h;
    for (const auto* p : net.parameters(group)) {
        h.update(p->name);
        const Shape s = p->value.shape();
        const std::array<std::uint64_t, 4> dims{s.n, s.c, s.h, s.w};
        h.update_values(std::span<const std::uint64_t>(dims));
        h.update_values(p->value.values());
    }
    return h.digest();
}

nn::Checkpoint to_checkpoint(Network& net) {
    nn::Checkpoint ckpt;
    json meta;
    meta["arch"] = json::parse(to_json(net.config()));
    meta["frozen"] = net.backbone_frozen();
    ckpt.metadata = meta.dump();
    ckpt.tensors = net.export_parameters();
    return ckpt;
}

Network from_checkpoint(const nn::Checkpoint& ckpt) {
    json meta;
    try {
        meta = json::parse(ckpt.metadata);
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint metadata: ") + e.what());
    }
    if (!meta.contains("arch")) throw DataError("checkpoint metadata has no architecture");
    Network net(arch_from_json(meta["arch"].dump()));
    net.import_parameters(ckpt.tensors, true);
    if (meta.value("frozen", false)) net.freeze(FreezeScope::conv_blocks);
    return net;
}

} // namespace provnet::models
