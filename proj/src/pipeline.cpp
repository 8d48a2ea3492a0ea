#include "provnet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "provnet/checkpoint.hpp"
#include "provnet/error.hpp"
#include "provnet/hash.hpp"
#include "provnet/image.hpp"
#include "provnet/log.hpp"
#include "provnet/preprocess.hpp"

namespace provnet::pipeline {

using nlohmann::json;
using models::StreamKind;

namespace {

fs::path resolve(const fs::path& base, const std::string& value) {
    const fs::path p(value);
    return p.is_absolute() || base.empty() ? p : base / p;
}

synth::DatasetOptions gen_from_json(const json& j) {
    synth::DatasetOptions o;
    for (const auto& [key, value] : j.items()) {
        if (key == "chains") o.chains = synth::parse_chains(json{{"chains", value}}.dump());
        else if (key == "videos_per_chain") o.videos_per_chain = value.get<std::size_t>();
        else if (key == "frames_per_video") o.frames_per_video = value.get<std::size_t>();
        else if (key == "width") o.width = value.get<std::size_t>();
        else if (key == "height") o.height = value.get<std::size_t>();
        else if (key == "devices") o.devices = value.get<std::size_t>();
        else if (key == "p_emulation") o.p_emulation = value.get<bool>();
        else if (key == "gop_length") o.gop_length = value.get<std::size_t>();
        else throw ConfigError("unknown gen key '" + key + "'");
    }
    return o;
}

json gen_to_json(const synth::DatasetOptions& o) {
    json j;
    j["chains"] = json::parse(synth::chains_to_json(o.chains)).at("chains");
    j["videos_per_chain"] = o.videos_per_chain;
    j["frames_per_video"] = o.frames_per_video;
    j["width"] = o.width;
    j["height"] = o.height;
    j["devices"] = o.devices;
    j["p_emulation"] = o.p_emulation;
    j["gop_length"] = o.gop_length;
    return j;
}

std::string patch_file_name(const prep::Patch& p) {
    const char kind = static_cast<char>(p.kind);
    return std::string("patches/") + kind + "/" + p.origin.video_id + "_f" + std::to_string(p.origin.frame_index) +
           "_r" + std::to_string(p.origin.row) + "_c" + std::to_string(p.origin.col) + ".patch";
}

Raster load_frame(const ingest::FrameRecord& record, const fs::path& frame_dir) {
    const fs::path path = resolve(frame_dir, record.frame_path);
    Raster image;
    try {
        image = read_netpbm(path);
    } catch (const std::exception& e) {
        throw DataError("frame " + record.video_id + "#" + std::to_string(record.frame_index) + " (" +
                        record.frame_path + "): " + e.what());
    }
    if (image.width != record.width || image.height != record.height) {
        throw DataError("frame " + record.video_id + "#" + std::to_string(record.frame_index) + " is " +
                        std::to_string(image.width) + "x" + std::to_string(image.height) + ", sidecar says " +
                        std::to_string(record.width) + "x" + std::to_string(record.height));
    }
    return image;
}

int label_index(const ingest::FrameRecord& record, const std::vector<std::string>& class_names) {
    if (record.label.empty()) {
        throw DataError("frame " + record.video_id + "#" + std::to_string(record.frame_index) +
                        " has no label; the sidecar needs a label column");
    }
    const auto it = std::find(class_names.begin(), class_names.end(), record.label);
    if (it == class_names.end()) {
        throw DataError("frame " + record.video_id + "#" + std::to_string(record.frame_index) + " has label '" +
                        record.label + "' outside the configured classes");
    }
    return static_cast<int>(it - class_names.begin());
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path.string());
    f << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot read " + path.string());
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

ingest::Manifest load_store_manifest(const RunConfig& cfg) {
    const fs::path path = manifest_path(cfg);
    if (!fs::exists(path)) throw DataError("no manifest at " + path.string() + "; run `provnet ingest` first");
    return ingest::load_manifest(path);
}

nn::Checkpoint load_stream_checkpoint(const fs::path& path, StreamKind stream) {
    if (!fs::exists(path)) {
        throw ConfigError(std::string("missing ") + models::to_string(stream) + " checkpoint " + path.string() +
                          "; run `provnet train --stream " + models::to_string(stream) + "` first");
    }
    return nn::load_checkpoint(path);
}

std::vector<std::string> checkpoint_classes(const nn::Checkpoint& ckpt) {
    try {
        return json::parse(ckpt.metadata).at("arch").at("class_names").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint metadata: ") + e.what());
    }
}

std::string joined(const std::vector<std::string>& names) {
    std::string s;
    for (const auto& n : names) s += (s.empty() ? "" : ",") + n;
    return s;
}

} // namespace

RunConfig run_config_from_json(const std::string& text, const fs::path& base_dir) {
    RunConfig cfg;
    try {
        const json j = json::parse(text);
        if (!j.is_object()) throw ConfigError("run config must be a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else if (key == "class_names") cfg.class_names = value.get<std::vector<std::string>>();
            else if (key == "data_dir") cfg.data_dir = resolve(base_dir, value.get<std::string>());
            else if (key == "sidecar") cfg.sidecar = resolve(base_dir, value.get<std::string>());
            else if (key == "store") cfg.store = resolve(base_dir, value.get<std::string>());
            else if (key == "run_dir") cfg.run_dir = resolve(base_dir, value.get<std::string>());
            else if (key == "patch_size") cfg.patch_size = value.get<std::size_t>();
            else if (key == "split_by") cfg.split_by = ingest::parse_split_by(value.get<std::string>());
            else if (key == "split_ratios") {
                const auto r = value.get<std::vector<double>>();
                if (r.size() != 3) throw ConfigError("split_ratios needs three values");
                cfg.ratios = {r[0], r[1], r[2]};
            } else if (key == "triplet_stride") cfg.triplet_stride = value.get<std::size_t>();
            else if (key == "devices") cfg.devices = value.get<std::vector<std::string>>();
            else if (key == "stream") cfg.stream = models::parse_stream_kind(value.get<std::string>());
            else if (key == "arch_preset") cfg.arch_preset = value.get<std::string>();
            else if (key == "arch") {
                for (const auto& [stream, doc] : value.items()) {
                    models::parse_stream_kind(stream);
                    cfg.arch[stream] = models::arch_from_json(doc.dump());
                }
            } else if (key == "train") cfg.train = train::train_config_from_json(value.dump());
            else if (key == "ind_checkpoint") cfg.ind_checkpoint = resolve(base_dir, value.get<std::string>());
            else if (key == "pred_checkpoint") cfg.pred_checkpoint = resolve(base_dir, value.get<std::string>());
            else if (key == "checkpoint") cfg.checkpoint = resolve(base_dir, value.get<std::string>());
            else if (key == "gen") cfg.gen = gen_from_json(value);
            else throw ConfigError("unknown run config key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("run config: ") + e.what());
    }
    if (cfg.arch_preset != "full" && cfg.arch_preset != "desk") {
        throw ConfigError("arch_preset must be 'full' or 'desk', got '" + cfg.arch_preset + "'");
    }
    if (cfg.patch_size == 0) throw ConfigError("patch_size must be positive");
    if (cfg.triplet_stride == 0) throw ConfigError("triplet_stride must be positive");
    return cfg;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config " + path.string());
    std::ostringstream s;
    s << f.rdbuf();
    return run_config_from_json(s.str(), path.parent_path());
}

std::string to_json(const RunConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["class_names"] = cfg.class_names;
    j["data_dir"] = cfg.data_dir.generic_string();
    j["sidecar"] = cfg.sidecar.generic_string();
    j["store"] = cfg.store.generic_string();
    j["run_dir"] = cfg.run_dir.generic_string();
    j["patch_size"] = cfg.patch_size;
    j["split_by"] = ingest::to_string(cfg.split_by);
    j["split_ratios"] = {cfg.ratios.train, cfg.ratios.val, cfg.ratios.test};
    j["triplet_stride"] = cfg.triplet_stride;
    j["devices"] = cfg.devices;
    j["stream"] = models::to_string(cfg.stream);
    j["arch_preset"] = cfg.arch_preset;
    j["arch"] = json::object();
    for (const auto& [stream, arch] : cfg.arch) j["arch"][stream] = json::parse(models::to_json(arch));
    json t = json::parse(train::to_json(cfg.train));
    t.erase("seed");
    j["train"] = t;
    j["ind_checkpoint"] = cfg.ind_checkpoint.generic_string();
    j["pred_checkpoint"] = cfg.pred_checkpoint.generic_string();
    j["checkpoint"] = cfg.checkpoint.generic_string();
    j["gen"] = gen_to_json(cfg.gen);
    return j.dump(2);
}

fs::path resolved_sidecar(const RunConfig& cfg) {
    return cfg.sidecar.empty() ? cfg.data_dir / "frames.csv" : cfg.sidecar;
}

fs::path manifest_path(const RunConfig& cfg) { return cfg.store / "manifest.jsonl"; }

fs::path checkpoint_path(const RunConfig& cfg, StreamKind stream) {
    if (stream == StreamKind::ind && !cfg.ind_checkpoint.empty()) return cfg.ind_checkpoint;
    if (stream == StreamKind::pred && !cfg.pred_checkpoint.empty()) return cfg.pred_checkpoint;
    return cfg.run_dir / (std::string(models::to_string(stream)) + ".ckpt");
}

fs::path history_path(const RunConfig& cfg, StreamKind stream) {
    return cfg.run_dir / (std::string(models::to_string(stream)) + "_history.jsonl");
}

fs::path report_path(const RunConfig& cfg, StreamKind stream, const char* extension) {
    return cfg.run_dir / (std::string(models::to_string(stream)) + "_report" + extension);
}

models::ArchConfig arch_for(const RunConfig& cfg, StreamKind stream, const std::vector<std::string>& class_names) {
    const auto it = cfg.arch.find(models::to_string(stream));
    if (it != cfg.arch.end()) {
        if (it->second.kind != stream) throw ConfigError(std::string("arch.") + models::to_string(stream) + " has the wrong kind");
        if (it->second.class_names != class_names) {
            throw ConfigError("arch." + std::string(models::to_string(stream)) + " classes [" +
                              joined(it->second.class_names) + "] do not match data classes [" + joined(class_names) + "]");
        }
        return it->second;
    }
    const bool desk = cfg.arch_preset == "desk";
    switch (stream) {
    case StreamKind::ind: return desk ? models::indnet_desk_config(class_names) : models::indnet_config(class_names);
    case StreamKind::pred: return desk ? models::prednet_desk_config(class_names) : models::prednet_config(class_names);
    case StreamKind::multi:
        return desk ? models::multiframe_desk_config(class_names) : models::multiframe_config(class_names);
    }
    throw ConfigError("unknown stream");
}

synth::GeneratedDataset cmd_gen(const RunConfig& cfg, std::ostream& out) {
    synth::DatasetOptions options = cfg.gen;
    options.seed = cfg.seed;
    if (options.chains.size() < 2) throw ConfigError("gen needs at least two compression chains");
    auto data = synth::generate_dataset(options, cfg.data_dir);
    out << "generated " << data.frames.size() << " frames for " << options.chains.size() << " chains in "
        << cfg.data_dir.string() << " (seed " << cfg.seed << ")\n";
    out << "sidecar " << data.sidecar.string() << '\n';
    return data;
}

ingest::Manifest cmd_ingest(const RunConfig& cfg, std::ostream& out) {
    const fs::path sidecar = resolved_sidecar(cfg);
    std::ifstream in(sidecar, std::ios::binary);
    if (!in) throw DataError("cannot open sidecar " + sidecar.string());
    ingest::FrameIndex index = ingest::parse_frame_index(in, sidecar.string());

    std::vector<ingest::FrameRecord> records;
    for (auto& r : index.records) {
        if (cfg.devices.empty() ||
            std::find(cfg.devices.begin(), cfg.devices.end(), ingest::device_of(r)) != cfg.devices.end()) {
            records.push_back(std::move(r));
        }
    }
    if (records.empty()) throw DataError("no frames left after the device filter");

    std::vector<std::string> class_names = cfg.class_names;
    if (class_names.empty()) {
        for (const auto& r : records) {
            if (!r.label.empty() && std::find(class_names.begin(), class_names.end(), r.label) == class_names.end()) {
                class_names.push_back(r.label);
            }
        }
    }

    const fs::path frame_dir = sidecar.parent_path();
    std::vector<ingest::PatchListing> listing;
    auto store_patches = [&](const std::vector<prep::Patch>& patches) {
        for (const auto& p : patches) {
            const std::string name = patch_file_name(p);
            prep::save_patch(cfg.store / name, p);
            listing.push_back({name, p.label, p.kind, p.origin.video_id, p.origin.frame_index, p.origin.row, p.origin.col});
        }
    };

    fs::create_directories(cfg.store / "patches" / "I");
    fs::create_directories(cfg.store / "patches" / "P");
    std::size_t iframes = 0;
    for (const auto& r : ingest::select_iframes(records)) {
        const int label = label_index(r, class_names);
        store_patches(prep::make_iframe_input(load_frame(r, frame_dir), r.video_id, r.frame_index, label, cfg.patch_size));
        ++iframes;
    }
    const auto triplets = ingest::select_pframe_triplets(records, cfg.triplet_stride);
    for (const auto& t : triplets) {
        prep::PFrameStack stack;
        for (std::size_t k = 0; k < 3; ++k) stack.frames[k] = load_frame(t.frames[k], frame_dir);
        stack.video_id = t.video_id;
        stack.center_index = t.frames[1].frame_index;
        store_patches(prep::make_pframe_input(stack, label_index(t.frames[1], class_names), cfg.patch_size));
    }

    ingest::ManifestOptions options;
    options.ratios = cfg.ratios;
    options.seed = cfg.seed;
    options.split_by = cfg.split_by;
    ingest::Manifest manifest = ingest::build_manifest(std::move(listing), class_names, options);
    ingest::save_manifest(manifest_path(cfg), manifest);

    out << "ingested " << iframes << " I-frames and " << triplets.size() << " P-triplets (" << index.diagnostics.size()
        << " sidecar diagnostics)\n";
    for (const prep::PatchKind kind : {prep::PatchKind::I, prep::PatchKind::P}) {
        for (const ingest::Split split : {ingest::Split::train, ingest::Split::val, ingest::Split::test}) {
            const auto cell = manifest.select(kind, split);
            if (cell.empty()) continue;
            std::vector<std::size_t> counts(class_names.size(), 0);
            for (const auto& e : cell) ++counts[static_cast<std::size_t>(e.label)];
            out << static_cast<char>(kind) << ' ' << ingest::to_string(split) << ':';
            for (std::size_t c = 0; c < class_names.size(); ++c) out << ' ' << class_names[c] << '=' << counts[c];
            out << '\n';
        }
    }
    out << "manifest " << manifest_path(cfg).string() << " hash " << to_hex(ingest::manifest_hash(manifest)) << " (seed "
        << cfg.seed << ")\n";
    return manifest;
}

TrainOutcome cmd_train(const RunConfig& cfg, std::ostream& out) {
    const ingest::Manifest manifest = load_store_manifest(cfg);
    train::TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    tc.validate();
    const models::ArchConfig arch = arch_for(cfg, cfg.stream, manifest.class_names);
    using ingest::Split;
    using prep::PatchKind;

    TrainOutcome outcome;
    std::optional<models::Network> net;
    if (cfg.stream == StreamKind::multi) {
        const auto ind_ckpt = load_stream_checkpoint(checkpoint_path(cfg, StreamKind::ind), StreamKind::ind);
        const auto pred_ckpt = load_stream_checkpoint(checkpoint_path(cfg, StreamKind::pred), StreamKind::pred);
        const auto i_train = train::load_split(manifest, cfg.store, PatchKind::I, Split::train);
        const auto p_train = train::load_split(manifest, cfg.store, PatchKind::P, Split::train);
        const auto i_val = train::load_split(manifest, cfg.store, PatchKind::I, Split::val);
        const auto p_val = train::load_split(manifest, cfg.store, PatchKind::P, Split::val);
        auto result = train::train_multiframe_protocol(ind_ckpt, pred_ckpt, arch, {i_train, p_train}, {i_val, p_val}, tc);
        outcome.result = std::move(result.training);
    } else {
        const PatchKind kind = cfg.stream == StreamKind::ind ? PatchKind::I : PatchKind::P;
        const auto train_set = train::load_split(manifest, cfg.store, kind, Split::train);
        const auto val_set = train::load_split(manifest, cfg.store, kind, Split::val);
        if (train_set.empty() || val_set.empty()) {
            throw ConfigError(std::string("manifest has no ") + static_cast<char>(kind) +
                              "-patches in the train or val split");
        }
        net.emplace(models::build_network(arch, tc.seed));
        outcome.result = train::train(*net, train_set, val_set, tc);
    }

    outcome.checkpoint = checkpoint_path(cfg, cfg.stream);
    outcome.history = history_path(cfg, cfg.stream);
    fs::create_directories(cfg.run_dir);
    if (outcome.checkpoint.has_parent_path()) fs::create_directories(outcome.checkpoint.parent_path());
    nn::save_checkpoint(outcome.checkpoint, outcome.result.best);
    std::ostringstream history;
    train::write_history(history, outcome.result.history);
    write_text(outcome.history, history.str());

    const auto& r = outcome.result;
    char line[200];
    std::snprintf(line, sizeof line, "%s: %zu epochs, best epoch %zu, val accuracy %.4f (seed %llu)\n",
                  models::to_string(cfg.stream), r.history.size(), r.best_epoch, r.best_val_acc,
                  static_cast<unsigned long long>(tc.seed));
    out << line;
    if (r.aborted) out << "training aborted: " << r.abort_reason << "; kept the last good checkpoint\n";
    out << "checkpoint " << outcome.checkpoint.string() << "\nhistory " << outcome.history.string() << '\n';
    return outcome;
}

train::EvalReport cmd_eval(const RunConfig& cfg, std::ostream& out) {
    const ingest::Manifest manifest = load_store_manifest(cfg);
    const fs::path ckpt_path = cfg.checkpoint.empty() ? checkpoint_path(cfg, cfg.stream) : cfg.checkpoint;
    const nn::Checkpoint ckpt = load_stream_checkpoint(ckpt_path, cfg.stream);
    const auto classes = checkpoint_classes(ckpt);
    if (classes != manifest.class_names) {
        throw ConfigError("model classes [" + joined(classes) + "] do not match manifest classes [" +
                          joined(manifest.class_names) + "]");
    }
    models::Network net = models::from_checkpoint(ckpt);
    if (net.kind() != cfg.stream) {
        throw ConfigError(ckpt_path.string() + " holds a " + models::to_string(net.kind()) + " network, not " +
                          models::to_string(cfg.stream));
    }

    using ingest::Split;
    using prep::PatchKind;
    train::EvalReport report;
    if (cfg.stream == StreamKind::multi) {
        const auto i_test = train::load_split(manifest, cfg.store, PatchKind::I, Split::test);
        const auto p_test = train::load_split(manifest, cfg.store, PatchKind::P, Split::test);
        report = train::evaluate_paired(net, {i_test, p_test}, manifest.class_names, cfg.seed);
    } else {
        const PatchKind kind = cfg.stream == StreamKind::ind ? PatchKind::I : PatchKind::P;
        report = train::evaluate(net, train::load_split(manifest, cfg.store, kind, Split::test), manifest.class_names);
    }

    json doc = json::parse(train::to_json(report));
    doc["stream"] = models::to_string(cfg.stream);
    doc["seed"] = cfg.seed;
    doc["checkpoint"] = ckpt_path.generic_string();
    doc["fingerprint"] = models::fingerprint(net.config());
    write_text(report_path(cfg, cfg.stream, ".json"), doc.dump(2) + "\n");
    const std::string text = train::render_confusion(report);
    write_text(report_path(cfg, cfg.stream, ".txt"), text);
    out << text;
    return report;
}

Verdict cmd_infer(const RunConfig& cfg, std::span<const fs::path> inputs, std::ostream& out) {
    if (inputs.empty()) throw ConfigError("infer needs at least one patch file or directory");
    const fs::path ckpt_path = cfg.checkpoint.empty() ? checkpoint_path(cfg, cfg.stream) : cfg.checkpoint;
    models::Network net = models::from_checkpoint(load_stream_checkpoint(ckpt_path, cfg.stream));

    std::vector<fs::path> files;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::recursive_directory_iterator(in)) {
                if (e.is_regular_file() && e.path().extension() == ".patch") found.push_back(e.path());
            }
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else {
            files.push_back(in);
        }
    }
    std::vector<prep::Patch> i_patches, p_patches;
    for (const auto& f : files) {
        prep::Patch p = prep::load_patch(f);
        p.label = 0;  // unknown at inference time
        (p.kind == prep::PatchKind::I ? i_patches : p_patches).push_back(std::move(p));
    }

    std::vector<std::vector<double>> scores;
    std::vector<std::string> videos;
    if (net.kind() == StreamKind::multi) {
        std::mt19937_64 rng(cfg.seed);
        const auto pairs = train::pair_patches(i_patches, p_patches, rng);
        if (pairs.empty()) throw DataError("no I/P patch pairs among the inputs");
        scores = train::predict_paired(net, {i_patches, p_patches}, pairs);
        for (const auto& pr : pairs) videos.push_back(p_patches[pr.p_index].origin.video_id);
    } else {
        const auto& set = net.kind() == StreamKind::ind ? i_patches : p_patches;
        if (set.empty()) {
            throw DataError(std::string("no ") + (net.kind() == StreamKind::ind ? "I" : "P") + "-patches among the inputs");
        }
        scores = train::predict(net, set);
        for (const auto& p : set) videos.push_back(p.origin.video_id);
    }
    std::sort(videos.begin(), videos.end());
    if (std::unique(videos.begin(), videos.end()) - videos.begin() > 1) {
        log::warn("infer: inputs span more than one video; reporting a single verdict");
    }

    Verdict v;
    v.class_names = net.config().class_names;
    const std::size_t classes = v.class_names.size();
    v.patches = scores.size();
    v.mean_probabilities.assign(classes, 0.0);
    v.votes.assign(classes, 0);
    for (const auto& row : scores) {
        ++v.votes[static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin())];
        for (std::size_t c = 0; c < classes; ++c) v.mean_probabilities[c] += row[c] / static_cast<double>(v.patches);
    }
    for (std::size_t c = 1; c < classes; ++c) {
        if (v.votes[c] > v.votes[v.verdict] ||
            (v.votes[c] == v.votes[v.verdict] && v.mean_probabilities[c] > v.mean_probabilities[v.verdict])) {
            v.verdict = c;
        }
    }
    v.confidence = static_cast<double>(v.votes[v.verdict]) / static_cast<double>(v.patches);

    char line[200];
    for (std::size_t c = 0; c < classes; ++c) {
        std::snprintf(line, sizeof line, "%-12s p=%.4f votes=%zu\n", v.class_names[c].c_str(), v.mean_probabilities[c],
                      v.votes[c]);
        out << line;
    }
    std::snprintf(line, sizeof line, "verdict %s confidence %.4f (%zu patches)\n", v.class_names[v.verdict].c_str(),
                  v.confidence, v.patches);
    out << line;
    return v;
}

train::EvalReport report_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        train::EvalReport r;
        r.class_names = j.at("class_names").get<std::vector<std::string>>();
        r.samples = j.at("samples").get<std::size_t>();
        r.accuracy = j.at("accuracy").get<double>();
        r.auc = j.at("auc").is_null() ? std::nan("") : j.at("auc").get<double>();
        r.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
        r.precision = j.at("precision").get<std::vector<double>>();
        r.recall = j.at("recall").get<std::vector<double>>();
        if (j.contains("videos")) {
            r.videos = j.at("videos").get<std::size_t>();
            r.video_accuracy = j.at("video_accuracy").get<double>();
            r.video_confusion = j.at("video_confusion").get<std::vector<std::vector<std::size_t>>>();
        }
        if (r.confusion.size() != r.class_names.size()) throw DataError("report confusion does not match its classes");
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("report: ") + e.what());
    }
}

void cmd_report(const fs::path& input, std::ostream& out) {
    if (input.extension() == ".jsonl") {
        std::istringstream in(read_text(input));
        const auto history = train::read_history(in);
        char line[120];
        out << "epoch  train_loss  val_acc\n";
        for (const auto& r : history) {
            std::snprintf(line, sizeof line, "%5zu  %10.5f  %7.4f\n", r.epoch, r.train_loss, r.val_acc);
            out << line;
        }
        return;
    }
    out << train::render_confusion(report_from_json(read_text(input)));
}

} // namespace provnet::pipeline
