#include "provnet/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "provnet/adam.hpp"
#include "provnet/error.hpp"
#include "provnet/log.hpp"
#include "provnet/loss.hpp"
#include "provnet/random.hpp"

namespace provnet::train {

using nlohmann::json;
using nn::Mode;
using nn::Tensor;

void TrainConfig::validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be positive");
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw ConfigError("weight decay must be >= 0");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
    if (patience == 0) throw ConfigError("patience must be positive");
    if (patience > max_epochs) throw ConfigError("patience must not exceed max_epochs");
}

std::string to_json(const TrainConfig& cfg) {
    json j;
    j["lr"] = cfg.lr;
    j["weight_decay"] = cfg.weight_decay;
    j["batch_size"] = cfg.batch_size;
    j["max_epochs"] = cfg.max_epochs;
    j["early_stop_patience"] = cfg.patience;
    j["seed"] = cfg.seed;
    return j.dump();
}

TrainConfig train_config_from_json(const std::string& text) {
    TrainConfig cfg;
    try {
        const json j = json::parse(text);
        if (!j.is_object()) throw ConfigError("training config must be a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (key == "lr") cfg.lr = value.get<double>();
            else if (key == "weight_decay") cfg.weight_decay = value.get<double>();
            else if (key == "batch_size") cfg.batch_size = value.get<std::size_t>();
            else if (key == "max_epochs") cfg.max_epochs = value.get<std::size_t>();
            else if (key == "early_stop_patience") cfg.patience = value.get<std::size_t>();
            else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
            else throw ConfigError("unknown training config key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("training config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

bool EarlyStopping::update(std::size_t epoch, double val_acc) {
    improved_ = val_acc > best_value_;
    if (improved_) {
        best_value_ = val_acc;
        best_epoch_ = epoch;
    }
    return epoch - best_epoch_ >= patience_;
}

void write_history(std::ostream& out, std::span<const EpochRecord> history) {
    for (const auto& r : history) {
        json j;
        j["epoch"] = r.epoch;
        j["train_loss"] = r.train_loss;
        j["val_acc"] = r.val_acc;
        out << j.dump() << '\n';
    }
}

std::vector<EpochRecord> read_history(std::istream& in) {
    std::vector<EpochRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            out.push_back({j.at("epoch").get<std::size_t>(), j.at("train_loss").get<double>(),
                           j.at("val_acc").get<double>()});
        } catch (const json::exception& e) {
            throw DataError("history line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

Tensor<float> stack(std::span<const Patch* const> patches) {
    if (patches.empty()) throw InputError("cannot stack an empty batch");
    const nn::Shape one = patches.front()->tensor.shape();
    Tensor<float> out(nn::Shape{patches.size(), one.c, one.h, one.w});
    for (std::size_t k = 0; k < patches.size(); ++k) {
        const auto& t = patches[k]->tensor;
        if (t.shape().sample_size() != one.sample_size() || t.shape().c != one.c) {
            throw InputError("patch " + std::to_string(k) + " has dims " + t.shape().to_string() + ", expected " +
                             one.to_string());
        }
        std::copy(t.values().begin(), t.values().end(), out.sample(k).begin());
    }
    return out;
}

namespace {

int argmax(const std::vector<double>& row) {
    return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

std::vector<std::vector<double>> rows_of(const Tensor<float>& probs) {
    std::vector<std::vector<double>> out(probs.shape().n);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto s = probs.sample(i);
        out[i].assign(s.begin(), s.end());
    }
    return out;
}

double accuracy_of(std::span<const int> labels, const std::vector<std::vector<double>>& scores) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += argmax(scores[i]) == labels[i];
    return labels.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(labels.size());
}

// Batch boundaries over n samples; a trailing single sample joins the
// previous batch so batch statistics stay defined.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t start = 0; start < n; start += batch) out.emplace_back(start, std::min(n, start + batch));
    if (out.size() > 1 && out.back().second - out.back().first == 1) {
        out[out.size() - 2].second = out.back().second;
        out.pop_back();
    }
    return out;
}

struct Batch {
    Tensor<float> i;
    Tensor<float> p;
    std::vector<int> labels;
};

struct Loop {
    // Returns the number of training samples for the epoch (1-based).
    std::function<std::size_t(std::size_t)> prepare_epoch;
    std::function<Batch(std::span<const std::size_t>)> make_batch;
    std::function<double()> val_accuracy;
};

nn::Checkpoint snapshot(Network& net, const nn::AdamState<float>& adam, const TrainConfig& cfg, std::size_t epoch,
                        double val_acc) {
    nn::Checkpoint ckpt = models::to_checkpoint(net);
    json meta = json::parse(ckpt.metadata);
    meta["training"] = json::parse(to_json(cfg));
    meta["val_acc"] = val_acc;
    ckpt.metadata = meta.dump();
    ckpt.adam = adam;
    ckpt.seed = cfg.seed;
    ckpt.epoch = static_cast<std::uint32_t>(epoch);
    return ckpt;
}

TrainResult run_loop(Network& net, const TrainConfig& cfg, const Loop& loop) {
    cfg.validate();
    nn::AdamState<float> adam;
    adam.hyper.lr = cfg.lr;
    adam.hyper.weight_decay = cfg.weight_decay;
    std::mt19937_64 rng(cfg.seed);

    TrainResult result;
    result.best = snapshot(net, adam, cfg, 0, 0.0);
    EarlyStopping stopper(cfg.patience);
    const auto params = net.parameters(models::ParamGroup::all);

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const std::size_t n = loop.prepare_epoch(epoch);
        if (n < 2) throw ConfigError("training needs at least two samples, got " + std::to_string(n));
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        seeded_shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0;
        try {
            for (const auto& [lo, hi] : batch_ranges(n, cfg.batch_size)) {
                Batch batch = loop.make_batch(std::span<const std::size_t>(order).subspan(lo, hi - lo));
                const Tensor<float> logits = net.kind() == models::StreamKind::multi
                                                 ? net.forward(batch.i, batch.p, Mode::train)
                                                 : net.forward(batch.i, Mode::train);
                if (!logits.all_finite()) throw NumericError("non-finite logits");
                const auto loss = nn::softmax_cross_entropy(logits, std::span<const int>(batch.labels));
                if (!std::isfinite(loss.loss)) throw NumericError("non-finite loss");
                net.zero_grad();
                net.backward(loss.grad_logits);
                nn::adam_step(std::span<nn::Parameter<float>* const>(params), adam);
                loss_sum += loss.loss * static_cast<double>(hi - lo);
            }
        } catch (const NumericError& e) {
            result.aborted = true;
            result.abort_reason = "epoch " + std::to_string(epoch) + ": " + e.what();
            log::warn("training aborted at " + result.abort_reason);
            break;
        }

        const double val_acc = loop.val_accuracy();
        const EpochRecord record{epoch, loss_sum / static_cast<double>(n), val_acc};
        result.history.push_back(record);
        const bool stop = stopper.update(epoch, val_acc);
        if (stopper.improved()) {
            result.best = snapshot(net, adam, cfg, epoch, val_acc);
            result.best_epoch = epoch;
            result.best_val_acc = val_acc;
        }
        char line[160];
        std::snprintf(line, sizeof line, "epoch %zu train_loss %.5f val_acc %.4f%s", epoch, record.train_loss,
                      val_acc, stopper.improved() ? " *" : "");
        log::info(line);
        if (stop) {
            log::info("early stop: no improvement for " + std::to_string(cfg.patience) + " epochs");
            break;
        }
    }
    net.import_parameters(result.best.tensors, true);
    return result;
}

std::vector<int> labels_of(std::span<const Patch> patches) {
    std::vector<int> out;
    out.reserve(patches.size());
    for (const auto& p : patches) out.push_back(p.label);
    return out;
}

void check_classes(const Network& net, const std::vector<std::string>& class_names) {
    if (net.config().class_names != class_names) {
        std::string have, want;
        for (const auto& c : net.config().class_names) have += (have.empty() ? "" : ",") + c;
        for (const auto& c : class_names) want += (want.empty() ? "" : ",") + c;
        throw ConfigError("model classes [" + have + "] do not match data classes [" + want + "]");
    }
}

std::mt19937_64 pairing_rng(std::uint64_t seed, std::size_t epoch) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), 0x9a1bu};
    return std::mt19937_64(seq);
}

} // namespace

TrainResult train(Network& net, std::span<const Patch> train_set, std::span<const Patch> val_set,
                  const TrainConfig& cfg) {
    if (net.kind() == models::StreamKind::multi) throw ConfigError("a multi network trains on pairs");
    if (train_set.empty()) throw ConfigError("empty training set");
    if (val_set.empty()) throw ConfigError("empty validation set");
    const std::vector<int> val_labels = labels_of(val_set);

    Loop loop;
    loop.prepare_epoch = [&](std::size_t) { return train_set.size(); };
    loop.make_batch = [&](std::span<const std::size_t> idx) {
        std::vector<const Patch*> ptrs;
        Batch b;
        for (const std::size_t k : idx) {
            ptrs.push_back(&train_set[k]);
            b.labels.push_back(train_set[k].label);
        }
        b.i = stack(ptrs);
        return b;
    };
    loop.val_accuracy = [&] { return accuracy_of(val_labels, predict(net, val_set)); };
    return run_loop(net, cfg, loop);
}

std::vector<PatchPair> pair_patches(std::span<const Patch> i_patches, std::span<const Patch> p_patches,
                                    std::mt19937_64& rng) {
    std::map<std::string, std::vector<std::size_t>> by_video;
    for (std::size_t k = 0; k < i_patches.size(); ++k) by_video[i_patches[k].origin.video_id].push_back(k);

    std::vector<PatchPair> out;
    out.reserve(p_patches.size());
    std::vector<std::size_t> best;
    for (std::size_t pk = 0; pk < p_patches.size(); ++pk) {
        const auto& po = p_patches[pk].origin;
        const auto it = by_video.find(po.video_id);
        if (it == by_video.end()) continue;
        std::int64_t nearest = std::numeric_limits<std::int64_t>::max();
        for (const std::size_t ik : it->second) {
            const auto d = std::abs(static_cast<std::int64_t>(i_patches[ik].origin.frame_index) -
                                    static_cast<std::int64_t>(po.frame_index));
            nearest = std::min(nearest, d);
        }
        best.clear();
        bool same_cell = false;
        for (const std::size_t ik : it->second) {
            const auto& io = i_patches[ik].origin;
            const auto d = std::abs(static_cast<std::int64_t>(io.frame_index) - static_cast<std::int64_t>(po.frame_index));
            if (d != nearest) continue;
            const bool same = io.row == po.row && io.col == po.col;
            if (same && !same_cell) {
                best.clear();
                same_cell = true;
            }
            if (same == same_cell) best.push_back(ik);
        }
        const std::size_t pick = best.size() == 1 ? best.front() : best[rng() % best.size()];
        if (i_patches[pick].label != p_patches[pk].label) {
            throw InputError("video " + po.video_id + " carries two labels across I and P patches");
        }
        out.push_back({pick, pk});
    }
    return out;
}

std::vector<std::vector<double>> predict(Network& net, std::span<const Patch> patches, std::size_t batch) {
    if (batch == 0) throw ConfigError("batch size must be positive");
    std::vector<std::vector<double>> out;
    out.reserve(patches.size());
    for (std::size_t lo = 0; lo < patches.size(); lo += batch) {
        const std::size_t hi = std::min(patches.size(), lo + batch);
        std::vector<const Patch*> ptrs;
        for (std::size_t k = lo; k < hi; ++k) ptrs.push_back(&patches[k]);
        const auto rows = rows_of(nn::softmax(net.forward(stack(ptrs), Mode::eval)));
        out.insert(out.end(), rows.begin(), rows.end());
    }
    return out;
}

std::vector<std::vector<double>> predict_paired(Network& net, PairedSet set, std::span<const PatchPair> pairs,
                                                std::size_t batch) {
    if (batch == 0) throw ConfigError("batch size must be positive");
    std::vector<std::vector<double>> out;
    out.reserve(pairs.size());
    for (std::size_t lo = 0; lo < pairs.size(); lo += batch) {
        const std::size_t hi = std::min(pairs.size(), lo + batch);
        std::vector<const Patch*> ip, pp;
        for (std::size_t k = lo; k < hi; ++k) {
            ip.push_back(&set.i_patches[pairs[k].i_index]);
            pp.push_back(&set.p_patches[pairs[k].p_index]);
        }
        const auto rows = rows_of(nn::softmax(net.forward(stack(ip), stack(pp), Mode::eval)));
        out.insert(out.end(), rows.begin(), rows.end());
    }
    return out;
}

TrainResult train_paired(Network& net, PairedSet train_set, PairedSet val_set, const TrainConfig& cfg) {
    if (net.kind() != models::StreamKind::multi) throw ConfigError("paired training needs a multi network");
    auto val_rng = pairing_rng(cfg.seed, 0);
    const auto val_pairs = pair_patches(val_set.i_patches, val_set.p_patches, val_rng);
    if (val_pairs.empty()) throw ConfigError("no I/P pairs in the validation set");
    std::vector<int> val_labels;
    for (const auto& pr : val_pairs) val_labels.push_back(val_set.p_patches[pr.p_index].label);

    std::vector<PatchPair> pairs;
    Loop loop;
    loop.prepare_epoch = [&](std::size_t epoch) {
        auto rng = pairing_rng(cfg.seed, epoch);
        pairs = pair_patches(train_set.i_patches, train_set.p_patches, rng);
        return pairs.size();
    };
    loop.make_batch = [&](std::span<const std::size_t> idx) {
        std::vector<const Patch*> ip, pp;
        Batch b;
        for (const std::size_t k : idx) {
            ip.push_back(&train_set.i_patches[pairs[k].i_index]);
            pp.push_back(&train_set.p_patches[pairs[k].p_index]);
            b.labels.push_back(train_set.p_patches[pairs[k].p_index].label);
        }
        b.i = stack(ip);
        b.p = stack(pp);
        return b;
    };
    loop.val_accuracy = [&] { return accuracy_of(val_labels, predict_paired(net, val_set, val_pairs)); };
    return run_loop(net, cfg, loop);
}

double macro_auc(std::span<const int> labels, const std::vector<std::vector<double>>& scores) {
    if (labels.size() != scores.size()) throw InputError("labels and scores differ in length");
    if (scores.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t classes = scores.front().size();
    const std::size_t n = scores.size();
    double sum = 0.0;
    std::size_t used = 0;
    std::vector<std::size_t> order(n);
    std::vector<double> rank(n);
    for (std::size_t c = 0; c < classes; ++c) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a][c] < scores[b][c]; });
        for (std::size_t lo = 0; lo < n;) {
            std::size_t hi = lo + 1;
            while (hi < n && scores[order[hi]][c] == scores[order[lo]][c]) ++hi;
            const double avg = 0.5 * static_cast<double>(lo + hi + 1);  // mean of 1-based ranks lo+1..hi
            for (std::size_t k = lo; k < hi; ++k) rank[order[k]] = avg;
            lo = hi;
        }
        double pos_rank = 0.0;
        std::size_t pos = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (labels[i] == static_cast<int>(c)) {
                pos_rank += rank[i];
                ++pos;
            }
        }
        const std::size_t neg = n - pos;
        if (pos == 0 || neg == 0) continue;
        const double p = static_cast<double>(pos);
        sum += (pos_rank - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
        ++used;
    }
    return used == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(used);
}

EvalReport make_report(std::span<const int> labels, const std::vector<std::vector<double>>& scores,
                       std::vector<std::string> class_names, std::span<const std::string> video_ids) {
    const std::size_t classes = class_names.size();
    if (labels.empty()) throw InputError("cannot report on an empty set");
    if (labels.size() != scores.size()) throw InputError("labels and scores differ in length");
    if (!video_ids.empty() && video_ids.size() != labels.size()) throw InputError("video ids and labels differ in length");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
            throw InputError("label " + std::to_string(labels[i]) + " outside " + std::to_string(classes) + " classes");
        }
        if (scores[i].size() != classes) throw InputError("score row has the wrong number of classes");
    }

    EvalReport r;
    r.class_names = std::move(class_names);
    r.samples = labels.size();
    r.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
    for (std::size_t i = 0; i < labels.size(); ++i) ++r.confusion[labels[i]][argmax(scores[i])];
    std::size_t hits = 0;
    for (std::size_t c = 0; c < classes; ++c) hits += r.confusion[c][c];
    r.accuracy = static_cast<double>(hits) / static_cast<double>(r.samples);
    r.auc = macro_auc(labels, scores);
    for (std::size_t c = 0; c < classes; ++c) {
        std::size_t row = 0, col = 0;
        for (std::size_t k = 0; k < classes; ++k) {
            row += r.confusion[c][k];
            col += r.confusion[k][c];
        }
        r.precision.push_back(col ? static_cast<double>(r.confusion[c][c]) / static_cast<double>(col) : 0.0);
        r.recall.push_back(row ? static_cast<double>(r.confusion[c][c]) / static_cast<double>(row) : 0.0);
    }

    if (!video_ids.empty()) {
        struct Tally {
            int label = -1;
            std::vector<std::size_t> votes;
            std::vector<double> mass;
        };
        std::map<std::string, Tally> videos;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            auto& t = videos[video_ids[i]];
            if (t.votes.empty()) {
                t.label = labels[i];
                t.votes.assign(classes, 0);
                t.mass.assign(classes, 0.0);
            } else if (t.label != labels[i]) {
                throw InputError("video " + video_ids[i] + " has patches with different labels");
            }
            ++t.votes[argmax(scores[i])];
            for (std::size_t c = 0; c < classes; ++c) t.mass[c] += scores[i][c];
        }
        r.video_confusion.assign(classes, std::vector<std::size_t>(classes, 0));
        std::size_t video_hits = 0;
        for (const auto& [id, t] : videos) {
            std::size_t pick = 0;
            for (std::size_t c = 1; c < classes; ++c) {
                if (t.votes[c] > t.votes[pick] || (t.votes[c] == t.votes[pick] && t.mass[c] > t.mass[pick])) pick = c;
            }
            ++r.video_confusion[t.label][pick];
            video_hits += pick == static_cast<std::size_t>(t.label);
        }
        r.videos = videos.size();
        r.video_accuracy = static_cast<double>(video_hits) / static_cast<double>(r.videos);
    }
    return r;
}

EvalReport evaluate(Network& net, std::span<const Patch> patches, const std::vector<std::string>& class_names) {
    check_classes(net, class_names);
    if (patches.empty()) throw DataError("evaluation set is empty");
    const auto scores = predict(net, patches);
    std::vector<std::string> videos;
    for (const auto& p : patches) videos.push_back(p.origin.video_id);
    return make_report(labels_of(patches), scores, class_names, videos);
}

EvalReport evaluate_paired(Network& net, PairedSet set, const std::vector<std::string>& class_names,
                           std::uint64_t seed) {
    check_classes(net, class_names);
    auto rng = pairing_rng(seed, 0);
    const auto pairs = pair_patches(set.i_patches, set.p_patches, rng);
    if (pairs.empty()) throw DataError("evaluation set has no I/P pairs");
    const auto scores = predict_paired(net, set, pairs);
    std::vector<int> labels;
    std::vector<std::string> videos;
    for (const auto& pr : pairs) {
        labels.push_back(set.p_patches[pr.p_index].label);
        videos.push_back(set.p_patches[pr.p_index].origin.video_id);
    }
    return make_report(labels, scores, class_names, videos);
}

std::string to_json(const EvalReport& report) {
    json j;
    j["class_names"] = report.class_names;
    j["samples"] = report.samples;
    j["accuracy"] = report.accuracy;
    j["auc"] = std::isnan(report.auc) ? json(nullptr) : json(report.auc);
    j["confusion"] = report.confusion;
    j["precision"] = report.precision;
    j["recall"] = report.recall;
    if (report.videos > 0) {
        j["videos"] = report.videos;
        j["video_accuracy"] = report.video_accuracy;
        j["video_confusion"] = report.video_confusion;
    }
    return j.dump(2);
}

std::string format_cell(std::size_t count, std::size_t row_total) {
    const std::size_t basis = row_total ? count * 10000 / row_total : 0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu (%zu.%02zu%%)", count, basis / 100, basis % 100);
    return buf;
}

std::string render_confusion(const EvalReport& report) {
    const std::size_t classes = report.class_names.size();
    std::vector<std::vector<std::string>> cells(classes + 1, std::vector<std::string>(classes + 1));
    cells[0][0] = "true \\ pred";
    for (std::size_t c = 0; c < classes; ++c) {
        cells[0][c + 1] = report.class_names[c];
        cells[c + 1][0] = report.class_names[c];
        std::size_t total = 0;
        for (const auto v : report.confusion[c]) total += v;
        for (std::size_t k = 0; k < classes; ++k) cells[c + 1][k + 1] = format_cell(report.confusion[c][k], total);
    }
    std::vector<std::size_t> width(classes + 1, 0);
    for (const auto& row : cells) {
        for (std::size_t k = 0; k < row.size(); ++k) width[k] = std::max(width[k], row[k].size());
    }
    std::ostringstream out;
    for (const auto& row : cells) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            if (k == 0) {
                out << row[k] << std::string(width[k] - row[k].size(), ' ');
            } else {
                out << " | " << std::string(width[k] - row[k].size(), ' ') << row[k];
            }
        }
        out << '\n';
    }
    char line[128];
    std::snprintf(line, sizeof line, "patches %zu  accuracy %.2f%%  macro AUC %.4f\n", report.samples,
                  100.0 * report.accuracy, report.auc);
    out << line;
    if (report.videos > 0) {
        std::snprintf(line, sizeof line, "videos %zu  majority-vote accuracy %.2f%%\n", report.videos,
                      100.0 * report.video_accuracy);
        out << line;
    }
    return out.str();
}

TransferResult transfer_retrain(Network& net, models::FreezeScope scope, const std::vector<std::string>& class_names,
                                std::span<const Patch> train_set, std::span<const Patch> val_set,
                                std::span<const Patch> test_set, const TrainConfig& cfg) {
    TransferResult out;
    out.backbone_hash_before = models::parameter_hash(net, models::ParamGroup::backbone);
    net.freeze(scope);
    if (net.config().class_names != class_names) {
        std::mt19937_64 rng(cfg.seed);
        net.reset_classifier(class_names, rng);
    }
    out.training = train(net, train_set, val_set, cfg);
    out.report = evaluate(net, test_set, class_names);
    out.backbone_hash_after = models::parameter_hash(net, models::ParamGroup::backbone);
    return out;
}

MultiframeResult train_multiframe_protocol(const nn::Checkpoint& ind_ckpt, const nn::Checkpoint& pred_ckpt,
                                           const models::ArchConfig& fused_cfg, PairedSet train_set,
                                           PairedSet val_set, const TrainConfig& cfg) {
    Network ind = models::from_checkpoint(ind_ckpt);
    Network pred = models::from_checkpoint(pred_ckpt);
    if (ind.kind() != models::StreamKind::ind) throw ConfigError("first checkpoint is not an ind network");
    if (pred.kind() != models::StreamKind::pred) throw ConfigError("second checkpoint is not a pred network");
    MultiframeResult out{models::build_multiframe(ind, pred, fused_cfg, cfg.seed), {}};
    out.training = train_paired(out.net, train_set, val_set, cfg);
    return out;
}

std::vector<Patch> load_split(const ingest::Manifest& manifest, const std::filesystem::path& base_dir,
                              prep::PatchKind kind, ingest::Split split) {
    std::vector<Patch> out;
    for (const auto& e : manifest.select(kind, split)) {
        Patch p = prep::load_patch(base_dir / e.patch_path);
        if (p.label != e.label || p.kind != e.kind || p.origin.video_id != e.video_id) {
            throw DataError("patch " + e.patch_path + " disagrees with its manifest entry");
        }
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace provnet::train
