#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "provnet/error.hpp"
#include "provnet/log.hpp"
#include "provnet/training.hpp"

using namespace provnet;
using namespace provnet::train;
using models::ArchConfig;
using models::BackboneConfig;
using models::StreamKind;

namespace {

const std::vector<std::string> abc{"A", "B", "C"};

BackboneConfig tiny_backbone(std::size_t channels, bool global_pool) {
    BackboneConfig b;
    b.input_channels = channels;
    b.input_size = 8;
    b.channels = {4};
    b.kernels = {{3}};
    b.pool = global_pool ? nn::PoolKind::avg : nn::PoolKind::max;
    b.global_pool = global_pool;
    b.feature_width = global_pool ? 4 : 64;
    return b;
}

ArchConfig tiny_ind(std::vector<std::string> names = abc) {
    ArchConfig c;
    c.kind = StreamKind::ind;
    c.class_names = std::move(names);
    c.ind = tiny_backbone(1, false);
    c.head_hidden = {8};
    return c;
}

ArchConfig tiny_pred(std::vector<std::string> names = abc) {
    ArchConfig c;
    c.kind = StreamKind::pred;
    c.class_names = std::move(names);
    c.pred = tiny_backbone(3, true);
    return c;
}

ArchConfig tiny_multi(std::vector<std::string> names = abc) {
    ArchConfig c;
    c.kind = StreamKind::multi;
    c.class_names = std::move(names);
    c.ind = tiny_backbone(1, false);
    c.pred = tiny_backbone(3, true);
    c.head_hidden = {8};
    c.concat_width = 68;
    return c;
}

// Class 0: horizontal stripes, 1: vertical stripes, 2: checkerboard, each
// with random amplitude and additive noise.
Patch toy_patch(int label, std::size_t channels, std::mt19937_64& rng, const std::string& video, std::uint32_t frame,
                prep::PatchKind kind = prep::PatchKind::I) {
    std::uniform_real_distribution<double> amp(0.5, 1.5);
    std::normal_distribution<double> noise(0.0, 0.2);
    Patch p;
    p.tensor = nn::Tensor<float>(nn::Shape{1, channels, 8, 8});
    const double a = amp(rng);
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t y = 0; y < 8; ++y) {
            for (std::size_t x = 0; x < 8; ++x) {
                const std::size_t t = label == 0 ? y : label == 1 ? x : x + y;
                p.tensor.at(0, c, y, x) = static_cast<float>(a * ((t % 2) ? 1.0 : -1.0) + noise(rng));
            }
        }
    }
    p.label = label;
    p.kind = kind;
    p.origin = {video, frame, 0, 0};
    return p;
}

std::vector<Patch> toy_set(std::size_t per_class, std::size_t channels, std::uint64_t seed,
                           prep::PatchKind kind = prep::PatchKind::I) {
    std::mt19937_64 rng(seed);
    std::vector<Patch> out;
    for (std::size_t k = 0; k < per_class; ++k) {
        for (int c = 0; c < 3; ++c) {
            const std::string video = abc[static_cast<std::size_t>(c)] + "_" + std::to_string(k / 4);
            out.push_back(toy_patch(c, channels, rng, video, static_cast<std::uint32_t>(k % 4), kind));
        }
    }
    return out;
}

TrainConfig fast_config(std::uint64_t seed = 1) {
    TrainConfig cfg;
    cfg.lr = 3e-3;
    cfg.batch_size = 16;
    cfg.max_epochs = 12;
    cfg.patience = 12;
    cfg.seed = seed;
    return cfg;
}

struct QuietLog {
    log::Sink previous = log::set_sink([](log::Level, std::string_view) {});
    ~QuietLog() { log::set_sink(previous); }
};

std::string bytes_of(const nn::Checkpoint& ckpt) {
    std::ostringstream out;
    nn::write_checkpoint(out, ckpt);
    return out.str();
}

// Pairwise AUC: fraction of (positive, negative) pairs ordered correctly, ties 1/2.
double pairwise_auc(std::span<const int> labels, const std::vector<std::vector<double>>& scores, std::size_t c) {
    double good = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != static_cast<int>(c)) continue;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (labels[j] == static_cast<int>(c)) continue;
            pairs += 1.0;
            good += scores[i][c] > scores[j][c] ? 1.0 : scores[i][c] == scores[j][c] ? 0.5 : 0.0;
        }
    }
    return good / pairs;
}

} // namespace

TEST_CASE("training config parses, validates and round-trips") {
    TrainConfig cfg;
    CHECK(cfg.lr == doctest::Approx(1e-4));
    CHECK(cfg.weight_decay == doctest::Approx(5e-5));
    CHECK(cfg.batch_size == 32);
    CHECK(cfg.max_epochs == 80);
    CHECK(cfg.patience == 10);
    cfg.seed = 99;
    cfg.batch_size = 7;
    CHECK(train_config_from_json(to_json(cfg)) == cfg);
    CHECK(train_config_from_json(R"({"lr":0.01})").lr == doctest::Approx(0.01));
    CHECK_THROWS_AS(train_config_from_json(R"({"learning_rate":0.01})"), ConfigError);
    CHECK_THROWS_AS(train_config_from_json(R"({"lr":-1})"), ConfigError);
    CHECK_THROWS_AS(train_config_from_json(R"({"batch_size":0})"), ConfigError);
    CHECK_THROWS_AS(train_config_from_json("[1,2]"), ConfigError);
    CHECK_THROWS_AS(train_config_from_json("{"), ConfigError);
}

TEST_CASE("early stopping halts patience epochs after the best one") {
    EarlyStopping stop(10);
    CHECK_FALSE(stop.update(1, 0.60));
    for (std::size_t e = 2; e <= 10; ++e) CHECK_FALSE(stop.update(e, 0.55));
    CHECK(stop.update(11, 0.59));
    CHECK(stop.best_epoch() == 1);

    SUBCASE("ties keep the earlier epoch") {
        EarlyStopping s(3);
        s.update(1, 0.5);
        s.update(2, 0.7);
        CHECK_FALSE(s.update(3, 0.7));
        CHECK_FALSE(s.improved());
        CHECK(s.best_epoch() == 2);
        CHECK_FALSE(s.update(4, 0.7));
        CHECK(s.update(5, 0.7));
    }
}

TEST_CASE("history is JSON lines and round-trips") {
    const std::vector<EpochRecord> h{{1, 1.25, 0.5}, {2, 0.75, 0.625}};
    std::stringstream io;
    write_history(io, h);
    const std::string text = io.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
    CHECK(read_history(io) == h);
    std::istringstream bad("{\"epoch\":1}\n");
    CHECK_THROWS_AS(read_history(bad), DataError);
}

TEST_CASE("a separable toy problem is learned and the best epoch is restored") {
    QuietLog quiet;
    // Validating on the training set makes the restored epoch the one with
    // the best training accuracy.
    const auto train_set = toy_set(20, 1, 11);
    const auto& val_set = train_set;
    auto net = models::build_network(tiny_ind(), 5);
    TrainConfig cfg = fast_config();
    cfg.max_epochs = 30;
    cfg.patience = 30;
    const TrainResult r = train::train(net, train_set, val_set, cfg);

    REQUIRE_FALSE(r.aborted);
    CHECK(r.history.size() == 30);
    const auto best = std::max_element(r.history.begin(), r.history.end(),
                                       [](const auto& a, const auto& b) { return a.val_acc < b.val_acc; });
    CHECK(r.best_epoch == best->epoch);
    CHECK(r.best_val_acc == best->val_acc);
    CHECK(r.best.epoch == r.best_epoch);
    CHECK(r.history.front().train_loss > r.history.back().train_loss);

    std::vector<int> labels;
    for (const auto& p : train_set) labels.push_back(p.label);
    CHECK(r.best_val_acc == 1.0);
    CHECK(make_report(labels, predict(net, train_set), abc).accuracy == 1.0);
    CHECK(net.export_parameters() == r.best.tensors);
    CHECK(evaluate(net, val_set, abc).accuracy == doctest::Approx(r.best_val_acc));
}

TEST_CASE("training is deterministic for a seed") {
    QuietLog quiet;
    const auto train_set = toy_set(8, 1, 21);
    const auto val_set = toy_set(3, 1, 22);
    TrainConfig cfg = fast_config(3);
    cfg.max_epochs = 3;
    cfg.patience = 3;
    auto a = models::build_network(tiny_ind(), 8);
    auto b = models::build_network(tiny_ind(), 8);
    const auto ra = train::train(a, train_set, val_set, cfg);
    const auto rb = train::train(b, train_set, val_set, cfg);
    CHECK(ra.history == rb.history);
    CHECK(bytes_of(ra.best) == bytes_of(rb.best));

    cfg.seed = 4;
    auto c = models::build_network(tiny_ind(), 8);
    CHECK(train::train(c, train_set, val_set, cfg).history != ra.history);
}

TEST_CASE("non-finite training input aborts and keeps the last good parameters") {
    QuietLog quiet;
    auto train_set = toy_set(4, 1, 31);
    const auto val_set = toy_set(2, 1, 32);
    for (auto& p : train_set) p.tensor[0] = std::numeric_limits<float>::quiet_NaN();
    auto net = models::build_network(tiny_ind(), 2);
    const auto before = net.export_parameters();
    const auto r = train::train(net, train_set, val_set, fast_config());
    CHECK(r.aborted);
    CHECK(r.abort_reason.find("epoch 1") != std::string::npos);
    CHECK(r.history.empty());
    CHECK(r.best_epoch == 0);
    CHECK(net.export_parameters() == before);
}

TEST_CASE("training rejects empty sets and the wrong stream") {
    auto net = models::build_network(tiny_ind(), 2);
    const auto set = toy_set(2, 1, 1);
    CHECK_THROWS_AS(train::train(net, {}, set, fast_config()), ConfigError);
    CHECK_THROWS_AS(train::train(net, set, {}, fast_config()), ConfigError);
    auto multi = models::build_network(tiny_multi(), 2);
    CHECK_THROWS_AS(train::train(multi, set, set, fast_config()), ConfigError);
}

TEST_CASE("perfect scores give accuracy and AUC of one") {
    std::vector<int> labels;
    std::vector<std::vector<double>> scores;
    for (int i = 0; i < 30; ++i) {
        labels.push_back(i % 3);
        std::vector<double> row(3, 0.1);
        row[static_cast<std::size_t>(i % 3)] = 0.8;
        scores.push_back(row);
    }
    const auto r = make_report(labels, scores, abc);
    CHECK(r.accuracy == 1.0);
    CHECK(r.auc == 1.0);
    CHECK(r.precision == std::vector<double>{1.0, 1.0, 1.0});
    CHECK(r.recall == std::vector<double>{1.0, 1.0, 1.0});
}

TEST_CASE("random scores sit at chance and AUC matches the pairwise oracle") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<int> labels;
    std::vector<std::vector<double>> scores;
    for (int i = 0; i < 3000; ++i) {
        labels.push_back(static_cast<int>(rng() % 3));
        std::vector<double> row{u(rng), u(rng), u(rng)};
        const double s = row[0] + row[1] + row[2];
        for (auto& v : row) v /= s;
        scores.push_back(row);
    }
    const auto r = make_report(labels, scores, abc);
    CHECK(r.accuracy == doctest::Approx(1.0 / 3.0).epsilon(0.1));
    CHECK(std::abs(r.auc - 0.5) < 0.05);

    double oracle = 0.0;
    for (std::size_t c = 0; c < 3; ++c) oracle += pairwise_auc(labels, scores, c) / 3.0;
    CHECK(r.auc == doctest::Approx(oracle).epsilon(1e-12));

    SUBCASE("strictly increasing transforms leave AUC unchanged") {
        auto warped = scores;
        for (auto& row : warped) {
            for (auto& v : row) v = std::exp(4.0 * v) + std::pow(v, 3.0);
        }
        CHECK(macro_auc(labels, warped) == doctest::Approx(r.auc).epsilon(1e-12));
    }
}

TEST_CASE("tied scores use average ranks and single-class sets give NaN") {
    const std::vector<int> labels{0, 0, 1, 1};
    const std::vector<std::vector<double>> scores{{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}};
    CHECK(macro_auc(labels, scores) == 0.5);
    const std::vector<int> one{0, 0};
    CHECK(std::isnan(macro_auc(one, {{0.6, 0.4}, {0.7, 0.3}})));
}

TEST_CASE("confusion sums to class counts and its trace gives accuracy") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int> labels;
        std::vector<std::vector<double>> scores;
        const std::size_t n = 50 + rng() % 200;
        for (std::size_t i = 0; i < n; ++i) {
            labels.push_back(static_cast<int>(rng() % 3));
            scores.push_back({u(rng), u(rng), u(rng)});
        }
        const auto r = make_report(labels, scores, abc);
        std::size_t trace = 0;
        for (std::size_t c = 0; c < 3; ++c) {
            std::size_t row = 0;
            for (const auto v : r.confusion[c]) row += v;
            CHECK(row == static_cast<std::size_t>(std::count(labels.begin(), labels.end(), static_cast<int>(c))));
            trace += r.confusion[c][c];
            std::size_t col = 0;
            for (std::size_t k = 0; k < 3; ++k) col += r.confusion[k][c];
            if (col) CHECK(r.precision[c] == doctest::Approx(double(r.confusion[c][c]) / double(col)));
            if (row) CHECK(r.recall[c] == doctest::Approx(double(r.confusion[c][c]) / double(row)));
        }
        CHECK(static_cast<double>(trace) / static_cast<double>(n) == doctest::Approx(r.accuracy));
    }
}

TEST_CASE("report input errors are rejected") {
    CHECK_THROWS_AS(make_report({}, {}, abc), InputError);
    const std::vector<int> bad{3};
    CHECK_THROWS_AS(make_report(bad, {{0.2, 0.3, 0.5}}, abc), InputError);
    const std::vector<int> ok{0};
    CHECK_THROWS_AS(make_report(ok, {{0.5, 0.5}}, abc), InputError);
}

TEST_CASE("cells show count and the truncated share of the true class") {
    CHECK(format_cell(1238, 1284) == "1238 (96.41%)");
    CHECK(format_cell(31, 1212) == "31 (2.55%)");     // 2.5577 truncates, not rounds
    CHECK(format_cell(1172, 1253) == "1172 (93.53%)");  // 93.535 truncates
    CHECK(format_cell(0, 0) == "0 (0.00%)");
    CHECK(format_cell(5, 5) == "5 (100.00%)");
    std::mt19937_64 rng(3);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t total = 1 + rng() % 5000;
        const std::size_t count = rng() % (total + 1);
        const double share = 100.0 * static_cast<double>(count) / static_cast<double>(total);
        const std::string cell = format_cell(count, total);
        const double shown = std::stod(cell.substr(cell.find('(') + 1));
        CHECK(shown <= share + 1e-9);
        CHECK(share - shown < 0.01 + 1e-9);
    }
}

TEST_CASE("the published three-class matrix renders cell for cell") {
    // Published layout: rows predicted, columns true; fed here transposed.
    const std::size_t published[3][3] = {{1238, 20, 32}, {31, 1161, 49}, {15, 31, 1172}};
    EvalReport r;
    r.class_names = {"YT", "WA", "SC"};
    r.confusion.assign(3, std::vector<std::size_t>(3));
    for (std::size_t t = 0; t < 3; ++t) {
        for (std::size_t p = 0; p < 3; ++p) r.confusion[t][p] = published[p][t];
    }
    r.samples = 3749;
    r.accuracy = (1238.0 + 1161.0 + 1172.0) / 3749.0;
    const std::string text = render_confusion(r);
    const char* expected[3][3] = {{"1238 (96.41%)", "31 (2.41%)", "15 (1.16%)"},
                                  {"20 (1.65%)", "1161 (95.79%)", "31 (2.55%)"},
                                  {"32 (2.55%)", "49 (3.91%)", "1172 (93.53%)"}};
    std::istringstream lines(text);
    std::string line;
    std::getline(lines, line);
    CHECK(line.find("YT") != std::string::npos);
    for (std::size_t t = 0; t < 3; ++t) {
        REQUIRE(std::getline(lines, line));
        CHECK(line.rfind(r.class_names[t], 0) == 0);
        std::size_t at = 0;
        for (std::size_t p = 0; p < 3; ++p) {
            const auto pos = line.find(expected[t][p], at);
            CHECK_MESSAGE(pos != std::string::npos, "row ", t, " missing ", expected[t][p]);
            at = pos == std::string::npos ? at : pos + 1;
        }
    }
    CHECK(text.find("accuracy 95.25%") != std::string::npos);
}

TEST_CASE("majority vote over a video's patches") {
    const std::vector<int> labels{0, 0, 0, 1, 1, 2};
    const std::vector<std::vector<double>> scores{
        {0.9, 0.1, 0.0}, {0.2, 0.7, 0.1}, {0.6, 0.3, 0.1},  // video a: 2 of 3 right
        {0.8, 0.1, 0.1}, {0.1, 0.2, 0.7},                   // video b: one vote each for A and C
        {0.1, 0.1, 0.8}};
    const std::vector<std::string> videos{"a", "a", "a", "b", "b", "c"};
    const auto r = make_report(labels, scores, abc, videos);
    CHECK(r.videos == 3);
    // Video b ties A and C at one vote; summed probability favors A (0.9 vs 0.8).
    CHECK(r.video_confusion[1][0] == 1);
    CHECK(r.video_accuracy == doctest::Approx(2.0 / 3.0));
    const std::vector<std::string> mixed{"a", "a", "b", "a", "b", "c"};
    CHECK_THROWS_AS(make_report(labels, scores, abc, mixed), InputError);
}

TEST_CASE("report JSON carries every field") {
    const std::vector<int> labels{0, 1};
    const auto r = make_report(labels, {{0.7, 0.3}, {0.4, 0.6}}, {"X", "Y"}, std::vector<std::string>{"v", "w"});
    const std::string j = to_json(r);
    for (const char* key : {"class_names", "accuracy", "auc", "confusion", "precision", "recall", "video_accuracy"}) {
        CHECK(j.find(key) != std::string::npos);
    }
}

TEST_CASE("evaluation refuses mismatched class lists") {
    auto net = models::build_network(tiny_ind(), 1);
    const auto set = toy_set(2, 1, 3);
    CHECK_THROWS_AS(evaluate(net, set, {"A", "B", "D"}), ConfigError);
    CHECK_THROWS_AS(evaluate(net, {}, abc), DataError);
}

TEST_CASE("I/P pairing takes the nearest frame and prefers the same cell") {
    auto make = [](const std::string& v, std::uint32_t f, std::uint32_t row, std::uint32_t col, int label) {
        Patch p;
        p.origin = {v, f, row, col};
        p.label = label;
        return p;
    };
    const std::vector<Patch> i_patches{make("v1", 0, 0, 0, 0), make("v1", 0, 0, 8, 0), make("v1", 10, 0, 0, 0),
                                       make("v2", 4, 0, 0, 1), make("v2", 8, 0, 0, 1)};
    const std::vector<Patch> p_patches{make("v1", 3, 0, 8, 0), make("v1", 8, 0, 8, 0), make("v2", 6, 0, 0, 1),
                                       make("v3", 1, 0, 0, 2)};
    std::mt19937_64 rng(1);
    const auto pairs = pair_patches(i_patches, p_patches, rng);
    REQUIRE(pairs.size() == 3);  // v3 has no I-patch
    CHECK(pairs[0] == PatchPair{1, 0});  // frame 0 is nearest; same cell wins
    CHECK(pairs[1] == PatchPair{2, 1});  // frame 10 is nearer than the same cell at frame 0
    CHECK((pairs[2].i_index == 3 || pairs[2].i_index == 4));

    std::set<std::size_t> seen;
    for (std::uint64_t s = 0; s < 40; ++s) {
        std::mt19937_64 a(s), b(s);
        const auto pa = pair_patches(i_patches, p_patches, a);
        CHECK(pa == pair_patches(i_patches, p_patches, b));
        seen.insert(pa[2].i_index);
    }
    CHECK(seen.size() == 2);  // equidistant frames are both reachable

    auto wrong = p_patches;
    wrong[0].label = 2;
    CHECK_THROWS_AS(pair_patches(i_patches, wrong, rng), InputError);
}

TEST_CASE("transfer keeps a frozen backbone and resets a changed classifier") {
    QuietLog quiet;
    const auto train_set = toy_set(20, 1, 41);
    const auto val_set = toy_set(6, 1, 42);
    const auto test_set = toy_set(10, 1, 43);
    auto net = models::build_network(tiny_ind(), 9);
    train::train(net, train_set, val_set, fast_config());
    const double source = evaluate(net, test_set, abc).accuracy;

    SUBCASE("self-transfer stays within two points") {
        const auto t = transfer_retrain(net, models::FreezeScope::conv_blocks, abc, train_set, val_set, test_set,
                                        fast_config(2));
        CHECK(t.backbone_hash_before == t.backbone_hash_after);
        CHECK(t.report.accuracy >= source - 0.02);
    }
    SUBCASE("a renamed class list gets a fresh classifier") {
        const std::vector<std::string> renamed{"X", "Y", "Z"};
        const auto t = transfer_retrain(net, models::FreezeScope::conv_blocks, renamed, train_set, val_set,
                                        test_set, fast_config(2));
        CHECK(net.config().class_names == renamed);
        CHECK(t.report.class_names == renamed);
        CHECK(t.backbone_hash_before == t.backbone_hash_after);
    }
    SUBCASE("no freezing lets the backbone move") {
        const auto t = transfer_retrain(net, models::FreezeScope::none, abc, train_set, val_set, test_set,
                                        fast_config(2));
        CHECK(t.backbone_hash_before != t.backbone_hash_after);
    }
}

TEST_CASE("the multiframe protocol trains only the fused head") {
    QuietLog quiet;
    const auto i_train = toy_set(12, 1, 51);
    const auto p_train = toy_set(12, 3, 52, prep::PatchKind::P);
    const auto i_val = toy_set(4, 1, 53);
    const auto p_val = toy_set(4, 3, 54, prep::PatchKind::P);
    auto ind = models::build_network(tiny_ind(), 1);
    auto pred = models::build_network(tiny_pred(), 2);
    TrainConfig cfg = fast_config();
    cfg.max_epochs = 4;
    cfg.patience = 4;
    train::train(ind, i_train, i_val, cfg);
    train::train(pred, p_train, p_val, cfg);
    const auto ind_hash = models::parameter_hash(ind, models::ParamGroup::backbone);

    auto result = train_multiframe_protocol(models::to_checkpoint(ind), models::to_checkpoint(pred), tiny_multi(),
                                            {i_train, p_train}, {i_val, p_val}, cfg);
    CHECK_FALSE(result.training.aborted);
    CHECK(result.net.backbone_frozen());
    std::vector<nn::NamedTensor> ind_part;
    for (auto& t : result.net.export_parameters(models::ParamGroup::backbone)) {
        if (t.name.rfind("ind.", 0) == 0) ind_part.push_back(t);
    }
    auto probe = models::build_network(tiny_ind(), 1);
    probe.import_parameters(ind_part, false);
    CHECK(models::parameter_hash(probe, models::ParamGroup::backbone) == ind_hash);

    const auto report = evaluate_paired(result.net, {i_val, p_val}, abc, 0);
    CHECK(report.samples == p_val.size());
    CHECK_THROWS_AS(train_multiframe_protocol(models::to_checkpoint(pred), models::to_checkpoint(ind), tiny_multi(),
                                              {i_train, p_train}, {i_val, p_val}, cfg),
                    ConfigError);
}

TEST_CASE("split loading reads patch files named by the manifest") {
    const auto dir = std::filesystem::temp_directory_path() / "provnet_test_training_split";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    ingest::Manifest m;
    m.class_names = abc;
    const auto set = toy_set(2, 1, 61);
    for (std::size_t k = 0; k < set.size(); ++k) {
        const std::string name = "p" + std::to_string(k) + ".bin";
        prep::save_patch(dir / name, set[k]);
        ingest::ManifestEntry e;
        e.patch_path = name;
        e.label = set[k].label;
        e.kind = prep::PatchKind::I;
        e.video_id = set[k].origin.video_id;
        e.split = k % 2 ? ingest::Split::val : ingest::Split::train;
        m.entries.push_back(e);
    }
    const auto train_part = load_split(m, dir, prep::PatchKind::I, ingest::Split::train);
    CHECK(train_part.size() == 3);
    CHECK(train_part[1].tensor.storage() == set[2].tensor.storage());
    CHECK(load_split(m, dir, prep::PatchKind::P, ingest::Split::train).empty());

    m.entries[0].label = (m.entries[0].label + 1) % 3;
    CHECK_THROWS_AS(load_split(m, dir, prep::PatchKind::I, ingest::Split::train), DataError);
    m.entries[0].patch_path = "missing.bin";
    CHECK_THROWS_AS(load_split(m, dir, prep::PatchKind::I, ingest::Split::train), DataError);
    std::filesystem::remove_all(dir);
}
