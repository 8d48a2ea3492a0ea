#include "provnet/checkpoint.hpp"

#include <fstream>

#include "provnet/binary_io.hpp"

namespace provnet::nn {

const NamedTensor* Checkpoint::find(const std::string& name) const {
    for (const auto& t : tensors) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
    out.write(checkpoint_magic, 8);
    io::write_u32(out, checkpoint_version);
    io::write_string(out, ckpt.metadata);

    io::write_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& t : ckpt.tensors) {
        if (t.values.size() != t.shape.size()) {
            throw ConfigError("checkpoint tensor " + t.name + " has inconsistent dims");
        }
        io::write_string(out, t.name);
        io::write_u32(out, static_cast<std::uint32_t>(t.shape.n));
        io::write_u32(out, static_cast<std::uint32_t>(t.shape.c));
        io::write_u32(out, static_cast<std::uint32_t>(t.shape.h));
        io::write_u32(out, static_cast<std::uint32_t>(t.shape.w));
        for (const float v : t.values) io::write_f32(out, v);
    }

    const auto& adam = ckpt.adam;
    io::write_u64(out, adam.step_count);
    io::write_f64(out, adam.hyper.lr);
    io::write_f64(out, adam.hyper.beta1);
    io::write_f64(out, adam.hyper.beta2);
    io::write_f64(out, adam.hyper.eps);
    io::write_f64(out, adam.hyper.weight_decay);
    io::write_u32(out, static_cast<std::uint32_t>(adam.moments.size()));
    for (const auto& [name, m] : adam.moments) {
        if (m.first.size() != m.second.size()) {
            throw ConfigError("adam moments for " + name + " have mismatched lengths");
        }
        io::write_string(out, name);
        io::write_u64(out, m.first.size());
        for (const float v : m.first) io::write_f32(out, v);
        for (const float v : m.second) io::write_f32(out, v);
    }
    io::write_u64(out, ckpt.seed);
    io::write_u32(out, ckpt.epoch);
    if (!out) throw DataError("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
    io::expect_magic(in, "PNETCKPT", "checkpoint");
    const std::uint32_t version = io::read_u32(in, "checkpoint version");
    if (version != checkpoint_version) {
        throw DataError("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ckpt;
    ckpt.metadata = io::read_string(in, "checkpoint metadata");

    const std::uint32_t count = io::read_u32(in, "tensor count");
    ckpt.tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor t;
        t.name = io::read_string(in, "tensor name", 4096);
        t.shape.n = io::read_u32(in, "dims");
        t.shape.c = io::read_u32(in, "dims");
        t.shape.h = io::read_u32(in, "dims");
        t.shape.w = io::read_u32(in, "dims");
        if (t.shape.size() > (std::size_t{1} << 32)) throw DataError("implausible tensor size for " + t.name);
        t.values.resize(t.shape.size());
        for (auto& v : t.values) v = io::read_f32(in, t.name);
        ckpt.tensors.push_back(std::move(t));
    }

    auto& adam = ckpt.adam;
    adam.step_count = io::read_u64(in, "adam step");
    adam.hyper.lr = io::read_f64(in, "adam lr");
    adam.hyper.beta1 = io::read_f64(in, "adam beta1");
    adam.hyper.beta2 = io::read_f64(in, "adam beta2");
    adam.hyper.eps = io::read_f64(in, "adam eps");
    adam.hyper.weight_decay = io::read_f64(in, "adam weight decay");
    const std::uint32_t moment_count = io::read_u32(in, "moment count");
    for (std::uint32_t i = 0; i < moment_count; ++i) {
        std::string name = io::read_string(in, "moment name", 4096);
        const std::uint64_t len = io::read_u64(in, "moment length");
        if (len > (std::uint64_t{1} << 32)) throw DataError("implausible moment length for " + name);
        Moments<float> m;
        m.first.resize(len);
        m.second.resize(len);
        for (auto& v : m.first) v = io::read_f32(in, name);
        for (auto& v : m.second) v = io::read_f32(in, name);
        adam.moments.emplace(std::move(name), std::move(m));
    }
    ckpt.seed = io::read_u64(in, "seed");
    ckpt.epoch = io::read_u32(in, "epoch");
    return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    return read_checkpoint(in);
}

} // namespace provnet::nn
