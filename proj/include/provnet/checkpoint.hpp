#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "provnet/adam.hpp"
#include "provnet/tensor.hpp"

namespace provnet::nn {

inline constexpr char checkpoint_magic[] = "PNETCKPT";
inline constexpr std::uint32_t checkpoint_version = 1;

struct NamedTensor {
    std::string name;
    Shape shape;
    std::vector<float> values;
    bool operator==(const NamedTensor&) const = default;
};

// Layout (all integers and floats little-endian):
//   "PNETCKPT" u32 version
//   string metadata                      (u32 length + bytes; JSON text)
//   u32 count, count x { string name, u32 n, u32 c, u32 h, u32 w, f32 values[] }
//   u64 adam step, f64 lr, beta1, beta2, eps, weight_decay
//   u32 count, count x { string name, u64 len, f32 first[len], f32 second[len] }
//   u64 seed, u32 epoch
struct Checkpoint {
    std::string metadata;
    std::vector<NamedTensor> tensors;
    AdamState<float> adam;
    std::uint64_t seed = 0;
    std::uint32_t epoch = 0;

    const NamedTensor* find(const std::string& name) const;
    bool operator==(const Checkpoint&) const = default;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace provnet::nn
