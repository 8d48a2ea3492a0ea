#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "provnet/layers.hpp"

namespace provnet::nn {

struct AdamHyper {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    // Classic L2: added to the gradient before the moment updates.
    double weight_decay = 5e-5;

    bool operator==(const AdamHyper&) const = default;
};

template <typename T>
struct Moments {
    std::vector<T> first;
    std::vector<T> second;
    bool operator==(const Moments&) const = default;
};

template <typename T>
struct AdamState {
    std::uint64_t step_count = 0;
    AdamHyper hyper;
    // Keyed by parameter name; created lazily on the first update.
    std::map<std::string, Moments<T>> moments;

    bool operator==(const AdamState&) const = default;
};

// One bias-corrected Adam update over every trainable, non-buffer parameter.
// Throws NumericError (and leaves everything untouched) if any gradient is
// non-finite.
template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state);

} // namespace provnet::nn
