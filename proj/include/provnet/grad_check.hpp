#pragma once

#include <cstdint>
#include <string>

#include "provnet/layers.hpp"

namespace provnet::nn {

struct GradCheckOptions {
    double step = 1e-3;
    Mode mode = Mode::train;
    std::uint64_t seed = 1;
    // Sampled input magnitudes lie in [margin, margin + 1]; use > 0 to stay off the ReLU kink.
    double margin = 0.0;
    // When > 0, inputs are a shuffled arithmetic progression with this spacing,
    // which keeps max-pool winners stable under the finite-difference step.
    double spacing = 0.0;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::string worst;   // "<input|param name>[index]"
    std::size_t checked = 0;
};

// Compares backward() against central finite differences of the scalar
// L = sum(forward(x) * R) for a fixed random R, over every input entry and
// every trainable parameter entry. Relative error uses
// |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult grad_check(Layer<double>& layer, const Shape& input_shape,
                           const GradCheckOptions& options = {});

} // namespace provnet::nn
