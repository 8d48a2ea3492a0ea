#pragma once

#include <span>

#include "provnet/tensor.hpp"

namespace provnet::nn {

template <typename T>
struct LossResult {
    double loss = 0.0;       // mean over the batch of -log p[label]
    Tensor<T> probs;         // (n, |C|, 1, 1), rows sum to 1
    Tensor<T> grad_logits;   // d loss / d logits
};

// Max-subtracted softmax followed by mean negative log-likelihood. Each
// sample of `logits` is read as one row of |C| scores.
template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels);

// Row-wise softmax without a loss; used for inference.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

} // namespace provnet::nn
