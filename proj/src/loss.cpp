#include "provnet/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace provnet::nn {

namespace {

template <typename T>
void softmax_row(const T* logits, std::size_t classes, T* probs, double* log_sum_out,
                 double* max_out) {
    double max_logit = static_cast<double>(logits[0]);
    for (std::size_t k = 1; k < classes; ++k) max_logit = std::max(max_logit, static_cast<double>(logits[k]));
    double sum = 0.0;
    for (std::size_t k = 0; k < classes; ++k) sum += std::exp(static_cast<double>(logits[k]) - max_logit);
    for (std::size_t k = 0; k < classes; ++k) {
        probs[k] = static_cast<T>(std::exp(static_cast<double>(logits[k]) - max_logit) / sum);
    }
    *log_sum_out = std::log(sum);
    *max_out = max_logit;
}

} // namespace

template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
    const Shape s = logits.shape();
    const std::size_t classes = s.sample_size();
    if (labels.size() != s.n) {
        throw InputError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for batch of " + std::to_string(s.n));
    }
    if (classes == 0 || s.n == 0) throw InputError("softmax_cross_entropy: empty logits");
    if (!logits.all_finite()) throw InputError("softmax_cross_entropy: non-finite logits");

    LossResult<T> result;
    result.probs = Tensor<T>(Shape{s.n, classes, 1, 1});
    result.grad_logits = Tensor<T>(Shape{s.n, classes, 1, 1});
    const double inv_n = 1.0 / static_cast<double>(s.n);
    double total = 0.0;
    for (std::size_t n = 0; n < s.n; ++n) {
        const int label = labels[n];
        if (label < 0 || static_cast<std::size_t>(label) >= classes) {
            throw InputError("softmax_cross_entropy: label " + std::to_string(label) +
                             " outside [0, " + std::to_string(classes) + ")");
        }
        const T* row = logits.data() + n * classes;
        T* probs = result.probs.data() + n * classes;
        double log_sum = 0.0;
        double max_logit = 0.0;
        softmax_row(row, classes, probs, &log_sum, &max_logit);
        total += -(static_cast<double>(row[label]) - max_logit - log_sum);
        T* grad = result.grad_logits.data() + n * classes;
        for (std::size_t k = 0; k < classes; ++k) {
            const double target = static_cast<std::size_t>(label) == k ? 1.0 : 0.0;
            grad[k] = static_cast<T>((static_cast<double>(probs[k]) - target) * inv_n);
        }
    }
    result.loss = total * inv_n;
    return result;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
    const Shape s = logits.shape();
    const std::size_t classes = s.sample_size();
    Tensor<T> probs(Shape{s.n, classes, 1, 1});
    for (std::size_t n = 0; n < s.n; ++n) {
        double log_sum = 0.0;
        double max_logit = 0.0;
        softmax_row(logits.data() + n * classes, classes, probs.data() + n * classes, &log_sum,
                    &max_logit);
    }
    return probs;
}

template LossResult<float> softmax_cross_entropy<float>(const Tensor<float>&, std::span<const int>);
template LossResult<double> softmax_cross_entropy<double>(const Tensor<double>&, std::span<const int>);
template Tensor<float> softmax<float>(const Tensor<float>&);
template Tensor<double> softmax<double>(const Tensor<double>&);

} // namespace provnet::nn
