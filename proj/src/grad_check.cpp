#include "provnet/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace provnet::nn {

namespace {

Tensor<double> sample_input(const Shape& shape, const GradCheckOptions& options,
                            std::mt19937_64& rng) {
    Tensor<double> x(shape);
    if (options.spacing > 0.0) {
        std::vector<std::size_t> order(shape.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        const double offset = 0.5 * options.spacing * static_cast<double>(shape.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = static_cast<double>(order[i]) * options.spacing - offset;
        }
        return x;
    }
    std::uniform_real_distribution<double> magnitude(options.margin, options.margin + 1.0);
    std::bernoulli_distribution sign(0.5);
    for (auto& v : x.values()) v = sign(rng) ? magnitude(rng) : -magnitude(rng);
    return x;
}

double weighted_sum(const Tensor<double>& out, const Tensor<double>& weights) {
    double total = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) total += out[i] * weights[i];
    return total;
}

} // namespace

GradCheckResult grad_check(Layer<double>& layer, const Shape& input_shape,
                           const GradCheckOptions& options) {
    std::mt19937_64 rng(options.seed);
    Tensor<double> input = sample_input(input_shape, options, rng);

    const Shape out_shape = layer.output_shape(input_shape);
    Tensor<double> projection(out_shape);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (auto& v : projection.values()) v = unit(rng);

    auto params = layer.parameters();
    for (auto* p : params) p->zero_grad();
    layer.forward(input, options.mode);
    const Tensor<double> grad_input = layer.backward(projection);

    const auto loss_at = [&](const Tensor<double>& x) {
        return weighted_sum(layer.forward(x, options.mode), projection);
    };

    GradCheckResult result;
    const auto record = [&](double analytic, double numeric, const std::string& where) {
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        const double err = std::abs(analytic - numeric) / denom;
        ++result.checked;
        if (err > result.max_relative_error) {
            result.max_relative_error = err;
            result.worst = where;
        }
    };

    const double h = options.step;
    for (std::size_t i = 0; i < input.size(); ++i) {
        Tensor<double> probe = input;
        probe[i] = input[i] + h;
        const double plus = loss_at(probe);
        probe[i] = input[i] - h;
        const double minus = loss_at(probe);
        record(grad_input[i], (plus - minus) / (2.0 * h), "input[" + std::to_string(i) + "]");
    }

    for (auto* p : params) {
        if (p->buffer || !p->trainable) continue;
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double original = p->value[i];
            p->value[i] = original + h;
            const double plus = loss_at(input);
            p->value[i] = original - h;
            const double minus = loss_at(input);
            p->value[i] = original;
            record(p->grad[i], (plus - minus) / (2.0 * h), p->name + "[" + std::to_string(i) + "]");
        }
    }
    return result;
}

} // namespace provnet::nn
