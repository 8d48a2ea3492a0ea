#include "provnet/adam.hpp"

#include <cmath>

namespace provnet::nn {

template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state) {
    for (const Parameter<T>* p : params) {
        if (p->buffer || !p->trainable) continue;
        if (p->grad.size() != p->value.size()) {
            throw ConfigError("adam: gradient/parameter size mismatch for " + p->name);
        }
        for (std::size_t i = 0; i < p->grad.size(); ++i) {
            if (!std::isfinite(p->grad[i])) {
                throw NumericError("adam: non-finite gradient in " + p->name + "[" +
                                   std::to_string(i) + "] at step " +
                                   std::to_string(state.step_count + 1));
            }
        }
    }

    const AdamHyper& h = state.hyper;
    ++state.step_count;
    const double step = static_cast<double>(state.step_count);
    const T bias1 = static_cast<T>(1.0 - std::pow(h.beta1, step));
    const T bias2 = static_cast<T>(1.0 - std::pow(h.beta2, step));
    const T lr = static_cast<T>(h.lr);
    const T beta1 = static_cast<T>(h.beta1);
    const T beta2 = static_cast<T>(h.beta2);
    const T one_minus_beta1 = static_cast<T>(1.0 - h.beta1);
    const T one_minus_beta2 = static_cast<T>(1.0 - h.beta2);
    const T eps = static_cast<T>(h.eps);
    const T decay = static_cast<T>(h.weight_decay);

    for (Parameter<T>* p : params) {
        if (p->buffer || !p->trainable) continue;
        Moments<T>& m = state.moments[p->name];
        if (m.first.size() != p->value.size()) {
            m.first.assign(p->value.size(), T{0});
            m.second.assign(p->value.size(), T{0});
        }
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const T g = p->grad[i] + decay * p->value[i];
            m.first[i] = beta1 * m.first[i] + one_minus_beta1 * g;
            m.second[i] = beta2 * m.second[i] + one_minus_beta2 * g * g;
            const T m_hat = m.first[i] / bias1;
            const T v_hat = m.second[i] / bias2;
            p->value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

template void adam_step<float>(std::span<Parameter<float>* const>, AdamState<float>&);
template void adam_step<double>(std::span<Parameter<double>* const>, AdamState<double>&);

} // namespace provnet::nn
