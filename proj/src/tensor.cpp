#include "provnet/tensor.hpp"

#include <cmath>

namespace provnet::nn {

std::string Shape::to_string() const {
    return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " + std::to_string(h) + ", " +
           std::to_string(w) + ")";
}

template <typename T>
bool Tensor<T>::all_finite() const noexcept {
    for (const T v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

template class Tensor<float>;
template class Tensor<double>;

} // namespace provnet::nn
