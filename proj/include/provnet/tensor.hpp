#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "provnet/error.hpp"

namespace provnet::nn {

// NCHW dimensions.
struct Shape {
    std::size_t n = 0;
    std::size_t c = 0;
    std::size_t h = 0;
    std::size_t w = 0;

    std::size_t size() const noexcept { return n * c * h * w; }
    std::size_t sample_size() const noexcept { return c * h * w; }
    std::size_t plane_size() const noexcept { return h * w; }

    bool operator==(const Shape&) const = default;

    std::string to_string() const;
};

// Dense row-major 4-D array. Real data lives in a std::vector so copies are
// deep and moves are cheap.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T{0})
        : shape_(shape), data_(shape.size(), fill) {}

    Tensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
        if (data_.size() != shape_.size()) {
            throw ConfigError("tensor data length " + std::to_string(data_.size()) +
                              " does not match dims " + shape_.to_string());
        }
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    std::vector<T>& storage() noexcept { return data_; }
    const std::vector<T>& storage() const noexcept { return data_; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) noexcept {
        return data_[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
    }
    const T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const noexcept {
        return data_[((n * shape_.c + c) * shape_.h + h) * shape_.w + w];
    }

    std::span<T> sample(std::size_t n) noexcept {
        return std::span<T>(data_).subspan(n * shape_.sample_size(), shape_.sample_size());
    }
    std::span<const T> sample(std::size_t n) const noexcept {
        return std::span<const T>(data_).subspan(n * shape_.sample_size(), shape_.sample_size());
    }

    // Reinterpret dims without touching data; total size must match.
    void reshape(Shape shape) {
        if (shape.size() != data_.size()) {
            throw ConfigError("cannot reshape " + shape_.to_string() + " to " + shape.to_string());
        }
        shape_ = shape;
    }

    void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

    bool all_finite() const noexcept;

    template <typename U>
    Tensor<U> cast() const {
        return Tensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
    }

private:
    Shape shape_;
    std::vector<T> data_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

} // namespace provnet::nn
