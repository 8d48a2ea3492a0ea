#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "provnet/tensor.hpp"

namespace provnet::nn {

enum class Mode { train, eval };
enum class PoolKind { max, avg };

template <typename T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    bool trainable = true;
    // Running statistics: serialized with the model, never touched by the optimizer.
    bool buffer = false;

    void zero_grad() { grad.fill(T{0}); }
};

// Base layer. forward() caches whatever backward() needs; backward() accumulates
// parameter gradients and returns the gradient with respect to the input.
template <typename T>
class Layer {
public:
    virtual ~Layer() = default;

    virtual Tensor<T> forward(const Tensor<T>& input, Mode mode) = 0;
    virtual Tensor<T> backward(const Tensor<T>& grad_output) = 0;
    virtual Shape output_shape(const Shape& input) const = 0;
    virtual std::vector<Parameter<T>*> parameters() { return {}; }
    virtual std::string describe() const = 0;

    const std::string& name() const noexcept { return name_; }

protected:
    explicit Layer(std::string name) : name_(std::move(name)) {}
    void require_forward(bool cached) const;

private:
    std::string name_;
};

template <typename T>
class Conv2d final : public Layer<T> {
public:
    Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels,
           std::size_t kernel, std::size_t stride, std::size_t padding);

    Tensor<T> forward(const Tensor<T>& input, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& grad_output) override;
    Shape output_shape(const Shape& input) const override;
    std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }
    std::string describe() const override;

    Parameter<T>& weight() noexcept { return weight_; }
    Parameter<T>& bias() noexcept { return bias_; }
    std::size_t kernel() const noexcept { return kernel_; }

private:
    void im2col(const T* image, std::size_t h, std::size_t w, std::size_t out_h,
                std::size_t out_w, T* columns) const;
    void col2im(const T* columns, std::size_t h, std::size_t w, std::size_t out_h,
                std::size_t out_w, T* image) const;

    std::size_t in_channels_;
    std::size_t out_channels_;
    std::size_t kernel_;
    std::size_t stride_;
    std::size_t padding_;
    Parameter<T> weight_;
    Parameter<T> bias_;
    Tensor<T> input_;
    bool cached_ = false;
};

template <typename T>
class BatchNorm2d final : public Layer<T> {
public:
    BatchNorm2d(std::string name, std::size_t channels, double momentum = 0.1, double eps = 1e-5);

    Tensor<T> forward(const Tensor<T>& input, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& grad_output) override;
    Shape output_shape(const Shape& input) const override;
    std::vector<Parameter<T>*> parameters() override {
        return {&gamma_, &beta_, &running_mean_, &running_var_};
    }
    std::string describe() const override;

    Parameter<T>& gamma() noexcept { return gamma_; }
    Parameter<T>& beta() noexcept { return beta_; }
    Parameter<T>& running_mean() noexcept { return running_mean_; }
    Parameter<T>& running_var() noexcept { return running_var_; }

private:
    void check_channels(const Shape& input) const;

    std::size_t channels_;
    double momentum_;
    double eps_;
    Parameter<T> gamma_;
    Parameter<T> beta_;
    Parameter<T> running_mean_;
    Parameter<T> running_var_;
    Tensor<T> normalized_;
    std::vector<T> inv_std_;
    Mode cached_mode_ = Mode::eval;
    bool cached_ = false;
};

template <typename T>
class ReLU final : public Layer<T> {
public:
    explicit ReLU(std::string name) : Layer<T>(std::move(name)) {}

    Tensor<T> forward(const Tensor<T>& input, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& grad_output) override;
    Shape output_shape(const Shape& input) const override { return input; }
    std::string describe() const override { return "relu"; }

private:
    std::vector<bool> active_;
    Shape shape_;
    bool cached_ = false;
};

// Non-overlapping window x window pooling with stride == window.
template <typename T>
class Pool2d final : public Layer<T> {
public:
    Pool2d(std::string name, PoolKind kind, std::size_t window = 2);

    Tensor<T> forward(const Tensor<T>& input, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& grad_output) override;
    Shape output_shape(const Shape& input) const override;
    std::string describe() const override;

private:
    PoolKind kind_;
    std::size_t window_;
    Shape input_shape_;
    std::vector<std::size_t> argmax_;
    bool cached_ = false;
};

template <typename T>
class GlobalAvgPool final : public Layer<T> {
public:
    explicit GlobalAvgPool(std::string name) : Layer<T>(std::move(name)) {}

    Tensor<T> forward(const Tensor<T>& input, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& grad_output) override;
    Shape output_shape(const Shape& input) const override;
    std::string describe() const override { return "global_avgpool"; }

private:
    Shape input_shape_;
    bool cached_ = false;
};

// (n, c, h, w) -> (n, c*h*w, 1, 1)
template <typename T>
class Flatten final : public Layer<T> {
public:
    explicit Flatten(std::string name) : Layer<T>(std::move(name)) {}

    Tensor<T> forward(const Tensor<T>& input, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& grad_output) override;
    Shape output_shape(const Shape& input) const override;
    std::string describe() const override { return "flatten"; }

private:
    Shape input_shape_;
    bool cached_ = false;
};

// out = x W^T + b on the flattened sample; output dims (n, out_features, 1, 1).
template <typename T>
class Linear final : public Layer<T> {
public:
    Linear(std::string name, std::size_t in_features, std::size_t out_features);

    Tensor<T> forward(const Tensor<T>& input, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& grad_output) override;
    Shape output_shape(const Shape& input) const override;
    std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }
    std::string describe() const override;

    Parameter<T>& weight() noexcept { return weight_; }
    Parameter<T>& bias() noexcept { return bias_; }
    std::size_t in_features() const noexcept { return in_features_; }
    std::size_t out_features() const noexcept { return out_features_; }

private:
    std::size_t in_features_;
    std::size_t out_features_;
    Parameter<T> weight_;
    Parameter<T> bias_;
    Tensor<T> input_;
    bool cached_ = false;
};

struct ShapeTrace {
    std::string layer;
    Shape shape;
    bool operator==(const ShapeTrace&) const = default;
};

template <typename T>
class Sequential final : public Layer<T> {
public:
    explicit Sequential(std::string name) : Layer<T>(std::move(name)) {}

    template <typename L, typename... Args>
    L& emplace(Args&&... args) {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L& ref = *layer;
        layers_.push_back(std::move(layer));
        return ref;
    }

    Tensor<T> forward(const Tensor<T>& input, Mode mode) override;
    Tensor<T> backward(const Tensor<T>& grad_output) override;
    Shape output_shape(const Shape& input) const override;
    std::vector<Parameter<T>*> parameters() override;
    std::string describe() const override;

    // Output dims after every layer, computed without touching data.
    std::vector<ShapeTrace> symbolic_shapes(const Shape& input) const;
    // Output dims recorded by the most recent forward().
    const std::vector<ShapeTrace>& recorded_shapes() const noexcept { return recorded_; }

    std::size_t size() const noexcept { return layers_.size(); }
    Layer<T>& layer(std::size_t i) { return *layers_.at(i); }

private:
    std::vector<std::unique_ptr<Layer<T>>> layers_;
    std::vector<ShapeTrace> recorded_;
    bool cached_ = false;
};

// He-uniform weights (bound sqrt(6 / fan_in)), zero biases. Batchnorm keeps
// gamma = 1, beta = 0, running stats (0, 1).
template <typename T>
void he_uniform_init(Layer<T>& layer, std::mt19937_64& rng);

extern template class Layer<float>;
extern template class Layer<double>;
extern template class Conv2d<float>;
extern template class Conv2d<double>;
extern template class BatchNorm2d<float>;
extern template class BatchNorm2d<double>;
extern template class ReLU<float>;
extern template class ReLU<double>;
extern template class Pool2d<float>;
extern template class Pool2d<double>;
extern template class GlobalAvgPool<float>;
extern template class GlobalAvgPool<double>;
extern template class Flatten<float>;
extern template class Flatten<double>;
extern template class Linear<float>;
extern template class Linear<double>;
extern template class Sequential<float>;
extern template class Sequential<double>;

} // namespace provnet::nn
