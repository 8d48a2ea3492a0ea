#include "provnet/layers.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

namespace provnet::nn {

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

template <typename T>
Parameter<T> make_parameter(std::string name, Shape shape, T fill, bool buffer = false) {
    Parameter<T> p;
    p.name = std::move(name);
    p.value = Tensor<T>(shape, fill);
    p.grad = Tensor<T>(shape, T{0});
    p.buffer = buffer;
    p.trainable = !buffer;
    return p;
}

void check_dims(bool ok, const std::string& layer, const std::string& message) {
    if (!ok) throw ConfigError(layer + ": " + message);
}

} // namespace

template <typename T>
void Layer<T>::require_forward(bool cached) const {
    if (!cached) throw UsageError(name_ + ": backward() called before forward()");
}

// ---------------------------------------------------------------- Conv2d

template <typename T>
Conv2d<T>::Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels,
                  std::size_t kernel, std::size_t stride, std::size_t padding)
    : Layer<T>(std::move(name)),
      in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride),
      padding_(padding) {
    check_dims(in_channels > 0 && out_channels > 0, this->name(), "channel counts must be positive");
    check_dims(kernel > 0 && stride > 0, this->name(), "kernel and stride must be positive");
    weight_ = make_parameter<T>(this->name() + ".weight",
                                Shape{out_channels, in_channels, kernel, kernel}, T{0});
    bias_ = make_parameter<T>(this->name() + ".bias", Shape{1, out_channels, 1, 1}, T{0});
}

template <typename T>
Shape Conv2d<T>::output_shape(const Shape& input) const {
    check_dims(input.c == in_channels_, this->name(),
               "expected " + std::to_string(in_channels_) + " input channels, got " +
                   std::to_string(input.c));
    const std::size_t padded_h = input.h + 2 * padding_;
    const std::size_t padded_w = input.w + 2 * padding_;
    check_dims(padded_h >= kernel_ && padded_w >= kernel_, this->name(),
               "kernel does not fit padded input " + input.to_string());
    return Shape{input.n, out_channels_, (padded_h - kernel_) / stride_ + 1,
                 (padded_w - kernel_) / stride_ + 1};
}

template <typename T>
void Conv2d<T>::im2col(const T* image, std::size_t h, std::size_t w, std::size_t out_h,
                       std::size_t out_w, T* columns) const {
    const std::size_t positions = out_h * out_w;
    for (std::size_t c = 0; c < in_channels_; ++c) {
        const T* plane = image + c * h * w;
        for (std::size_t ki = 0; ki < kernel_; ++ki) {
            for (std::size_t kj = 0; kj < kernel_; ++kj) {
                T* row = columns + ((c * kernel_ + ki) * kernel_ + kj) * positions;
                for (std::size_t oy = 0; oy < out_h; ++oy) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy * stride_ + ki) -
                                    static_cast<std::ptrdiff_t>(padding_);
                    T* out = row + oy * out_w;
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) {
                        std::fill(out, out + out_w, T{0});
                        continue;
                    }
                    const T* src = plane + static_cast<std::size_t>(iy) * w;
                    for (std::size_t ox = 0; ox < out_w; ++ox) {
                        const auto ix = static_cast<std::ptrdiff_t>(ox * stride_ + kj) -
                                        static_cast<std::ptrdiff_t>(padding_);
                        out[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w))
                                      ? T{0}
                                      : src[static_cast<std::size_t>(ix)];
                    }
                }
            }
        }
    }
}

template <typename T>
void Conv2d<T>::col2im(const T* columns, std::size_t h, std::size_t w, std::size_t out_h,
                       std::size_t out_w, T* image) const {
    const std::size_t positions = out_h * out_w;
    for (std::size_t c = 0; c < in_channels_; ++c) {
        T* plane = image + c * h * w;
        for (std::size_t ki = 0; ki < kernel_; ++ki) {
            for (std::size_t kj = 0; kj < kernel_; ++kj) {
                const T* row = columns + ((c * kernel_ + ki) * kernel_ + kj) * positions;
                for (std::size_t oy = 0; oy < out_h; ++oy) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy * stride_ + ki) -
                                    static_cast<std::ptrdiff_t>(padding_);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                    T* dst = plane + static_cast<std::size_t>(iy) * w;
                    const T* in = row + oy * out_w;
                    for (std::size_t ox = 0; ox < out_w; ++ox) {
                        const auto ix = static_cast<std::ptrdiff_t>(ox * stride_ + kj) -
                                        static_cast<std::ptrdiff_t>(padding_);
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                        dst[static_cast<std::size_t>(ix)] += in[ox];
                    }
                }
            }
        }
    }
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& input, Mode) {
    const Shape in = input.shape();
    const Shape out_shape = output_shape(in);
    const std::size_t k_size = in_channels_ * kernel_ * kernel_;
    const std::size_t positions = out_shape.h * out_shape.w;

    Tensor<T> output(out_shape);
    std::vector<T> columns(k_size * positions);
    const ConstMatrixMap<T> weights(weight_.value.data(), static_cast<Eigen::Index>(out_channels_),
                                    static_cast<Eigen::Index>(k_size));
    for (std::size_t n = 0; n < in.n; ++n) {
        im2col(input.sample(n).data(), in.h, in.w, out_shape.h, out_shape.w, columns.data());
        const ConstMatrixMap<T> cols(columns.data(), static_cast<Eigen::Index>(k_size),
                                     static_cast<Eigen::Index>(positions));
        MatrixMap<T> out(output.sample(n).data(), static_cast<Eigen::Index>(out_channels_),
                         static_cast<Eigen::Index>(positions));
        out.noalias() = weights * cols;
        for (std::size_t oc = 0; oc < out_channels_; ++oc) {
            out.row(static_cast<Eigen::Index>(oc)).array() += bias_.value[oc];
        }
    }
    input_ = input;
    cached_ = true;
    return output;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& grad_output) {
    this->require_forward(cached_);
    const Shape in = input_.shape();
    const Shape out_shape = output_shape(in);
    check_dims(grad_output.shape() == out_shape, this->name(), "gradient dims mismatch");
    const std::size_t k_size = in_channels_ * kernel_ * kernel_;
    const std::size_t positions = out_shape.h * out_shape.w;
    const auto rows = static_cast<Eigen::Index>(out_channels_);
    const auto cols_n = static_cast<Eigen::Index>(k_size);
    const auto pos_n = static_cast<Eigen::Index>(positions);

    Tensor<T> grad_input(in);
    std::vector<T> columns(k_size * positions);
    std::vector<T> grad_columns(k_size * positions);
    const ConstMatrixMap<T> weights(weight_.value.data(), rows, cols_n);
    MatrixMap<T> grad_weights(weight_.grad.data(), rows, cols_n);
    for (std::size_t n = 0; n < in.n; ++n) {
        im2col(input_.sample(n).data(), in.h, in.w, out_shape.h, out_shape.w, columns.data());
        const ConstMatrixMap<T> cols(columns.data(), cols_n, pos_n);
        const ConstMatrixMap<T> grad_out(grad_output.sample(n).data(), rows, pos_n);
        grad_weights.noalias() += grad_out * cols.transpose();
        for (std::size_t oc = 0; oc < out_channels_; ++oc) {
            bias_.grad[oc] += grad_out.row(static_cast<Eigen::Index>(oc)).sum();
        }
        MatrixMap<T> grad_cols(grad_columns.data(), cols_n, pos_n);
        grad_cols.noalias() = weights.transpose() * grad_out;
        col2im(grad_columns.data(), in.h, in.w, out_shape.h, out_shape.w,
               grad_input.sample(n).data());
    }
    return grad_input;
}

template <typename T>
std::string Conv2d<T>::describe() const {
    return "conv" + std::to_string(kernel_) + "x" + std::to_string(kernel_) + " " +
           std::to_string(in_channels_) + "->" + std::to_string(out_channels_);
}

// ----------------------------------------------------------- BatchNorm2d

template <typename T>
BatchNorm2d<T>::BatchNorm2d(std::string name, std::size_t channels, double momentum, double eps)
    : Layer<T>(std::move(name)), channels_(channels), momentum_(momentum), eps_(eps) {
    const Shape s{1, channels, 1, 1};
    gamma_ = make_parameter<T>(this->name() + ".gamma", s, T{1});
    beta_ = make_parameter<T>(this->name() + ".beta", s, T{0});
    running_mean_ = make_parameter<T>(this->name() + ".running_mean", s, T{0}, true);
    running_var_ = make_parameter<T>(this->name() + ".running_var", s, T{1}, true);
}

template <typename T>
void BatchNorm2d<T>::check_channels(const Shape& input) const {
    check_dims(input.c == channels_, this->name(),
               "expected " + std::to_string(channels_) + " channels, got " + std::to_string(input.c));
}

template <typename T>
Shape BatchNorm2d<T>::output_shape(const Shape& input) const {
    check_channels(input);
    return input;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& input, Mode mode) {
    const Shape s = input.shape();
    check_channels(s);
    const std::size_t plane = s.plane_size();
    const std::size_t count = s.n * plane;
    Tensor<T> output(s);
    normalized_ = Tensor<T>(s);
    inv_std_.assign(channels_, T{0});

    for (std::size_t c = 0; c < channels_; ++c) {
        double mean = 0.0;
        double var = 0.0;
        if (mode == Mode::train) {
            check_dims(count > 1, this->name(), "train mode needs more than one value per channel");
            for (std::size_t n = 0; n < s.n; ++n) {
                const T* x = input.data() + (n * channels_ + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) mean += static_cast<double>(x[i]);
            }
            mean /= static_cast<double>(count);
            for (std::size_t n = 0; n < s.n; ++n) {
                const T* x = input.data() + (n * channels_ + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    const double d = static_cast<double>(x[i]) - mean;
                    var += d * d;
                }
            }
            const double unbiased = var / static_cast<double>(count - 1);
            var /= static_cast<double>(count);
            running_mean_.value[c] = static_cast<T>((1.0 - momentum_) * running_mean_.value[c] +
                                                    momentum_ * mean);
            running_var_.value[c] = static_cast<T>((1.0 - momentum_) * running_var_.value[c] +
                                                   momentum_ * unbiased);
        } else {
            mean = static_cast<double>(running_mean_.value[c]);
            var = static_cast<double>(running_var_.value[c]);
        }
        const T inv_std = static_cast<T>(1.0 / std::sqrt(var + eps_));
        const T m = static_cast<T>(mean);
        inv_std_[c] = inv_std;
        const T g = gamma_.value[c];
        const T b = beta_.value[c];
        for (std::size_t n = 0; n < s.n; ++n) {
            const std::size_t offset = (n * channels_ + c) * plane;
            const T* x = input.data() + offset;
            T* xhat = normalized_.data() + offset;
            T* y = output.data() + offset;
            for (std::size_t i = 0; i < plane; ++i) {
                xhat[i] = (x[i] - m) * inv_std;
                y[i] = g * xhat[i] + b;
            }
        }
    }
    cached_mode_ = mode;
    cached_ = true;
    return output;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T>& grad_output) {
    this->require_forward(cached_);
    const Shape s = normalized_.shape();
    check_dims(grad_output.shape() == s, this->name(), "gradient dims mismatch");
    const std::size_t plane = s.plane_size();
    const auto count = static_cast<T>(s.n * plane);
    Tensor<T> grad_input(s);

    for (std::size_t c = 0; c < channels_; ++c) {
        T sum_dy = 0;
        T sum_dy_xhat = 0;
        for (std::size_t n = 0; n < s.n; ++n) {
            const std::size_t offset = (n * channels_ + c) * plane;
            const T* dy = grad_output.data() + offset;
            const T* xhat = normalized_.data() + offset;
            for (std::size_t i = 0; i < plane; ++i) {
                sum_dy += dy[i];
                sum_dy_xhat += dy[i] * xhat[i];
            }
        }
        gamma_.grad[c] += sum_dy_xhat;
        beta_.grad[c] += sum_dy;

        const T g = gamma_.value[c];
        const T inv_std = inv_std_[c];
        for (std::size_t n = 0; n < s.n; ++n) {
            const std::size_t offset = (n * channels_ + c) * plane;
            const T* dy = grad_output.data() + offset;
            const T* xhat = normalized_.data() + offset;
            T* dx = grad_input.data() + offset;
            if (cached_mode_ == Mode::train) {
                // dx = gamma * inv_std / N * (N dy - sum(dy) - xhat * sum(dy xhat))
                const T scale = g * inv_std / count;
                for (std::size_t i = 0; i < plane; ++i) {
                    dx[i] = scale * (count * dy[i] - sum_dy - xhat[i] * sum_dy_xhat);
                }
            } else {
                for (std::size_t i = 0; i < plane; ++i) dx[i] = g * inv_std * dy[i];
            }
        }
    }
    return grad_input;
}

template <typename T>
std::string BatchNorm2d<T>::describe() const {
    return "batchnorm " + std::to_string(channels_);
}

// ------------------------------------------------------------------ ReLU

template <typename T>
Tensor<T> ReLU<T>::forward(const Tensor<T>& input, Mode) {
    Tensor<T> output(input.shape());
    active_.assign(input.size(), false);
    for (std::size_t i = 0; i < input.size(); ++i) {
        if (input[i] > T{0}) {
            output[i] = input[i];
            active_[i] = true;
        }
    }
    shape_ = input.shape();
    cached_ = true;
    return output;
}

template <typename T>
Tensor<T> ReLU<T>::backward(const Tensor<T>& grad_output) {
    this->require_forward(cached_);
    check_dims(grad_output.shape() == shape_, this->name(), "gradient dims mismatch");
    Tensor<T> grad_input(shape_);
    for (std::size_t i = 0; i < grad_input.size(); ++i) {
        if (active_[i]) grad_input[i] = grad_output[i];
    }
    return grad_input;
}

// ---------------------------------------------------------------- Pool2d

template <typename T>
Pool2d<T>::Pool2d(std::string name, PoolKind kind, std::size_t window)
    : Layer<T>(std::move(name)), kind_(kind), window_(window) {
    check_dims(window > 0, this->name(), "window must be positive");
}

template <typename T>
Shape Pool2d<T>::output_shape(const Shape& input) const {
    check_dims(input.h % window_ == 0 && input.w % window_ == 0 && input.h > 0 && input.w > 0,
               this->name(),
               "spatial dims " + input.to_string() + " not divisible by window " +
                   std::to_string(window_));
    return Shape{input.n, input.c, input.h / window_, input.w / window_};
}

template <typename T>
Tensor<T> Pool2d<T>::forward(const Tensor<T>& input, Mode) {
    const Shape in = input.shape();
    const Shape out_shape = output_shape(in);
    Tensor<T> output(out_shape);
    if (kind_ == PoolKind::max) argmax_.assign(out_shape.size(), 0);
    const T inv_area = T{1} / static_cast<T>(window_ * window_);

    std::size_t o = 0;
    for (std::size_t nc = 0; nc < in.n * in.c; ++nc) {
        const std::size_t base = nc * in.plane_size();
        for (std::size_t oy = 0; oy < out_shape.h; ++oy) {
            for (std::size_t ox = 0; ox < out_shape.w; ++ox, ++o) {
                if (kind_ == PoolKind::max) {
                    std::size_t best = base + (oy * window_) * in.w + ox * window_;
                    for (std::size_t dy = 0; dy < window_; ++dy) {
                        for (std::size_t dx = 0; dx < window_; ++dx) {
                            const std::size_t idx = base + (oy * window_ + dy) * in.w + ox * window_ + dx;
                            if (input[idx] > input[best]) best = idx;
                        }
                    }
                    argmax_[o] = best;
                    output[o] = input[best];
                } else {
                    T sum = 0;
                    for (std::size_t dy = 0; dy < window_; ++dy) {
                        for (std::size_t dx = 0; dx < window_; ++dx) {
                            sum += input[base + (oy * window_ + dy) * in.w + ox * window_ + dx];
                        }
                    }
                    output[o] = sum * inv_area;
                }
            }
        }
    }
    input_shape_ = in;
    cached_ = true;
    return output;
}

template <typename T>
Tensor<T> Pool2d<T>::backward(const Tensor<T>& grad_output) {
    this->require_forward(cached_);
    const Shape in = input_shape_;
    const Shape out_shape = output_shape(in);
    check_dims(grad_output.shape() == out_shape, this->name(), "gradient dims mismatch");
    Tensor<T> grad_input(in);
    if (kind_ == PoolKind::max) {
        for (std::size_t o = 0; o < out_shape.size(); ++o) grad_input[argmax_[o]] += grad_output[o];
        return grad_input;
    }
    const T inv_area = T{1} / static_cast<T>(window_ * window_);
    std::size_t o = 0;
    for (std::size_t nc = 0; nc < in.n * in.c; ++nc) {
        const std::size_t base = nc * in.plane_size();
        for (std::size_t oy = 0; oy < out_shape.h; ++oy) {
            for (std::size_t ox = 0; ox < out_shape.w; ++ox, ++o) {
                const T g = grad_output[o] * inv_area;
                for (std::size_t dy = 0; dy < window_; ++dy) {
                    for (std::size_t dx = 0; dx < window_; ++dx) {
                        grad_input[base + (oy * window_ + dy) * in.w + ox * window_ + dx] += g;
                    }
                }
            }
        }
    }
    return grad_input;
}

template <typename T>
std::string Pool2d<T>::describe() const {
    return std::string(kind_ == PoolKind::max ? "maxpool" : "avgpool") + std::to_string(window_);
}

// --------------------------------------------------------- GlobalAvgPool

template <typename T>
Shape GlobalAvgPool<T>::output_shape(const Shape& input) const {
    check_dims(input.h > 0 && input.w > 0 && input.n > 0 && input.c > 0, this->name(),
               "empty input");
    return Shape{input.n, input.c, 1, 1};
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::forward(const Tensor<T>& input, Mode) {
    const Shape in = input.shape();
    Tensor<T> output(output_shape(in));
    const std::size_t plane = in.plane_size();
    for (std::size_t nc = 0; nc < in.n * in.c; ++nc) {
        const T* x = input.data() + nc * plane;
        double sum = 0.0;
        for (std::size_t i = 0; i < plane; ++i) sum += static_cast<double>(x[i]);
        output[nc] = static_cast<T>(sum / static_cast<double>(plane));
    }
    input_shape_ = in;
    cached_ = true;
    return output;
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::backward(const Tensor<T>& grad_output) {
    this->require_forward(cached_);
    const Shape in = input_shape_;
    check_dims(grad_output.shape() == output_shape(in), this->name(), "gradient dims mismatch");
    Tensor<T> grad_input(in);
    const std::size_t plane = in.plane_size();
    const T inv = T{1} / static_cast<T>(plane);
    for (std::size_t nc = 0; nc < in.n * in.c; ++nc) {
        T* dx = grad_input.data() + nc * plane;
        std::fill(dx, dx + plane, grad_output[nc] * inv);
    }
    return grad_input;
}

// --------------------------------------------------------------- Flatten

template <typename T>
Shape Flatten<T>::output_shape(const Shape& input) const {
    return Shape{input.n, input.sample_size(), 1, 1};
}

template <typename T>
Tensor<T> Flatten<T>::forward(const Tensor<T>& input, Mode) {
    Tensor<T> output = input;
    output.reshape(output_shape(input.shape()));
    input_shape_ = input.shape();
    cached_ = true;
    return output;
}

template <typename T>
Tensor<T> Flatten<T>::backward(const Tensor<T>& grad_output) {
    this->require_forward(cached_);
    Tensor<T> grad_input = grad_output;
    grad_input.reshape(input_shape_);
    return grad_input;
}

// ---------------------------------------------------------------- Linear

template <typename T>
Linear<T>::Linear(std::string name, std::size_t in_features, std::size_t out_features)
    : Layer<T>(std::move(name)), in_features_(in_features), out_features_(out_features) {
    check_dims(in_features > 0 && out_features > 0, this->name(), "feature counts must be positive");
    weight_ = make_parameter<T>(this->name() + ".weight", Shape{1, 1, out_features, in_features}, T{0});
    bias_ = make_parameter<T>(this->name() + ".bias", Shape{1, 1, 1, out_features}, T{0});
}

template <typename T>
Shape Linear<T>::output_shape(const Shape& input) const {
    check_dims(input.sample_size() == in_features_, this->name(),
               "expected width " + std::to_string(in_features_) + ", got " +
                   std::to_string(input.sample_size()));
    return Shape{input.n, out_features_, 1, 1};
}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& input, Mode) {
    const Shape out_shape = output_shape(input.shape());
    Tensor<T> output(out_shape);
    const auto n = static_cast<Eigen::Index>(out_shape.n);
    const ConstMatrixMap<T> x(input.data(), n, static_cast<Eigen::Index>(in_features_));
    const ConstMatrixMap<T> w(weight_.value.data(), static_cast<Eigen::Index>(out_features_),
                              static_cast<Eigen::Index>(in_features_));
    MatrixMap<T> y(output.data(), n, static_cast<Eigen::Index>(out_features_));
    y.noalias() = x * w.transpose();
    for (Eigen::Index r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < out_features_; ++j) y(r, static_cast<Eigen::Index>(j)) += bias_.value[j];
    }
    input_ = input;
    cached_ = true;
    return output;
}

template <typename T>
Tensor<T> Linear<T>::backward(const Tensor<T>& grad_output) {
    this->require_forward(cached_);
    const Shape in = input_.shape();
    check_dims(grad_output.shape() == output_shape(in), this->name(), "gradient dims mismatch");
    const auto n = static_cast<Eigen::Index>(in.n);
    const auto in_f = static_cast<Eigen::Index>(in_features_);
    const auto out_f = static_cast<Eigen::Index>(out_features_);
    const ConstMatrixMap<T> x(input_.data(), n, in_f);
    const ConstMatrixMap<T> dy(grad_output.data(), n, out_f);
    const ConstMatrixMap<T> w(weight_.value.data(), out_f, in_f);
    MatrixMap<T> dw(weight_.grad.data(), out_f, in_f);
    dw.noalias() += dy.transpose() * x;
    for (Eigen::Index j = 0; j < out_f; ++j) bias_.grad[static_cast<std::size_t>(j)] += dy.col(j).sum();

    Tensor<T> grad_input(in);
    MatrixMap<T> dx(grad_input.data(), n, in_f);
    dx.noalias() = dy * w;
    return grad_input;
}

template <typename T>
std::string Linear<T>::describe() const {
    return "linear " + std::to_string(in_features_) + "->" + std::to_string(out_features_);
}

// ------------------------------------------------------------ Sequential

template <typename T>
Tensor<T> Sequential<T>::forward(const Tensor<T>& input, Mode mode) {
    recorded_.clear();
    Tensor<T> x = input;
    for (auto& layer : layers_) {
        x = layer->forward(x, mode);
        recorded_.push_back({layer->name(), x.shape()});
    }
    cached_ = true;
    return x;
}

template <typename T>
Tensor<T> Sequential<T>::backward(const Tensor<T>& grad_output) {
    this->require_forward(cached_);
    Tensor<T> g = grad_output;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
}

template <typename T>
Shape Sequential<T>::output_shape(const Shape& input) const {
    Shape s = input;
    for (const auto& layer : layers_) s = layer->output_shape(s);
    return s;
}

template <typename T>
std::vector<ShapeTrace> Sequential<T>::symbolic_shapes(const Shape& input) const {
    std::vector<ShapeTrace> trace;
    Shape s = input;
    for (const auto& layer : layers_) {
        s = layer->output_shape(s);
        trace.push_back({layer->name(), s});
    }
    return trace;
}

template <typename T>
std::vector<Parameter<T>*> Sequential<T>::parameters() {
    std::vector<Parameter<T>*> all;
    for (auto& layer : layers_) {
        auto p = layer->parameters();
        all.insert(all.end(), p.begin(), p.end());
    }
    return all;
}

template <typename T>
std::string Sequential<T>::describe() const {
    std::string out;
    for (const auto& layer : layers_) {
        if (!out.empty()) out += " | ";
        out += layer->describe();
    }
    return out;
}

// ------------------------------------------------------------------ init

template <typename T>
void he_uniform_init(Layer<T>& layer, std::mt19937_64& rng) {
    const auto fill = [&rng](Parameter<T>& weight, std::size_t fan_in) {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (auto& v : weight.value.values()) v = static_cast<T>(dist(rng));
    };
    if (auto* seq = dynamic_cast<Sequential<T>*>(&layer)) {
        for (std::size_t i = 0; i < seq->size(); ++i) he_uniform_init(seq->layer(i), rng);
    } else if (auto* conv = dynamic_cast<Conv2d<T>*>(&layer)) {
        const Shape s = conv->weight().value.shape();
        fill(conv->weight(), s.c * s.h * s.w);
        conv->bias().value.fill(T{0});
    } else if (auto* fc = dynamic_cast<Linear<T>*>(&layer)) {
        fill(fc->weight(), fc->in_features());
        fc->bias().value.fill(T{0});
    } else if (auto* bn = dynamic_cast<BatchNorm2d<T>*>(&layer)) {
        bn->gamma().value.fill(T{1});
        bn->beta().value.fill(T{0});
        bn->running_mean().value.fill(T{0});
        bn->running_var().value.fill(T{1});
    }
}

template void he_uniform_init<float>(Layer<float>&, std::mt19937_64&);
template void he_uniform_init<double>(Layer<double>&, std::mt19937_64&);

template class Layer<float>;
template class Layer<double>;
template class Conv2d<float>;
template class Conv2d<double>;
template class BatchNorm2d<float>;
template class BatchNorm2d<double>;
template class ReLU<float>;
template class ReLU<double>;
template class Pool2d<float>;
template class Pool2d<double>;
template class GlobalAvgPool<float>;
template class GlobalAvgPool<double>;
template class Flatten<float>;
template class Flatten<double>;
template class Linear<float>;
template class Linear<double>;
template class Sequential<float>;
template class Sequential<double>;

} // namespace provnet::nn
