#pragma once

// Slow, obviously-correct reference computations. Nothing here calls into the
// library's compute paths; tests compare the library against these.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "provnet/tensor.hpp"

namespace provnet::oracle {

using nn::Shape;
using nn::Tensor;

// Direct convolution (cross-correlation, as in every CNN framework) with zero padding.
inline Tensor<double> conv2d(const Tensor<double>& x, const Tensor<double>& weight,
                             const std::vector<double>& bias, std::size_t stride, std::size_t pad) {
    const Shape in = x.shape();
    const Shape ws = weight.shape();
    const std::size_t k = ws.h;
    const std::size_t oh = (in.h + 2 * pad - k) / stride + 1;
    const std::size_t ow = (in.w + 2 * pad - k) / stride + 1;
    Tensor<double> out(Shape{in.n, ws.n, oh, ow});
    for (std::size_t n = 0; n < in.n; ++n)
        for (std::size_t oc = 0; oc < ws.n; ++oc)
            for (std::size_t oy = 0; oy < oh; ++oy)
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    long double acc = bias[oc];
                    for (std::size_t ic = 0; ic < in.c; ++ic)
                        for (std::size_t ky = 0; ky < k; ++ky)
                            for (std::size_t kx = 0; kx < k; ++kx) {
                                const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
                                const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
                                if (iy < 0 || ix < 0 || iy >= static_cast<long>(in.h) ||
                                    ix >= static_cast<long>(in.w))
                                    continue;
                                acc += static_cast<long double>(x.at(n, ic, static_cast<std::size_t>(iy),
                                                                     static_cast<std::size_t>(ix))) *
                                       weight.at(oc, ic, ky, kx);
                            }
                    out.at(n, oc, oy, ox) = static_cast<double>(acc);
                }
    return out;
}

inline Tensor<double> pool(const Tensor<double>& x, bool max_kind, std::size_t window) {
    const Shape in = x.shape();
    Tensor<double> out(Shape{in.n, in.c, in.h / window, in.w / window});
    for (std::size_t n = 0; n < in.n; ++n)
        for (std::size_t c = 0; c < in.c; ++c)
            for (std::size_t oy = 0; oy < in.h / window; ++oy)
                for (std::size_t ox = 0; ox < in.w / window; ++ox) {
                    double best = -std::numeric_limits<double>::infinity();
                    double sum = 0;
                    for (std::size_t dy = 0; dy < window; ++dy)
                        for (std::size_t dx = 0; dx < window; ++dx) {
                            const double v = x.at(n, c, oy * window + dy, ox * window + dx);
                            best = std::max(best, v);
                            sum += v;
                        }
                    out.at(n, c, oy, ox) =
                        max_kind ? best : sum / static_cast<double>(window * window);
                }
    return out;
}

inline Tensor<double> channel_mean(const Tensor<double>& x) {
    const Shape in = x.shape();
    Tensor<double> out(Shape{in.n, in.c, 1, 1});
    for (std::size_t n = 0; n < in.n; ++n)
        for (std::size_t c = 0; c < in.c; ++c) {
            long double sum = 0;
            for (std::size_t y = 0; y < in.h; ++y)
                for (std::size_t xx = 0; xx < in.w; ++xx) sum += x.at(n, c, y, xx);
            out.at(n, c, 0, 0) = static_cast<double>(sum / static_cast<long double>(in.h * in.w));
        }
    return out;
}

// rows x (out x in)^T + b with triple loop.
inline std::vector<double> matmul_bias(const std::vector<double>& x, std::size_t rows, std::size_t in,
                                       const std::vector<double>& w, std::size_t out,
                                       const std::vector<double>& b) {
    std::vector<double> y(rows * out);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t o = 0; o < out; ++o) {
            long double acc = b[o];
            for (std::size_t i = 0; i < in; ++i) acc += static_cast<long double>(x[r * in + i]) * w[o * in + i];
            y[r * out + o] = static_cast<double>(acc);
        }
    return y;
}

struct SoftmaxReference {
    long double loss = 0;
    std::vector<long double> probs;
};

// Explicit exponentials at extended precision, no max subtraction.
inline SoftmaxReference softmax_ce(const std::vector<double>& logits, std::size_t rows, std::size_t classes,
                                   const std::vector<int>& labels) {
    SoftmaxReference ref;
    ref.probs.resize(rows * classes);
    for (std::size_t r = 0; r < rows; ++r) {
        long double z = 0;
        for (std::size_t k = 0; k < classes; ++k) z += std::exp(static_cast<long double>(logits[r * classes + k]));
        for (std::size_t k = 0; k < classes; ++k)
            ref.probs[r * classes + k] = std::exp(static_cast<long double>(logits[r * classes + k])) / z;
        ref.loss -= std::log(ref.probs[r * classes + static_cast<std::size_t>(labels[r])]);
    }
    ref.loss /= static_cast<long double>(rows);
    return ref;
}

// Adam with L2-in-gradient on a scalar, written straight from the recurrence.
struct ScalarAdam {
    double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8, weight_decay = 0.0;
    double m = 0, v = 0;
    int t = 0;
    double step(double x, double grad) {
        const double g = grad + weight_decay * x;
        ++t;
        m = beta1 * m + (1 - beta1) * g;
        v = beta2 * v + (1 - beta2) * g * g;
        const double mh = m / (1 - std::pow(beta1, t));
        const double vh = v / (1 - std::pow(beta2, t));
        return x - lr * mh / (std::sqrt(vh) + eps);
    }
};

// Reflect-101 index: -1 -> 1, n -> n-2.
inline std::size_t reflect(long i, std::size_t n) {
    const long len = static_cast<long>(n);
    while (i < 0 || i >= len) {
        if (i < 0) i = -i;
        if (i >= len) i = 2 * (len - 1) - i;
    }
    return static_cast<std::size_t>(i);
}

// True 2-D convolution (kernel flipped) of a row-major plane with reflect-101 borders.
inline std::vector<double> convolve_reflect(const std::vector<double>& plane, std::size_t width,
                                            std::size_t height, const std::vector<double>& kernel,
                                            std::size_t ksize) {
    const long r = static_cast<long>(ksize / 2);
    std::vector<double> out(plane.size());
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            long double acc = 0;
            for (long i = -r; i <= r; ++i)
                for (long j = -r; j <= r; ++j) {
                    const double k = kernel[static_cast<std::size_t>((i + r) * static_cast<long>(ksize) + (j + r))];
                    const std::size_t sy = reflect(static_cast<long>(y) - i, height);
                    const std::size_t sx = reflect(static_cast<long>(x) - j, width);
                    acc += static_cast<long double>(k) * plane[sy * width + sx];
                }
            out[y * width + x] = static_cast<double>(acc);
        }
    return out;
}

// Direct 2-D DCT-II of one 8x8 block from the cosine sum definition.
inline std::array<double, 64> dct8x8(const std::array<double, 64>& block) {
    const long double pi = 3.141592653589793238462643383279502884L;
    std::array<double, 64> out{};
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
            long double acc = 0;
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x)
                    acc += block[static_cast<std::size_t>(y * 8 + x)] * std::cos((2 * y + 1) * u * pi / 16) *
                           std::cos((2 * x + 1) * v * pi / 16);
            const long double cu = u == 0 ? std::sqrt(0.125L) : 0.5L;
            const long double cv = v == 0 ? std::sqrt(0.125L) : 0.5L;
            out[static_cast<std::size_t>(u * 8 + v)] = static_cast<double>(cu * cv * acc);
        }
    return out;
}

// Two-sample KS statistic by evaluating both empirical CDFs at every sample point.
inline double ks_statistic(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0;
    const auto cdf = [](const std::vector<double>& s, double x) {
        std::size_t c = 0;
        for (const double v : s) c += v <= x ? 1 : 0;
        return static_cast<double>(c) / static_cast<double>(s.size());
    };
    for (const auto* s : {&a, &b})
        for (const double x : *s) d = std::max(d, std::abs(cdf(a, x) - cdf(b, x)));
    return d;
}

} // namespace provnet::oracle
