#pragma once

#include <cmath>
#include <cstddef>

#include "ham/tensor.hpp"

// Small neural-net primitives shared by the attention blocks and the
// denoiser trainer. Forward functions optionally fill a cache struct so the
// trainer's hand-written backward can reuse intermediates.

namespace ham::nn {

template <class T>
TensorT<T> softmax_rows(const TensorT<T>& x) {
    if (x.rank() != 2) throw ShapeError("softmax_rows: rank-2 tensor expected");
    TensorT<T> y(x.shape);
    const std::size_t n = x.rows(), d = x.cols();
    for (std::size_t i = 0; i < n; ++i) {
        const T* row = &x.data[i * d];
        T* out = &y.data[i * d];
        T mx = row[0];
        for (std::size_t j = 1; j < d; ++j) mx = std::max(mx, row[j]);
        T sum = 0;
        for (std::size_t j = 0; j < d; ++j) {
            out[j] = std::exp(row[j] - mx);
            sum += out[j];
        }
        for (std::size_t j = 0; j < d; ++j) out[j] /= sum;
    }
    return y;
}

// dL/dx given y = softmax_rows(x) and dL/dy.
template <class T>
TensorT<T> softmax_rows_backward(const TensorT<T>& y, const TensorT<T>& dy) {
    TensorT<T> dx(y.shape);
    const std::size_t n = y.rows(), d = y.cols();
    for (std::size_t i = 0; i < n; ++i) {
        const T* yr = &y.data[i * d];
        const T* gr = &dy.data[i * d];
        T dot = 0;
        for (std::size_t j = 0; j < d; ++j) dot += yr[j] * gr[j];
        T* dr = &dx.data[i * d];
        for (std::size_t j = 0; j < d; ++j) dr[j] = yr[j] * (gr[j] - dot);
    }
    return dx;
}

// y = x*W + b (b broadcast over rows; empty b means no bias)
template <class T>
TensorT<T> linear(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b) {
    TensorT<T> y = matmul(x, w);
    if (b.numel() > 0) {
        if (b.numel() != y.cols())
            throw ShapeError("linear: bias size mismatch");
        for (std::size_t i = 0; i < y.rows(); ++i)
            for (std::size_t j = 0; j < y.cols(); ++j)
                y.at2(i, j) += b.data[j];
    }
    return y;
}

template <class T>
struct LayerNormCache {
    TensorT<T> x;       // input
    TensorT<T> xhat;    // normalized input
    std::vector<T> inv_std; // per row
};

// Per-row layer norm with learned gain/bias.
template <class T>
TensorT<T> layer_norm(const TensorT<T>& x, const TensorT<T>& gain,
                      const TensorT<T>& bias, T eps,
                      LayerNormCache<T>* cache = nullptr) {
    if (x.rank() != 2) throw ShapeError("layer_norm: rank-2 tensor expected");
    const std::size_t n = x.rows(), d = x.cols();
    if (gain.numel() != d || bias.numel() != d)
        throw ShapeError("layer_norm: gain/bias size mismatch");
    TensorT<T> y(x.shape);
    TensorT<T> xhat(x.shape);
    std::vector<T> inv_std(n);
    for (std::size_t i = 0; i < n; ++i) {
        const T* row = &x.data[i * d];
        T mu = 0;
        for (std::size_t j = 0; j < d; ++j) mu += row[j];
        mu /= static_cast<T>(d);
        T var = 0;
        for (std::size_t j = 0; j < d; ++j) {
            const T c = row[j] - mu;
            var += c * c;
        }
        var /= static_cast<T>(d);
        const T is = T(1) / std::sqrt(var + eps);
        inv_std[i] = is;
        for (std::size_t j = 0; j < d; ++j) {
            const T xh = (row[j] - mu) * is;
            xhat.data[i * d + j] = xh;
            y.data[i * d + j] = gain.data[j] * xh + bias.data[j];
        }
    }
    if (cache) {
        cache->x = x;
        cache->xhat = std::move(xhat);
        cache->inv_std = std::move(inv_std);
    }
    return y;
}

template <class T>
TensorT<T> layer_norm_backward(const LayerNormCache<T>& c, const TensorT<T>& gain,
                               const TensorT<T>& dy, TensorT<T>& dgain,
                               TensorT<T>& dbias) {
    const std::size_t n = c.x.rows(), d = c.x.cols();
    TensorT<T> dx(c.x.shape);
    for (std::size_t i = 0; i < n; ++i) {
        const T* xh = &c.xhat.data[i * d];
        const T* gr = &dy.data[i * d];
        T sum_g = 0, sum_gx = 0;
        for (std::size_t j = 0; j < d; ++j) {
            const T dxh = gr[j] * gain.data[j];
            sum_g += dxh;
            sum_gx += dxh * xh[j];
            dgain.data[j] += gr[j] * xh[j];
            dbias.data[j] += gr[j];
        }
        const T is = c.inv_std[i];
        const T invd = T(1) / static_cast<T>(d);
        for (std::size_t j = 0; j < d; ++j) {
            const T dxh = gr[j] * gain.data[j];
            dx.data[i * d + j] = is * (dxh - invd * sum_g - invd * xh[j] * sum_gx);
        }
    }
    return dx;
}

template <class T>
T gelu_scalar(T x) {
    return T(0.5) * x * (T(1) + std::erf(x / std::sqrt(T(2))));
}

template <class T>
T gelu_grad_scalar(T x) {
    const T phi = std::exp(-x * x / T(2)) / std::sqrt(T(2) * T(3.14159265358979323846));
    const T Phi = T(0.5) * (T(1) + std::erf(x / std::sqrt(T(2))));
    return Phi + x * phi;
}

template <class T>
TensorT<T> gelu(const TensorT<T>& x) {
    TensorT<T> y = x;
    for (auto& v : y.data) v = gelu_scalar(v);
    return y;
}

template <class T>
TensorT<T> gelu_backward(const TensorT<T>& x, const TensorT<T>& dy) {
    TensorT<T> dx(x.shape);
    for (std::size_t i = 0; i < x.numel(); ++i)
        dx.data[i] = dy.data[i] * gelu_grad_scalar(x.data[i]);
    return dx;
}

} // namespace ham::nn
