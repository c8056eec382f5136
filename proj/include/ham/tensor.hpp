#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "ham/errors.hpp"

namespace ham {

// Dense rank-N tensor, row-major. The float instantiation is the value type
// used everywhere; the double one exists for high-precision gradient checks.
template <class T>
struct TensorT {
    std::vector<std::size_t> shape;
    std::vector<T> data;

    TensorT() = default;

    explicit TensorT(std::vector<std::size_t> s) : shape(std::move(s)) {
        data.assign(numel_of(shape), T(0));
    }

    TensorT(std::vector<std::size_t> s, std::vector<T> d)
        : shape(std::move(s)), data(std::move(d)) {
        if (numel_of(shape) != data.size())
            throw ShapeError("tensor: shape/data size mismatch");
    }

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) {
            if (d == 0) throw ArgumentError("tensor: zero-sized dimension");
            n *= d;
        }
        return n;
    }

    std::size_t numel() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }

    T& operator[](std::size_t i) { return data[i]; }
    const T& operator[](std::size_t i) const { return data[i]; }

    // 2-D accessors for the matrix-shaped tensors attention works with.
    std::size_t rows() const { return shape.at(0); }
    std::size_t cols() const { return shape.at(1); }
    T& at2(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    const T& at2(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    bool same_shape(const TensorT& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <class U>
    TensorT<U> cast() const {
        TensorT<U> out(shape);
        for (std::size_t i = 0; i < data.size(); ++i)
            out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using Tensor = TensorT<float>;

template <class T>
struct ChannelStatsT {
    std::vector<T> mean;
    std::vector<T> std;
};

using ChannelStats = ChannelStatsT<float>;

inline std::string shape_str(const std::vector<std::size_t>& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + ")";
}

namespace detail {

// For a flat row-major index, the channel index along `axis` is
// (flat / inner) % shape[axis] with inner = product of dims after axis.
template <class T>
std::size_t inner_stride(const TensorT<T>& x, std::size_t axis) {
    std::size_t inner = 1;
    for (std::size_t a = axis + 1; a < x.shape.size(); ++a) inner *= x.shape[a];
    return inner;
}

} // namespace detail

// Per-channel mean and population standard deviation over all non-channel
// positions. Population (1/N) convention.
template <class T>
ChannelStatsT<T> channel_stats(const TensorT<T>& x, std::size_t channel_axis) {
    if (x.rank() < 2)
        throw ArgumentError("channel_stats: tensor rank must be >= 2");
    if (channel_axis >= x.rank())
        throw ArgumentError("channel_stats: channel_axis out of range");
    if (x.numel() == 0)
        throw ArgumentError("channel_stats: empty tensor");

    const std::size_t channels = x.shape[channel_axis];
    const std::size_t inner = detail::inner_stride(x, channel_axis);
    const std::size_t per_channel = x.numel() / channels;

    std::vector<double> sum(channels, 0.0), sumsq(channels, 0.0);
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const std::size_t c = (i / inner) % channels;
        const double v = static_cast<double>(x.data[i]);
        sum[c] += v;
        sumsq[c] += v * v;
    }

    ChannelStatsT<T> st;
    st.mean.resize(channels);
    st.std.resize(channels);
    const double n = static_cast<double>(per_channel);
    for (std::size_t c = 0; c < channels; ++c) {
        const double m = sum[c] / n;
        double var = sumsq[c] / n - m * m;
        if (var < 0.0) var = 0.0; // cancellation guard
        st.mean[c] = static_cast<T>(m);
        st.std[c] = static_cast<T>(std::sqrt(var));
    }
    return st;
}

// Adaptive instance normalization: re-statisticize `content` so its
// per-channel mean/std match `style`'s.
template <class T>
TensorT<T> adain(const TensorT<T>& content, const TensorT<T>& style,
                 std::size_t channel_axis, T epsilon) {
    if (!(epsilon > T(0)))
        throw ArgumentError("adain: epsilon must be > 0");
    if (channel_axis >= content.rank() || channel_axis >= style.rank())
        throw ArgumentError("adain: channel_axis out of range");
    if (content.shape[channel_axis] != style.shape[channel_axis])
        throw ShapeError("adain: channel count mismatch " +
                         shape_str(content.shape) + " vs " + shape_str(style.shape));

    const auto cs = channel_stats(content, channel_axis);
    const auto ss = channel_stats(style, channel_axis);

    const std::size_t channels = content.shape[channel_axis];
    const std::size_t inner = detail::inner_stride(content, channel_axis);

    TensorT<T> out(content.shape);
    for (std::size_t i = 0; i < content.numel(); ++i) {
        const std::size_t c = (i / inner) % channels;
        const T norm = (content.data[i] - cs.mean[c]) / (cs.std[c] + epsilon);
        out.data[i] = ss.std[c] * norm + ss.mean[c];
    }
    return out;
}

// --- small dense linear algebra on 2-D tensors ---

template <class T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows())
        throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape) +
                         " x " + shape_str(b.shape));
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    TensorT<T> c({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        T* crow = &c.data[i * n];
        for (std::size_t p = 0; p < k; ++p) {
            const T av = a.data[i * k + p];
            const T* brow = &b.data[p * n];
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

// a * b^T
template <class T>
TensorT<T> matmul_bt(const TensorT<T>& a, const TensorT<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols())
        throw ShapeError("matmul_bt: incompatible shapes " + shape_str(a.shape) +
                         " x " + shape_str(b.shape) + "^T");
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    TensorT<T> c({m, n});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            T acc = 0;
            const T* ar = &a.data[i * k];
            const T* br = &b.data[j * k];
            for (std::size_t p = 0; p < k; ++p) acc += ar[p] * br[p];
            c.data[i * n + j] = acc;
        }
    return c;
}

// a^T * b
template <class T>
TensorT<T> matmul_at(const TensorT<T>& a, const TensorT<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.rows() != b.rows())
        throw ShapeError("matmul_at: incompatible shapes " + shape_str(a.shape) +
                         "^T x " + shape_str(b.shape));
    const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
    TensorT<T> c({m, n});
    for (std::size_t p = 0; p < k; ++p) {
        const T* ar = &a.data[p * m];
        const T* br = &b.data[p * n];
        for (std::size_t i = 0; i < m; ++i) {
            T* crow = &c.data[i * n];
            const T av = ar[i];
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * br[j];
        }
    }
    return c;
}

template <class T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
    if (!a.same_shape(b))
        throw ShapeError("add: shape mismatch " + shape_str(a.shape) + " vs " +
                         shape_str(b.shape));
    TensorT<T> c = a;
    for (std::size_t i = 0; i < c.numel(); ++i) c.data[i] += b.data[i];
    return c;
}

template <class T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
    if (!a.same_shape(b))
        throw ShapeError("sub: shape mismatch " + shape_str(a.shape) + " vs " +
                         shape_str(b.shape));
    TensorT<T> c = a;
    for (std::size_t i = 0; i < c.numel(); ++i) c.data[i] -= b.data[i];
    return c;
}

template <class T>
TensorT<T> scale(const TensorT<T>& a, T s) {
    TensorT<T> c = a;
    for (auto& v : c.data) v *= s;
    return c;
}

// s*a + (1-s)*b, elementwise. Exact at the endpoints: s==1 returns a
// unchanged, s==0 returns b unchanged.
template <class T>
TensorT<T> lerp(const TensorT<T>& a, const TensorT<T>& b, T s) {
    if (!a.same_shape(b))
        throw ShapeError("lerp: shape mismatch " + shape_str(a.shape) + " vs " +
                         shape_str(b.shape));
    if (s == T(1)) return a;
    if (s == T(0)) return b;
    TensorT<T> c(a.shape);
    for (std::size_t i = 0; i < c.numel(); ++i)
        c.data[i] = s * a.data[i] + (T(1) - s) * b.data[i];
    return c;
}

template <class T>
void require_finite(const TensorT<T>& x, const std::string& what) {
    if (!x.all_finite())
        throw NumericError("non-finite values in " + what);
}

// HAMT binary dump: magic "HAMT", u32 LE rank, rank u32 LE dims, then
// row-major float32 LE payload. Declared here, defined in hamt.cpp.
void save_hamt(const std::string& path, const Tensor& t);
Tensor load_hamt(const std::string& path);

} // namespace ham
