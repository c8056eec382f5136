#pragma once

#include <cmath>
#include <functional>

#include "ham/nn.hpp"
#include "ham/tensor.hpp"

namespace ham {

enum class SiteKind { self_attention, cross_attention };

inline const char* site_kind_name(SiteKind k) {
    return k == SiteKind::self_attention ? "self" : "cross";
}

// Addresses one attention site inside the denoiser.
struct AttentionSiteId {
    std::size_t layer_index = 0;
    SiteKind kind = SiteKind::self_attention;

    bool operator==(const AttentionSiteId&) const = default;
};

// A (Q, K, V) triple captured at one attention site.
// q: tokens x d, k/v: tokens_kv x d.
template <class T>
struct AttentionProjectionsT {
    TensorT<T> q, k, v;

    void check() const {
        if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2)
            throw ShapeError("projections must be rank-2");
        if (q.cols() != k.cols())
            throw ShapeError("q/k feature dim mismatch: " + shape_str(q.shape) +
                             " vs " + shape_str(k.shape));
        if (k.rows() != v.rows())
            throw ShapeError("k/v token count mismatch: " + shape_str(k.shape) +
                             " vs " + shape_str(v.shape));
    }
};

using AttentionProjections = AttentionProjectionsT<float>;

template <class T>
using AttentionHookT =
    std::function<AttentionProjectionsT<T>(const AttentionSiteId&,
                                           const AttentionProjectionsT<T>&)>;
using AttentionHook = AttentionHookT<float>;

// Per-site projection + output weights. Pre-norm parameters included since
// the block normalizes its input before projecting.
template <class T>
struct AttentionBlockWeightsT {
    TensorT<T> ln_gain, ln_bias;
    TensorT<T> wq, wk, wv;
    TensorT<T> wo;
    TensorT<T> bo;
};

template <class T>
struct AttentionCacheT {
    nn::LayerNormCache<T> ln;
    TensorT<T> h;        // normalized input
    TensorT<T> kv_src;   // h for self sites, context for cross sites
    AttentionProjectionsT<T> proj;
    std::vector<TensorT<T>> attn_weights; // softmax matrix per head
    TensorT<T> attn_out; // pre-output-projection
};

// softmax(Q K^T / sqrt(d_k)) V, optionally multi-head over column groups.
template <class T>
TensorT<T> scaled_dot_product_attention(const AttentionProjectionsT<T>& p,
                                        std::size_t heads = 1,
                                        std::vector<TensorT<T>>* weights_out = nullptr) {
    p.check();
    if (heads == 0 || p.q.cols() % heads != 0 || p.v.cols() % heads != 0)
        throw ShapeError("attention: feature dims not divisible by head count");
    const std::size_t n = p.q.rows(), m = p.k.rows();
    const std::size_t dk = p.q.cols() / heads, dv = p.v.cols() / heads;
    TensorT<T> out({n, p.v.cols()});
    const T scale = T(1) / std::sqrt(static_cast<T>(dk));
    for (std::size_t h = 0; h < heads; ++h) {
        TensorT<T> s({n, m});
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                T acc = 0;
                for (std::size_t c = 0; c < dk; ++c)
                    acc += p.q.data[i * p.q.cols() + h * dk + c] *
                           p.k.data[j * p.k.cols() + h * dk + c];
                s.at2(i, j) = acc * scale;
            }
        TensorT<T> a = nn::softmax_rows(s);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < dv; ++c) {
                T acc = 0;
                for (std::size_t j = 0; j < m; ++j)
                    acc += a.at2(i, j) * p.v.data[j * p.v.cols() + h * dv + c];
                out.data[i * out.cols() + h * dv + c] = acc;
            }
        if (weights_out) weights_out->push_back(std::move(a));
    }
    return out;
}

// Builds (Q, K, V): Q from x, K/V from the context (which is x itself at
// self-attention sites).
template <class T>
AttentionProjectionsT<T> project(const TensorT<T>& x, const TensorT<T>& context,
                                 const AttentionBlockWeightsT<T>& w, SiteKind kind) {
    AttentionProjectionsT<T> p;
    p.q = matmul(x, w.wq);
    const TensorT<T>& src = (kind == SiteKind::self_attention) ? x : context;
    p.k = matmul(src, w.wk);
    p.v = matmul(src, w.wv);
    return p;
}

// One attention block: pre-norm, projection, optional hook on the
// projections, scaled dot-product attention, output projection, residual.
template <class T>
TensorT<T> run_attention_block(const TensorT<T>& x, const TensorT<T>& context,
                               const AttentionBlockWeightsT<T>& w,
                               const AttentionSiteId& site,
                               const AttentionHookT<T>& hook = nullptr,
                               std::size_t heads = 1, T ln_eps = T(1e-5),
                               AttentionCacheT<T>* cache = nullptr) {
    nn::LayerNormCache<T>* lnc = cache ? &cache->ln : nullptr;
    TensorT<T> h = nn::layer_norm(x, w.ln_gain, w.ln_bias, ln_eps, lnc);
    AttentionProjectionsT<T> p = project(h, context, w, site.kind);
    if (hook) {
        AttentionProjectionsT<T> q = hook(site, p);
        if (!q.q.same_shape(p.q) || !q.k.same_shape(p.k) || !q.v.same_shape(p.v))
            throw ContractError("modulation hook changed projection shapes at layer " +
                                std::to_string(site.layer_index) + " (" +
                                site_kind_name(site.kind) + ")");
        p = std::move(q);
    }
    std::vector<TensorT<T>>* wts = cache ? &cache->attn_weights : nullptr;
    TensorT<T> attn = scaled_dot_product_attention(p, heads, wts);
    TensorT<T> y = add(x, nn::linear(attn, w.wo, w.bo));
    if (cache) {
        cache->h = std::move(h);
        cache->kv_src = (site.kind == SiteKind::self_attention) ? cache->h
                                                                : context;
        cache->proj = std::move(p);
        cache->attn_out = std::move(attn);
    }
    return y;
}

// Gradients for run_attention_block (no hook on the training path).
// Accumulates into the dW slots; returns dx. For cross sites also
// accumulates the context gradient into dcontext.
template <class T>
TensorT<T> attention_block_backward(const AttentionCacheT<T>& c,
                                    const AttentionBlockWeightsT<T>& w,
                                    SiteKind kind, std::size_t heads,
                                    const TensorT<T>& dy,
                                    AttentionBlockWeightsT<T>& dw,
                                    TensorT<T>* dcontext) {
    // output projection
    dw.wo = add(dw.wo, matmul_at(c.attn_out, dy));
    for (std::size_t i = 0; i < dy.rows(); ++i)
        for (std::size_t j = 0; j < dy.cols(); ++j)
            dw.bo.data[j] += dy.at2(i, j);
    TensorT<T> dattn = matmul_bt(dy, w.wo);

    const std::size_t n = c.proj.q.rows(), m = c.proj.k.rows();
    const std::size_t dk = c.proj.q.cols() / heads, dv = c.proj.v.cols() / heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(dk));
    TensorT<T> dq(c.proj.q.shape), dkk(c.proj.k.shape), dvv(c.proj.v.shape);
    for (std::size_t h = 0; h < heads; ++h) {
        const TensorT<T>& a = c.attn_weights[h];
        TensorT<T> da({n, m});
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                T acc = 0;
                for (std::size_t col = 0; col < dv; ++col)
                    acc += dattn.data[i * dattn.cols() + h * dv + col] *
                           c.proj.v.data[j * c.proj.v.cols() + h * dv + col];
                da.at2(i, j) = acc;
            }
        // dV
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t col = 0; col < dv; ++col) {
                T acc = 0;
                for (std::size_t i = 0; i < n; ++i)
                    acc += a.at2(i, j) * dattn.data[i * dattn.cols() + h * dv + col];
                dvv.data[j * dvv.cols() + h * dv + col] += acc;
            }
        TensorT<T> ds = nn::softmax_rows_backward(a, da);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t col = 0; col < dk; ++col) {
                T acc = 0;
                for (std::size_t j = 0; j < m; ++j)
                    acc += ds.at2(i, j) * c.proj.k.data[j * c.proj.k.cols() + h * dk + col];
                dq.data[i * dq.cols() + h * dk + col] += acc * scale;
            }
        for (std::size_t j = 0; j < m; ++j)
            for (std::size_t col = 0; col < dk; ++col) {
                T acc = 0;
                for (std::size_t i = 0; i < n; ++i)
                    acc += ds.at2(i, j) * c.proj.q.data[i * c.proj.q.cols() + h * dk + col];
                dkk.data[j * dkk.cols() + h * dk + col] += acc * scale;
            }
    }

    dw.wq = add(dw.wq, matmul_at(c.h, dq));
    dw.wk = add(dw.wk, matmul_at(c.kv_src, dkk));
    dw.wv = add(dw.wv, matmul_at(c.kv_src, dvv));

    TensorT<T> dh = matmul_bt(dq, w.wq);
    TensorT<T> dsrc = add(matmul_bt(dkk, w.wk), matmul_bt(dvv, w.wv));
    if (kind == SiteKind::self_attention) {
        dh = add(dh, dsrc);
    } else {
        if (dcontext) *dcontext = add(*dcontext, dsrc);
    }
    TensorT<T> dx = nn::layer_norm_backward(c.ln, w.ln_gain, dh, dw.ln_gain, dw.ln_bias);
    return add(dx, dy); // residual path
}

} // namespace ham
