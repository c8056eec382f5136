#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "ham/attention.hpp"
#include "ham/nn.hpp"
#include "ham/rng.hpp"
#include "ham/tensor.hpp"

namespace ham {

// Stand-in backbone configuration. Latents are raw [-1,1] images at
// latent_size resolution; patches of patch_size x patch_size pixels become
// attention tokens.
struct DenoiserConfig {
    std::size_t latent_channels = 3;
    std::size_t latent_size = 32;
    std::size_t width = 64;
    std::size_t num_blocks = 4;
    std::size_t heads = 1;
    std::size_t context_tokens = 4;
    std::size_t context_dim = 64;
    std::size_t patch_size = 4;
    std::size_t num_conditions = 8;

    std::size_t patch_dim() const { return latent_channels * patch_size * patch_size; }
    std::size_t tokens_per_side() const { return latent_size / patch_size; }
    std::size_t num_tokens() const { return tokens_per_side() * tokens_per_side(); }
    std::size_t mlp_hidden() const { return 4 * width; }

    void validate() const {
        if (!latent_channels || !latent_size || !width || !num_blocks || !heads ||
            !context_tokens || !context_dim || !patch_size || !num_conditions)
            throw ConfigError("denoiser config: all fields must be positive");
        if (width % heads != 0)
            throw ConfigError("denoiser config: width must be divisible by heads");
        if (latent_size % patch_size != 0)
            throw ConfigError("denoiser config: latent_size must be divisible by patch_size");
    }

    bool operator==(const DenoiserConfig&) const = default;
};

// Index into the learned conditioning table; id 0 is the null condition.
struct Condition {
    std::size_t id = 0;
};

template <class T>
TensorT<T> patchify(const TensorT<T>& z, const DenoiserConfig& cfg) {
    const std::size_t C = cfg.latent_channels, S = cfg.latent_size, P = cfg.patch_size;
    if (z.shape != std::vector<std::size_t>{C, S, S})
        throw ShapeError("patchify: latent shape mismatch, got " + shape_str(z.shape));
    const std::size_t G = cfg.tokens_per_side();
    TensorT<T> out({G * G, cfg.patch_dim()});
    for (std::size_t gy = 0; gy < G; ++gy)
        for (std::size_t gx = 0; gx < G; ++gx) {
            T* row = &out.data[(gy * G + gx) * cfg.patch_dim()];
            for (std::size_t c = 0; c < C; ++c)
                for (std::size_t py = 0; py < P; ++py)
                    for (std::size_t px = 0; px < P; ++px)
                        row[c * P * P + py * P + px] =
                            z.data[c * S * S + (gy * P + py) * S + (gx * P + px)];
        }
    return out;
}

template <class T>
TensorT<T> unpatchify(const TensorT<T>& tokens, const DenoiserConfig& cfg) {
    const std::size_t C = cfg.latent_channels, S = cfg.latent_size, P = cfg.patch_size;
    const std::size_t G = cfg.tokens_per_side();
    if (tokens.shape != std::vector<std::size_t>{G * G, cfg.patch_dim()})
        throw ShapeError("unpatchify: token shape mismatch, got " + shape_str(tokens.shape));
    TensorT<T> z({C, S, S});
    for (std::size_t gy = 0; gy < G; ++gy)
        for (std::size_t gx = 0; gx < G; ++gx) {
            const T* row = &tokens.data[(gy * G + gx) * cfg.patch_dim()];
            for (std::size_t c = 0; c < C; ++c)
                for (std::size_t py = 0; py < P; ++py)
                    for (std::size_t px = 0; px < P; ++px)
                        z.data[c * S * S + (gy * P + py) * S + (gx * P + px)] =
                            row[c * P * P + py * P + px];
        }
    return z;
}

// Deterministic sinusoidal encoding of an integer timestep, size `width`.
template <class T>
TensorT<T> timestep_embedding(int t, std::size_t width) {
    TensorT<T> e({1, width});
    const std::size_t half = width / 2;
    for (std::size_t i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) /
                                     static_cast<double>(half));
        e.data[2 * i] = static_cast<T>(std::sin(t * freq));
        e.data[2 * i + 1] = static_cast<T>(std::cos(t * freq));
    }
    if (width % 2) e.data[width - 1] = T(0);
    return e;
}

template <class T>
struct BlockCache {
    AttentionCacheT<T> self_attn;
    AttentionCacheT<T> cross_attn;
    nn::LayerNormCache<T> mlp_ln;
    TensorT<T> mlp_h, mlp_u, mlp_a;
};

template <class T>
struct ForwardCache {
    TensorT<T> patches;
    TensorT<T> ctx;
    std::size_t cond_id = 0;
    TensorT<T> temb; // raw sinusoidal [1, width]
    std::vector<BlockCache<T>> blocks;
    nn::LayerNormCache<T> head_ln;
    TensorT<T> head_h;
};

template <class T>
using ParamMap = std::map<std::string, TensorT<T>>;

template <class T>
class DenoiserT {
public:
    static constexpr T kLnEps = T(1e-5);

    DenoiserT() = default;
    explicit DenoiserT(const DenoiserConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

    const DenoiserConfig& config() const { return cfg_; }
    ParamMap<T>& params() { return params_; }
    const ParamMap<T>& params() const { return params_; }

    void init_params(std::uint64_t seed) {
        Rng rng(seed);
        params_.clear();
        const std::size_t W = cfg_.width, pd = cfg_.patch_dim(), N = cfg_.num_tokens();
        const std::size_t Dc = cfg_.context_dim, H = cfg_.mlp_hidden();
        auto normal = [&](std::vector<std::size_t> s, double std) {
            return rng.template normal_tensor<T>(std::move(s), std);
        };
        auto ones = [](std::vector<std::size_t> s) {
            TensorT<T> t(std::move(s));
            for (auto& v : t.data) v = T(1);
            return t;
        };
        params_["embed.w"] = normal({pd, W}, 1.0 / std::sqrt((double)pd));
        params_["embed.b"] = TensorT<T>({W});
        params_["pos"] = normal({N, W}, 0.02);
        params_["time.w"] = normal({W, W}, 1.0 / std::sqrt((double)W));
        params_["time.b"] = TensorT<T>({W});
        params_["cond.table"] =
            normal({cfg_.num_conditions, cfg_.context_tokens * Dc}, 0.02);
        for (std::size_t b = 0; b < cfg_.num_blocks; ++b) {
            const std::string p = "block" + std::to_string(b) + ".";
            for (const char* site : {"self.", "cross."}) {
                const bool cross = site[0] == 'c';
                const std::size_t kv_in = cross ? Dc : W;
                params_[p + site + "ln.g"] = ones({W});
                params_[p + site + "ln.b"] = TensorT<T>({W});
                params_[p + site + "wq"] = normal({W, W}, 1.0 / std::sqrt((double)W));
                params_[p + site + "wk"] = normal({kv_in, W}, 1.0 / std::sqrt((double)kv_in));
                params_[p + site + "wv"] = normal({kv_in, W}, 1.0 / std::sqrt((double)kv_in));
                params_[p + site + "wo"] = normal({W, W}, 0.5 / std::sqrt((double)W));
                params_[p + site + "bo"] = TensorT<T>({W});
            }
            params_[p + "mlp.ln.g"] = ones({W});
            params_[p + "mlp.ln.b"] = TensorT<T>({W});
            params_[p + "mlp.w1"] = normal({W, H}, 1.0 / std::sqrt((double)W));
            params_[p + "mlp.b1"] = TensorT<T>({H});
            params_[p + "mlp.w2"] = normal({H, W}, 0.5 / std::sqrt((double)H));
            params_[p + "mlp.b2"] = TensorT<T>({W});
        }
        params_["head.ln.g"] = ones({W});
        params_["head.ln.b"] = TensorT<T>({W});
        params_["head.w"] = TensorT<T>({W, pd}); // zero-init: untrained net predicts 0
        params_["head.b"] = TensorT<T>({pd});
    }

    TensorT<T> context_for(const Condition& c) const {
        const TensorT<T>& table = at("cond.table");
        if (c.id >= table.rows())
            throw ArgumentError("condition id out of range: " + std::to_string(c.id));
        TensorT<T> ctx({cfg_.context_tokens, cfg_.context_dim});
        const T* src = &table.data[c.id * table.cols()];
        std::copy(src, src + table.cols(), ctx.data.begin());
        return ctx;
    }

    // eps prediction. `hook` (modulation) and `cache` (training) are never
    // used together.
    TensorT<T> predict_noise(const TensorT<T>& z, int t, const Condition& cond,
                             const AttentionHookT<T>& hook = nullptr,
                             ForwardCache<T>* cache = nullptr) const {
        TensorT<T> patches = patchify(z, cfg_);
        TensorT<T> x = nn::linear(patches, at("embed.w"), at("embed.b"));
        x = add(x, at("pos"));
        TensorT<T> temb = timestep_embedding<T>(t, cfg_.width);
        TensorT<T> tproj = nn::linear(temb, at("time.w"), at("time.b"));
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t j = 0; j < x.cols(); ++j)
                x.at2(i, j) += tproj.data[j];
        TensorT<T> ctx = context_for(cond);

        if (cache) {
            cache->patches = patches;
            cache->ctx = ctx;
            cache->cond_id = cond.id;
            cache->temb = temb;
            cache->blocks.resize(cfg_.num_blocks);
        }

        for (std::size_t b = 0; b < cfg_.num_blocks; ++b) {
            BlockCache<T>* bc = cache ? &cache->blocks[b] : nullptr;
            x = run_attention_block(x, x, block_weights(b, SiteKind::self_attention),
                                    AttentionSiteId{b, SiteKind::self_attention}, hook,
                                    cfg_.heads, kLnEps, bc ? &bc->self_attn : nullptr);
            x = run_attention_block(x, ctx, block_weights(b, SiteKind::cross_attention),
                                    AttentionSiteId{b, SiteKind::cross_attention}, hook,
                                    cfg_.heads, kLnEps, bc ? &bc->cross_attn : nullptr);
            const std::string p = "block" + std::to_string(b) + ".mlp.";
            TensorT<T> h = nn::layer_norm(x, at(p + "ln.g"), at(p + "ln.b"), kLnEps,
                                          bc ? &bc->mlp_ln : nullptr);
            TensorT<T> u = nn::linear(h, at(p + "w1"), at(p + "b1"));
            TensorT<T> a = nn::gelu(u);
            x = add(x, nn::linear(a, at(p + "w2"), at(p + "b2")));
            if (bc) {
                bc->mlp_h = std::move(h);
                bc->mlp_u = std::move(u);
                bc->mlp_a = std::move(a);
            }
        }
        TensorT<T> hh = nn::layer_norm(x, at("head.ln.g"), at("head.ln.b"), kLnEps,
                                       cache ? &cache->head_ln : nullptr);
        TensorT<T> out = nn::linear(hh, at("head.w"), at("head.b"));
        if (cache) cache->head_h = hh;
        return unpatchify(out, cfg_);
    }

    // Accumulates parameter gradients for d(loss)/d(eps_pred) into `grads`.
    void backward(const ForwardCache<T>& cache, const TensorT<T>& d_eps,
                  ParamMap<T>& grads) const {
        ensure_grad_slots(grads);
        TensorT<T> dout = patchify(d_eps, cfg_);

        // head
        grads["head.w"] = add(grads["head.w"], matmul_at(cache.head_h, dout));
        accumulate_colsum(dout, grads["head.b"]);
        TensorT<T> dhh = matmul_bt(dout, at("head.w"));
        TensorT<T> dx = nn::layer_norm_backward(cache.head_ln, at("head.ln.g"), dhh,
                                                grads["head.ln.g"], grads["head.ln.b"]);

        TensorT<T> dctx(cache.ctx.shape);
        for (std::size_t bi = cfg_.num_blocks; bi-- > 0;) {
            const BlockCache<T>& bc = cache.blocks[bi];
            const std::string p = "block" + std::to_string(bi) + ".mlp.";
            // mlp: y = x + W2(gelu(W1 h + b1)) + b2, h = LN(x)
            TensorT<T> da = matmul_bt(dx, at(p + "w2"));
            grads[p + "w2"] = add(grads[p + "w2"], matmul_at(bc.mlp_a, dx));
            accumulate_colsum(dx, grads[p + "b2"]);
            TensorT<T> du = nn::gelu_backward(bc.mlp_u, da);
            grads[p + "w1"] = add(grads[p + "w1"], matmul_at(bc.mlp_h, du));
            accumulate_colsum(du, grads[p + "b1"]);
            TensorT<T> dh = matmul_bt(du, at(p + "w1"));
            TensorT<T> dx_ln = nn::layer_norm_backward(bc.mlp_ln, at(p + "ln.g"), dh,
                                                       grads[p + "ln.g"],
                                                       grads[p + "ln.b"]);
            dx = add(dx, dx_ln);

            dx = backward_attention(bi, SiteKind::cross_attention, bc.cross_attn, dx,
                                    grads, &dctx);
            dx = backward_attention(bi, SiteKind::self_attention, bc.self_attn, dx,
                                    grads, nullptr);
        }

        // conditioning table row
        {
            TensorT<T>& g = grads["cond.table"];
            T* row = &g.data[cache.cond_id * g.cols()];
            for (std::size_t i = 0; i < dctx.numel(); ++i) row[i] += dctx.data[i];
        }

        // token embedding, positional and time terms
        grads["pos"] = add(grads["pos"], dx);
        TensorT<T> dtproj({1, cfg_.width});
        accumulate_colsum(dx, dtproj);
        grads["time.w"] = add(grads["time.w"], matmul_at(cache.temb, dtproj));
        for (std::size_t j = 0; j < cfg_.width; ++j)
            grads["time.b"].data[j] += dtproj.data[j];
        grads["embed.w"] = add(grads["embed.w"], matmul_at(cache.patches, dx));
        accumulate_colsum(dx, grads["embed.b"]);
    }

private:
    DenoiserConfig cfg_;
    ParamMap<T> params_;

    const TensorT<T>& at(const std::string& name) const {
        auto it = params_.find(name);
        if (it == params_.end())
            throw ConfigError("denoiser: missing parameter " + name);
        return it->second;
    }

    AttentionBlockWeightsT<T> block_weights(std::size_t b, SiteKind kind) const {
        const std::string p = "block" + std::to_string(b) +
                              (kind == SiteKind::self_attention ? ".self." : ".cross.");
        AttentionBlockWeightsT<T> w;
        w.ln_gain = at(p + "ln.g");
        w.ln_bias = at(p + "ln.b");
        w.wq = at(p + "wq");
        w.wk = at(p + "wk");
        w.wv = at(p + "wv");
        w.wo = at(p + "wo");
        w.bo = at(p + "bo");
        return w;
    }

    TensorT<T> backward_attention(std::size_t b, SiteKind kind,
                                  const AttentionCacheT<T>& ac, const TensorT<T>& dy,
                                  ParamMap<T>& grads, TensorT<T>* dctx) const {
        const std::string p = "block" + std::to_string(b) +
                              (kind == SiteKind::self_attention ? ".self." : ".cross.");
        AttentionBlockWeightsT<T> w = block_weights(b, kind);
        AttentionBlockWeightsT<T> dw;
        dw.ln_gain = grads[p + "ln.g"];
        dw.ln_bias = grads[p + "ln.b"];
        dw.wq = grads[p + "wq"];
        dw.wk = grads[p + "wk"];
        dw.wv = grads[p + "wv"];
        dw.wo = grads[p + "wo"];
        dw.bo = grads[p + "bo"];
        TensorT<T> dx = attention_block_backward(ac, w, kind, cfg_.heads, dy, dw, dctx);
        grads[p + "ln.g"] = std::move(dw.ln_gain);
        grads[p + "ln.b"] = std::move(dw.ln_bias);
        grads[p + "wq"] = std::move(dw.wq);
        grads[p + "wk"] = std::move(dw.wk);
        grads[p + "wv"] = std::move(dw.wv);
        grads[p + "wo"] = std::move(dw.wo);
        grads[p + "bo"] = std::move(dw.bo);
        return dx;
    }

    static void accumulate_colsum(const TensorT<T>& m, TensorT<T>& out) {
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j)
                out.data[j] += m.at2(i, j);
    }

    void ensure_grad_slots(ParamMap<T>& grads) const {
        for (const auto& [name, p] : params_) {
            auto it = grads.find(name);
            if (it == grads.end()) grads.emplace(name, TensorT<T>(p.shape));
        }
    }
};

using Denoiser = DenoiserT<float>;

} // namespace ham
