#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "ham/attention.hpp"
#include "ham/tensor.hpp"

namespace ham {

// Per-channel statistics axes: attention projections are tokens x features
// (channel = feature axis 1), latents are channels x H x W (axis 0).
inline constexpr std::size_t kProjectionChannelAxis = 1;
inline constexpr std::size_t kLatentChannelAxis = 0;

struct StepRange {
    std::size_t first = 0;
    std::size_t last = SIZE_MAX; // inclusive

    bool contains(std::size_t v) const { return v >= first && v <= last; }
};

struct ModulationConfig {
    float alpha = 0.75f; // student weight in the GAR blend
    float beta = 0.25f;  // student weight in the LAT query blend
    float gamma = 0.5f;  // content-residual weight in SINI
    bool gar_enabled = true;
    bool lat_enabled = true;
    bool sini_enabled = true;
    StepRange layer_range;
    StepRange step_range;
    float adain_epsilon = 1e-5f;

    void validate() const {
        auto in01 = [](float v) { return v >= 0.0f && v <= 1.0f; };
        if (!in01(alpha) || !in01(beta) || !in01(gamma))
            throw ArgumentError("modulation config: alpha/beta/gamma must be in [0,1]");
        if (!(adain_epsilon > 0.0f))
            throw ArgumentError("modulation config: adain_epsilon must be > 0");
        if (layer_range.first > layer_range.last || step_range.first > step_range.last)
            throw ArgumentError("modulation config: empty range");
    }
};

// Immutable archive of one teacher pass: projections per (inference-step
// ordinal, site), the initial latent, optional per-step latents.
class TeacherTrace {
public:
    using Key = std::pair<std::size_t, AttentionSiteId>;

    void record(std::size_t step_ordinal, const AttentionSiteId& site,
                const AttentionProjections& p) {
        entries_[make_key(step_ordinal, site)] = p;
    }

    const AttentionProjections* find(std::size_t step_ordinal,
                                     const AttentionSiteId& site) const {
        auto it = entries_.find(make_key(step_ordinal, site));
        return it == entries_.end() ? nullptr : &it->second;
    }

    const AttentionProjections& require(std::size_t step_ordinal,
                                        const AttentionSiteId& site) const {
        const AttentionProjections* p = find(step_ordinal, site);
        if (!p)
            throw TraceError("teacher trace missing entry: step " +
                             std::to_string(step_ordinal) + ", layer " +
                             std::to_string(site.layer_index) + " (" +
                             site_kind_name(site.kind) + ")");
        return *p;
    }

    void set_initial_latent(Tensor z) { z_T_ = std::move(z); }
    const Tensor& initial_latent() const {
        if (z_T_.numel() == 0) throw TraceError("teacher trace has no initial latent");
        return z_T_;
    }

    void record_latent(std::size_t step_ordinal, Tensor z) {
        step_latents_[step_ordinal] = std::move(z);
    }
    const std::map<std::size_t, Tensor>& step_latents() const { return step_latents_; }

    const std::map<std::tuple<std::size_t, std::size_t, int>, AttentionProjections>&
    entries() const {
        return entries_;
    }

private:
    static std::tuple<std::size_t, std::size_t, int> make_key(std::size_t step,
                                                              const AttentionSiteId& s) {
        return {step, s.layer_index, static_cast<int>(s.kind)};
    }

    std::map<std::tuple<std::size_t, std::size_t, int>, AttentionProjections> entries_;
    Tensor z_T_;
    std::map<std::size_t, Tensor> step_latents_;
};

// GAR step 1: AdaIN each of Q/K/V from the content teacher onto the style
// teacher's per-feature statistics.
inline AttentionProjections gar_fuse(const AttentionProjections& content,
                                     const AttentionProjections& style, float eps) {
    if (!content.q.same_shape(style.q) || !content.k.same_shape(style.k) ||
        !content.v.same_shape(style.v))
        throw ShapeError("gar_fuse: content/style projection shape mismatch");
    AttentionProjections out;
    out.q = adain(content.q, style.q, kProjectionChannelAxis, eps);
    out.k = adain(content.k, style.k, kProjectionChannelAxis, eps);
    out.v = adain(content.v, style.v, kProjectionChannelAxis, eps);
    return out;
}

// GAR step 2: convex blend of the student's projections with the fused
// teacher projections. alpha == 1 returns the student bitwise.
inline AttentionProjections gar_blend(const AttentionProjections& student,
                                      const AttentionProjections& fused, float alpha) {
    if (alpha < 0.0f || alpha > 1.0f)
        throw ArgumentError("gar_blend: alpha must be in [0,1]");
    if (!student.q.same_shape(fused.q) || !student.k.same_shape(fused.k) ||
        !student.v.same_shape(fused.v))
        throw ShapeError("gar_blend: shape mismatch");
    AttentionProjections out;
    out.q = lerp(student.q, fused.q, alpha);
    out.k = lerp(student.k, fused.k, alpha);
    out.v = lerp(student.v, fused.v, alpha);
    return out;
}

// LAT: blend the student query with the content teacher's, replace K/V with
// the style teacher's cross-attention projections. beta == 1 keeps the query
// untouched.
inline AttentionProjections lat_transplant(const Tensor& student_q,
                                           const Tensor& content_q,
                                           const Tensor& style_k, const Tensor& style_v,
                                           float beta) {
    if (beta < 0.0f || beta > 1.0f)
        throw ArgumentError("lat_transplant: beta must be in [0,1]");
    if (!student_q.same_shape(content_q))
        throw ShapeError("lat_transplant: query shape mismatch");
    AttentionProjections out;
    out.q = lerp(student_q, content_q, beta);
    out.k = style_k;
    out.v = style_v;
    out.check();
    return out;
}

// SINI: A = adain(content, style); gamma * (content - A) + A.
// Implemented so the gamma = 1 and gamma = 0 endpoints are bitwise exact.
inline Tensor sini(const Tensor& z_T_content, const Tensor& z_T_style, float gamma,
                   float eps) {
    if (gamma < 0.0f || gamma > 1.0f)
        throw ArgumentError("sini: gamma must be in [0,1]");
    if (!z_T_content.same_shape(z_T_style))
        throw ShapeError("sini: latent shape mismatch");
    if (gamma == 1.0f) return z_T_content;
    Tensor fused = adain(z_T_content, z_T_style, kLatentChannelAxis, eps);
    if (gamma == 0.0f) return fused;
    Tensor out(fused.shape);
    for (std::size_t i = 0; i < out.numel(); ++i)
        out.data[i] = gamma * (z_T_content.data[i] - fused.data[i]) + fused.data[i];
    return out;
}

// Hook applied per (inference-step ordinal, attention site).
using ModulationHook = std::function<AttentionProjections(
    std::size_t step_ordinal, const AttentionSiteId&, const AttentionProjections&)>;

// Composes GAR at self sites and LAT at cross sites over the configured
// ranges; identity elsewhere. Throws TraceError lazily when an in-range site
// has no teacher entry.
inline ModulationHook make_student_hook(const TeacherTrace& content,
                                        const TeacherTrace& style,
                                        const ModulationConfig& cfg) {
    cfg.validate();
    return [&content, &style, cfg](std::size_t step, const AttentionSiteId& site,
                                   const AttentionProjections& p) -> AttentionProjections {
        if (!cfg.step_range.contains(step) || !cfg.layer_range.contains(site.layer_index))
            return p;
        if (site.kind == SiteKind::self_attention) {
            if (!cfg.gar_enabled) return p;
            const AttentionProjections& pc = content.require(step, site);
            const AttentionProjections& ps = style.require(step, site);
            return gar_blend(p, gar_fuse(pc, ps, cfg.adain_epsilon), cfg.alpha);
        }
        if (!cfg.lat_enabled) return p;
        const AttentionProjections& pc = content.require(step, site);
        const AttentionProjections& ps = style.require(step, site);
        return lat_transplant(p.q, pc.q, ps.k, ps.v, cfg.beta);
    };
}

// Trace directory layout: trace/<step>/<layer>/<kind>/{q,k,v}.hamt plus
// trace/z_T.hamt and manifest.txt. Defined in trace_io.cpp.
void save_trace(const std::string& dir, const TeacherTrace& trace);
TeacherTrace load_trace(const std::string& dir);

} // namespace ham
