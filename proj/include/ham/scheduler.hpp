#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ham/tensor.hpp"

namespace ham {

// Clean-sample sentinel: alpha_bar(kClean) == 1 exactly. DDIM trajectories
// run between kClean and the highest schedule index.
inline constexpr int kCleanTimestep = -1;

struct NoiseSchedule {
    int total_timesteps = 1000;
    std::vector<double> betas;
    std::vector<double> alphas_cumprod;
    int inference_steps = 50;
    std::vector<int> step_indices; // strictly decreasing, within [0, T)

    double alpha_bar(int t) const {
        if (t == kCleanTimestep) return 1.0;
        if (t < 0 || t >= total_timesteps)
            throw ArgumentError("alpha_bar: timestep out of range: " + std::to_string(t));
        return alphas_cumprod[static_cast<std::size_t>(t)];
    }
};

struct LatentState {
    Tensor z;
    int t = kCleanTimestep;
};

inline NoiseSchedule build_schedule(int total_timesteps, double beta_start,
                                    double beta_end, int inference_steps) {
    if (!(beta_start > 0.0) || !(beta_end < 1.0) || beta_start > beta_end)
        throw ArgumentError("build_schedule: need 0 < beta_start <= beta_end < 1");
    if (total_timesteps < 1)
        throw ArgumentError("build_schedule: total_timesteps must be >= 1");
    if (inference_steps < 1 || inference_steps > total_timesteps)
        throw ArgumentError("build_schedule: need 1 <= inference_steps <= total_timesteps");

    NoiseSchedule s;
    s.total_timesteps = total_timesteps;
    s.inference_steps = inference_steps;
    s.betas.resize(total_timesteps);
    s.alphas_cumprod.resize(total_timesteps);
    double acc = 1.0;
    for (int t = 0; t < total_timesteps; ++t) {
        const double frac = total_timesteps == 1
                                ? 0.0
                                : static_cast<double>(t) / (total_timesteps - 1);
        s.betas[t] = beta_start + (beta_end - beta_start) * frac;
        acc *= 1.0 - s.betas[t];
        s.alphas_cumprod[t] = acc;
    }

    // evenly spaced, deduplicated, descending
    std::vector<int> idx;
    const double stride = static_cast<double>(total_timesteps) / inference_steps;
    for (int i = inference_steps - 1; i >= 0; --i) {
        int t = static_cast<int>(std::llround(i * stride));
        if (t >= total_timesteps) t = total_timesteps - 1;
        if (idx.empty() || t < idx.back()) idx.push_back(t);
    }
    // idx currently descending because we iterated i downward
    s.step_indices = std::move(idx);
    s.inference_steps = static_cast<int>(s.step_indices.size());
    return s;
}

namespace detail {

inline Tensor ddim_transport(const Tensor& z, const Tensor& eps, double abar_from,
                             double abar_to) {
    // x0 = (z - sqrt(1-abar_from) eps) / sqrt(abar_from)
    // z' = sqrt(abar_to) x0 + sqrt(1-abar_to) eps
    if (!z.same_shape(eps))
        throw ShapeError("ddim: latent/eps shape mismatch");
    const double sa_f = std::sqrt(abar_from), sb_f = std::sqrt(1.0 - abar_from);
    const double sa_t = std::sqrt(abar_to), sb_t = std::sqrt(1.0 - abar_to);
    const double cz = sa_t / sa_f;
    const double ce = sb_t - sa_t * sb_f / sa_f;
    Tensor out(z.shape);
    for (std::size_t i = 0; i < z.numel(); ++i)
        out.data[i] = static_cast<float>(cz * z.data[i] + ce * eps.data[i]);
    return out;
}

} // namespace detail

// Deterministic DDIM step (eta = 0): move the latent from state.t down to
// next_t using the predicted noise.
inline LatentState ddim_step(const NoiseSchedule& s, const LatentState& state,
                             const Tensor& eps_pred, int next_t) {
    if (next_t >= state.t)
        throw ArgumentError("ddim_step: next_t must be < current t");
    LatentState out;
    out.z = detail::ddim_transport(state.z, eps_pred,
                                   s.alpha_bar(state.t), s.alpha_bar(next_t));
    out.t = next_t;
    return out;
}

// Reversed DDIM recurrence with frozen eps; exact inverse of ddim_step for a
// matched step pair with identical eps_pred.
inline LatentState ddim_invert_step(const NoiseSchedule& s, const LatentState& state,
                                    const Tensor& eps_pred, int next_t) {
    if (next_t <= state.t)
        throw ArgumentError("ddim_invert_step: next_t must be > current t");
    LatentState out;
    out.z = detail::ddim_transport(state.z, eps_pred,
                                   s.alpha_bar(state.t), s.alpha_bar(next_t));
    out.t = next_t;
    return out;
}

} // namespace ham
