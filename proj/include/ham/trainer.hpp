#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "ham/dataset.hpp"
#include "ham/denoiser.hpp"
#include "ham/rng.hpp"
#include "ham/scheduler.hpp"

namespace ham {

struct TrainOptions {
    int steps = 400;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    int batch_size = 4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double null_cond_prob = 0.1; // fraction of samples trained unconditionally
};

template <class T>
struct AdamState {
    ParamMap<T> m, v;
    long step = 0;
};

template <class T>
void adam_update(ParamMap<T>& params, const ParamMap<T>& grads, AdamState<T>& st,
                 const TrainOptions& opt) {
    st.step += 1;
    const double b1 = opt.adam_beta1, b2 = opt.adam_beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
    for (auto& [name, p] : params) {
        const TensorT<T>& g = grads.at(name);
        auto mit = st.m.find(name);
        if (mit == st.m.end()) {
            st.m.emplace(name, TensorT<T>(p.shape));
            st.v.emplace(name, TensorT<T>(p.shape));
        }
        TensorT<T>& m = st.m.at(name);
        TensorT<T>& v = st.v.at(name);
        for (std::size_t i = 0; i < p.numel(); ++i) {
            const double gi = static_cast<double>(g.data[i]);
            m.data[i] = static_cast<T>(b1 * m.data[i] + (1 - b1) * gi);
            v.data[i] = static_cast<T>(b2 * v.data[i] + (1 - b2) * gi * gi);
            const double mhat = m.data[i] / bc1;
            const double vhat = v.data[i] / bc2;
            p.data[i] -= static_cast<T>(opt.lr * mhat / (std::sqrt(vhat) + opt.adam_eps));
        }
    }
}

// MSE between target noise and prediction; fills d_pred with the gradient.
template <class T>
double mse_loss(const TensorT<T>& pred, const TensorT<T>& target, TensorT<T>& d_pred,
                double grad_scale = 1.0) {
    if (!pred.same_shape(target)) throw ShapeError("mse_loss: shape mismatch");
    double loss = 0;
    d_pred = TensorT<T>(pred.shape);
    const double inv_n = 1.0 / static_cast<double>(pred.numel());
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        const double diff = static_cast<double>(pred.data[i]) - target.data[i];
        loss += diff * diff;
        d_pred.data[i] = static_cast<T>(2.0 * diff * inv_n * grad_scale);
    }
    return loss * inv_n;
}

using SampleSource = std::function<toyset::Sample(Rng&)>;

// Epsilon-prediction training loop: sample a clean latent, a
// uniform timestep and Gaussian noise; regress the injected noise.
template <class T>
std::vector<double> train(DenoiserT<T>& model, const NoiseSchedule& schedule,
                          const SampleSource& dataset, const TrainOptions& opt) {
    if (opt.steps < 1) throw ArgumentError("train: steps must be >= 1");
    if (opt.batch_size < 1) throw ArgumentError("train: batch_size must be >= 1");

    Rng rng(opt.seed);
    AdamState<T> adam;
    std::vector<double> losses;
    losses.reserve(opt.steps);

    for (int step = 0; step < opt.steps; ++step) {
        ParamMap<T> grads;
        double step_loss = 0;
        for (int b = 0; b < opt.batch_size; ++b) {
            toyset::Sample s = dataset(rng);
            const int t = static_cast<int>(rng.uniform_int(schedule.total_timesteps));
            const double abar = schedule.alpha_bar(t);
            TensorT<T> x0 = s.latent.template cast<T>();
            TensorT<T> eps = rng.template normal_tensor<T>(x0.shape);
            TensorT<T> zt(x0.shape);
            const T sa = static_cast<T>(std::sqrt(abar));
            const T sb = static_cast<T>(std::sqrt(1.0 - abar));
            for (std::size_t i = 0; i < zt.numel(); ++i)
                zt.data[i] = sa * x0.data[i] + sb * eps.data[i];
            Condition cond{s.condition_id};
            if (rng.uniform() < opt.null_cond_prob) cond.id = toyset::kNullId;

            ForwardCache<T> cache;
            TensorT<T> pred = model.predict_noise(zt, t, cond, nullptr, &cache);
            TensorT<T> d_pred;
            step_loss += mse_loss(pred, eps, d_pred, 1.0 / opt.batch_size);
            model.backward(cache, d_pred, grads);
        }
        step_loss /= opt.batch_size;
        if (!std::isfinite(step_loss))
            throw NumericError("train: non-finite loss at step " + std::to_string(step));
        adam_update(model.params(), grads, adam, opt);
        losses.push_back(step_loss);
    }
    return losses;
}

inline SampleSource default_toy_dataset(std::size_t latent_size = 32) {
    return [latent_size](Rng& rng) { return toyset::draw(rng, latent_size); };
}

} // namespace ham
