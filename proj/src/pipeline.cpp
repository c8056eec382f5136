#include "ham/pipeline.hpp"

#include "ham/rng.hpp"

namespace ham {

Tensor generate(const Denoiser& model, const NoiseSchedule& schedule,
                const Tensor& z_start, const Condition& condition,
                const ModulationHook& hook, TeacherTrace* capture,
                bool record_step_latents) {
    const auto& idx = schedule.step_indices;
    if (idx.empty()) throw ArgumentError("generate: schedule has no step indices");
    if (hook && capture)
        throw ArgumentError("generate: hook and capture are mutually exclusive");

    LatentState st{z_start, idx.front()};
    for (std::size_t i = 0; i < idx.size(); ++i) {
        AttentionHook site_hook = nullptr;
        if (hook) {
            site_hook = [&hook, i](const AttentionSiteId& site,
                                   const AttentionProjections& p) {
                return hook(i, site, p);
            };
        } else if (capture) {
            site_hook = [capture, i](const AttentionSiteId& site,
                                     const AttentionProjections& p) {
                capture->record(i, site, p);
                return p;
            };
        }
        Tensor eps = model.predict_noise(st.z, idx[i], condition, site_hook);
        if (!eps.all_finite())
            throw NumericError("generate: non-finite prediction at step ordinal " +
                               std::to_string(i) + " (t=" + std::to_string(idx[i]) + ")");
        const int next_t = (i + 1 < idx.size()) ? idx[i + 1] : kCleanTimestep;
        st = ddim_step(schedule, st, eps, next_t);
        if (capture && record_step_latents) capture->record_latent(i, st.z);
    }
    return st.z;
}

InversionOutcome invert_image(const Tensor& latent, const NoiseSchedule& schedule,
                              const Denoiser& model, const Condition& condition,
                              bool record_step_latents) {
    const auto& idx = schedule.step_indices;
    if (idx.empty()) throw ArgumentError("invert_image: schedule has no step indices");
    require_finite(latent, "latent passed to inversion");

    // naive frozen-eps inversion: eps evaluated at the target timestep
    LatentState st{latent, kCleanTimestep};
    for (std::size_t j = idx.size(); j-- > 0;) {
        const int target = idx[j];
        Tensor eps = model.predict_noise(st.z, target, condition);
        st = ddim_invert_step(schedule, st, eps, target);
        if (!st.z.all_finite())
            throw NumericError("invert_image: non-finite latent at inversion step t=" +
                               std::to_string(target));
    }

    InversionOutcome out;
    out.z_T = st.z;
    out.trace.set_initial_latent(st.z);
    out.reconstruction = generate(model, schedule, st.z, condition, nullptr, &out.trace,
                                  record_step_latents);
    return out;
}

namespace {

struct Teachers {
    InversionOutcome content;
    InversionOutcome style;
    Tensor z_T_style;
    Condition student_cond;
};

Teachers build_teachers(const Denoiser& model, const NoiseSchedule& schedule,
                        const TransferRequest& req) {
    if (req.style_latent.has_value() == req.style_condition.has_value())
        throw ArgumentError("transfer: exactly one of style_latent / style_condition required");

    Teachers t;
    t.content = invert_image(req.content_latent, schedule, model, Condition{0},
                             req.record_step_latents);

    if (req.style_latent) {
        // image-guided: the style teacher reconstructs the style image
        t.style = invert_image(*req.style_latent, schedule, model, Condition{0},
                               req.record_step_latents);
        t.z_T_style = t.style.z_T;
        t.student_cond = Condition{0};
    } else {
        // text-guided: the style teacher generates from seeded Gaussian noise
        // under the style condition
        Rng rng(req.seed);
        t.z_T_style = rng.normal_tensor<float>(req.content_latent.shape);
        t.style.z_T = t.z_T_style;
        t.style.trace.set_initial_latent(t.z_T_style);
        Condition style_cond{*req.style_condition};
        t.style.reconstruction =
            generate(model, schedule, t.z_T_style, style_cond, nullptr, &t.style.trace,
                     req.record_step_latents);
        t.student_cond = style_cond;
    }
    return t;
}

TransferResult run_student(const Denoiser& model, const NoiseSchedule& schedule,
                           const TransferRequest& req, const Teachers& teachers) {
    req.mod.validate();
    TransferResult res;
    res.z_T_content = teachers.content.z_T;
    res.z_T_style = teachers.z_T_style;
    res.content_trace = teachers.content.trace;
    res.style_trace = teachers.style.trace;
    res.content_recon_latent = teachers.content.reconstruction;
    res.style_recon_latent = teachers.style.reconstruction;

    res.z_T_main = req.mod.sini_enabled
                       ? sini(res.z_T_content, res.z_T_style, req.mod.gamma,
                              req.mod.adain_epsilon)
                       : res.z_T_content;

    ModulationHook hook =
        make_student_hook(res.content_trace, res.style_trace, req.mod);
    res.stylized_latent = generate(model, schedule, res.z_T_main,
                                   teachers.student_cond, hook);
    require_finite(res.stylized_latent, "stylized latent");
    res.stylized_image = latent_to_image(res.stylized_latent);
    return res;
}

} // namespace

TransferResult transfer(const Denoiser& model, const NoiseSchedule& schedule,
                        const TransferRequest& req) {
    req.mod.validate();
    Teachers teachers = build_teachers(model, schedule, req);
    return run_student(model, schedule, req, teachers);
}

std::vector<AblationToggles> standard_ablation_rows() {
    return {
        {false, false, false}, // A
        {true, false, false},  // B
        {false, true, false},  // C
        {false, false, true},  // D
        {true, true, false},   // E
        {true, false, true},   // F
        {false, true, true},   // G
        {true, true, true},    // H
    };
}

std::vector<TransferResult> ablation_matrix(const Denoiser& model,
                                            const NoiseSchedule& schedule,
                                            const TransferRequest& req,
                                            const std::vector<AblationToggles>& rows) {
    req.mod.validate();
    Teachers teachers = build_teachers(model, schedule, req);

    std::vector<TransferResult> results;
    results.reserve(rows.size());
    std::map<std::tuple<bool, bool, bool>, std::size_t> cache;
    for (const auto& row : rows) {
        const auto key = std::make_tuple(row.gar, row.lat, row.sini);
        auto it = cache.find(key);
        if (it != cache.end()) {
            results.push_back(results[it->second]);
            continue;
        }
        TransferRequest r = req;
        r.mod.gar_enabled = row.gar;
        r.mod.lat_enabled = row.lat;
        r.mod.sini_enabled = row.sini;
        cache.emplace(key, results.size());
        results.push_back(run_student(model, schedule, r, teachers));
    }
    return results;
}

} // namespace ham
