#pragma once

#include <optional>
#include <vector>

#include "ham/denoiser.hpp"
#include "ham/image.hpp"
#include "ham/modulation.hpp"
#include "ham/scheduler.hpp"

namespace ham {

// End-to-end request over latents; the CLI handles image decode/encode.
struct TransferRequest {
    Tensor content_latent;
    std::optional<Tensor> style_latent;          // image-guided
    std::optional<std::size_t> style_condition;  // text-guided
    ModulationConfig mod;
    std::uint64_t seed = 0;
    bool record_step_latents = false;
};

struct TransferResult {
    Tensor stylized_latent;
    Image stylized_image;
    Tensor z_T_content, z_T_style, z_T_main;
    TeacherTrace content_trace, style_trace;
    Tensor content_recon_latent; // unmodulated reconstruction of the content
    Tensor style_recon_latent;   // the style teacher's own reconstruction
};

// DDIM inversion of a clean latent up to the schedule's top step, then a
// reconstruction replay that captures projections at every site. Returns the
// inverted z_T, the trace and the replay's reconstruction.
struct InversionOutcome {
    Tensor z_T;
    TeacherTrace trace;
    Tensor reconstruction;
};

InversionOutcome invert_image(const Tensor& latent, const NoiseSchedule& schedule,
                              const Denoiser& model, const Condition& condition,
                              bool record_step_latents = false);

// Denoise from z_start over the schedule's step indices. The hook, when
// present, is consulted per (step ordinal, site). When `capture` is set,
// projections are recorded into it instead (capture and hook are exclusive).
Tensor generate(const Denoiser& model, const NoiseSchedule& schedule,
                const Tensor& z_start, const Condition& condition,
                const ModulationHook& hook = nullptr, TeacherTrace* capture = nullptr,
                bool record_step_latents = false);

TransferResult transfer(const Denoiser& model, const NoiseSchedule& schedule,
                        const TransferRequest& req);

struct AblationToggles {
    bool gar = false, lat = false, sini = false;
};

// One transfer per toggle row, sharing the two teacher passes across rows.
std::vector<TransferResult> ablation_matrix(const Denoiser& model,
                                            const NoiseSchedule& schedule,
                                            const TransferRequest& req,
                                            const std::vector<AblationToggles>& rows);

// The ablation report's row order: all 8 toggle combinations A..H.
std::vector<AblationToggles> standard_ablation_rows();

} // namespace ham
