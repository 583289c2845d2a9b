#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "rolling/diffusion.hpp"
#include "rolling/schedule.hpp"

namespace rolling {

struct SamplerConfig {
    int window = 8;
    int n_clean = 0;
    int steps_per_frame = 8;   // T: denoising steps per window slide
    int boundary_steps = 0;    // 0 means (window - n_clean) * steps_per_frame
    ScheduleKind boundary_kind = ScheduleKind::Init;

    int effective_boundary_steps() const {
        return boundary_steps > 0 ? boundary_steps : (window - n_clean) * steps_per_frame;
    }
    void validate() const;
};

struct SampleTrace {
    std::vector<Eigen::VectorXd> frames;
    long model_evals = 0;     // rollout evaluations
    long boundary_evals = 0;  // boundary overhead, accounted separately
    std::vector<long> emission_steps;
};

/// One ancestral denoising step from global time t to s < t. Clean frames
/// are copied, noise frames resampled N(0, I), window frames updated from
/// the posterior around one denoiser call. eval_count is incremented iff
/// the denoiser was invoked (the window set was non-empty).
WindowState ancestral_step(const DenoiserFn& denoiser, const WindowState& state,
                           const ScheduleSpec& spec, double t, double s, const SnrSchedule& snr,
                           std::mt19937_64& rng, long* eval_count = nullptr);

/// Sample a window in rolling state from pure noise via the boundary
/// schedule, holding the given conditioning frames (D x n_clean) fixed.
WindowState boundary_sample(const DenoiserFn& denoiser, const Eigen::MatrixXd& conditioning,
                            const SamplerConfig& config, const SnrSchedule& snr,
                            std::mt19937_64& rng, long* eval_count = nullptr);

/// Sliding-window rollout: repeatedly emit the oldest frame, shift, append
/// fresh noise and run T denoising passes under the Lin schedule.
SampleTrace rollout(const DenoiserFn& denoiser, const WindowState& init,
                    const SamplerConfig& config, int num_frames, const SnrSchedule& snr,
                    std::mt19937_64& rng);

/// Block-autoregressive baseline: jointly denoise W - n_clean frames over
/// steps_per_frame * (W - n_clean) steps with a shared noise level, emit
/// the block, slide the conditioning. Matches the rollout's per-frame
/// evaluation budget by construction.
SampleTrace standard_block_rollout(const DenoiserFn& denoiser, const Eigen::MatrixXd& conditioning,
                                   const SamplerConfig& config, int num_frames,
                                   const SnrSchedule& snr, std::mt19937_64& rng);

void save_trace_csv(const std::string& path, const SampleTrace& trace);
void save_trace_frames(const std::string& path, const SampleTrace& trace);

/// Grayscale PGM strip (frames as columns) for quick visual inspection.
void save_trace_pgm(const std::string& path, const SampleTrace& trace);

}  // namespace rolling
