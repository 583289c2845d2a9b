#pragma once

#include <Eigen/Dense>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "rolling/schedule.hpp"

namespace rolling {

/// A window of latents. Frames are columns: z is D x W. local_times[w]
/// is the local diffusion time of frame w and must be nondecreasing.
struct WindowState {
    Eigen::MatrixXd z;
    std::vector<double> local_times;

    int frame_dim() const { return static_cast<int>(z.rows()); }
    int window() const { return static_cast<int>(z.cols()); }
};

enum class PredictionKind { X, Eps, V };

enum class LossWeighting { EpsMse, XMse, KlExact };

LossWeighting loss_weighting_from_string(const std::string& name);
std::string to_string(LossWeighting w);

/// A denoiser as seen by losses and samplers: maps a noisy window (D x W)
/// plus per-frame local times to a clean-data estimate x_hat (D x W).
using DenoiserFn =
    std::function<Eigen::MatrixXd(const Eigen::MatrixXd&, const std::vector<double>&)>;

/// z^w = alpha(t_w) x^w + sigma(t_w) eps^w. Shapes must agree (D x W).
WindowState forward_sample(const Eigen::MatrixXd& x, const std::vector<double>& local_times,
                           const Eigen::MatrixXd& eps, const SnrSchedule& snr);

/// Scalar coefficients of the ancestral posterior q(z_s | z_t, x):
/// mean = coef_z * z + coef_x * x_hat, isotropic variance var.
struct PosteriorCoeffs {
    double coef_z;
    double coef_x;
    double var;
};

/// Throws std::invalid_argument unless s_k < t_k.
PosteriorCoeffs posterior_coeffs(const SnrSchedule& snr, double t_k, double s_k);

std::pair<Eigen::VectorXd, double> posterior_params(const Eigen::VectorXd& z_k,
                                                    const Eigen::VectorXd& x_hat, double t_k,
                                                    double s_k, const SnrSchedule& snr);

/// Convert between x / eps / v parameterizations of one frame at a fixed
/// noise level. Conversions through eps require sigma > 0.
Eigen::VectorXd convert_prediction(PredictionKind kind_in, PredictionKind kind_out,
                                   const Eigen::VectorXd& value, const Eigen::VectorXd& z,
                                   const NoiseLevel& level);

/// Per-frame weights a(t_w) for the window loss at global time t.
/// EpsMse: SNR(t_w). XMse: 1. KlExact: (-dlambda/dt_w) * (dt_w/dt), which
/// vanishes on clean and noise frames.
std::vector<double> frame_weights(const ScheduleSpec& spec, LossWeighting weighting, double t,
                                  const SnrSchedule& snr);

struct LossResult {
    double total = 0.0;
    Eigen::VectorXd per_frame;  // W entries, already weighted
};

/// Weighted X-space squared error summed over the window:
/// sum_w a(t_w) ||x^w - x_hat^w||^2 with x_hat from one denoiser call.
LossResult rolling_loss(const DenoiserFn& denoiser, const Eigen::MatrixXd& x, double t,
                        const Eigen::MatrixXd& eps, const ScheduleSpec& spec,
                        LossWeighting weighting, const SnrSchedule& snr);

/// Bernoulli schedule mixing: Lin with probability beta, Init otherwise.
ScheduleKind choose_schedule(double beta, std::mt19937_64& rng);

}  // namespace rolling
