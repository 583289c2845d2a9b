#include "rolling/diffusion.hpp"

#include <cmath>
#include <stdexcept>

#include "rolling/errors.hpp"

namespace rolling {

LossWeighting loss_weighting_from_string(const std::string& name) {
    if (name == "eps_mse") return LossWeighting::EpsMse;
    if (name == "x_mse") return LossWeighting::XMse;
    if (name == "kl_exact") return LossWeighting::KlExact;
    throw ConfigError("unknown loss weighting: " + name);
}

std::string to_string(LossWeighting w) {
    switch (w) {
        case LossWeighting::EpsMse: return "eps_mse";
        case LossWeighting::XMse: return "x_mse";
        case LossWeighting::KlExact: return "kl_exact";
    }
    return "?";
}

WindowState forward_sample(const Eigen::MatrixXd& x, const std::vector<double>& local_times,
                           const Eigen::MatrixXd& eps, const SnrSchedule& snr) {
    if (x.rows() != eps.rows() || x.cols() != eps.cols()) {
        throw ShapeError("forward_sample: x and eps shapes differ");
    }
    if (static_cast<int>(local_times.size()) != x.cols()) {
        throw ShapeError("forward_sample: one local time per frame required");
    }
    WindowState state;
    state.z.resize(x.rows(), x.cols());
    state.local_times = local_times;
    for (int w = 0; w < x.cols(); ++w) {
        const NoiseLevel lv = snr.at(local_times[static_cast<size_t>(w)]);
        state.z.col(w) = lv.alpha * x.col(w) + lv.sigma * eps.col(w);
    }
    return state;
}

PosteriorCoeffs posterior_coeffs(const SnrSchedule& snr, double t_k, double s_k) {
    if (!(s_k < t_k)) {
        throw std::invalid_argument("posterior_coeffs: need s_k < t_k");
    }
    const NoiseLevel lt = snr.at(t_k);
    const NoiseLevel ls = snr.at(s_k);
    const double ratio = std::exp(lt.log_snr - ls.log_snr);  // SNR(t)/SNR(s) <= 1
    PosteriorCoeffs c;
    c.coef_z = ratio * ls.alpha / lt.alpha;
    c.coef_x = (1.0 - ratio) * ls.alpha;
    c.var = ls.sigma * ls.sigma * (1.0 - ratio);
    return c;
}

std::pair<Eigen::VectorXd, double> posterior_params(const Eigen::VectorXd& z_k,
                                                    const Eigen::VectorXd& x_hat, double t_k,
                                                    double s_k, const SnrSchedule& snr) {
    if (z_k.size() != x_hat.size()) {
        throw ShapeError("posterior_params: z and x_hat sizes differ");
    }
    const PosteriorCoeffs c = posterior_coeffs(snr, t_k, s_k);
    return {c.coef_z * z_k + c.coef_x * x_hat, c.var};
}

Eigen::VectorXd convert_prediction(PredictionKind kind_in, PredictionKind kind_out,
                                   const Eigen::VectorXd& value, const Eigen::VectorXd& z,
                                   const NoiseLevel& lv) {
    if (value.size() != z.size()) {
        throw ShapeError("convert_prediction: value and z sizes differ");
    }
    if (kind_in == kind_out) return value;

    // Everything reduces to x: z = alpha x + sigma eps, v = alpha eps - sigma x.
    Eigen::VectorXd x;
    switch (kind_in) {
        case PredictionKind::X: x = value; break;
        case PredictionKind::Eps:
            if (lv.sigma == 0.0) throw NumericalError("convert_prediction: sigma = 0 with eps input");
            x = (z - lv.sigma * value) / lv.alpha;
            break;
        case PredictionKind::V: x = lv.alpha * z - lv.sigma * value; break;
    }
    switch (kind_out) {
        case PredictionKind::X: return x;
        case PredictionKind::Eps:
            if (lv.sigma == 0.0) throw NumericalError("convert_prediction: sigma = 0 with eps target");
            return (z - lv.alpha * x) / lv.sigma;
        case PredictionKind::V: {
            if (lv.sigma == 0.0) throw NumericalError("convert_prediction: sigma = 0 with v target");
            const Eigen::VectorXd eps = (z - lv.alpha * x) / lv.sigma;
            return lv.alpha * eps - lv.sigma * x;
        }
    }
    throw std::logic_error("unreachable");
}

std::vector<double> frame_weights(const ScheduleSpec& spec, LossWeighting weighting, double t,
                                  const SnrSchedule& snr) {
    std::vector<double> weights(static_cast<size_t>(spec.window));
    for (int w = 0; w < spec.window; ++w) {
        const double tw = local_time(spec, w, t);
        switch (weighting) {
            case LossWeighting::EpsMse:
                weights[static_cast<size_t>(w)] = std::exp(snr.at(tw).log_snr);
                break;
            case LossWeighting::XMse:
                weights[static_cast<size_t>(w)] = 1.0;
                break;
            case LossWeighting::KlExact:
                weights[static_cast<size_t>(w)] =
                    -snr.dlog_snr_dt(tw) * local_time_slope(spec, w, t);
                break;
        }
    }
    return weights;
}

LossResult rolling_loss(const DenoiserFn& denoiser, const Eigen::MatrixXd& x, double t,
                        const Eigen::MatrixXd& eps, const ScheduleSpec& spec,
                        LossWeighting weighting, const SnrSchedule& snr) {
    if (x.cols() != spec.window) {
        throw ShapeError("rolling_loss: x must have spec.window frames");
    }
    const std::vector<double> lts = local_times(spec, t);
    const WindowState state = forward_sample(x, lts, eps, snr);
    const Eigen::MatrixXd x_hat = denoiser(state.z, lts);
    if (x_hat.rows() != x.rows() || x_hat.cols() != x.cols()) {
        throw ShapeError("rolling_loss: denoiser output shape mismatch");
    }
    const std::vector<double> weights = frame_weights(spec, weighting, t, snr);
    LossResult result;
    result.per_frame.resize(spec.window);
    for (int w = 0; w < spec.window; ++w) {
        const double err = (x.col(w) - x_hat.col(w)).squaredNorm();
        result.per_frame(w) = weights[static_cast<size_t>(w)] * err;
    }
    result.total = result.per_frame.sum();
    return result;
}

ScheduleKind choose_schedule(double beta, std::mt19937_64& rng) {
    if (!(beta >= 0.0 && beta <= 1.0)) {
        throw ConfigError("choose_schedule: beta must lie in [0, 1]");
    }
    std::bernoulli_distribution lin(beta);
    return lin(rng) ? ScheduleKind::Lin : ScheduleKind::Init;
}

}  // namespace rolling
