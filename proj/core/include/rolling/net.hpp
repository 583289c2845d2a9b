#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "rolling/diffusion.hpp"
#include "rolling/schedule.hpp"

namespace rolling {

struct NetConfig {
    int window = 8;
    int frame_dim = 32;
    int time_embed = 16;  // even
    int hidden = 256;
    int hidden_layers = 3;

    int input_width() const { return window * (frame_dim + time_embed); }
    int output_width() const { return window * frame_dim; }
    void validate() const;
};

/// Sinusoidal features of a scalar local time, frequencies in a geometric
/// series so nearby times stay distinguishable across [0, 1].
class TimeEmbedding {
public:
    explicit TimeEmbedding(int width, double max_freq = 100.0);
    Eigen::VectorXd operator()(double t) const;
    int width() const { return width_; }

private:
    int width_;
    std::vector<double> freqs_;
};

/// MLP denoiser over a full window. Input is the flattened window plus a
/// per-frame embedding of its local time; output is the v-prediction for
/// every frame. The final affine layer additionally sees the raw input
/// frames (skip connection) and is zero-initialized.
class DenoiserNet {
public:
    DenoiserNet(const NetConfig& config, std::uint64_t seed);

    const NetConfig& config() const { return config_; }
    long param_count() const { return params_.size(); }

    Eigen::VectorXd& params() { return params_; }
    const Eigen::VectorXd& params() const { return params_; }
    Eigen::VectorXd& ema_params() { return ema_; }
    const Eigen::VectorXd& ema_params() const { return ema_; }
    double ema_decay = 0.9999;

    /// One row of network input for a window (D x W) at the given local times.
    Eigen::VectorXd build_input(const Eigen::MatrixXd& z,
                                const std::vector<double>& local_times) const;

    struct Cache {
        Eigen::MatrixXd input;
        std::vector<Eigen::MatrixXd> pre;  // pre-activation per hidden layer
        std::vector<Eigen::MatrixXd> act;  // post-activation per hidden layer
        bool valid = false;
    };

    /// Batched forward: rows are batch items. Populates cache if given.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& input, Cache* cache = nullptr,
                            const Eigen::VectorXd* param_override = nullptr) const;

    /// Single-window convenience: returns the v-prediction as D x W.
    Eigen::MatrixXd forward_window(const Eigen::MatrixXd& z,
                                   const std::vector<double>& local_times,
                                   bool use_ema = false) const;

    /// Gradient of <grad_out, forward(input)> w.r.t. the parameters.
    /// Requires a cache filled by forward() for the same input.
    Eigen::VectorXd backward(const Cache& cache, const Eigen::MatrixXd& grad_out) const;

    void ema_update();

    /// Wrap as an x-space denoiser (converts the v output).
    DenoiserFn as_denoiser(const SnrSchedule& snr, bool use_ema = false) const;

private:
    NetConfig config_;
    TimeEmbedding embed_;
    Eigen::VectorXd params_;
    Eigen::VectorXd ema_;
    std::vector<long> offsets_;  // per-layer weight/bias offsets into params_
    std::vector<int> in_widths_, out_widths_;
};

struct AdamState {
    Eigen::VectorXd m, v;
    long step = 0;
};

/// Standard Adam with bias correction. Throws NumericalError on a
/// non-finite gradient.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

void ema_update(Eigen::VectorXd& ema, const Eigen::VectorXd& params, double decay);

struct Checkpoint {
    NetConfig config;
    long step = 0;
    double ema_decay = 0.9999;
    Eigen::VectorXd params, ema, adam_m, adam_v;
    long adam_step = 0;
    std::string rng_state;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace rolling
