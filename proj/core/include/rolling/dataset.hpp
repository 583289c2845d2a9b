#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rolling/schedule.hpp"

namespace rolling {

/// N sequences of K frames, each frame a D-vector. Frames are columns:
/// every sequence matrix is D x K.
struct SequenceDataset {
    std::vector<Eigen::MatrixXd> sequences;
    nlohmann::json metadata;

    int num_sequences() const { return static_cast<int>(sequences.size()); }
    int frame_dim() const { return sequences.empty() ? 0 : static_cast<int>(sequences[0].rows()); }
    int num_frames() const { return sequences.empty() ? 0 : static_cast<int>(sequences[0].cols()); }
};

/// Contiguous index ranges of a 90/5/5 by-sequence split.
struct DatasetSplit {
    int train_begin = 0, train_end = 0;
    int val_begin = 0, val_end = 0;
    int test_begin = 0, test_end = 0;
};

DatasetSplit split_dataset(int num_sequences);

struct Ar1Params {
    int dim = 4;
    double rho = 0.9;
    double noise_scale = -1.0;  // < 0 means stationary choice sqrt(1 - rho^2)
};

struct Lorenz96Params {
    int dim = 32;
    double forcing = 8.0;
    double dt = 0.01;
    int stride = 20;
    int warmup_steps = 2000;
};

SequenceDataset generate_ar1(const Ar1Params& params, int n, int k, std::uint64_t seed);

/// RK4-integrated Lorenz-96 trajectories, standardized to zero mean and
/// unit variance using statistics of the train split only.
SequenceDataset generate_lorenz96(const Lorenz96Params& params, int n, int k, std::uint64_t seed);

/// Draws W-frame windows uniformly over sequences and admissible offsets.
class WindowSampler {
public:
    WindowSampler(const SequenceDataset& ds, int window, int first_seq, int last_seq,
                  int offset_stride = 1);

    Eigen::MatrixXd next(std::mt19937_64& rng) const;  // D x W block
    int num_offsets() const { return num_offsets_; }

private:
    const SequenceDataset& ds_;
    int window_;
    int first_seq_, last_seq_;
    int stride_;
    int num_offsets_;
};

void save_dataset(const std::string& path, const SequenceDataset& ds);
SequenceDataset load_dataset(const std::string& path);

/// Exact conditional mean E[x_window | z_window] when frames follow a
/// stationary AR(1) process with N(0, I) marginals: data and latents are
/// jointly Gaussian, so the optimal denoiser is a linear map that only
/// depends on the per-frame noise levels.
Eigen::MatrixXd ar1_posterior_mean(double rho, const std::vector<double>& local_times,
                                   const SnrSchedule& snr, const Eigen::MatrixXd& z);

}  // namespace rolling
