#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rolling/dataset.hpp"
#include "rolling/diffusion.hpp"
#include "rolling/net.hpp"

namespace rolling {

struct TrainConfig {
    int window = 8;
    int n_clean = 0;
    double beta = 0.1;  // Bernoulli rate of the Lin schedule
    int batch_size = 64;
    long steps = 20000;
    double lr = 1e-4;
    double ema_decay = 0.9999;
    LossWeighting weighting = LossWeighting::EpsMse;
    bool standard_baseline = false;  // constant-noise schedule instead of the mixture
    std::uint64_t seed = 0;
    long checkpoint_every = 0;  // 0: final checkpoint only
    long log_every = 100;
    std::string out_dir;  // empty: keep everything in memory

    void validate() const;
};

struct TrainLogRow {
    long step;
    double loss;
    double loss_per_frame_mean;
    double lin_fraction;
    double wallclock_s;
};

struct TrainResult {
    DenoiserNet model;
    AdamState opt;
    long step = 0;
    std::string rng_state;
    std::vector<TrainLogRow> log;
};

/// Schedule-mixture training loop: per batch element draw a window, a
/// global time t ~ U(0,1) and a schedule (Lin w.p. beta, else Init; the
/// baseline uses the constant schedule), noise, predict, and update with
/// Adam + EMA. Deterministic for a fixed seed.
TrainResult train(const TrainConfig& config, const NetConfig& net_config,
                  const SequenceDataset& dataset, const Checkpoint* resume = nullptr);

Checkpoint make_checkpoint(const TrainResult& result, double ema_decay);

void write_metrics_csv(const std::string& path, const std::vector<TrainLogRow>& log);

}  // namespace rolling
