#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rolling/dataset.hpp"
#include "rolling/net.hpp"
#include "rolling/trainer.hpp"

namespace rolling {

struct DataConfig {
    std::string generator = "lorenz96";
    int num_sequences = 400;
    int num_frames = 128;
    std::string path = "dataset.bin";
    Ar1Params ar1;
    Lorenz96Params lorenz;

    int dim() const { return generator == "ar1" ? ar1.dim : lorenz.dim; }
};

struct SampleConfig {
    int steps_per_frame = 8;
    int boundary_steps = 0;  // 0: derived from steps_per_frame
    std::string boundary_kind = "init";
    int num_frames = 48;
    int num_rollouts = 64;
    bool use_ema = true;
};

struct EvalConfig {
    std::vector<int> horizons{8, 24, 48};
};

/// One self-contained experiment description. Parsing is strict: unknown
/// keys anywhere in the document are rejected.
struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    DataConfig data;
    NetConfig model;  // window/frame_dim filled from train/data
    TrainConfig train;
    SampleConfig sample;
    EvalConfig eval;

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);
    nlohmann::json to_json() const;
    void validate() const;
};

}  // namespace rolling
