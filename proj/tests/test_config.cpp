#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "rolling/config.hpp"
#include "rolling/errors.hpp"

using namespace rolling;

namespace {

nlohmann::json base_config() {
    return {
        {"seed", 7},
        {"output_dir", "out"},
        {"data",
         {{"generator", "ar1"}, {"num_sequences", 40}, {"num_frames", 32}, {"dim", 3},
          {"rho", 0.8}}},
        {"model", {{"hidden", 64}, {"hidden_layers", 2}, {"time_embed", 8}}},
        {"train",
         {{"window", 4}, {"n_clean", 1}, {"beta", 0.2}, {"batch_size", 16}, {"steps", 100},
          {"lr", 1e-3}, {"weighting", "x_mse"}}},
        {"sample", {{"steps_per_frame", 4}, {"num_frames", 16}, {"num_rollouts", 8}}},
        {"eval", {{"horizons", {4, 8}}}},
    };
}

}  // namespace

TEST_CASE("config parsing wires the derived fields") {
    const ExperimentConfig cfg = ExperimentConfig::from_json(base_config());
    CHECK(cfg.seed == 7);
    CHECK(cfg.data.generator == "ar1");
    CHECK(cfg.data.ar1.dim == 3);
    CHECK(cfg.model.window == cfg.train.window);
    CHECK(cfg.model.frame_dim == 3);
    CHECK(cfg.train.seed == cfg.seed);
    CHECK(cfg.train.weighting == LossWeighting::XMse);
    CHECK(cfg.eval.horizons == std::vector<int>{4, 8});
}

TEST_CASE("unknown keys are rejected everywhere") {
    nlohmann::json j = base_config();
    j["bogus"] = 1;
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);

    j = base_config();
    j["train"]["learning_rate"] = 1e-3;  // typo for "lr"
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);

    j = base_config();
    j["data"]["forcing"] = 8.0;  // lorenz key under the ar1 generator
    CHECK_NOTHROW(ExperimentConfig::from_json(j));  // known key, just unused

    j = base_config();
    j["data"]["windmill"] = true;
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);

    j = base_config();
    j["eval"]["horizon"] = 4;
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
}

TEST_CASE("invalid values are rejected") {
    nlohmann::json j = base_config();
    j["data"]["generator"] = "brownian";
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);

    j = base_config();
    j["train"]["beta"] = 2.0;
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);

    j = base_config();
    j["train"]["n_clean"] = 4;
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);

    j = base_config();
    j["sample"]["boundary_kind"] = "sideways";
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);

    j = base_config();
    j["eval"]["horizons"] = {0};
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
}

TEST_CASE("config json round trip preserves every knob") {
    const ExperimentConfig cfg = ExperimentConfig::from_json(base_config());
    const ExperimentConfig back = ExperimentConfig::from_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());
}

TEST_CASE("config file loading and error mapping") {
    const auto dir = std::filesystem::temp_directory_path();
    const std::string good = (dir / "cfg_good.json").string();
    const std::string bad = (dir / "cfg_bad.json").string();
    {
        std::ofstream out(good);
        out << base_config().dump(2);
    }
    {
        std::ofstream out(bad);
        out << "{not json";
    }
    CHECK_NOTHROW(ExperimentConfig::load(good));
    CHECK_THROWS_AS(ExperimentConfig::load(bad), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::load((dir / "cfg_missing.json").string()), IoError);
    std::filesystem::remove(good);
    std::filesystem::remove(bad);
}

TEST_CASE("lorenz generator section parses its own keys") {
    nlohmann::json j = base_config();
    j["data"] = {{"generator", "lorenz96"}, {"num_sequences", 50}, {"num_frames", 64},
                 {"dim", 16}, {"forcing", 8.0}, {"stride", 10}};
    const ExperimentConfig cfg = ExperimentConfig::from_json(j);
    CHECK(cfg.data.lorenz.dim == 16);
    CHECK(cfg.data.lorenz.stride == 10);
    CHECK(cfg.model.frame_dim == 16);
}
