#include "rolling/config.hpp"

#include <fstream>
#include <set>

#include "rolling/errors.hpp"

namespace rolling {

namespace {

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                const std::string& section) {
    if (!j.is_object()) throw ConfigError("config: section '" + section + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) {
            throw ConfigError("config: unknown key '" + key + "' in section '" + section + "'");
        }
    }
}

template <typename T>
void get_to(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    check_keys(j, {"seed", "output_dir", "data", "model", "train", "sample", "eval"}, "<root>");
    ExperimentConfig cfg;
    get_to(j, "seed", cfg.seed);
    get_to(j, "output_dir", cfg.output_dir);

    if (j.contains("data")) {
        const auto& d = j.at("data");
        check_keys(d,
                   {"generator", "num_sequences", "num_frames", "path", "dim", "rho",
                    "noise_scale", "forcing", "dt", "stride", "warmup_steps"},
                   "data");
        get_to(d, "generator", cfg.data.generator);
        get_to(d, "num_sequences", cfg.data.num_sequences);
        get_to(d, "num_frames", cfg.data.num_frames);
        get_to(d, "path", cfg.data.path);
        if (cfg.data.generator == "ar1") {
            get_to(d, "dim", cfg.data.ar1.dim);
            get_to(d, "rho", cfg.data.ar1.rho);
            get_to(d, "noise_scale", cfg.data.ar1.noise_scale);
        } else if (cfg.data.generator == "lorenz96") {
            get_to(d, "dim", cfg.data.lorenz.dim);
            get_to(d, "forcing", cfg.data.lorenz.forcing);
            get_to(d, "dt", cfg.data.lorenz.dt);
            get_to(d, "stride", cfg.data.lorenz.stride);
            get_to(d, "warmup_steps", cfg.data.lorenz.warmup_steps);
        } else {
            throw ConfigError("config: unknown generator '" + cfg.data.generator + "'");
        }
    }
    if (j.contains("model")) {
        const auto& m = j.at("model");
        check_keys(m, {"hidden", "hidden_layers", "time_embed"}, "model");
        get_to(m, "hidden", cfg.model.hidden);
        get_to(m, "hidden_layers", cfg.model.hidden_layers);
        get_to(m, "time_embed", cfg.model.time_embed);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        check_keys(t,
                   {"window", "n_clean", "beta", "batch_size", "steps", "lr", "ema_decay",
                    "weighting", "standard_baseline", "checkpoint_every", "log_every"},
                   "train");
        get_to(t, "window", cfg.train.window);
        get_to(t, "n_clean", cfg.train.n_clean);
        get_to(t, "beta", cfg.train.beta);
        get_to(t, "batch_size", cfg.train.batch_size);
        get_to(t, "steps", cfg.train.steps);
        get_to(t, "lr", cfg.train.lr);
        get_to(t, "ema_decay", cfg.train.ema_decay);
        if (t.contains("weighting")) {
            cfg.train.weighting = loss_weighting_from_string(t.at("weighting"));
        }
        get_to(t, "standard_baseline", cfg.train.standard_baseline);
        get_to(t, "checkpoint_every", cfg.train.checkpoint_every);
        get_to(t, "log_every", cfg.train.log_every);
    }
    if (j.contains("sample")) {
        const auto& s = j.at("sample");
        check_keys(s,
                   {"steps_per_frame", "boundary_steps", "boundary_kind", "num_frames",
                    "num_rollouts", "use_ema"},
                   "sample");
        get_to(s, "steps_per_frame", cfg.sample.steps_per_frame);
        get_to(s, "boundary_steps", cfg.sample.boundary_steps);
        get_to(s, "boundary_kind", cfg.sample.boundary_kind);
        get_to(s, "num_frames", cfg.sample.num_frames);
        get_to(s, "num_rollouts", cfg.sample.num_rollouts);
        get_to(s, "use_ema", cfg.sample.use_ema);
    }
    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        check_keys(e, {"horizons"}, "eval");
        get_to(e, "horizons", cfg.eval.horizons);
    }

    cfg.model.window = cfg.train.window;
    cfg.model.frame_dim = cfg.data.dim();
    cfg.train.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: invalid JSON in " + path + ": " + e.what());
    }
    return from_json(j);
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json d = {{"generator", data.generator},
                        {"num_sequences", data.num_sequences},
                        {"num_frames", data.num_frames},
                        {"path", data.path}};
    if (data.generator == "ar1") {
        d["dim"] = data.ar1.dim;
        d["rho"] = data.ar1.rho;
        d["noise_scale"] = data.ar1.noise_scale;
    } else {
        d["dim"] = data.lorenz.dim;
        d["forcing"] = data.lorenz.forcing;
        d["dt"] = data.lorenz.dt;
        d["stride"] = data.lorenz.stride;
        d["warmup_steps"] = data.lorenz.warmup_steps;
    }
    return {{"seed", seed},
            {"output_dir", output_dir},
            {"data", d},
            {"model",
             {{"hidden", model.hidden},
              {"hidden_layers", model.hidden_layers},
              {"time_embed", model.time_embed}}},
            {"train",
             {{"window", train.window},
              {"n_clean", train.n_clean},
              {"beta", train.beta},
              {"batch_size", train.batch_size},
              {"steps", train.steps},
              {"lr", train.lr},
              {"ema_decay", train.ema_decay},
              {"weighting", to_string(train.weighting)},
              {"standard_baseline", train.standard_baseline},
              {"checkpoint_every", train.checkpoint_every},
              {"log_every", train.log_every}}},
            {"sample",
             {{"steps_per_frame", sample.steps_per_frame},
              {"boundary_steps", sample.boundary_steps},
              {"boundary_kind", sample.boundary_kind},
              {"num_frames", sample.num_frames},
              {"num_rollouts", sample.num_rollouts},
              {"use_ema", sample.use_ema}}},
            {"eval", {{"horizons", eval.horizons}}}};
}

void ExperimentConfig::validate() const {
    train.validate();
    model.validate();
    schedule_kind_from_string(sample.boundary_kind);
    if (data.num_sequences < 1 || data.num_frames < 1) {
        throw ConfigError("config: data.num_sequences and data.num_frames must be >= 1");
    }
    if (sample.num_rollouts < 2) throw ConfigError("config: sample.num_rollouts must be >= 2");
    if (sample.num_frames < 0) throw ConfigError("config: sample.num_frames must be >= 0");
    for (int h : eval.horizons) {
        if (h < 1) throw ConfigError("config: eval.horizons are 1-based");
    }
}

}  // namespace rolling
