// Experiment front-end: dataset generation, training, rollout sampling,
// evaluation and the budget-matched rolling-vs-standard comparison.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rolling/config.hpp"
#include "rolling/dataset.hpp"
#include "rolling/errors.hpp"
#include "rolling/metrics.hpp"
#include "rolling/net.hpp"
#include "rolling/sampler.hpp"
#include "rolling/trainer.hpp"

namespace fs = std::filesystem;
using namespace rolling;

namespace {

std::string resolve(const ExperimentConfig& cfg, const std::string& path) {
    fs::path p(path);
    if (p.is_absolute()) return path;
    return (fs::path(cfg.output_dir) / p).string();
}

void refuse_existing(const std::string& path, bool force) {
    if (!force && fs::exists(path)) {
        throw ConfigError("output '" + path + "' exists; pass --force to overwrite");
    }
}

SequenceDataset generate_dataset(const ExperimentConfig& cfg) {
    if (cfg.data.generator == "ar1") {
        return generate_ar1(cfg.data.ar1, cfg.data.num_sequences, cfg.data.num_frames, cfg.seed);
    }
    return generate_lorenz96(cfg.data.lorenz, cfg.data.num_sequences, cfg.data.num_frames,
                             cfg.seed);
}

int cmd_generate(const ExperimentConfig& cfg, bool force) {
    const std::string path = resolve(cfg, cfg.data.path);
    refuse_existing(path, force);
    fs::create_directories(fs::path(path).parent_path().empty() ? "." : fs::path(path).parent_path().string());
    const SequenceDataset ds = generate_dataset(cfg);
    save_dataset(path, ds);
    std::ofstream sidecar(path + ".json", std::ios::trunc);
    sidecar << ds.metadata.dump(2) << "\n";
    std::cout << "wrote " << path << " (" << ds.num_sequences() << " x " << ds.num_frames()
              << " x " << ds.frame_dim() << ")\n";
    return 0;
}

int cmd_train(ExperimentConfig cfg, bool force, const std::string& resume_path,
              const std::string& subdir) {
    const std::string data_path = resolve(cfg, cfg.data.path);
    if (!fs::exists(data_path)) throw IoError("dataset not found: " + data_path);
    const SequenceDataset ds = load_dataset(data_path);

    cfg.train.out_dir = (fs::path(cfg.output_dir) / subdir).string();
    refuse_existing(cfg.train.out_dir + "/checkpoint.bin", force || !resume_path.empty());

    std::optional<Checkpoint> resume;
    if (!resume_path.empty()) resume = load_checkpoint(resume_path);

    const TrainResult result =
        train(cfg.train, cfg.model, ds, resume ? &*resume : nullptr);
    std::cout << "trained " << result.step << " steps; final loss "
              << (result.log.empty() ? 0.0 : result.log.back().loss) << "; checkpoint in "
              << cfg.train.out_dir << "\n";
    return 0;
}

DenoiserNet model_from_checkpoint(const Checkpoint& ckpt) {
    DenoiserNet net(ckpt.config, 0);
    net.params() = ckpt.params;
    net.ema_params() = ckpt.ema;
    net.ema_decay = ckpt.ema_decay;
    return net;
}

struct RolloutBatch {
    std::vector<SampleTrace> traces;
    std::vector<int> reference_index;  // test-split sequence per trace
};

RolloutBatch run_rollouts(const ExperimentConfig& cfg, const DenoiserNet& net,
                          const SequenceDataset& ds, bool standard) {
    const SnrSchedule snr;
    const DenoiserFn denoiser = net.as_denoiser(snr, cfg.sample.use_ema);
    const DatasetSplit split = split_dataset(ds.num_sequences());
    const int n_test = split.test_end - split.test_begin;
    if (n_test < 1) throw ConfigError("rollout: dataset has no test split");

    SamplerConfig sampler_cfg;
    sampler_cfg.window = cfg.train.window;
    sampler_cfg.n_clean = cfg.train.n_clean;
    sampler_cfg.steps_per_frame = cfg.sample.steps_per_frame;
    sampler_cfg.boundary_steps = cfg.sample.boundary_steps;
    sampler_cfg.boundary_kind = schedule_kind_from_string(cfg.sample.boundary_kind);

    RolloutBatch batch;
    for (int i = 0; i < cfg.sample.num_rollouts; ++i) {
        const int ref = split.test_begin + i % n_test;
        const Eigen::MatrixXd cond =
            ds.sequences[static_cast<size_t>(ref)].leftCols(cfg.train.n_clean);
        std::mt19937_64 rng(cfg.seed + 1000 + static_cast<std::uint64_t>(i));
        SampleTrace trace;
        if (standard) {
            trace = standard_block_rollout(denoiser, cond, sampler_cfg, cfg.sample.num_frames,
                                           snr, rng);
        } else {
            long boundary_evals = 0;
            const WindowState init =
                boundary_sample(denoiser, cond, sampler_cfg, snr, rng, &boundary_evals);
            trace = rollout(denoiser, init, sampler_cfg, cfg.sample.num_frames, snr, rng);
            trace.boundary_evals = boundary_evals;
        }
        batch.traces.push_back(std::move(trace));
        batch.reference_index.push_back(ref - split.test_begin);
    }
    return batch;
}

void save_rollouts(const ExperimentConfig& cfg, const RolloutBatch& batch, const std::string& dir,
                   bool pgm) {
    fs::create_directories(dir);
    for (size_t i = 0; i < batch.traces.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "trace_%04zu", i);
        save_trace_csv(dir + "/" + name + ".csv", batch.traces[i]);
        save_trace_frames(dir + "/" + name + ".bin", batch.traces[i]);
        if (pgm && i == 0) save_trace_pgm(dir + "/" + name + ".pgm", batch.traces[i]);
    }
    nlohmann::json meta = {{"num_rollouts", batch.traces.size()},
                           {"n_clean", cfg.train.n_clean},
                           {"window", cfg.train.window},
                           {"reference_index", batch.reference_index}};
    std::ofstream out(dir + "/rollouts.json", std::ios::trunc);
    out << meta.dump(2) << "\n";
}

RolloutBatch load_rollouts(const std::string& dir) {
    std::ifstream in(dir + "/rollouts.json");
    if (!in) throw IoError("missing rollout metadata: " + dir + "/rollouts.json");
    nlohmann::json meta;
    in >> meta;
    RolloutBatch batch;
    meta.at("reference_index").get_to(batch.reference_index);
    const size_t n = meta.at("num_rollouts");
    for (size_t i = 0; i < n; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "trace_%04zu", i);
        const SequenceDataset ds = load_dataset(dir + "/" + name + ".bin");
        SampleTrace trace;
        const Eigen::MatrixXd& seq = ds.sequences.at(0);
        for (long c = 0; c < seq.cols(); ++c) trace.frames.emplace_back(seq.col(c));
        trace.model_evals = ds.metadata.value("model_evals", 0L);
        batch.traces.push_back(std::move(trace));
    }
    return batch;
}

struct EvalRow {
    std::string method;
    int horizon;
    double fsd_value;
    double mse_value;
};

std::vector<EvalRow> evaluate_batch(const ExperimentConfig& cfg, const std::string& method,
                                    const RolloutBatch& batch, const SequenceDataset& ds) {
    const DatasetSplit split = split_dataset(ds.num_sequences());
    const int n_clean = cfg.train.n_clean;

    // Reference spectral statistics pooled over the whole test split.
    SpectralAccumulator ref_acc;
    for (int i = split.test_begin; i < split.test_end; ++i) {
        const Eigen::MatrixXd& seq = ds.sequences[static_cast<size_t>(i)];
        for (long c = 0; c < seq.cols(); ++c) ref_acc.add(dft_magnitudes(seq.col(c)));
    }
    const SpectralStats ref_stats = ref_acc.stats();

    std::vector<std::vector<Eigen::VectorXd>> gen(batch.traces.size()), ref(batch.traces.size());
    for (size_t i = 0; i < batch.traces.size(); ++i) {
        const auto& frames = batch.traces[i].frames;
        for (size_t f = static_cast<size_t>(n_clean); f < frames.size(); ++f) {
            gen[i].push_back(frames[f]);
        }
        const Eigen::MatrixXd& seq =
            ds.sequences[static_cast<size_t>(split.test_begin + batch.reference_index[i])];
        for (long c = n_clean; c < seq.cols(); ++c) ref[i].emplace_back(seq.col(c));
    }
    const std::vector<double> mse = mse_at_horizon(gen, ref, cfg.eval.horizons);

    std::vector<EvalRow> rows;
    for (size_t h = 0; h < cfg.eval.horizons.size(); ++h) {
        const int horizon = cfg.eval.horizons[h];
        SpectralAccumulator gen_acc;
        for (const auto& trace : gen) {
            const size_t idx = static_cast<size_t>(horizon - 1);
            if (idx >= trace.size()) {
                throw ConfigError("eval: horizon " + std::to_string(horizon) +
                                  " beyond trace length " + std::to_string(trace.size()));
            }
            gen_acc.add(dft_magnitudes(trace[idx]));
        }
        rows.push_back(EvalRow{method, horizon, fsd(gen_acc.stats(), ref_stats), mse[h]});
    }
    return rows;
}

void write_results_csv(const ExperimentConfig& cfg, const std::string& path,
                       const std::vector<EvalRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open results CSV for writing: " + path);
    out << "method,n_cln,W,horizon,fsd,mse\n";
    out.precision(17);
    for (const auto& row : rows) {
        out << row.method << "," << cfg.train.n_clean << "," << cfg.train.window << ","
            << row.horizon << "," << row.fsd_value << "," << row.mse_value << "\n";
    }
    if (!out) throw IoError("failed writing results CSV: " + path);
}

int cmd_rollout(const ExperimentConfig& cfg, const std::string& ckpt_path, bool standard,
                const std::string& subdir, bool pgm, bool force) {
    const SequenceDataset ds = load_dataset(resolve(cfg, cfg.data.path));
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    if (ckpt.config.window != cfg.train.window || ckpt.config.frame_dim != ds.frame_dim()) {
        throw ConfigError("rollout: checkpoint architecture does not match config/dataset");
    }
    const std::string dir = (fs::path(cfg.output_dir) / subdir).string();
    refuse_existing(dir + "/rollouts.json", force);
    const DenoiserNet net = model_from_checkpoint(ckpt);
    const RolloutBatch batch = run_rollouts(cfg, net, ds, standard);
    save_rollouts(cfg, batch, dir, pgm);
    std::cout << "wrote " << batch.traces.size() << " traces to " << dir << "\n";
    return 0;
}

int cmd_eval(const ExperimentConfig& cfg, const std::vector<std::string>& trace_specs,
             const std::string& out_path) {
    const SequenceDataset ds = load_dataset(resolve(cfg, cfg.data.path));
    std::vector<EvalRow> rows;
    for (const auto& spec : trace_specs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("eval: --traces expects LABEL=DIR, got '" + spec + "'");
        }
        const std::string label = spec.substr(0, eq);
        const RolloutBatch batch = load_rollouts(spec.substr(eq + 1));
        const auto batch_rows = evaluate_batch(cfg, label, batch, ds);
        rows.insert(rows.end(), batch_rows.begin(), batch_rows.end());
    }
    write_results_csv(cfg, out_path, rows);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_compare(ExperimentConfig cfg, bool force) {
    const std::string data_path = resolve(cfg, cfg.data.path);
    const std::string results_path = (fs::path(cfg.output_dir) / "comparison.csv").string();
    refuse_existing(results_path, force);

    if (!fs::exists(data_path)) cmd_generate(cfg, force);
    const SequenceDataset ds = load_dataset(data_path);

    std::vector<EvalRow> rows;
    for (const bool standard : {false, true}) {
        ExperimentConfig run = cfg;
        run.train.standard_baseline = standard;
        run.train.out_dir =
            (fs::path(cfg.output_dir) / (standard ? "train_standard" : "train_rolling")).string();
        const TrainResult result = train(run.train, run.model, ds);
        const RolloutBatch batch = run_rollouts(run, result.model, ds, standard);
        save_rollouts(run, batch, (fs::path(cfg.output_dir) /
                                   (standard ? "rollouts_standard" : "rollouts_rolling"))
                                      .string(),
                      false);
        const auto batch_rows =
            evaluate_batch(run, standard ? "standard" : "rolling", batch, ds);
        rows.insert(rows.end(), batch_rows.begin(), batch_rows.end());
    }
    write_results_csv(cfg, results_path, rows);

    std::map<int, double> rolling_fsd, standard_fsd;
    for (const auto& row : rows) {
        (row.method == "rolling" ? rolling_fsd : standard_fsd)[row.horizon] = row.fsd_value;
    }
    int wins = 0;
    for (const auto& [h, v] : rolling_fsd) {
        std::cout << "horizon " << h << ": rolling FSD " << v << " vs standard FSD "
                  << standard_fsd[h] << "\n";
        if (v < standard_fsd[h]) ++wins;
    }
    std::cout << "rolling beats standard on " << wins << "/" << rolling_fsd.size()
              << " horizons (" << results_path << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sliding-window rolling diffusion experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    bool force = false;
    app.add_option("--config", config_path, "experiment config (JSON)")->required();
    app.add_option("--seed", seed_override, "override the config seed");
    app.add_flag("--force", force, "overwrite existing outputs");

    auto* generate = app.add_subcommand("generate", "generate a synthetic dataset");
    auto* train_cmd = app.add_subcommand("train", "train a denoiser");
    std::string resume_path, train_subdir;
    bool train_standard = false;
    train_cmd->add_option("--resume", resume_path, "checkpoint to resume from");
    train_cmd->add_flag("--standard", train_standard, "train the block-autoregressive baseline");
    train_cmd->add_option("--out", train_subdir, "output subdirectory");

    auto* rollout_cmd = app.add_subcommand("rollout", "sample rollouts from a checkpoint");
    std::string ckpt_path, rollout_subdir = "rollouts";
    bool rollout_standard = false, pgm = false, no_ema = false;
    rollout_cmd->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
    rollout_cmd->add_flag("--standard", rollout_standard, "use the block-autoregressive sampler");
    rollout_cmd->add_option("--out", rollout_subdir, "output subdirectory");
    rollout_cmd->add_flag("--pgm", pgm, "also write a PGM strip of the first trace");
    rollout_cmd->add_flag("--no-ema", no_ema, "sample with raw weights instead of EMA");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate rollout traces");
    std::vector<std::string> trace_specs;
    std::string eval_out = "results.csv";
    eval_cmd->add_option("--traces", trace_specs, "LABEL=DIR trace directories")->required();
    eval_cmd->add_option("--out", eval_out, "results CSV path");

    auto* compare = app.add_subcommand("compare", "rolling vs standard, budget matched");

    // Let --config/--seed/--force appear after the subcommand name too.
    for (auto* sub : {generate, train_cmd, rollout_cmd, eval_cmd, compare}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        ExperimentConfig cfg = ExperimentConfig::load(config_path);
        if (seed_override) {
            cfg.seed = *seed_override;
            cfg.train.seed = *seed_override;
        }
        if (no_ema) cfg.sample.use_ema = false;
        if (generate->parsed()) return cmd_generate(cfg, force);
        if (train_cmd->parsed()) {
            if (train_standard) cfg.train.standard_baseline = true;
            const std::string subdir =
                !train_subdir.empty() ? train_subdir
                                      : (train_standard ? "train_standard" : "train_rolling");
            return cmd_train(cfg, force, resume_path, subdir);
        }
        if (rollout_cmd->parsed()) {
            return cmd_rollout(cfg, ckpt_path, rollout_standard, rollout_subdir, pgm, force);
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(cfg, trace_specs, resolve(cfg, eval_out));
        }
        if (compare->parsed()) return cmd_compare(cfg, force);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
