#include "rolling/trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rolling/errors.hpp"

namespace rolling {

void TrainConfig::validate() const {
    if (window < 1) throw ConfigError("TrainConfig: window must be >= 1");
    if (n_clean < 0 || n_clean >= window) throw ConfigError("TrainConfig: need 0 <= n_clean < window");
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("TrainConfig: beta must lie in [0, 1]");
    if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
    if (steps < 0) throw ConfigError("TrainConfig: steps must be >= 0");
    if (lr <= 0.0) throw ConfigError("TrainConfig: lr must be positive");
    if (!(ema_decay >= 0.0 && ema_decay <= 1.0)) throw ConfigError("TrainConfig: ema_decay in [0, 1]");
    if (log_every < 1) throw ConfigError("TrainConfig: log_every must be >= 1");
}

TrainResult train(const TrainConfig& config, const NetConfig& net_config,
                  const SequenceDataset& dataset, const Checkpoint* resume) {
    config.validate();
    if (net_config.window != config.window) throw ConfigError("train: net/train window mismatch");
    if (dataset.num_frames() < config.window) {
        throw ConfigError("train: sequences shorter than the training window");
    }

    const SnrSchedule snr;
    const DatasetSplit split = split_dataset(dataset.num_sequences());
    const WindowSampler sampler(dataset, config.window, split.train_begin, split.train_end);

    TrainResult result{DenoiserNet(net_config, config.seed), AdamState{}, 0, "", {}};
    DenoiserNet& net = result.model;
    net.ema_decay = config.ema_decay;

    std::mt19937_64 rng(config.seed + 1);
    if (resume) {
        if (resume->params.size() != net.param_count()) {
            throw ConfigError("train: resume checkpoint does not match architecture");
        }
        net.params() = resume->params;
        net.ema_params() = resume->ema;
        result.opt.m = resume->adam_m;
        result.opt.v = resume->adam_v;
        result.opt.step = resume->adam_step;
        result.step = resume->step;
        std::istringstream in(resume->rng_state);
        in >> rng;
    }

    const int wd = config.window * net_config.frame_dim;
    const int dim = net_config.frame_dim;
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const auto t0 = std::chrono::steady_clock::now();
    long lin_draws = 0, total_draws = 0;
    if (!config.out_dir.empty()) std::filesystem::create_directories(config.out_dir);
    const std::string ckpt_path =
        config.out_dir.empty() ? "" : config.out_dir + "/checkpoint.bin";

    auto save_state = [&](const std::string& path) {
        std::ostringstream os;
        os << rng;
        Checkpoint ckpt{net.config(), result.step,   config.ema_decay, net.params(),
                        net.ema_params(), result.opt.m.size() ? result.opt.m
                                                              : Eigen::VectorXd::Zero(net.param_count()),
                        result.opt.v.size() ? result.opt.v : Eigen::VectorXd::Zero(net.param_count()),
                        result.opt.step,  os.str()};
        save_checkpoint(path, ckpt);
    };

    Eigen::MatrixXd inputs(config.batch_size, net_config.input_width());
    Eigen::MatrixXd targets(config.batch_size, wd);   // clean frames
    Eigen::MatrixXd latents(config.batch_size, wd);   // noisy frames
    Eigen::MatrixXd coeff(config.batch_size, wd);     // -2 a_w sigma_w / B per element
    Eigen::MatrixXd alphas(config.batch_size, wd), sigmas(config.batch_size, wd);
    Eigen::VectorXd frame_w(config.window);

    while (result.step < config.steps) {
        double batch_loss = 0.0;
        for (int b = 0; b < config.batch_size; ++b) {
            const Eigen::MatrixXd x = sampler.next(rng);
            const double t = uniform(rng);
            ScheduleKind kind = ScheduleKind::Constant;
            if (!config.standard_baseline) {
                kind = choose_schedule(config.beta, rng);
                ++total_draws;
                if (kind == ScheduleKind::Lin) ++lin_draws;
            }
            const ScheduleSpec spec{kind, config.window, config.n_clean};
            const std::vector<double> lts = local_times(spec, t);
            const std::vector<double> weights = frame_weights(spec, config.weighting, t, snr);

            Eigen::MatrixXd eps(dim, config.window);
            for (int w = 0; w < config.window; ++w) {
                for (int d = 0; d < dim; ++d) eps(d, w) = gauss(rng);
            }
            const WindowState state = forward_sample(x, lts, eps, snr);
            inputs.row(b) = net.build_input(state.z, lts).transpose();
            targets.row(b) = Eigen::Map<const Eigen::VectorXd>(x.data(), wd).transpose();
            latents.row(b) = Eigen::Map<const Eigen::VectorXd>(state.z.data(), wd).transpose();
            for (int w = 0; w < config.window; ++w) {
                const NoiseLevel lv = snr.at(lts[static_cast<size_t>(w)]);
                for (int d = 0; d < dim; ++d) {
                    alphas(b, w * dim + d) = lv.alpha;
                    sigmas(b, w * dim + d) = lv.sigma;
                    coeff(b, w * dim + d) = weights[static_cast<size_t>(w)];
                }
            }
        }

        DenoiserNet::Cache cache;
        const Eigen::MatrixXd v_hat = net.forward(inputs, &cache);
        const Eigen::MatrixXd x_hat =
            alphas.cwiseProduct(latents) - sigmas.cwiseProduct(v_hat);
        const Eigen::MatrixXd residual = x_hat - targets;
        batch_loss = coeff.cwiseProduct(residual.cwiseAbs2()).sum() /
                     static_cast<double>(config.batch_size);
        if (!std::isfinite(batch_loss)) {
            throw NumericalError("train: non-finite loss at step " + std::to_string(result.step + 1));
        }

        const Eigen::MatrixXd grad_out =
            (-2.0 / config.batch_size) * coeff.cwiseProduct(sigmas).cwiseProduct(residual);
        const Eigen::VectorXd grads = net.backward(cache, grad_out);
        adam_step(net.params(), grads, result.opt, config.lr);
        net.ema_update();
        ++result.step;

        if (result.step % config.log_every == 0 || result.step == config.steps) {
            const double elapsed =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            result.log.push_back(TrainLogRow{
                result.step, batch_loss,
                batch_loss / config.window,
                total_draws > 0 ? static_cast<double>(lin_draws) / total_draws : 0.0, elapsed});
        }
        if (!config.out_dir.empty() && config.checkpoint_every > 0 &&
            result.step % config.checkpoint_every == 0) {
            save_state(config.out_dir + "/ckpt_" + std::to_string(result.step) + ".bin");
        }
    }

    {
        std::ostringstream os;
        os << rng;
        result.rng_state = os.str();
    }
    if (!config.out_dir.empty()) {
        save_state(ckpt_path);
        write_metrics_csv(config.out_dir + "/metrics.csv", result.log);
    }
    return result;
}

Checkpoint make_checkpoint(const TrainResult& result, double ema_decay) {
    Checkpoint ckpt;
    ckpt.config = result.model.config();
    ckpt.step = result.step;
    ckpt.ema_decay = ema_decay;
    ckpt.params = result.model.params();
    ckpt.ema = result.model.ema_params();
    ckpt.adam_m = result.opt.m.size() ? result.opt.m
                                      : Eigen::VectorXd::Zero(result.model.param_count());
    ckpt.adam_v = result.opt.v.size() ? result.opt.v
                                      : Eigen::VectorXd::Zero(result.model.param_count());
    ckpt.adam_step = result.opt.step;
    ckpt.rng_state = result.rng_state;
    return ckpt;
}

void write_metrics_csv(const std::string& path, const std::vector<TrainLogRow>& log) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open metrics CSV for writing: " + path);
    out << "step,loss,loss_per_frame_mean,schedule_kind_fraction,wallclock\n";
    out.precision(17);
    for (const auto& row : log) {
        out << row.step << "," << row.loss << "," << row.loss_per_frame_mean << ","
            << row.lin_fraction << "," << row.wallclock_s << "\n";
    }
    if (!out) throw IoError("failed writing metrics CSV: " + path);
}

}  // namespace rolling
