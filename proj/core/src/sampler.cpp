#include "rolling/sampler.hpp"

#include <cmath>
#include <fstream>

#include "rolling/dataset.hpp"
#include "rolling/errors.hpp"

namespace rolling {

void SamplerConfig::validate() const {
    if (window < 2) throw ConfigError("SamplerConfig: window must be >= 2");
    if (n_clean < 0 || n_clean >= window) throw ConfigError("SamplerConfig: need 0 <= n_clean < window");
    if (steps_per_frame < 1) throw ConfigError("SamplerConfig: steps_per_frame must be >= 1");
    if (boundary_kind != ScheduleKind::Init && boundary_kind != ScheduleKind::InitRescaled) {
        throw ConfigError("SamplerConfig: boundary schedule must be init or init_rescaled");
    }
    if (boundary_kind == ScheduleKind::InitRescaled && n_clean != 0) {
        throw ConfigError("SamplerConfig: init_rescaled only supports n_clean = 0");
    }
}

WindowState ancestral_step(const DenoiserFn& denoiser, const WindowState& state,
                           const ScheduleSpec& spec, double t, double s, const SnrSchedule& snr,
                           std::mt19937_64& rng, long* eval_count) {
    if (state.window() != spec.window) throw ShapeError("ancestral_step: window size mismatch");
    const FramePartition part = partition_frames(spec, s, t);  // validates s < t
    const std::vector<double> lt = local_times(spec, t);
    const std::vector<double> ls = local_times(spec, s);

    WindowState next;
    next.z = state.z;  // clean frames are carried over bitwise
    next.local_times = ls;

    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int w : part.noise) {
        for (int d = 0; d < state.frame_dim(); ++d) next.z(d, w) = gauss(rng);
    }
    if (!part.win.empty()) {
        const Eigen::MatrixXd x_hat = denoiser(state.z, lt);
        if (eval_count) ++*eval_count;
        for (int w : part.win) {
            const PosteriorCoeffs c =
                posterior_coeffs(snr, lt[static_cast<size_t>(w)], ls[static_cast<size_t>(w)]);
            const double sd = std::sqrt(c.var);
            for (int d = 0; d < state.frame_dim(); ++d) {
                next.z(d, w) =
                    c.coef_z * state.z(d, w) + c.coef_x * x_hat(d, w) + sd * gauss(rng);
            }
        }
    }
    return next;
}

WindowState boundary_sample(const DenoiserFn& denoiser, const Eigen::MatrixXd& conditioning,
                            const SamplerConfig& config, const SnrSchedule& snr,
                            std::mt19937_64& rng, long* eval_count) {
    config.validate();
    if (conditioning.cols() != config.n_clean) {
        throw ShapeError("boundary_sample: conditioning must have n_clean frames");
    }
    if (conditioning.rows() < 1) throw ShapeError("boundary_sample: frame dimension missing");
    const int dim = static_cast<int>(conditioning.rows());

    const ScheduleSpec init{config.boundary_kind, config.window, config.n_clean};
    init.validate();

    WindowState state;
    state.z.resize(dim, config.window);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int w = 0; w < config.window; ++w) {
        for (int d = 0; d < dim; ++d) state.z(d, w) = gauss(rng);
    }
    state.z.leftCols(config.n_clean) = conditioning;
    state.local_times = local_times(init, 1.0);

    const int steps = config.effective_boundary_steps();
    for (int i = steps; i >= 1; --i) {
        state = ancestral_step(denoiser, state, init, static_cast<double>(i) / steps,
                               static_cast<double>(i - 1) / steps, snr, rng, eval_count);
    }
    // Same values as the init schedule at t = 0; stated via Lin so the
    // rollout precondition holds exactly.
    state.local_times = local_times({ScheduleKind::Lin, config.window, config.n_clean}, 0.0);
    return state;
}

SampleTrace rollout(const DenoiserFn& denoiser, const WindowState& init,
                    const SamplerConfig& config, int num_frames, const SnrSchedule& snr,
                    std::mt19937_64& rng) {
    config.validate();
    const ScheduleSpec lin{ScheduleKind::Lin, config.window, config.n_clean};
    const std::vector<double> want = local_times(lin, 0.0);
    if (init.local_times != want) {
        throw std::logic_error("rollout: initial window is not in rolling state");
    }
    if (init.window() != config.window) throw ShapeError("rollout: window size mismatch");

    SampleTrace trace;
    WindowState state = init;
    std::normal_distribution<double> gauss(0.0, 1.0);
    long inner_steps = 0;

    for (int w = 0; w < config.n_clean; ++w) {
        trace.frames.emplace_back(state.z.col(w));
        trace.emission_steps.push_back(0);
    }
    const int emit_at = config.n_clean;  // lowest-noise generated frame
    for (int j = 0; j < num_frames; ++j) {
        trace.frames.emplace_back(state.z.col(emit_at));
        trace.emission_steps.push_back(inner_steps);

        // Shift left, append fresh noise; local times are shift-invariant.
        const long cols = state.z.cols();
        state.z.leftCols(cols - 1) = state.z.rightCols(cols - 1).eval();
        for (int d = 0; d < state.frame_dim(); ++d) state.z(d, cols - 1) = gauss(rng);

        const int steps = config.steps_per_frame;
        for (int i = steps; i >= 1; --i) {
            state = ancestral_step(denoiser, state, lin, static_cast<double>(i) / steps,
                                   static_cast<double>(i - 1) / steps, snr, rng,
                                   &trace.model_evals);
            ++inner_steps;
        }
    }
    return trace;
}

SampleTrace standard_block_rollout(const DenoiserFn& denoiser, const Eigen::MatrixXd& conditioning,
                                   const SamplerConfig& config, int num_frames,
                                   const SnrSchedule& snr, std::mt19937_64& rng) {
    config.validate();
    if (conditioning.cols() != config.n_clean) {
        throw ShapeError("standard_block_rollout: conditioning must have n_clean frames");
    }
    const int dim = static_cast<int>(conditioning.rows());
    const int block = config.window - config.n_clean;
    const int steps = config.steps_per_frame * block;  // budget-matched block steps
    const ScheduleSpec constant{ScheduleKind::Constant, config.window, config.n_clean};

    SampleTrace trace;
    Eigen::MatrixXd cond = conditioning;
    for (int w = 0; w < config.n_clean; ++w) {
        trace.frames.emplace_back(cond.col(w));
        trace.emission_steps.push_back(0);
    }

    std::normal_distribution<double> gauss(0.0, 1.0);
    long inner_steps = 0;
    int emitted = 0;
    while (emitted < num_frames) {
        WindowState state;
        state.z.resize(dim, config.window);
        for (int w = 0; w < config.window; ++w) {
            for (int d = 0; d < dim; ++d) state.z(d, w) = gauss(rng);
        }
        state.z.leftCols(config.n_clean) = cond;
        state.local_times = local_times(constant, 1.0);

        for (int i = steps; i >= 1; --i) {
            state = ancestral_step(denoiser, state, constant, static_cast<double>(i) / steps,
                                   static_cast<double>(i - 1) / steps, snr, rng,
                                   &trace.model_evals);
            ++inner_steps;
        }
        for (int w = config.n_clean; w < config.window && emitted < num_frames; ++w, ++emitted) {
            trace.frames.emplace_back(state.z.col(w));
            trace.emission_steps.push_back(inner_steps);
        }
        if (config.n_clean > 0) {
            const size_t total = trace.frames.size();
            for (int w = 0; w < config.n_clean; ++w) {
                cond.col(w) = trace.frames[total - static_cast<size_t>(config.n_clean - w)];
            }
        }
    }
    return trace;
}

void save_trace_csv(const std::string& path, const SampleTrace& trace) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open trace CSV for writing: " + path);
    out << "frame_index,emission_step";
    const long dim = trace.frames.empty() ? 0 : trace.frames[0].size();
    for (long d = 0; d < dim; ++d) out << ",v" << d;
    out << "\n";
    out.precision(17);
    for (size_t i = 0; i < trace.frames.size(); ++i) {
        out << i << "," << trace.emission_steps[i];
        for (long d = 0; d < dim; ++d) out << "," << trace.frames[i](d);
        out << "\n";
    }
    if (!out) throw IoError("failed writing trace CSV: " + path);
}

void save_trace_frames(const std::string& path, const SampleTrace& trace) {
    SequenceDataset ds;
    const long dim = trace.frames.empty() ? 0 : trace.frames[0].size();
    Eigen::MatrixXd seq(dim, static_cast<long>(trace.frames.size()));
    for (size_t i = 0; i < trace.frames.size(); ++i) seq.col(static_cast<long>(i)) = trace.frames[i];
    ds.sequences.push_back(std::move(seq));
    ds.metadata = {{"generator", "trace"},
                   {"model_evals", trace.model_evals},
                   {"boundary_evals", trace.boundary_evals}};
    save_dataset(path, ds);
}

void save_trace_pgm(const std::string& path, const SampleTrace& trace) {
    if (trace.frames.empty()) throw IoError("save_trace_pgm: empty trace");
    const long dim = trace.frames[0].size();
    const long cols = static_cast<long>(trace.frames.size());
    double lo = trace.frames[0](0), hi = lo;
    for (const auto& f : trace.frames) {
        lo = std::min(lo, f.minCoeff());
        hi = std::max(hi, f.maxCoeff());
    }
    const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open PGM for writing: " + path);
    out << "P5\n" << cols << " " << dim << "\n255\n";
    for (long d = 0; d < dim; ++d) {
        for (long c = 0; c < cols; ++c) {
            const auto px = static_cast<unsigned char>((trace.frames[static_cast<size_t>(c)](d) - lo) * scale);
            out.put(static_cast<char>(px));
        }
    }
    if (!out) throw IoError("failed writing PGM: " + path);
}

}  // namespace rolling
