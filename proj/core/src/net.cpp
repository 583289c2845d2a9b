#include "rolling/net.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "rolling/errors.hpp"

namespace rolling {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
    return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

}  // namespace

void NetConfig::validate() const {
    if (window < 1 || frame_dim < 1) throw ConfigError("NetConfig: window and frame_dim must be >= 1");
    if (time_embed < 2 || time_embed % 2 != 0) throw ConfigError("NetConfig: time_embed must be even and >= 2");
    if (hidden < 1 || hidden_layers < 1) throw ConfigError("NetConfig: hidden and hidden_layers must be >= 1");
}

TimeEmbedding::TimeEmbedding(int width, double max_freq) : width_(width) {
    const int half = width / 2;
    freqs_.resize(static_cast<size_t>(half));
    for (int i = 0; i < half; ++i) {
        const double e = half > 1 ? static_cast<double>(i) / (half - 1) : 0.0;
        freqs_[static_cast<size_t>(i)] = std::pow(max_freq, e);
    }
}

Eigen::VectorXd TimeEmbedding::operator()(double t) const {
    Eigen::VectorXd out(width_);
    const int half = width_ / 2;
    for (int i = 0; i < half; ++i) {
        out(2 * i) = std::sin(freqs_[static_cast<size_t>(i)] * t);
        out(2 * i + 1) = std::cos(freqs_[static_cast<size_t>(i)] * t);
    }
    return out;
}

DenoiserNet::DenoiserNet(const NetConfig& config, std::uint64_t seed)
    : config_(config), embed_(config.time_embed) {
    config_.validate();

    // Layer shapes: hidden stack, then final affine over [act, raw frames].
    in_widths_.push_back(config_.input_width());
    out_widths_.push_back(config_.hidden);
    for (int l = 1; l < config_.hidden_layers; ++l) {
        in_widths_.push_back(config_.hidden);
        out_widths_.push_back(config_.hidden);
    }
    in_widths_.push_back(config_.hidden + config_.output_width());
    out_widths_.push_back(config_.output_width());

    long total = 0;
    for (size_t l = 0; l < in_widths_.size(); ++l) {
        offsets_.push_back(total);
        total += static_cast<long>(in_widths_[l]) * out_widths_[l] + out_widths_[l];
    }
    params_.setZero(total);

    std::mt19937_64 rng(seed);
    for (size_t l = 0; l + 1 < in_widths_.size(); ++l) {
        const double bound = std::sqrt(1.0 / in_widths_[l]);
        std::uniform_real_distribution<double> dist(-bound, bound);
        const long n = static_cast<long>(in_widths_[l]) * out_widths_[l];
        for (long i = 0; i < n; ++i) params_(offsets_[l] + i) = dist(rng);
    }
    // Final layer stays zero so the initial v-prediction is the zero vector.
    ema_ = params_;
}

Eigen::VectorXd DenoiserNet::build_input(const Eigen::MatrixXd& z,
                                         const std::vector<double>& local_times) const {
    if (z.rows() != config_.frame_dim || z.cols() != config_.window) {
        throw ShapeError("build_input: window shape mismatch");
    }
    if (static_cast<int>(local_times.size()) != config_.window) {
        throw ShapeError("build_input: one local time per frame required");
    }
    Eigen::VectorXd in(config_.input_width());
    const int zlen = config_.output_width();
    in.head(zlen) = Eigen::Map<const Eigen::VectorXd>(z.data(), zlen);
    for (int w = 0; w < config_.window; ++w) {
        in.segment(zlen + w * config_.time_embed, config_.time_embed) =
            embed_(local_times[static_cast<size_t>(w)]);
    }
    return in;
}

Eigen::MatrixXd DenoiserNet::forward(const Eigen::MatrixXd& input, Cache* cache,
                                     const Eigen::VectorXd* param_override) const {
    if (input.cols() != config_.input_width()) {
        throw ShapeError("forward: input width mismatch");
    }
    const Eigen::VectorXd& p = param_override ? *param_override : params_;
    const long batch = input.rows();

    if (cache) {
        cache->input = input;
        cache->pre.clear();
        cache->act.clear();
    }

    Eigen::MatrixXd a = input;
    const size_t n_layers = in_widths_.size();
    for (size_t l = 0; l + 1 < n_layers; ++l) {
        Eigen::Map<const Eigen::MatrixXd> w(p.data() + offsets_[l], in_widths_[l], out_widths_[l]);
        Eigen::Map<const Eigen::VectorXd> b(
            p.data() + offsets_[l] + static_cast<long>(in_widths_[l]) * out_widths_[l],
            out_widths_[l]);
        Eigen::MatrixXd pre = (a * w).rowwise() + b.transpose();
        Eigen::MatrixXd act = pre.unaryExpr([](double x) { return gelu(x); });
        if (cache) {
            cache->pre.push_back(pre);
            cache->act.push_back(act);
        }
        a = std::move(act);
    }

    // Final affine over [hidden activation, raw frame inputs].
    const size_t lf = n_layers - 1;
    Eigen::Map<const Eigen::MatrixXd> w(p.data() + offsets_[lf], in_widths_[lf], out_widths_[lf]);
    Eigen::Map<const Eigen::VectorXd> b(
        p.data() + offsets_[lf] + static_cast<long>(in_widths_[lf]) * out_widths_[lf],
        out_widths_[lf]);
    const int zlen = config_.output_width();
    Eigen::MatrixXd fin(batch, in_widths_[lf]);
    fin.leftCols(config_.hidden) = a;
    fin.rightCols(zlen) = input.leftCols(zlen);
    Eigen::MatrixXd out = (fin * w).rowwise() + b.transpose();
    if (cache) {
        cache->act.push_back(std::move(fin));
        cache->valid = true;
    }
    return out;
}

Eigen::MatrixXd DenoiserNet::forward_window(const Eigen::MatrixXd& z,
                                            const std::vector<double>& local_times,
                                            bool use_ema) const {
    const Eigen::VectorXd in = build_input(z, local_times);
    const Eigen::MatrixXd out =
        forward(in.transpose(), nullptr, use_ema ? &ema_ : nullptr);
    return Eigen::Map<const Eigen::MatrixXd>(out.data(), config_.frame_dim, config_.window);
}

Eigen::VectorXd DenoiserNet::backward(const Cache& cache, const Eigen::MatrixXd& grad_out) const {
    if (!cache.valid) {
        throw std::logic_error("backward: cache not populated by a matching forward pass");
    }
    if (grad_out.rows() != cache.input.rows() || grad_out.cols() != config_.output_width()) {
        throw ShapeError("backward: grad_out shape mismatch");
    }
    Eigen::VectorXd grads = Eigen::VectorXd::Zero(params_.size());
    const Eigen::VectorXd& p = params_;
    const size_t n_layers = in_widths_.size();

    // Final layer.
    const size_t lf = n_layers - 1;
    const Eigen::MatrixXd& fin = cache.act[lf];  // [hidden act, raw frames]
    {
        Eigen::Map<Eigen::MatrixXd> gw(grads.data() + offsets_[lf], in_widths_[lf], out_widths_[lf]);
        Eigen::Map<Eigen::VectorXd> gb(
            grads.data() + offsets_[lf] + static_cast<long>(in_widths_[lf]) * out_widths_[lf],
            out_widths_[lf]);
        gw = fin.transpose() * grad_out;
        gb = grad_out.colwise().sum();
    }
    Eigen::Map<const Eigen::MatrixXd> wf(p.data() + offsets_[lf], in_widths_[lf], out_widths_[lf]);
    Eigen::MatrixXd g = (grad_out * wf.transpose()).leftCols(config_.hidden);

    for (size_t l = n_layers - 1; l-- > 0;) {
        const Eigen::MatrixXd& prev = l == 0 ? cache.input : cache.act[l - 1];
        Eigen::MatrixXd gpre =
            g.array() * cache.pre[l].unaryExpr([](double x) { return gelu_grad(x); }).array();
        Eigen::Map<Eigen::MatrixXd> gw(grads.data() + offsets_[l], in_widths_[l], out_widths_[l]);
        Eigen::Map<Eigen::VectorXd> gb(
            grads.data() + offsets_[l] + static_cast<long>(in_widths_[l]) * out_widths_[l],
            out_widths_[l]);
        gw = prev.transpose() * gpre;
        gb = gpre.colwise().sum();
        if (l > 0) {
            Eigen::Map<const Eigen::MatrixXd> w(p.data() + offsets_[l], in_widths_[l], out_widths_[l]);
            g = gpre * w.transpose();
        }
    }
    return grads;
}

void DenoiserNet::ema_update() { rolling::ema_update(ema_, params_, ema_decay); }

DenoiserFn DenoiserNet::as_denoiser(const SnrSchedule& snr, bool use_ema) const {
    return [net = *this, snr, use_ema](const Eigen::MatrixXd& z,
                                       const std::vector<double>& lts) -> Eigen::MatrixXd {
        const Eigen::MatrixXd v = net.forward_window(z, lts, use_ema);
        Eigen::MatrixXd x_hat(z.rows(), z.cols());
        for (int w = 0; w < z.cols(); ++w) {
            const NoiseLevel lv = snr.at(lts[static_cast<size_t>(w)]);
            x_hat.col(w) = lv.alpha * z.col(w) - lv.sigma * v.col(w);
        }
        return x_hat;
    };
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
    if (params.size() != grads.size()) throw ShapeError("adam_step: size mismatch");
    if (!grads.allFinite()) {
        throw NumericalError("adam_step: non-finite gradient at step " +
                             std::to_string(state.step + 1));
    }
    if (state.m.size() != params.size()) {
        state.m.setZero(params.size());
        state.v.setZero(params.size());
    }
    state.step += 1;
    state.m = beta1 * state.m + (1.0 - beta1) * grads;
    state.v = beta2 * state.v + (1.0 - beta2) * grads.cwiseProduct(grads);
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    params.array() -=
        lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + eps);
}

void ema_update(Eigen::VectorXd& ema, const Eigen::VectorXd& params, double decay) {
    if (ema.size() != params.size()) throw ShapeError("ema_update: size mismatch");
    ema = decay * ema + (1.0 - decay) * params;
}

namespace {

void write_vector(std::ofstream& out, const Eigen::VectorXd& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(sizeof(double)) * v.size());
}

Eigen::VectorXd read_vector(std::ifstream& in, long n) {
    Eigen::VectorXd v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double)) * n);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    static_assert(std::endian::native == std::endian::little, "little-endian payload");
    nlohmann::json header = {
        {"format", "rolling-checkpoint"},
        {"version", 1},
        {"step", ckpt.step},
        {"ema_decay", ckpt.ema_decay},
        {"adam_step", ckpt.adam_step},
        {"rng_state", ckpt.rng_state},
        {"param_count", ckpt.params.size()},
        {"arch",
         {{"window", ckpt.config.window},
          {"frame_dim", ckpt.config.frame_dim},
          {"time_embed", ckpt.config.time_embed},
          {"hidden", ckpt.config.hidden},
          {"hidden_layers", ckpt.config.hidden_layers}}},
    };
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    const std::string htext = header.dump();
    const std::uint64_t hlen = htext.size();
    out.write("RDCP", 4);
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(htext.data(), static_cast<std::streamsize>(hlen));
    write_vector(out, ckpt.params);
    write_vector(out, ckpt.ema);
    write_vector(out, ckpt.adam_m);
    write_vector(out, ckpt.adam_v);
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "RDCP", 4) != 0) {
        throw IoError("not a checkpoint file: " + path);
    }
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string htext(hlen, '\0');
    in.read(htext.data(), static_cast<std::streamsize>(hlen));
    nlohmann::json header = nlohmann::json::parse(htext);
    if (header.value("version", 0) != 1) throw IoError("unsupported checkpoint version");

    Checkpoint ckpt;
    const auto& arch = header.at("arch");
    ckpt.config.window = arch.at("window");
    ckpt.config.frame_dim = arch.at("frame_dim");
    ckpt.config.time_embed = arch.at("time_embed");
    ckpt.config.hidden = arch.at("hidden");
    ckpt.config.hidden_layers = arch.at("hidden_layers");
    ckpt.step = header.at("step");
    ckpt.ema_decay = header.at("ema_decay");
    ckpt.adam_step = header.at("adam_step");
    ckpt.rng_state = header.at("rng_state");
    const long n = header.at("param_count");
    ckpt.params = read_vector(in, n);
    ckpt.ema = read_vector(in, n);
    ckpt.adam_m = read_vector(in, n);
    ckpt.adam_v = read_vector(in, n);
    if (!in) throw IoError("truncated checkpoint: " + path);
    return ckpt;
}

}  // namespace rolling
