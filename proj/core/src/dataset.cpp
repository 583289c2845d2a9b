#include "rolling/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "rolling/errors.hpp"

namespace rolling {

DatasetSplit split_dataset(int num_sequences) {
    DatasetSplit s;
    const int n_val = std::max(num_sequences >= 20 ? 1 : 0, num_sequences / 20);
    const int n_test = n_val;
    s.train_begin = 0;
    s.train_end = num_sequences - n_val - n_test;
    s.val_begin = s.train_end;
    s.val_end = s.val_begin + n_val;
    s.test_begin = s.val_end;
    s.test_end = num_sequences;
    return s;
}

SequenceDataset generate_ar1(const Ar1Params& params, int n, int k, std::uint64_t seed) {
    if (n < 1 || k < 1) throw ConfigError("generate_ar1: need N, K >= 1");
    if (!(params.rho > 0.0 && params.rho < 1.0)) {
        throw ConfigError("generate_ar1: rho must lie in (0, 1)");
    }
    const double noise =
        params.noise_scale < 0.0 ? std::sqrt(1.0 - params.rho * params.rho) : params.noise_scale;

    SequenceDataset ds;
    ds.sequences.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        // Per-sequence derived seed keeps generation order-independent.
        std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(i + 1));
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::MatrixXd seq(params.dim, k);
        for (int d = 0; d < params.dim; ++d) seq(d, 0) = gauss(rng);
        for (int f = 1; f < k; ++f) {
            for (int d = 0; d < params.dim; ++d) {
                seq(d, f) = params.rho * seq(d, f - 1) + noise * gauss(rng);
            }
        }
        ds.sequences.push_back(std::move(seq));
    }
    ds.metadata = {{"generator", "ar1"},
                   {"seed", seed},
                   {"rho", params.rho},
                   {"noise_scale", noise},
                   {"dim", params.dim},
                   {"num_sequences", n},
                   {"num_frames", k}};
    return ds;
}

namespace {

Eigen::VectorXd lorenz96_rhs(const Eigen::VectorXd& x, double forcing) {
    const int d = static_cast<int>(x.size());
    Eigen::VectorXd dx(d);
    for (int i = 0; i < d; ++i) {
        const double xp1 = x((i + 1) % d);
        const double xm1 = x((i - 1 + d) % d);
        const double xm2 = x((i - 2 + d) % d);
        dx(i) = (xp1 - xm2) * xm1 - x(i) + forcing;
    }
    return dx;
}

void rk4_step(Eigen::VectorXd& x, double dt, double forcing) {
    const Eigen::VectorXd k1 = lorenz96_rhs(x, forcing);
    const Eigen::VectorXd k2 = lorenz96_rhs(x + 0.5 * dt * k1, forcing);
    const Eigen::VectorXd k3 = lorenz96_rhs(x + 0.5 * dt * k2, forcing);
    const Eigen::VectorXd k4 = lorenz96_rhs(x + dt * k3, forcing);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

SequenceDataset generate_lorenz96(const Lorenz96Params& params, int n, int k, std::uint64_t seed) {
    if (n < 1 || k < 1) throw ConfigError("generate_lorenz96: need N, K >= 1");
    if (params.dim < 4) throw ConfigError("generate_lorenz96: dim must be >= 4");
    if (params.dt <= 0.0 || params.dt > 0.05) {
        throw ConfigError("generate_lorenz96: dt must lie in (0, 0.05]");
    }
    if (params.stride < 1) throw ConfigError("generate_lorenz96: stride must be >= 1");

    SequenceDataset ds;
    ds.sequences.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(i + 1));
        std::normal_distribution<double> gauss(0.0, 0.1);
        // Perturbed fixed point x_i = F as initial condition.
        Eigen::VectorXd x = Eigen::VectorXd::Constant(params.dim, params.forcing);
        for (int d = 0; d < params.dim; ++d) x(d) += gauss(rng);

        for (int s = 0; s < params.warmup_steps; ++s) rk4_step(x, params.dt, params.forcing);

        Eigen::MatrixXd seq(params.dim, k);
        for (int f = 0; f < k; ++f) {
            for (int s = 0; s < params.stride; ++s) rk4_step(x, params.dt, params.forcing);
            if (!x.allFinite()) {
                throw NumericalError("generate_lorenz96: trajectory " + std::to_string(i) +
                                     " blew up at frame " + std::to_string(f));
            }
            seq.col(f) = x;
        }
        ds.sequences.push_back(std::move(seq));
    }

    // Standardize with train-split statistics only.
    const DatasetSplit split = split_dataset(n);
    double sum = 0.0, sumsq = 0.0;
    long count = 0;
    for (int i = split.train_begin; i < split.train_end; ++i) {
        sum += ds.sequences[static_cast<size_t>(i)].sum();
        sumsq += ds.sequences[static_cast<size_t>(i)].array().square().sum();
        count += ds.sequences[static_cast<size_t>(i)].size();
    }
    const double mean = sum / static_cast<double>(count);
    const double var = sumsq / static_cast<double>(count) - mean * mean;
    const double scale = 1.0 / std::sqrt(var);
    for (auto& seq : ds.sequences) seq = (seq.array() - mean) * scale;

    ds.metadata = {{"generator", "lorenz96"},
                   {"seed", seed},
                   {"dim", params.dim},
                   {"forcing", params.forcing},
                   {"dt", params.dt},
                   {"stride", params.stride},
                   {"warmup_steps", params.warmup_steps},
                   {"standardize_mean", mean},
                   {"standardize_std", std::sqrt(var)},
                   {"num_sequences", n},
                   {"num_frames", k}};
    return ds;
}

WindowSampler::WindowSampler(const SequenceDataset& ds, int window, int first_seq, int last_seq,
                             int offset_stride)
    : ds_(ds), window_(window), first_seq_(first_seq), last_seq_(last_seq), stride_(offset_stride) {
    if (ds.num_frames() < window) {
        throw ConfigError("WindowSampler: sequences shorter than the window");
    }
    if (first_seq < 0 || last_seq > ds.num_sequences() || first_seq >= last_seq) {
        throw ConfigError("WindowSampler: bad sequence range");
    }
    if (offset_stride < 1) throw ConfigError("WindowSampler: offset stride must be >= 1");
    num_offsets_ = (ds.num_frames() - window) / stride_ + 1;
}

Eigen::MatrixXd WindowSampler::next(std::mt19937_64& rng) const {
    std::uniform_int_distribution<int> seq_dist(first_seq_, last_seq_ - 1);
    std::uniform_int_distribution<int> off_dist(0, num_offsets_ - 1);
    const int seq = seq_dist(rng);
    const int offset = off_dist(rng) * stride_;
    return ds_.sequences[static_cast<size_t>(seq)].middleCols(offset, window_);
}

void save_dataset(const std::string& path, const SequenceDataset& ds) {
    static_assert(std::endian::native == std::endian::little, "little-endian payload");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open dataset for writing: " + path);
    const std::string meta = ds.metadata.dump();
    const std::uint32_t version = 1;
    const std::uint64_t n = static_cast<std::uint64_t>(ds.num_sequences());
    const std::uint64_t k = static_cast<std::uint64_t>(ds.num_frames());
    const std::uint64_t d = static_cast<std::uint64_t>(ds.frame_dim());
    const std::uint64_t mlen = meta.size();
    out.write("RDDS", 4);
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(&k), sizeof(k));
    out.write(reinterpret_cast<const char*>(&d), sizeof(d));
    out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
    out.write(meta.data(), static_cast<std::streamsize>(mlen));
    for (const auto& seq : ds.sequences) {
        out.write(reinterpret_cast<const char*>(seq.data()),
                  static_cast<std::streamsize>(sizeof(double)) * seq.size());
    }
    if (!out) throw IoError("failed writing dataset: " + path);
}

SequenceDataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "RDDS", 4) != 0) throw IoError("not a dataset file: " + path);
    std::uint32_t version = 0;
    std::uint64_t n = 0, k = 0, d = 0, mlen = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != 1) throw IoError("unsupported dataset version");
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    in.read(reinterpret_cast<char*>(&k), sizeof(k));
    in.read(reinterpret_cast<char*>(&d), sizeof(d));
    in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
    std::string meta(mlen, '\0');
    in.read(meta.data(), static_cast<std::streamsize>(mlen));

    SequenceDataset ds;
    ds.metadata = nlohmann::json::parse(meta);
    ds.sequences.resize(n);
    for (auto& seq : ds.sequences) {
        seq.resize(static_cast<long>(d), static_cast<long>(k));
        in.read(reinterpret_cast<char*>(seq.data()),
                static_cast<std::streamsize>(sizeof(double)) * seq.size());
    }
    if (!in) throw IoError("truncated dataset: " + path);
    return ds;
}

Eigen::MatrixXd ar1_posterior_mean(double rho, const std::vector<double>& local_times,
                                   const SnrSchedule& snr, const Eigen::MatrixXd& z) {
    const int w = static_cast<int>(local_times.size());
    if (z.cols() != w) throw ShapeError("ar1_posterior_mean: one local time per frame required");

    Eigen::MatrixXd cov(w, w);
    for (int i = 0; i < w; ++i) {
        for (int j = 0; j < w; ++j) cov(i, j) = std::pow(rho, std::abs(i - j));
    }
    Eigen::VectorXd alpha(w), var(w);
    for (int i = 0; i < w; ++i) {
        const NoiseLevel lv = snr.at(local_times[static_cast<size_t>(i)]);
        alpha(i) = lv.alpha;
        var(i) = lv.sigma * lv.sigma;
    }
    // z = A x + noise per data dimension; E[x|z] = Sigma A (A Sigma A + S)^{-1} z.
    const Eigen::MatrixXd cov_a = cov * alpha.asDiagonal();
    Eigen::MatrixXd gram = alpha.asDiagonal() * cov_a;
    gram.diagonal() += var;
    const Eigen::MatrixXd gain = cov_a * gram.llt().solve(Eigen::MatrixXd::Identity(w, w));
    return z * gain.transpose();  // (D x W) * (W x W)^T, per-dimension rows
}

}  // namespace rolling
