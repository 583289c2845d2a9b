#include "rolling/metrics.hpp"

#include <cmath>

#include "rolling/errors.hpp"

namespace rolling {

Eigen::VectorXd dft_magnitudes(const Eigen::VectorXd& frame) {
    const long d = frame.size();
    if (d < 2) throw ShapeError("dft_magnitudes: need at least 2 samples");
    const long f = d / 2 + 1;
    Eigen::VectorXd mags(f);
    for (long k = 0; k < f; ++k) {
        double re = 0.0, im = 0.0;
        for (long i = 0; i < d; ++i) {
            const double phase = -2.0 * M_PI * static_cast<double>(k) * static_cast<double>(i) /
                                 static_cast<double>(d);
            re += frame(i) * std::cos(phase);
            im += frame(i) * std::sin(phase);
        }
        mags(k) = std::hypot(re, im);
    }
    return mags;
}

void SpectralAccumulator::add(const Eigen::VectorXd& features) {
    if (n_ == 0) {
        mean_ = Eigen::VectorXd::Zero(features.size());
        m2_ = Eigen::MatrixXd::Zero(features.size(), features.size());
    } else if (features.size() != mean_.size()) {
        throw ShapeError("SpectralAccumulator: feature dimension changed");
    }
    ++n_;
    const Eigen::VectorXd delta = features - mean_;
    mean_ += delta / static_cast<double>(n_);
    const Eigen::VectorXd delta2 = features - mean_;
    m2_ += delta * delta2.transpose();
}

SpectralStats SpectralAccumulator::stats() const {
    if (n_ < 2) throw NumericalError("SpectralAccumulator: need at least 2 samples");
    SpectralStats s;
    s.mean = mean_;
    // m2_ accumulates outer products of pre/post-update deviations; its
    // symmetrization is the usual sum of squared deviations.
    s.cov = 0.5 * (m2_ + m2_.transpose()) / static_cast<double>(n_ - 1);
    s.n = n_;
    return s;
}

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("fsd: eigendecomposition failed (condition issue?)");
    }
    const Eigen::VectorXd vals = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double fsd(const SpectralStats& a, const SpectralStats& b) {
    if (a.mean.size() != b.mean.size()) throw ShapeError("fsd: feature dimensions differ");
    const Eigen::MatrixXd root_a = psd_sqrt(0.5 * (a.cov + a.cov.transpose()));
    const Eigen::MatrixXd inner = root_a * b.cov * root_a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (inner + inner.transpose()));
    if (eig.info() != Eigen::Success) {
        throw NumericalError("fsd: eigendecomposition failed (condition issue?)");
    }
    const double cross = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    const double value =
        (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2.0 * cross;
    if (value < -1e-8) throw NumericalError("fsd: distance significantly negative");
    return std::max(0.0, value);
}

std::vector<double> mse_at_horizon(const std::vector<std::vector<Eigen::VectorXd>>& generated,
                                   const std::vector<std::vector<Eigen::VectorXd>>& reference,
                                   const std::vector<int>& horizons) {
    if (generated.size() != reference.size() || generated.empty()) {
        throw ShapeError("mse_at_horizon: generated/reference pairing mismatch");
    }
    std::vector<double> out;
    out.reserve(horizons.size());
    for (int h : horizons) {
        if (h < 1) throw ConfigError("mse_at_horizon: horizons are 1-based");
        double acc = 0.0;
        long count = 0;
        for (size_t i = 0; i < generated.size(); ++i) {
            const size_t idx = static_cast<size_t>(h - 1);
            if (idx >= generated[i].size() || idx >= reference[i].size()) {
                throw ConfigError("mse_at_horizon: horizon " + std::to_string(h) +
                                  " beyond trace length");
            }
            acc += (generated[i][idx] - reference[i][idx]).squaredNorm();
            count += generated[i][idx].size();
        }
        out.push_back(acc / static_cast<double>(count));
    }
    return out;
}

}  // namespace rolling
