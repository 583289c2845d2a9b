#pragma once

#include <Eigen/Dense>
#include <vector>

namespace rolling {

/// Magnitudes of the non-redundant DFT bins of a real D-vector
/// (F = D/2 + 1 entries). Direct O(D^2) evaluation.
Eigen::VectorXd dft_magnitudes(const Eigen::VectorXd& frame);

/// Mean and unbiased covariance of DFT-magnitude feature vectors.
struct SpectralStats {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    long n = 0;
};

/// Single-pass accumulator (Welford-style updates).
class SpectralAccumulator {
public:
    void add(const Eigen::VectorXd& features);
    SpectralStats stats() const;  // throws on n < 2
    long count() const { return n_; }

private:
    long n_ = 0;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd m2_;
};

/// Frechet distance between Gaussians with the given moments. The cross
/// term is evaluated through the symmetrized product
/// tr((S_a^1/2 S_b S_a^1/2)^1/2); eigenvalues are floored at zero before
/// the square roots. Result clamped to [0, inf).
double fsd(const SpectralStats& a, const SpectralStats& b);

/// Mean squared error per element between generated and reference frames
/// at the given 1-based horizons. Each generated[i] is a list of frames;
/// reference[i] must cover the same horizons.
std::vector<double> mse_at_horizon(const std::vector<std::vector<Eigen::VectorXd>>& generated,
                                   const std::vector<std::vector<Eigen::VectorXd>>& reference,
                                   const std::vector<int>& horizons);

}  // namespace rolling
