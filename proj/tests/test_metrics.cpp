#include <doctest.h>

#include <cmath>
#include <random>

#include "rolling/errors.hpp"
#include "rolling/metrics.hpp"

using namespace rolling;

namespace {

Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < a.size(); ++i) a(i) = gauss(rng);
    return a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
}

Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
           eig.eigenvectors().transpose();
}

}  // namespace

TEST_CASE("dft of a constant frame concentrates in bin zero") {
    const double c = 2.5;
    const Eigen::VectorXd frame = Eigen::VectorXd::Constant(8, c);
    const Eigen::VectorXd mags = dft_magnitudes(frame);
    REQUIRE(mags.size() == 5);
    CHECK(mags(0) == doctest::Approx(c * 8).epsilon(1e-12));
    for (int k = 1; k < 5; ++k) CHECK(std::abs(mags(k)) < 1e-10);
}

TEST_CASE("dft of a pure cosine concentrates at its frequency") {
    const int d = 16, k = 3;
    const double a = 1.75;
    Eigen::VectorXd frame(d);
    for (int i = 0; i < d; ++i) frame(i) = a * std::cos(2.0 * M_PI * k * i / d);
    const Eigen::VectorXd mags = dft_magnitudes(frame);
    for (int bin = 0; bin < mags.size(); ++bin) {
        if (bin == k) {
            CHECK(mags(bin) == doctest::Approx(a * d / 2.0).epsilon(1e-10));
        } else {
            CHECK(std::abs(mags(bin)) < 1e-9);
        }
    }
}

TEST_CASE("dft satisfies Parseval's identity") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int d = 12;
    Eigen::VectorXd frame(d);
    for (int i = 0; i < d; ++i) frame(i) = gauss(rng);

    const Eigen::VectorXd mags = dft_magnitudes(frame);
    // Reconstruct the full-spectrum energy: interior bins appear twice
    // (conjugate symmetry); bin 0 and, for even D, the Nyquist bin once.
    double spectrum = mags(0) * mags(0);
    for (int k = 1; k < mags.size(); ++k) {
        const bool nyquist = (d % 2 == 0) && (k == d / 2);
        spectrum += (nyquist ? 1.0 : 2.0) * mags(k) * mags(k);
    }
    CHECK(spectrum == doctest::Approx(d * frame.squaredNorm()).epsilon(1e-9));
}

TEST_CASE("accumulator: identical samples give zero covariance") {
    SpectralAccumulator acc;
    Eigen::VectorXd v(3);
    v << 1.0, -2.0, 0.5;
    for (int i = 0; i < 5; ++i) acc.add(v);
    const SpectralStats s = acc.stats();
    CHECK((s.mean - v).lpNorm<Eigen::Infinity>() < 1e-14);
    CHECK(s.cov.lpNorm<Eigen::Infinity>() < 1e-14);
    CHECK(s.n == 5);
}

TEST_CASE("accumulator: antipodal pair") {
    SpectralAccumulator acc;
    Eigen::VectorXd v(2);
    v << 1.0, 3.0;
    acc.add(v);
    acc.add(-v);
    const SpectralStats s = acc.stats();
    CHECK(s.mean.lpNorm<Eigen::Infinity>() < 1e-14);
    const Eigen::MatrixXd expect = 2.0 * v * v.transpose();
    CHECK((s.cov - expect).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("accumulator requires two samples") {
    SpectralAccumulator acc;
    CHECK_THROWS_AS(acc.stats(), NumericalError);
    acc.add(Eigen::VectorXd::Ones(2));
    CHECK_THROWS_AS(acc.stats(), NumericalError);
}

TEST_CASE("streaming moments equal the two-pass formulas") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> gauss(0.0, 2.0);
    const int n = 500, f = 6;
    std::vector<Eigen::VectorXd> samples;
    SpectralAccumulator acc;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd v(f);
        for (int j = 0; j < f; ++j) v(j) = gauss(rng) + j;
        samples.push_back(v);
        acc.add(v);
    }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(f);
    for (const auto& v : samples) mean += v;
    mean /= n;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(f, f);
    for (const auto& v : samples) cov += (v - mean) * (v - mean).transpose();
    cov /= n - 1;

    const SpectralStats s = acc.stats();
    CHECK((s.mean - mean).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK((s.cov - cov).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("fsd of identical statistics is zero") {
    std::mt19937_64 rng(3);
    SpectralStats a;
    a.mean = Eigen::VectorXd::Random(6);
    a.cov = random_spd(6, rng);
    a.n = 100;
    CHECK(fsd(a, a) <= 1e-8);
}

TEST_CASE("fsd diagonal analytic case") {
    const int f = 7;
    SpectralStats a, b;
    a.mean = b.mean = Eigen::VectorXd::Zero(f);
    a.cov = Eigen::MatrixXd::Identity(f, f);
    b.cov = 4.0 * Eigen::MatrixXd::Identity(f, f);
    a.n = b.n = 10;
    // trace term: F * (1 + 4 - 2 * 2) = F.
    CHECK(fsd(a, b) == doctest::Approx(static_cast<double>(f)).epsilon(1e-8));
}

TEST_CASE("fsd matches the symmetrized oracle on random SPD pairs") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        SpectralStats a, b;
        a.mean = Eigen::VectorXd::Random(6);
        b.mean = Eigen::VectorXd::Random(6);
        a.cov = random_spd(6, rng);
        b.cov = random_spd(6, rng);
        a.n = b.n = 10;

        const Eigen::MatrixXd ra = spd_sqrt(a.cov);
        const Eigen::MatrixXd cross = spd_sqrt(ra * b.cov * ra);
        const double oracle = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() -
                              2.0 * cross.trace();
        CHECK(std::abs(fsd(a, b) - std::max(0.0, oracle)) <= 1e-8);
        CHECK(std::abs(fsd(a, b) - fsd(b, a)) <= 1e-8);
    }
}

TEST_CASE("fsd grows monotonically with mean offset") {
    std::mt19937_64 rng(5);
    SpectralStats a;
    a.mean = Eigen::VectorXd::Zero(4);
    a.cov = random_spd(4, rng);
    a.n = 10;
    double prev = -1.0;
    for (int i = 0; i <= 10; ++i) {
        SpectralStats b = a;
        b.mean = Eigen::VectorXd::Constant(4, 0.2 * i);
        const double d = fsd(a, b);
        CHECK(d > prev);
        prev = d;
    }
}

TEST_CASE("fsd rejects mismatched dimensions") {
    SpectralStats a, b;
    a.mean = Eigen::VectorXd::Zero(3);
    a.cov = Eigen::MatrixXd::Identity(3, 3);
    b.mean = Eigen::VectorXd::Zero(4);
    b.cov = Eigen::MatrixXd::Identity(4, 4);
    CHECK_THROWS_AS(fsd(a, b), ShapeError);
}

TEST_CASE("mse at horizon: exact, offset and white-noise cases") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int traces = 200, frames = 10, dim = 4;
    std::vector<std::vector<Eigen::VectorXd>> ref(traces), same(traces), offset(traces),
        noise(traces);
    for (int i = 0; i < traces; ++i) {
        for (int f = 0; f < frames; ++f) {
            Eigen::VectorXd v(dim), w(dim);
            for (int d = 0; d < dim; ++d) {
                v(d) = gauss(rng);
                w(d) = gauss(rng);
            }
            ref[static_cast<size_t>(i)].push_back(v);
            same[static_cast<size_t>(i)].push_back(v);
            offset[static_cast<size_t>(i)].push_back(v.array() + 0.5);
            noise[static_cast<size_t>(i)].push_back(w);
        }
    }
    const std::vector<int> horizons{1, 5, 10};
    for (double v : mse_at_horizon(same, ref, horizons)) CHECK(v == 0.0);
    for (double v : mse_at_horizon(offset, ref, horizons)) {
        CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
    }
    for (double v : mse_at_horizon(noise, ref, horizons)) {
        CHECK(v == doctest::Approx(2.0).epsilon(0.15));
    }
    CHECK_THROWS_AS(mse_at_horizon(same, ref, {11}), ConfigError);
}
