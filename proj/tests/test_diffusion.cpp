#include <doctest.h>

#include <cmath>
#include <random>

#include "rolling/diffusion.hpp"
#include "rolling/errors.hpp"

using namespace rolling;

TEST_CASE("forward sample endpoints") {
    const SnrSchedule snr;
    Eigen::MatrixXd x(3, 2), eps(3, 2);
    x << 1, -2, 0.5, 3, -1, 0.25;
    eps.setOnes();

    const WindowState state = forward_sample(x, {0.0, 1.0}, eps, snr);
    CHECK((state.z.col(0) - x.col(0)).norm() < 2e-4 * eps.col(0).norm() + 1e-6);
    CHECK((state.z.col(1) - eps.col(1)).norm() < 2e-4 * x.col(1).norm() + 1e-6);
}

TEST_CASE("forward sample shape errors") {
    const SnrSchedule snr;
    const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 2);
    const Eigen::MatrixXd eps = Eigen::MatrixXd::Zero(3, 3);
    CHECK_THROWS_AS(forward_sample(x, {0.1, 0.2}, eps, snr), ShapeError);
    CHECK_THROWS_AS(forward_sample(x, {0.1}, Eigen::MatrixXd::Zero(3, 2), snr), ShapeError);
}

TEST_CASE("forward marginal moments match Monte Carlo") {
    const SnrSchedule snr;
    std::mt19937_64 rng(42);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int draws = 100000;
    Eigen::MatrixXd x(1, 2);
    x << 1.5, -0.75;
    const std::vector<double> lts = {0.3, 0.8};

    Eigen::Vector2d sum = Eigen::Vector2d::Zero(), sumsq = Eigen::Vector2d::Zero();
    for (int i = 0; i < draws; ++i) {
        Eigen::MatrixXd eps(1, 2);
        eps << gauss(rng), gauss(rng);
        const WindowState st = forward_sample(x, lts, eps, snr);
        for (int w = 0; w < 2; ++w) {
            sum(w) += st.z(0, w);
            sumsq(w) += st.z(0, w) * st.z(0, w);
        }
    }
    for (int w = 0; w < 2; ++w) {
        const NoiseLevel lv = snr.at(lts[static_cast<size_t>(w)]);
        const double mean = sum(w) / draws;
        const double var = sumsq(w) / draws - mean * mean;
        CHECK(mean == doctest::Approx(lv.alpha * x(0, w)).epsilon(0.02));
        CHECK(var == doctest::Approx(lv.sigma * lv.sigma).epsilon(0.02));
    }
}

TEST_CASE("posterior near-degenerate limits") {
    const SnrSchedule snr;
    Eigen::VectorXd z(2), x_hat(2);
    z << 1.0, -2.0;
    x_hat << 0.5, 0.5;

    // s -> t: mean -> z, var -> 0.
    auto [mean_a, var_a] = posterior_params(z, x_hat, 0.5, 0.5 - 1e-9, snr);
    CHECK((mean_a - z).norm() < 1e-6);
    CHECK(var_a < 1e-6);

    // t at max noise, s near the data end: mean -> x_hat (alpha_s ~ 1).
    auto [mean_b, var_b] = posterior_params(z, x_hat, 1.0, 0.0, snr);
    CHECK((mean_b - x_hat).norm() < 1e-4);
    CHECK(var_b < 1e-6);
}

TEST_CASE("posterior rejects invalid intervals") {
    const SnrSchedule snr;
    CHECK_THROWS_AS(posterior_coeffs(snr, 0.5, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(posterior_coeffs(snr, 0.4, 0.5), std::invalid_argument);
}

TEST_CASE("posterior composition reproduces the forward marginal") {
    // Compose q(z_s | z_t, x) over q(z_t | x): the result must equal
    // q(z_s | x) in mean and variance. Checked on a 20 x 20 (s, t) grid.
    const SnrSchedule snr;
    const double x = 1.7;
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 20; ++j) {
            const double s = 0.02 + 0.96 * i / 19.0;
            const double t = 0.02 + 0.96 * j / 19.0;
            if (s >= t) continue;
            const PosteriorCoeffs c = posterior_coeffs(snr, t, s);
            const NoiseLevel lt = snr.at(t);
            const NoiseLevel ls = snr.at(s);
            const double mean = c.coef_z * (lt.alpha * x) + c.coef_x * x;
            const double var = c.coef_z * c.coef_z * lt.sigma * lt.sigma + c.var;
            worst = std::max(worst, std::abs(mean - ls.alpha * x));
            worst = std::max(worst, std::abs(var - ls.sigma * ls.sigma));
        }
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("prediction conversions are mutually inverse") {
    const SnrSchedule snr;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const PredictionKind kinds[] = {PredictionKind::X, PredictionKind::Eps, PredictionKind::V};
    for (double t : {0.1, 0.4, 0.7, 0.95}) {
        const NoiseLevel lv = snr.at(t);
        Eigen::VectorXd value(4), z(4);
        for (int i = 0; i < 4; ++i) {
            value(i) = gauss(rng);
            z(i) = gauss(rng);
        }
        for (PredictionKind in : kinds) {
            for (PredictionKind out : kinds) {
                const Eigen::VectorXd there = convert_prediction(in, out, value, z, lv);
                const Eigen::VectorXd back = convert_prediction(out, in, there, z, lv);
                CHECK((back - value).lpNorm<Eigen::Infinity>() <= 1e-12);
            }
        }
    }
}

TEST_CASE("v-to-x recovers the data exactly on consistent inputs") {
    const SnrSchedule snr;
    const NoiseLevel lv = snr.at(0.6);
    Eigen::VectorXd x(3), eps(3);
    x << 0.3, -1.2, 2.0;
    eps << 1.1, 0.2, -0.7;
    const Eigen::VectorXd z = lv.alpha * x + lv.sigma * eps;
    const Eigen::VectorXd v = lv.alpha * eps - lv.sigma * x;
    const Eigen::VectorXd got = convert_prediction(PredictionKind::V, PredictionKind::X, v, z, lv);
    CHECK((got - x).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("eps conversion with sigma = 0 throws") {
    const NoiseLevel lv{1.0, 0.0, 100.0};
    Eigen::VectorXd v = Eigen::VectorXd::Ones(2), z = Eigen::VectorXd::Ones(2);
    CHECK_THROWS_AS(convert_prediction(PredictionKind::X, PredictionKind::Eps, v, z, lv),
                    NumericalError);
    CHECK_THROWS_AS(convert_prediction(PredictionKind::Eps, PredictionKind::X, v, z, lv),
                    NumericalError);
}

TEST_CASE("kl-exact weights vanish on clipped frames") {
    const SnrSchedule snr;
    const ScheduleSpec lin{ScheduleKind::Lin, 8, 2};
    for (double t : {0.0, 0.3, 0.7, 1.0}) {
        const std::vector<double> w = frame_weights(lin, LossWeighting::KlExact, t, snr);
        CHECK(w[0] == 0.0);
        CHECK(w[1] == 0.0);
    }
}

TEST_CASE("kl-exact weight matches finite-difference local-time slope") {
    const SnrSchedule snr;
    const ScheduleSpec lin{ScheduleKind::Lin, 8, 2};
    const double t = 0.37, h = 1e-6;
    const std::vector<double> weights = frame_weights(lin, LossWeighting::KlExact, t, snr);
    for (int w = 0; w < 8; ++w) {
        const double tw = local_time(lin, w, t);
        const double slope = (local_time(lin, w, t + h) - local_time(lin, w, t - h)) / (2.0 * h);
        const double expected = -snr.dlog_snr_dt(tw) * slope;
        CHECK(weights[static_cast<size_t>(w)] == doctest::Approx(expected).epsilon(1e-6));
    }
}

TEST_CASE("eps-mse weight is the SNR, x-mse weight is one") {
    const SnrSchedule snr;
    const ScheduleSpec lin{ScheduleKind::Lin, 4, 0};
    const double t = 0.42;
    const std::vector<double> we = frame_weights(lin, LossWeighting::EpsMse, t, snr);
    const std::vector<double> wx = frame_weights(lin, LossWeighting::XMse, t, snr);
    for (int w = 0; w < 4; ++w) {
        const double tw = local_time(lin, w, t);
        CHECK(we[static_cast<size_t>(w)] ==
              doctest::Approx(std::exp(snr.at(tw).log_snr)).epsilon(1e-12));
        CHECK(wx[static_cast<size_t>(w)] == 1.0);
    }
}

TEST_CASE("rolling loss is zero for a perfect model") {
    const SnrSchedule snr;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd x(2, 4), eps(2, 4);
    for (int i = 0; i < x.size(); ++i) {
        x(i) = gauss(rng);
        eps(i) = gauss(rng);
    }
    const DenoiserFn perfect = [&x](const Eigen::MatrixXd&, const std::vector<double>&) {
        return x;
    };
    const LossResult res = rolling_loss(perfect, x, 0.5, eps, {ScheduleKind::Lin, 4, 0},
                                        LossWeighting::XMse, snr);
    CHECK(res.total == 0.0);
    CHECK(res.per_frame.isZero());
}

TEST_CASE("uniform-weight rolling loss decomposes over frames") {
    const SnrSchedule snr;
    std::mt19937_64 rng(9);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd x(3, 4), eps(3, 4), fake(3, 4);
    for (int i = 0; i < x.size(); ++i) {
        x(i) = gauss(rng);
        eps(i) = gauss(rng);
        fake(i) = gauss(rng);
    }
    const DenoiserFn model = [&fake](const Eigen::MatrixXd&, const std::vector<double>&) {
        return fake;
    };
    const ScheduleSpec spec{ScheduleKind::Lin, 4, 0};
    const double t = 0.31;
    const LossResult res = rolling_loss(model, x, t, eps, spec, LossWeighting::XMse, snr);

    // Per-frame oracle: each frame is an independent single-frame diffusion
    // loss evaluated at its own local time.
    double total = 0.0;
    for (int w = 0; w < 4; ++w) {
        const double err = (x.col(w) - fake.col(w)).squaredNorm();
        CHECK(res.per_frame(w) == doctest::Approx(err).epsilon(1e-12));
        total += err;
    }
    CHECK(res.total == doctest::Approx(total).epsilon(1e-12));
}

TEST_CASE("degenerate single-frame window reduces to the standard loss") {
    // window = 1 is below ScheduleSpec's validated minimum of 2, but the
    // loss path itself accepts it; the local time is just t.
    const SnrSchedule snr;
    Eigen::MatrixXd x(2, 1), eps(2, 1), fake(2, 1);
    x << 1.0, -0.5;
    eps << 0.2, 0.4;
    fake << 0.9, -0.3;
    const DenoiserFn model = [&fake](const Eigen::MatrixXd&, const std::vector<double>&) {
        return fake;
    };
    const ScheduleSpec spec{ScheduleKind::Constant, 1, 0};
    const double t = 0.63;
    const LossResult res = rolling_loss(model, x, t, eps, spec, LossWeighting::EpsMse, snr);
    const double expected = std::exp(snr.at(t).log_snr) * (x - fake).squaredNorm();
    CHECK(res.total == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("schedule mixing: endpoints and the Bernoulli rate") {
    std::mt19937_64 rng(123);
    for (int i = 0; i < 100; ++i) {
        CHECK(choose_schedule(1.0, rng) == ScheduleKind::Lin);
        CHECK(choose_schedule(0.0, rng) == ScheduleKind::Init);
    }
    int lin = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        if (choose_schedule(0.1, rng) == ScheduleKind::Lin) ++lin;
    }
    const double frac = static_cast<double>(lin) / draws;
    CHECK(frac > 0.097);
    CHECK(frac < 0.103);
    CHECK_THROWS_AS(choose_schedule(1.5, rng), ConfigError);
}

TEST_CASE("loss weighting string round trip") {
    for (LossWeighting w : {LossWeighting::EpsMse, LossWeighting::XMse, LossWeighting::KlExact}) {
        CHECK(loss_weighting_from_string(to_string(w)) == w);
    }
    CHECK_THROWS_AS(loss_weighting_from_string("nope"), ConfigError);
}
