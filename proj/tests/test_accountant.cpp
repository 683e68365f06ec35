#include <algorithm>
#include <chrono>
#include <cmath>

#include <gtest/gtest.h>

#include "llmceg/accountant.hpp"
#include "llmceg/errors.hpp"

using namespace llmceg;
using namespace llmceg::accountant;

namespace {

// Renyi divergence of the subsampled Gaussian mixture from N(0, sigma^2) by trapezoid quadrature in log space.
double rdp_by_quadrature(double q, double sigma, double alpha) {
    const double s2 = sigma * sigma;
    const double lo = -40.0 * sigma - 2.0;
    const double hi = 40.0 * sigma + 2.0 * alpha / s2 + 2.0;
    const double h = sigma / 400.0;
    const long n = static_cast<long>((hi - lo) / h);
    std::vector<double> logs(static_cast<std::size_t>(n + 1));
    double mx = -INFINITY;
    for (long i = 0; i <= n; ++i) {
        const double z = lo + static_cast<double>(i) * h;
        const double log_mu0 = -z * z / (2 * s2) - std::log(sigma * std::sqrt(2 * M_PI));
        const double t = (2 * z - 1) / (2 * s2);
        // log((1 - q) + q e^t)
        const double log_ratio = t > 0 ? t + std::log1p((1 - q) * std::exp(-t) / q) + std::log(q)
                                       : std::log1p(q * std::expm1(t));
        logs[static_cast<std::size_t>(i)] = log_mu0 + alpha * log_ratio;
        mx = std::max(mx, logs[static_cast<std::size_t>(i)]);
    }
    double acc = 0.0;
    for (long i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        acc += w * std::exp(logs[static_cast<std::size_t>(i)] - mx);
    }
    return (mx + std::log(acc * h)) / (alpha - 1);
}

const SamplingConfig kDefaultSampling{8.0 / 300.0, 380};

}  // namespace

TEST(RdpStep, ZeroSamplingIsFree) {
    for (double a : {1.5, 2.0, 32.0})
        for (double s : {0.5, 2.0}) EXPECT_EQ(rdp_step(0.0, s, a), 0.0);
}

TEST(RdpStep, FullBatchGaussianClosedForm) {
    EXPECT_NEAR(rdp_step(1.0, 2.0, 4.0), 0.5, 1e-12);
    EXPECT_NEAR(rdp_by_quadrature(1.0, 2.0, 4.0), 0.5, 1e-8);
}

TEST(RdpStep, MatchesQuadrature) {
    for (double q : {0.01, 8.0 / 300.0, 0.2})
        for (double sigma : {0.7, 1.4, 4.0})
            for (double alpha : {1.25, 1.5, 2.0, 3.0, 4.5, 8.0, 12.75}) {
                const double got = rdp_step(q, sigma, alpha);
                const double want = rdp_by_quadrature(q, sigma, alpha);
                EXPECT_NEAR(got, want, 1e-6 * want + 1e-12) << "q=" << q << " sigma=" << sigma << " alpha=" << alpha;
            }
}

TEST(RdpStep, DecreasesInSigma) {
    for (double a : {1.5, 2.0, 10.0}) EXPECT_LT(rdp_step(0.05, 4.0, a), rdp_step(0.05, 1.0, a));
}

TEST(RdpStep, ZeroSigmaIsInfinite) { EXPECT_TRUE(std::isinf(rdp_step(0.1, 0.0, 2.0))); }

TEST(RdpStep, OrderAtMostOneRejected) { EXPECT_THROW(rdp_step(0.1, 1.0, 1.0), ParameterError); }

TEST(Compose, Linear) {
    const std::vector<double> orders{2.0, 4.0, 8.0};
    const RdpCurve c = rdp_curve(0.05, 1.1, orders);
    const RdpCurve one = compose(c, 1);
    EXPECT_EQ(one.epsilons, c.epsilons);
    const RdpCurve many = compose(c, 380);
    for (std::size_t i = 0; i < orders.size(); ++i) EXPECT_DOUBLE_EQ(many.epsilons[i], 380 * c.epsilons[i]);
    const RdpCurve ab = compose(compose(c, 19), 20);
    for (std::size_t i = 0; i < orders.size(); ++i) EXPECT_NEAR(ab.epsilons[i], many.epsilons[i], 1e-12 * many.epsilons[i]);
}

TEST(Convert, ClassicSingleOrder) {
    const RdpCurve c{{2.0}, {1.0}};
    EXPECT_NEAR(rdp_to_dp(c, 1e-5, Conversion::classic).epsilon, 1.0 + std::log(1e5), 1e-12);
    EXPECT_NEAR(rdp_to_dp(c, 1e-5, Conversion::classic).epsilon, 12.5129, 1e-4);
}

TEST(Convert, ImprovedSingleOrder) {
    const RdpCurve c{{2.0}, {1.0}};
    const double want = 1.0 + std::log1p(-0.5) - (std::log(1e-5) + std::log(2.0));
    EXPECT_NEAR(rdp_to_dp(c, 1e-5, Conversion::improved).epsilon, want, 1e-12);
    EXPECT_LT(rdp_to_dp(c, 1e-5, Conversion::improved).epsilon, rdp_to_dp(c, 1e-5, Conversion::classic).epsilon);
}

TEST(Convert, UnitDeltaGivesMinimum) {
    const RdpCurve c{{2.0, 4.0, 8.0}, {3.0, 0.7, 1.9}};
    const auto g = rdp_to_dp(c, 1.0, Conversion::classic);
    EXPECT_DOUBLE_EQ(g.epsilon, 0.7);
    EXPECT_EQ(g.order, 4.0);
}

TEST(Convert, ExtraOrderNeverHurts) {
    const RdpCurve base{{2.0, 8.0}, {0.5, 2.0}};
    const RdpCurve more{{2.0, 8.0, 32.0}, {0.5, 2.0, 40.0}};
    for (auto conv : {Conversion::classic, Conversion::improved})
        EXPECT_LE(rdp_to_dp(more, 1e-5, conv).epsilon, rdp_to_dp(base, 1e-5, conv).epsilon);
}

TEST(Convert, BadDeltaRejected) {
    const RdpCurve c{{2.0}, {1.0}};
    EXPECT_THROW(rdp_to_dp(c, 0.0), ParameterError);
    EXPECT_THROW(rdp_to_dp(c, 1.5), ParameterError);
}

TEST(Calibrate, ReferenceNoiseMultipliers) {
    const auto t0 = std::chrono::steady_clock::now();
    const struct {
        double eps, sigma;
    } rows[] = {{8.0, 0.6927}, {2.0, 1.3232}, {0.5, 3.9062}};
    for (const auto& r : rows) {
        const auto c = calibrate_sigma({r.eps, 1e-5}, kDefaultSampling);
        EXPECT_NEAR(c.sigma, r.sigma, 0.10 * r.sigma) << "epsilon " << r.eps;
        EXPECT_LE(c.epsilon_achieved, r.eps);
        EXPECT_GT(c.epsilon_achieved, 0.99 * r.eps);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_LT(secs, 5.0);
}

TEST(Calibrate, ClassicConversionNeedsMoreNoise) {
    const auto improved = calibrate_sigma({2.0, 1e-5}, kDefaultSampling, Conversion::improved);
    const auto classic = calibrate_sigma({2.0, 1e-5}, kDefaultSampling, Conversion::classic);
    EXPECT_GT(classic.sigma, improved.sigma);
    EXPECT_EQ(classic.conversion, Conversion::classic);
}

TEST(Calibrate, RoundTrip) {
    for (double eps : {0.3, 1.0, 4.0, 16.0}) {
        const auto c = calibrate_sigma({eps, 1e-5}, kDefaultSampling);
        const auto spent = epsilon_spent(c.sigma, kDefaultSampling, 1e-5);
        EXPECT_NEAR(spent.epsilon, eps, 0.01 * eps);
        EXPECT_NEAR(spent.epsilon, c.epsilon_achieved, 1e-12);
    }
}

TEST(Calibrate, StrongerPrivacyNeedsMoreNoise) {
    EXPECT_GT(calibrate_sigma({2.0, 1e-5}, kDefaultSampling).sigma, calibrate_sigma({8.0, 1e-5}, kDefaultSampling).sigma);
}

TEST(Calibrate, UnreachableTargetRejected) {
    EXPECT_THROW(calibrate_sigma({1e-6, 1e-5}, {1.0, 1'000'000}), CalibrationError);
}

TEST(EpsilonSpent, MonotoneGrid) {
    const double sigmas[] = {0.6, 0.9, 1.4, 2.5, 5.0};
    const double qs[] = {0.005, 0.027, 0.1, 0.5};
    const long steps[] = {10, 100, 380, 2000};
    const double deltas[] = {1e-7, 1e-5, 1e-3};
    for (double q : qs)
        for (long t : steps)
            for (double d : deltas) {
                double prev = INFINITY;
                for (double s : sigmas) {
                    const double e = epsilon_spent(s, {q, t}, d).epsilon;
                    EXPECT_LT(e, prev) << "sigma " << s;
                    prev = e;
                }
            }
    for (double s : sigmas) {
        for (std::size_t i = 1; i < std::size(qs); ++i)
            EXPECT_GT(epsilon_spent(s, {qs[i], 380}, 1e-5).epsilon, epsilon_spent(s, {qs[i - 1], 380}, 1e-5).epsilon);
        for (std::size_t i = 1; i < std::size(steps); ++i)
            EXPECT_GT(epsilon_spent(s, {0.027, steps[i]}, 1e-5).epsilon,
                      epsilon_spent(s, {0.027, steps[i - 1]}, 1e-5).epsilon);
        for (std::size_t i = 1; i < std::size(deltas); ++i)
            EXPECT_LT(epsilon_spent(s, {0.027, 380}, deltas[i]).epsilon,
                      epsilon_spent(s, {0.027, 380}, deltas[i - 1]).epsilon);
    }
}

TEST(EpsilonSpent, DefaultGridCloseToDenseGrid) {
    std::vector<double> dense = default_orders();
    for (double a = 1.05; a < 600.0; a += (a < 20 ? 0.05 : 0.5)) dense.push_back(a);
    std::sort(dense.begin(), dense.end());
    for (double s : {0.6, 0.73, 1.4, 4.1, 10.0}) {
        const double coarse = epsilon_spent(s, kDefaultSampling, 1e-5).epsilon;
        const double fine = epsilon_spent(s, kDefaultSampling, 1e-5, Conversion::improved, dense).epsilon;
        EXPECT_LE(fine, coarse + 1e-12);
        EXPECT_LT((coarse - fine) / fine, 0.02) << "sigma " << s;
    }
}

TEST(EpsilonSpent, ZeroSigmaIsNonPrivate) { EXPECT_TRUE(std::isinf(epsilon_spent(0.0, kDefaultSampling, 1e-5).epsilon)); }

TEST(DefaultOrders, Shape) {
    const auto o = default_orders();
    EXPECT_EQ(o.front(), 1.25);
    EXPECT_EQ(o.back(), 512.0);
    for (std::size_t i = 1; i < o.size(); ++i) EXPECT_GT(o[i], o[i - 1]);
}
