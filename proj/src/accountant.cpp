#include "llmceg/accountant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "llmceg/errors.hpp"

namespace llmceg::accountant {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Series for fractional orders stops once both terms fall below exp(-30).
constexpr double kSeriesCutoff = -30.0;
constexpr long kMaxSeriesTerms = 2'000'000;

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(-std::abs(a - b)));
}

// log(exp(a) - exp(b)) for a >= b.
double log_sub(double a, double b) {
    if (b == kNegInf) return a;
    if (a <= b) return kNegInf;
    const double diff = a - b;
    if (diff > 700.0) return a;
    return std::log(std::expm1(diff)) + b;
}

double log_erfc(double x) {
    if (x < 20.0) return std::log(std::erfc(x));
    // Asymptotic expansion; erfc underflows well before it loses accuracy here.
    const double x2 = x * x;
    return -x2 - std::log(x) - 0.5 * std::log(std::numbers::pi) +
           std::log1p(-0.5 / x2 + 0.75 / (x2 * x2) - 1.875 / (x2 * x2 * x2));
}

double log_binom(double n, double k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double log_a_integer(double q, double sigma, long alpha) {
    double log_a = kNegInf;
    const double log_q = std::log(q);
    const double log_1mq = std::log1p(-q);
    for (long i = 0; i <= alpha; ++i) {
        const double di = static_cast<double>(i);
        const double term = log_binom(static_cast<double>(alpha), di) + di * log_q +
                            static_cast<double>(alpha - i) * log_1mq + (di * di - di) / (2.0 * sigma * sigma);
        log_a = log_add(log_a, term);
    }
    return log_a;
}

double log_a_fractional(double q, double sigma, double alpha) {
    double log_a0 = kNegInf;
    double log_a1 = kNegInf;
    const double z0 = sigma * sigma * std::log(1.0 / q - 1.0) + 0.5;
    const double log_q = std::log(q);
    const double log_1mq = std::log1p(-q);
    const double sqrt2_sigma = std::numbers::sqrt2 * sigma;
    // Generalized binomial coefficient, tracked as log-magnitude and sign.
    double log_coef = 0.0;
    bool positive = true;
    for (long i = 0; i < kMaxSeriesTerms; ++i) {
        const double di = static_cast<double>(i);
        const double j = alpha - di;
        const double log_t0 = log_coef + di * log_q + j * log_1mq;
        const double log_t1 = log_coef + j * log_q + di * log_1mq;
        const double log_e0 = std::log(0.5) + log_erfc((di - z0) / sqrt2_sigma);
        const double log_e1 = std::log(0.5) + log_erfc((z0 - j) / sqrt2_sigma);
        const double log_s0 = log_t0 + (di * di - di) / (2.0 * sigma * sigma) + log_e0;
        const double log_s1 = log_t1 + (j * j - j) / (2.0 * sigma * sigma) + log_e1;
        if (positive) {
            log_a0 = log_add(log_a0, log_s0);
            log_a1 = log_add(log_a1, log_s1);
        } else {
            log_a0 = log_sub(log_a0, log_s0);
            log_a1 = log_sub(log_a1, log_s1);
        }
        if (std::max(log_s0, log_s1) < kSeriesCutoff) break;
        const double ratio = (alpha - di) / (di + 1.0);
        if (ratio == 0.0) break;
        log_coef += std::log(std::abs(ratio));
        if (ratio < 0.0) positive = !positive;
    }
    return log_add(log_a0, log_a1);
}

}  // namespace

void SamplingConfig::validate() const {
    if (!(q >= 0.0 && q <= 1.0)) throw ParameterError("sampling rate q must lie in [0, 1]");
    if (steps < 1) throw ParameterError("step count must be at least 1");
}

void RdpCurve::validate() const {
    if (orders.size() != epsilons.size()) throw ShapeError("RDP curve orders and values differ in length");
    for (std::size_t i = 0; i < orders.size(); ++i) {
        if (!(orders[i] > 1.0)) throw ParameterError("Renyi orders must exceed 1");
        if (i > 0 && !(orders[i] > orders[i - 1])) throw ParameterError("Renyi orders must be strictly increasing");
        if (!(epsilons[i] >= 0.0)) throw ParameterError("RDP values must be non-negative");
    }
}

void PrivacySpec::validate() const {
    if (!(epsilon > 0.0)) throw ParameterError("epsilon must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("delta must lie in (0, 1)");
}

std::string to_string(Conversion c) { return c == Conversion::classic ? "classic" : "improved"; }

Conversion conversion_from_string(const std::string& s) {
    if (s == "classic") return Conversion::classic;
    if (s == "improved") return Conversion::improved;
    throw ParameterError("unknown RDP conversion: " + s);
}

std::vector<double> default_orders() {
    std::vector<double> orders;
    for (int k = 5; k <= 254; ++k) orders.push_back(0.25 * k);  // 1.25 .. 63.5
    for (int a = 64; a <= 512; ++a) orders.push_back(a);
    return orders;
}

double rdp_step(double q, double sigma, double alpha) {
    if (!(alpha > 1.0) || !std::isfinite(alpha)) throw ParameterError("Renyi order must be finite and > 1");
    if (!(q >= 0.0 && q <= 1.0)) throw ParameterError("sampling rate q must lie in [0, 1]");
    if (!(sigma >= 0.0)) throw ParameterError("noise multiplier must be non-negative");
    if (q == 0.0) return 0.0;
    if (sigma == 0.0) return kInf;
    if (q == 1.0) return alpha / (2.0 * sigma * sigma);
    const double log_a = (alpha == std::floor(alpha)) ? log_a_integer(q, sigma, static_cast<long>(alpha))
                                                      : log_a_fractional(q, sigma, alpha);
    return std::max(0.0, log_a / (alpha - 1.0));
}

RdpCurve rdp_curve(double q, double sigma, std::span<const double> orders) {
    RdpCurve c;
    c.orders.assign(orders.begin(), orders.end());
    c.epsilons.reserve(orders.size());
    for (double a : orders) c.epsilons.push_back(rdp_step(q, sigma, a));
    return c;
}

RdpCurve compose(const RdpCurve& per_step, long steps) {
    if (steps < 1) throw ParameterError("composition needs at least one step");
    RdpCurve out = per_step;
    for (double& e : out.epsilons) e *= static_cast<double>(steps);
    return out;
}

DpGuarantee rdp_to_dp(const RdpCurve& curve, double delta, Conversion conversion) {
    if (curve.orders.empty()) throw PreconditionError("RDP curve is empty");
    if (curve.orders.size() != curve.epsilons.size()) throw ShapeError("RDP curve orders and values differ in length");
    if (!(delta > 0.0 && delta <= 1.0)) throw ParameterError("delta must lie in (0, 1]");
    DpGuarantee best{kInf, curve.orders.front()};
    for (std::size_t i = 0; i < curve.orders.size(); ++i) {
        const double a = curve.orders[i];
        const double r = curve.epsilons[i];
        double eps = 0.0;
        if (conversion == Conversion::classic) {
            eps = r + std::log(1.0 / delta) / (a - 1.0);
        } else {
            eps = r + std::log1p(-1.0 / a) - (std::log(delta) + std::log(a)) / (a - 1.0);
        }
        if (eps < best.epsilon) best = {eps, a};
    }
    return best;
}

DpGuarantee epsilon_spent(double sigma, const SamplingConfig& sampling, double delta, Conversion conversion,
                          std::span<const double> orders) {
    sampling.validate();
    if (sigma == 0.0) return {kInf, 0.0};
    const std::vector<double> grid = orders.empty() ? default_orders() : std::vector<double>(orders.begin(), orders.end());
    return rdp_to_dp(compose(rdp_curve(sampling.q, sigma, grid), sampling.steps), delta, conversion);
}

Calibration calibrate_sigma(const PrivacySpec& target, const SamplingConfig& sampling, Conversion conversion) {
    target.validate();
    sampling.validate();
    auto spent = [&](double sigma) { return epsilon_spent(sigma, sampling, target.delta, conversion); };

    Calibration out;
    out.epsilon_target = target.epsilon;
    out.delta = target.delta;
    out.q = sampling.q;
    out.steps = sampling.steps;
    out.conversion = conversion;

    DpGuarantee hi_eps = spent(kSigmaMax);
    if (hi_eps.epsilon > target.epsilon)
        throw CalibrationError("epsilon " + std::to_string(target.epsilon) +
                               " is unreachable with noise multiplier <= " + std::to_string(kSigmaMax));
    double lo = kSigmaMin;
    double hi = kSigmaMax;
    DpGuarantee lo_eps = spent(lo);
    if (lo_eps.epsilon <= target.epsilon) {
        hi = lo;
        hi_eps = lo_eps;
    }
    // Invariant: spent(lo) > target >= spent(hi).
    while (hi > lo && hi / lo > 1.0 + kSigmaRelTol) {
        const double mid = std::sqrt(lo * hi);
        const DpGuarantee mid_eps = spent(mid);
        if (mid_eps.epsilon <= target.epsilon) {
            hi = mid;
            hi_eps = mid_eps;
        } else {
            lo = mid;
        }
    }
    out.sigma = hi;
    out.epsilon_achieved = hi_eps.epsilon;
    out.optimal_order = hi_eps.order;
    return out;
}

}  // namespace llmceg::accountant
