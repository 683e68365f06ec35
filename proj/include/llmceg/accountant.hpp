#pragma once

// Renyi-DP accountant for the Poisson-subsampled Gaussian mechanism and
// noise-multiplier calibration for a target (epsilon, delta).

#include <span>
#include <string>
#include <vector>

namespace llmceg::accountant {

struct SamplingConfig {
    double q = 0.0;  // expected fraction of records per step
    long steps = 1;

    void validate() const;
};

struct RdpCurve {
    std::vector<double> orders;    // strictly increasing, all > 1
    std::vector<double> epsilons;  // RDP value at each order, nats

    void validate() const;
};

struct PrivacySpec {
    double epsilon = 8.0;
    double delta = 1e-5;

    void validate() const;
};

// How an RDP curve is turned into (epsilon, delta).
//   classic:  eps_a + log(1/delta) / (a - 1)
//   improved: eps_a + log((a - 1) / a) - (log(delta) + log(a)) / (a - 1)
enum class Conversion { classic, improved };

std::string to_string(Conversion c);
Conversion conversion_from_string(const std::string& s);

// {1.25, 1.5, ..., 63.5} followed by the integers 64..512.
std::vector<double> default_orders();

// Per-step RDP of the subsampled Gaussian at order alpha. sigma == 0 yields +inf.
double rdp_step(double q, double sigma, double alpha);

RdpCurve rdp_curve(double q, double sigma, std::span<const double> orders);

// RDP composes additively: every entry is multiplied by steps.
RdpCurve compose(const RdpCurve& per_step, long steps);

struct DpGuarantee {
    double epsilon = 0.0;
    double order = 0.0;  // minimizing Renyi order
};

DpGuarantee rdp_to_dp(const RdpCurve& curve, double delta, Conversion conversion = Conversion::improved);

// Epsilon spent by T steps at noise multiplier sigma. sigma == 0 reports +inf.
DpGuarantee epsilon_spent(double sigma, const SamplingConfig& sampling, double delta,
                          Conversion conversion = Conversion::improved,
                          std::span<const double> orders = {});

struct Calibration {
    double sigma = 0.0;
    double epsilon_target = 0.0;
    double epsilon_achieved = 0.0;
    double delta = 0.0;
    double q = 0.0;
    long steps = 0;
    double optimal_order = 0.0;
    Conversion conversion = Conversion::improved;
};

inline constexpr double kSigmaMin = 1e-2;
inline constexpr double kSigmaMax = 1e3;
inline constexpr double kSigmaRelTol = 1e-3;

// Smallest sigma in [kSigmaMin, kSigmaMax] whose spent epsilon is <= the target,
// bisected to kSigmaRelTol. Throws CalibrationError when the target is unreachable.
Calibration calibrate_sigma(const PrivacySpec& target, const SamplingConfig& sampling,
                            Conversion conversion = Conversion::improved);

}  // namespace llmceg::accountant
