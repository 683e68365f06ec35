#pragma once

// DP-SGD: per-sample clipping, Gaussian noising of the clipped sum, the
// Laplace mechanism, AdamW/SGD steps and the training loop.
//
// The only way to obtain a PrivatizedGradient is privatize_batch(), and in DP
// mode the training loop feeds the optimizer exclusively through the
// PrivatizedGradient overload of optimizer_step(). Raw per-sample gradients
// never reach the parameters.

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "llmceg/accountant.hpp"
#include "llmceg/lm.hpp"
#include "llmceg/rng.hpp"

namespace llmceg::dpsgd {

struct ClipConfig {
    // +inf disables clipping (used to show DP with sigma = 0 reduces to plain training).
    static constexpr double kNoClip = std::numeric_limits<double>::infinity();

    double max_grad_norm = 1.0;

    void validate() const;
};

struct NoiseConfig {
    double sigma = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class Optimizer { sgd, adamw };

std::string to_string(Optimizer o);
Optimizer optimizer_from_string(const std::string& s);

struct TrainConfig {
    int epochs = 10;
    int batch_size = 8;
    double learning_rate = 1e-3;
    Optimizer optimizer = Optimizer::adamw;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    bool dp_enabled = false;
    ClipConfig clip{};
    NoiseConfig noise{};
    double delta = 1e-5;  // used only to report the realized guarantee
    std::uint64_t seed = 42;

    void validate() const;
};

struct TrainTrace {
    std::vector<double> epoch_losses;
    long steps = 0;
    double sigma = 0.0;
    double clip_norm = 0.0;
    double epsilon = std::numeric_limits<double>::infinity();  // +inf marks a non-private run
    double delta = 0.0;
    double q = 0.0;
    double optimal_order = 0.0;
    bool dp_enabled = false;
    std::uint64_t seed = 0;
    std::uint64_t noise_seed = 0;
    double wall_clock_seconds = 0.0;
};

// g / max(1, ||g|| / C).
std::vector<double> clip_gradient(std::span<const double> g, double max_norm);
void clip_gradient_inplace(std::span<double> g, double max_norm);

double l2_norm(std::span<const double> g);

class PrivatizedGradient {
public:
    std::span<const double> values() const { return values_; }
    std::size_t size() const { return values_.size(); }

private:
    explicit PrivatizedGradient(std::vector<double> v) : values_(std::move(v)) {}
    friend PrivatizedGradient privatize_batch(const lm::GradientSet&, double, double, Rng&);

    std::vector<double> values_;
};

// (1/|B|) * (sum_i clip(g_i, C) + N(0, sigma^2 C^2 I)).
PrivatizedGradient privatize_batch(const lm::GradientSet& grads, double max_norm, double sigma, Rng& rng);

// Plain batch mean, no clipping or noise (non-private mode).
std::vector<double> mean_gradient(const lm::GradientSet& grads);

struct LaplaceOutput {
    double value = 0.0;
    double scale = 0.0;
};

double laplace_scale(double sensitivity, double epsilon);
// value + Lap(0, sensitivity / epsilon).
LaplaceOutput laplace_mechanism(double value, double sensitivity, double epsilon, Rng& rng);

struct OptimizerState {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;
};

void optimizer_step(std::span<double> params, std::span<const double> grad, const TrainConfig& cfg,
                    OptimizerState& state);
void optimizer_step(std::span<double> params, const PrivatizedGradient& grad, const TrainConfig& cfg,
                    OptimizerState& state);

struct TrainHooks {
    // Called with every gradient handed to the optimizer; `privatized` tells which path produced it.
    std::function<void(std::span<const double> grad, bool privatized)> on_update;
    std::function<void(int epoch, double mean_loss)> on_epoch;
};

// Steps per epoch for n samples: ceil(n / batch_size).
long steps_per_epoch(std::size_t n, int batch_size);

std::pair<lm::ModelParams, TrainTrace> train(lm::ModelParams initial, std::span<const std::string> corpus,
                                             const TrainConfig& cfg, const TrainHooks& hooks = {});
std::pair<lm::ModelParams, TrainTrace> train(const lm::ModelConfig& model_cfg, std::span<const std::string> corpus,
                                             const TrainConfig& cfg, const TrainHooks& hooks = {});

}  // namespace llmceg::dpsgd
