#include "llmceg/dpsgd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "llmceg/errors.hpp"

namespace llmceg::dpsgd {

void ClipConfig::validate() const {
    if (!(max_grad_norm > 0.0)) throw ParameterError("max_grad_norm must be positive");
}

void NoiseConfig::validate() const {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ParameterError("noise multiplier must be finite and >= 0");
}

std::string to_string(Optimizer o) { return o == Optimizer::sgd ? "sgd" : "adamw"; }

Optimizer optimizer_from_string(const std::string& s) {
    if (s == "sgd") return Optimizer::sgd;
    if (s == "adamw") return Optimizer::adamw;
    throw ParameterError("unknown optimizer: " + s);
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ParameterError("epochs must be at least 1");
    if (batch_size < 1) throw ParameterError("batch_size must be at least 1");
    if (!(learning_rate > 0.0)) throw ParameterError("learning_rate must be positive");
    if (weight_decay < 0.0) throw ParameterError("weight_decay must be non-negative");
    clip.validate();
    noise.validate();
    if (dp_enabled && noise.sigma > 0.0 && !std::isfinite(clip.max_grad_norm))
        throw ParameterError("noise requires a finite clipping norm");
}

double l2_norm(std::span<const double> g) {
    double s = 0.0;
    for (double x : g) s += x * x;
    return std::sqrt(s);
}

void clip_gradient_inplace(std::span<double> g, double max_norm) {
    if (!(max_norm > 0.0)) throw ParameterError("clipping norm must be positive");
    const double divisor = std::max(1.0, l2_norm(g) / max_norm);
    if (divisor == 1.0) return;
    for (double& x : g) x /= divisor;
}

std::vector<double> clip_gradient(std::span<const double> g, double max_norm) {
    std::vector<double> out(g.begin(), g.end());
    clip_gradient_inplace(out, max_norm);
    return out;
}

namespace {

void check_batch(const lm::GradientSet& grads) {
    if (grads.per_sample.empty()) throw PreconditionError("gradient set is empty");
    const std::size_t dim = grads.per_sample.front().size();
    for (const auto& g : grads.per_sample)
        if (g.size() != dim) throw ShapeError("per-sample gradients differ in length");
}

}  // namespace

PrivatizedGradient privatize_batch(const lm::GradientSet& grads, double max_norm, double sigma, Rng& rng) {
    check_batch(grads);
    if (!(max_norm > 0.0)) throw ParameterError("clipping norm must be positive");
    if (!(sigma >= 0.0)) throw ParameterError("noise multiplier must be non-negative");
    if (sigma > 0.0 && !std::isfinite(max_norm)) throw ParameterError("noise requires a finite clipping norm");

    const std::size_t dim = grads.dim();
    std::vector<double> sum(dim, 0.0);
    std::vector<double> clipped(dim);
    for (const auto& g : grads.per_sample) {
        std::copy(g.begin(), g.end(), clipped.begin());
        clip_gradient_inplace(clipped, max_norm);
        for (std::size_t j = 0; j < dim; ++j) sum[j] += clipped[j];
    }
    if (sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, sigma * max_norm);
        for (double& x : sum) x += noise(rng);
    }
    const double inv_b = 1.0 / static_cast<double>(grads.batch_size());
    for (double& x : sum) x *= inv_b;
    return PrivatizedGradient(std::move(sum));
}

std::vector<double> mean_gradient(const lm::GradientSet& grads) {
    check_batch(grads);
    const std::size_t dim = grads.dim();
    std::vector<double> sum(dim, 0.0);
    for (const auto& g : grads.per_sample)
        for (std::size_t j = 0; j < dim; ++j) sum[j] += g[j];
    const double inv_b = 1.0 / static_cast<double>(grads.batch_size());
    for (double& x : sum) x *= inv_b;
    return sum;
}

double laplace_scale(double sensitivity, double epsilon) {
    if (!(sensitivity > 0.0)) throw ParameterError("sensitivity must be positive");
    if (!(epsilon > 0.0)) throw ParameterError("epsilon must be positive");
    return sensitivity / epsilon;
}

LaplaceOutput laplace_mechanism(double value, double sensitivity, double epsilon, Rng& rng) {
    const double b = laplace_scale(sensitivity, epsilon);
    // Difference of two unit exponentials is Laplace(0, 1).
    std::exponential_distribution<double> exp1(1.0);
    const double e1 = exp1(rng);
    const double e2 = exp1(rng);
    return {value + b * (e1 - e2), b};
}

void optimizer_step(std::span<double> params, std::span<const double> grad, const TrainConfig& cfg,
                    OptimizerState& state) {
    if (params.size() != grad.size()) throw ShapeError("gradient and parameter vectors differ in length");
    const double lr = cfg.learning_rate;
    if (cfg.optimizer == Optimizer::sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
        ++state.step;
        return;
    }
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size() || state.v.size() != params.size())
        throw ShapeError("optimizer state does not match parameter count");
    ++state.step;
    const double b1 = cfg.beta1;
    const double b2 = cfg.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    const double decay = 1.0 - lr * cfg.weight_decay;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] *= decay;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
}

void optimizer_step(std::span<double> params, const PrivatizedGradient& grad, const TrainConfig& cfg,
                    OptimizerState& state) {
    optimizer_step(params, grad.values(), cfg, state);
}

long steps_per_epoch(std::size_t n, int batch_size) {
    if (batch_size < 1) throw ParameterError("batch_size must be at least 1");
    const auto b = static_cast<std::size_t>(batch_size);
    return static_cast<long>((n + b - 1) / b);
}

std::pair<lm::ModelParams, TrainTrace> train(lm::ModelParams params, std::span<const std::string> corpus,
                                             const TrainConfig& cfg, const TrainHooks& hooks) {
    if (corpus.empty()) throw PreconditionError("training corpus is empty");
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();

    std::vector<lm::TokenSeq> seqs;
    seqs.reserve(corpus.size());
    for (const std::string& s : corpus) seqs.push_back(lm::encode(s, params.config().context_len));

    TrainTrace trace;
    trace.dp_enabled = cfg.dp_enabled;
    trace.seed = cfg.seed;
    trace.noise_seed = cfg.noise.seed;
    trace.delta = cfg.delta;
    trace.q = std::min(1.0, static_cast<double>(cfg.batch_size) / static_cast<double>(corpus.size()));
    trace.steps = static_cast<long>(cfg.epochs) * steps_per_epoch(corpus.size(), cfg.batch_size);
    if (cfg.dp_enabled) {
        trace.sigma = cfg.noise.sigma;
        trace.clip_norm = cfg.clip.max_grad_norm;
        const auto spent = accountant::epsilon_spent(cfg.noise.sigma, {trace.q, trace.steps}, cfg.delta);
        trace.epsilon = spent.epsilon;
        trace.optimal_order = spent.order;
    }

    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
    Rng noise_rng(derive_seed(cfg.noise.seed, "noise"));
    OptimizerState state;
    std::vector<std::size_t> order(seqs.size());
    const auto b = static_cast<std::size_t>(cfg.batch_size);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += b) {
            const std::size_t end = std::min(order.size(), begin + b);
            std::vector<lm::TokenSeq> batch;
            std::vector<std::size_t> ids;
            for (std::size_t k = begin; k < end; ++k) {
                batch.push_back(seqs[order[k]]);
                ids.push_back(order[k]);
            }
            const lm::GradientSet grads = lm::per_sample_grads(params, batch, ids);
            for (double l : grads.losses) loss_sum += l;

            if (cfg.dp_enabled) {
                const PrivatizedGradient g = privatize_batch(grads, cfg.clip.max_grad_norm, cfg.noise.sigma, noise_rng);
                if (hooks.on_update) hooks.on_update(g.values(), true);
                optimizer_step(params.values(), g, cfg, state);
            } else {
                const std::vector<double> g = mean_gradient(grads);
                if (hooks.on_update) hooks.on_update(g, false);
                optimizer_step(params.values(), g, cfg, state);
            }
        }
        const double mean_loss = loss_sum / static_cast<double>(order.size());
        trace.epoch_losses.push_back(mean_loss);
        if (hooks.on_epoch) hooks.on_epoch(epoch + 1, mean_loss);
    }
    trace.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(params), std::move(trace)};
}

std::pair<lm::ModelParams, TrainTrace> train(const lm::ModelConfig& model_cfg, std::span<const std::string> corpus,
                                             const TrainConfig& cfg, const TrainHooks& hooks) {
    return train(lm::ModelParams::init(model_cfg), corpus, cfg, hooks);
}

}  // namespace llmceg::dpsgd
