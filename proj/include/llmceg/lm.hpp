#pragma once

// Tiny byte-level causal transformer: tokenization, per-token NLL,
// per-sample gradients and corpus perplexity. All math is double precision.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace llmceg::lm {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using TokenSeq = std::vector<int>;

struct Vocabulary {
    static constexpr int kBos = 256;
    static constexpr int kEos = 257;
    static constexpr int kSize = 258;
};

struct ModelConfig {
    int d_model = 64;
    int n_layers = 2;
    int n_heads = 4;
    int context_len = 160;
    std::uint64_t seed = 42;

    int vocab_size() const { return Vocabulary::kSize; }
    int d_ff() const { return 4 * d_model; }
    int head_dim() const { return d_model / n_heads; }

    // Throws ParameterError when the architecture is inconsistent.
    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

// One named tensor inside the flat parameter vector.
struct ParamSlot {
    std::string name;
    std::size_t offset = 0;
    int rows = 0;
    int cols = 0;

    std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

class ModelParams {
public:
    ModelParams() = default;

    // Seeded GPT-2 style initialization; same config (including seed) gives identical values.
    static ModelParams init(const ModelConfig& cfg);
    // All-zero parameters with the config's layout (used for gradients and tests).
    static ModelParams zeros(const ModelConfig& cfg);
    // Wraps an existing flat vector; throws ShapeError when its length does not match the config.
    static ModelParams from_values(const ModelConfig& cfg, std::vector<double> values);
    // Parameter count implied by a config.
    static std::size_t count(const ModelConfig& cfg);

    const ModelConfig& config() const { return cfg_; }
    std::size_t size() const { return values_.size(); }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    std::vector<double>& raw() { return values_; }
    const std::vector<ParamSlot>& layout() const { return layout_; }
    const ParamSlot& slot(std::string_view name) const;

    // Views into one tensor (rows x cols, row major).
    Eigen::Map<RowMatrix> tensor(std::string_view name);
    Eigen::Map<const RowMatrix> tensor(std::string_view name) const;

    bool all_finite() const;

private:
    ModelParams(ModelConfig cfg, std::vector<ParamSlot> layout, std::vector<double> values);

    ModelConfig cfg_{};
    std::vector<ParamSlot> layout_;
    std::vector<double> values_;
};

// Slot layout for a config, in storage order.
std::vector<ParamSlot> make_layout(const ModelConfig& cfg);

// BOS + UTF-8 bytes + EOS, truncated to context_len tokens.
TokenSeq encode(std::string_view text, int context_len);
// Inverse of encode; BOS/EOS are dropped.
std::string decode(std::span<const int> tokens);

// -log softmax(logits)[target], computed stably.
double token_nll(std::span<const double> logits, int target);

// Logits for every position of seq (|seq| x vocab).
RowMatrix logits(const ModelParams& params, std::span<const int> seq);

struct NllResult {
    std::vector<double> per_token;  // entry t predicts seq[t + 1]
    double mean = 0.0;
};

NllResult nll(const ModelParams& params, std::span<const int> seq);

// Mean NLL of seq and its gradient w.r.t. every parameter, written (overwritten) into grad.
double loss_and_grad(const ModelParams& params, std::span<const int> seq, std::span<double> grad);

struct GradientSet {
    std::vector<std::vector<double>> per_sample;
    std::vector<std::size_t> batch_ids;
    std::vector<double> losses;  // mean NLL of each sample, same order

    std::size_t batch_size() const { return per_sample.size(); }
    std::size_t dim() const { return per_sample.empty() ? 0 : per_sample.front().size(); }
};

// Gradient of each sample's mean NLL, in batch order. batch_ids defaults to 0..n-1.
GradientSet per_sample_grads(const ModelParams& params, std::span<const TokenSeq> batch,
                             std::span<const std::size_t> batch_ids = {});

struct CorpusPerplexity {
    double ppl = 0.0;
    double mean_nll = 0.0;  // token weighted
    std::size_t tokens = 0;
    std::vector<double> per_sentence_ppl;
};

CorpusPerplexity corpus_perplexity(const ModelParams& params, std::span<const std::string> corpus);
double perplexity(const ModelParams& params, std::span<const std::string> corpus);

}  // namespace llmceg::lm
