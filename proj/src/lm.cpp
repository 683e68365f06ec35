#include "llmceg/lm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "llmceg/errors.hpp"

namespace llmceg::lm {

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kInitStd = 0.02;

using Eigen::Index;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;
using RowVecMap = Eigen::Map<const Eigen::RowVectorXd>;
using MutRowVecMap = Eigen::Map<Eigen::RowVectorXd>;

// Offsets of each tensor, resolved once from the layout order produced by make_layout.
struct LayerOffsets {
    std::size_t ln1_g, ln1_b, w_qkv, b_qkv, w_o, b_o, ln2_g, ln2_b, w_fc, b_fc, w_proj, b_proj;
};

struct Offsets {
    std::size_t tok_emb = 0, pos_emb = 0;
    std::vector<LayerOffsets> layers;
    std::size_t lnf_g = 0, lnf_b = 0, head_w = 0, head_b = 0;
};

constexpr std::size_t kSlotsPerLayer = 12;

Offsets resolve_offsets(const std::vector<ParamSlot>& layout, int n_layers) {
    Offsets o;
    std::size_t i = 0;
    o.tok_emb = layout[i++].offset;
    o.pos_emb = layout[i++].offset;
    for (int l = 0; l < n_layers; ++l) {
        LayerOffsets lo{};
        std::size_t* fields[kSlotsPerLayer] = {&lo.ln1_g, &lo.ln1_b, &lo.w_qkv, &lo.b_qkv, &lo.w_o,    &lo.b_o,
                                               &lo.ln2_g, &lo.ln2_b, &lo.w_fc,  &lo.b_fc,  &lo.w_proj, &lo.b_proj};
        for (auto* f : fields) *f = layout[i++].offset;
        o.layers.push_back(lo);
    }
    o.lnf_g = layout[i++].offset;
    o.lnf_b = layout[i++].offset;
    o.head_w = layout[i++].offset;
    o.head_b = layout[i++].offset;
    return o;
}

struct LayerCache {
    RowMatrix x_in, xhat1, a1, qkv, att, h, xhat2, a2, fc_pre, fc_act;
    Eigen::VectorXd rstd1, rstd2;
    std::vector<RowMatrix> probs;  // one causal attention matrix per head
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    RowMatrix x_final, xhatf, af;
    Eigen::VectorXd rstdf;
};

void layernorm_forward(const RowMatrix& x, const double* gain, const double* bias, RowMatrix& xhat,
                       Eigen::VectorXd& rstd, RowMatrix& y) {
    const Index n = x.rows();
    const Index d = x.cols();
    const RowVecMap g(gain, d);
    const RowVecMap b(bias, d);
    xhat.resize(n, d);
    y.resize(n, d);
    rstd.resize(n);
    for (Index i = 0; i < n; ++i) {
        const double mu = x.row(i).mean();
        const Eigen::RowVectorXd centered = x.row(i).array() - mu;
        const double var = centered.squaredNorm() / static_cast<double>(d);
        const double rs = 1.0 / std::sqrt(var + kLayerNormEps);
        rstd(i) = rs;
        xhat.row(i) = centered * rs;
        y.row(i) = xhat.row(i).cwiseProduct(g) + b;
    }
}

void layernorm_backward(const RowMatrix& dy, const RowMatrix& xhat, const Eigen::VectorXd& rstd, const double* gain,
                        double* dgain, double* dbias, RowMatrix& dx) {
    const Index n = dy.rows();
    const Index d = dy.cols();
    const RowVecMap g(gain, d);
    MutRowVecMap dg(dgain, d);
    MutRowVecMap db(dbias, d);
    dg += Eigen::RowVectorXd(dy.cwiseProduct(xhat).colwise().sum());
    db += Eigen::RowVectorXd(dy.colwise().sum());
    dx.resize(n, d);
    for (Index i = 0; i < n; ++i) {
        const Eigen::RowVectorXd dxhat = dy.row(i).cwiseProduct(g);
        const double m1 = dxhat.mean();
        const double m2 = dxhat.cwiseProduct(xhat.row(i)).mean();
        dx.row(i) = rstd(i) * (dxhat.array() - m1 - xhat.row(i).array() * m2).matrix();
    }
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

RowMatrix gelu(const RowMatrix& x) {
    const auto xa = x.array();
    const auto t = (kGeluC * (xa + kGeluA * xa.cube())).tanh();
    return (0.5 * xa * (1.0 + t)).matrix();
}

RowMatrix gelu_grad(const RowMatrix& x) {
    const auto xa = x.array();
    const Eigen::ArrayXXd t = (kGeluC * (xa + kGeluA * xa.cube())).tanh();
    return (0.5 * (1.0 + t) + 0.5 * xa * (1.0 - t.square()) * kGeluC * (1.0 + 3.0 * kGeluA * xa.square())).matrix();
}

void check_sequence(const ModelConfig& cfg, std::span<const int> seq) {
    if (seq.size() < 2) throw ShapeError("sequence must contain at least 2 tokens");
    if (seq.size() > static_cast<std::size_t>(cfg.context_len))
        throw ShapeError("sequence longer than context_len");
    for (int t : seq)
        if (t < 0 || t >= Vocabulary::kSize) throw ShapeError("token id out of range");
}

RowMatrix forward(const ModelParams& params, std::span<const int> seq, ForwardCache& cache) {
    const ModelConfig& cfg = params.config();
    const Offsets off = resolve_offsets(params.layout(), cfg.n_layers);
    const double* base = params.values().data();
    const Index T = static_cast<Index>(seq.size());
    const Index d = cfg.d_model;
    const Index hd = cfg.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    const ConstMap tok(base + off.tok_emb, Vocabulary::kSize, d);
    const ConstMap pos(base + off.pos_emb, cfg.context_len, d);
    RowMatrix x(T, d);
    for (Index t = 0; t < T; ++t) x.row(t) = tok.row(seq[t]) + pos.row(t);

    cache.layers.assign(cfg.n_layers, LayerCache{});
    for (int l = 0; l < cfg.n_layers; ++l) {
        const LayerOffsets& lo = off.layers[l];
        LayerCache& c = cache.layers[l];
        c.x_in = x;
        layernorm_forward(x, base + lo.ln1_g, base + lo.ln1_b, c.xhat1, c.rstd1, c.a1);

        const RowMatrix w_qkv = ConstMap(base + lo.w_qkv, d, 3 * d);
        const RowVecMap b_qkv(base + lo.b_qkv, 3 * d);
        c.qkv = (c.a1 * w_qkv).rowwise() + b_qkv;

        c.att.resize(T, d);
        c.probs.resize(cfg.n_heads);
        for (int h = 0; h < cfg.n_heads; ++h) {
            const auto q = c.qkv.middleCols(h * hd, hd);
            const auto k = c.qkv.middleCols(d + h * hd, hd);
            const auto v = c.qkv.middleCols(2 * d + h * hd, hd);
            RowMatrix& p = c.probs[h];
            p = (q * k.transpose()) * scale;
            for (Index i = 0; i < T; ++i) {
                auto row = p.row(i);
                const double mx = row.head(i + 1).maxCoeff();
                row.head(i + 1) = (row.head(i + 1).array() - mx).exp().matrix();
                row.head(i + 1) /= row.head(i + 1).sum();
                row.tail(T - i - 1).setZero();
            }
            c.att.middleCols(h * hd, hd) = p * v;
        }
        const RowMatrix w_o = ConstMap(base + lo.w_o, d, d);
        const RowVecMap b_o(base + lo.b_o, d);
        c.h = x + ((c.att * w_o).rowwise() + b_o);

        layernorm_forward(c.h, base + lo.ln2_g, base + lo.ln2_b, c.xhat2, c.rstd2, c.a2);
        const RowMatrix w_fc = ConstMap(base + lo.w_fc, d, cfg.d_ff());
        const RowVecMap b_fc(base + lo.b_fc, cfg.d_ff());
        c.fc_pre = (c.a2 * w_fc).rowwise() + b_fc;
        c.fc_act = gelu(c.fc_pre);
        const RowMatrix w_proj = ConstMap(base + lo.w_proj, cfg.d_ff(), d);
        const RowVecMap b_proj(base + lo.b_proj, d);
        x = c.h + ((c.fc_act * w_proj).rowwise() + b_proj);
    }

    cache.x_final = x;
    layernorm_forward(x, base + off.lnf_g, base + off.lnf_b, cache.xhatf, cache.rstdf, cache.af);
    const RowMatrix head_w = ConstMap(base + off.head_w, d, Vocabulary::kSize);
    const RowVecMap head_b(base + off.head_b, Vocabulary::kSize);
    return (cache.af * head_w).rowwise() + head_b;
}

// dlogits -> parameter gradient (accumulated into grad, which must be zeroed by the caller).
void backward(const ModelParams& params, std::span<const int> seq, const ForwardCache& cache,
              const RowMatrix& dlogits, double* grad) {
    const ModelConfig& cfg = params.config();
    const Offsets off = resolve_offsets(params.layout(), cfg.n_layers);
    const double* base = params.values().data();
    const Index T = static_cast<Index>(seq.size());
    const Index d = cfg.d_model;
    const Index ff = cfg.d_ff();
    const Index hd = cfg.head_dim();
    const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    const RowMatrix head_w = ConstMap(base + off.head_w, d, Vocabulary::kSize);
    MutMap(grad + off.head_w, d, Vocabulary::kSize) += RowMatrix(cache.af.transpose() * dlogits);
    MutRowVecMap(grad + off.head_b, Vocabulary::kSize) += Eigen::RowVectorXd(dlogits.colwise().sum());
    const RowMatrix daf = dlogits * head_w.transpose();

    RowMatrix dx;
    layernorm_backward(daf, cache.xhatf, cache.rstdf, base + off.lnf_g, grad + off.lnf_g, grad + off.lnf_b, dx);

    for (int l = cfg.n_layers - 1; l >= 0; --l) {
        const LayerOffsets& lo = off.layers[l];
        const LayerCache& c = cache.layers[l];

        // MLP branch: x_out = h + gelu(a2 W_fc + b_fc) W_proj + b_proj
        const RowMatrix w_proj = ConstMap(base + lo.w_proj, ff, d);
        MutMap(grad + lo.w_proj, ff, d) += RowMatrix(c.fc_act.transpose() * dx);
        MutRowVecMap(grad + lo.b_proj, d) += Eigen::RowVectorXd(dx.colwise().sum());
        const RowMatrix dact = dx * w_proj.transpose();
        const RowMatrix dfc = dact.cwiseProduct(gelu_grad(c.fc_pre));
        const RowMatrix w_fc = ConstMap(base + lo.w_fc, d, ff);
        MutMap(grad + lo.w_fc, d, ff) += RowMatrix(c.a2.transpose() * dfc);
        MutRowVecMap(grad + lo.b_fc, ff) += Eigen::RowVectorXd(dfc.colwise().sum());
        const RowMatrix da2 = dfc * w_fc.transpose();
        RowMatrix dh;
        layernorm_backward(da2, c.xhat2, c.rstd2, base + lo.ln2_g, grad + lo.ln2_g, grad + lo.ln2_b, dh);
        dh += dx;

        // Attention branch: h = x_in + att W_o + b_o
        const RowMatrix w_o = ConstMap(base + lo.w_o, d, d);
        MutMap(grad + lo.w_o, d, d) += RowMatrix(c.att.transpose() * dh);
        MutRowVecMap(grad + lo.b_o, d) += Eigen::RowVectorXd(dh.colwise().sum());
        const RowMatrix datt = dh * w_o.transpose();

        RowMatrix dqkv(T, 3 * d);
        for (int h = 0; h < cfg.n_heads; ++h) {
            const auto q = c.qkv.middleCols(h * hd, hd);
            const auto k = c.qkv.middleCols(d + h * hd, hd);
            const auto v = c.qkv.middleCols(2 * d + h * hd, hd);
            const RowMatrix& p = c.probs[h];
            const auto dout = datt.middleCols(h * hd, hd);
            RowMatrix dp = dout * v.transpose();
            dqkv.middleCols(2 * d + h * hd, hd).noalias() = p.transpose() * dout;
            for (Index i = 0; i < T; ++i) {
                const double dot = dp.row(i).head(i + 1).dot(p.row(i).head(i + 1));
                dp.row(i).head(i + 1) = p.row(i).head(i + 1).cwiseProduct((dp.row(i).head(i + 1).array() - dot).matrix());
                dp.row(i).tail(T - i - 1).setZero();
            }
            dp *= scale;
            dqkv.middleCols(h * hd, hd).noalias() = dp * k;
            dqkv.middleCols(d + h * hd, hd).noalias() = dp.transpose() * q;
        }
        const RowMatrix w_qkv = ConstMap(base + lo.w_qkv, d, 3 * d);
        MutMap(grad + lo.w_qkv, d, 3 * d) += RowMatrix(c.a1.transpose() * dqkv);
        MutRowVecMap(grad + lo.b_qkv, 3 * d) += Eigen::RowVectorXd(dqkv.colwise().sum());
        const RowMatrix da1 = dqkv * w_qkv.transpose();
        RowMatrix dxin;
        layernorm_backward(da1, c.xhat1, c.rstd1, base + lo.ln1_g, grad + lo.ln1_g, grad + lo.ln1_b, dxin);
        dx = dxin + dh;
    }

    MutMap dtok(grad + off.tok_emb, Vocabulary::kSize, d);
    MutMap dpos(grad + off.pos_emb, cfg.context_len, d);
    for (Index t = 0; t < T; ++t) {
        dtok.row(seq[t]) += dx.row(t);
        dpos.row(t) += dx.row(t);
    }
}

}  // namespace

void ModelConfig::validate() const {
    if (d_model <= 0 || n_layers <= 0 || n_heads <= 0 || context_len <= 0)
        throw ParameterError("model dimensions must be positive");
    if (d_model % n_heads != 0) throw ParameterError("d_model must be divisible by n_heads");
    if (context_len < 2) throw ParameterError("context_len must be at least 2");
}

std::vector<ParamSlot> make_layout(const ModelConfig& cfg) {
    cfg.validate();
    const int d = cfg.d_model;
    const int ff = cfg.d_ff();
    const int V = Vocabulary::kSize;
    std::vector<ParamSlot> layout;
    std::size_t offset = 0;
    auto add = [&](std::string name, int rows, int cols) {
        layout.push_back(ParamSlot{std::move(name), offset, rows, cols});
        offset += layout.back().size();
    };
    add("tok_emb", V, d);
    add("pos_emb", cfg.context_len, d);
    for (int l = 0; l < cfg.n_layers; ++l) {
        const std::string p = "h" + std::to_string(l) + ".";
        add(p + "ln1.g", 1, d);
        add(p + "ln1.b", 1, d);
        add(p + "attn.w_qkv", d, 3 * d);
        add(p + "attn.b_qkv", 1, 3 * d);
        add(p + "attn.w_o", d, d);
        add(p + "attn.b_o", 1, d);
        add(p + "ln2.g", 1, d);
        add(p + "ln2.b", 1, d);
        add(p + "mlp.w_fc", d, ff);
        add(p + "mlp.b_fc", 1, ff);
        add(p + "mlp.w_proj", ff, d);
        add(p + "mlp.b_proj", 1, d);
    }
    add("lnf.g", 1, d);
    add("lnf.b", 1, d);
    add("head.w", d, V);
    add("head.b", 1, V);
    return layout;
}

ModelParams::ModelParams(ModelConfig cfg, std::vector<ParamSlot> layout, std::vector<double> values)
    : cfg_(cfg), layout_(std::move(layout)), values_(std::move(values)) {}

std::size_t ModelParams::count(const ModelConfig& cfg) {
    const auto layout = make_layout(cfg);
    return layout.back().offset + layout.back().size();
}

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
    auto layout = make_layout(cfg);
    const std::size_t n = layout.back().offset + layout.back().size();
    return ModelParams(cfg, std::move(layout), std::vector<double>(n, 0.0));
}

ModelParams ModelParams::from_values(const ModelConfig& cfg, std::vector<double> values) {
    auto layout = make_layout(cfg);
    if (values.size() != layout.back().offset + layout.back().size())
        throw ShapeError("parameter vector length does not match the model config");
    return ModelParams(cfg, std::move(layout), std::move(values));
}

ModelParams ModelParams::init(const ModelConfig& cfg) {
    ModelParams p = zeros(cfg);
    std::mt19937_64 rng(cfg.seed);
    const double proj_std = kInitStd / std::sqrt(2.0 * cfg.n_layers);
    for (const ParamSlot& s : p.layout_) {
        const bool is_gain = s.name.ends_with(".g");
        const bool is_bias = s.name.ends_with(".b") || s.name.find(".b_") != std::string::npos;
        if (is_gain) {
            std::fill_n(p.values_.begin() + static_cast<std::ptrdiff_t>(s.offset), s.size(), 1.0);
            continue;
        }
        if (is_bias) continue;
        const bool is_residual_proj = s.name.ends_with("attn.w_o") || s.name.ends_with("mlp.w_proj");
        std::normal_distribution<double> dist(0.0, is_residual_proj ? proj_std : kInitStd);
        for (std::size_t i = 0; i < s.size(); ++i) p.values_[s.offset + i] = dist(rng);
    }
    return p;
}

const ParamSlot& ModelParams::slot(std::string_view name) const {
    for (const ParamSlot& s : layout_)
        if (s.name == name) return s;
    throw ParameterError("unknown parameter tensor: " + std::string(name));
}

Eigen::Map<RowMatrix> ModelParams::tensor(std::string_view name) {
    const ParamSlot& s = slot(name);
    return {values_.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<const RowMatrix> ModelParams::tensor(std::string_view name) const {
    const ParamSlot& s = slot(name);
    return {values_.data() + s.offset, s.rows, s.cols};
}

bool ModelParams::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

TokenSeq encode(std::string_view text, int context_len) {
    if (text.empty()) throw PreconditionError("cannot encode empty text");
    if (context_len < 2) throw ParameterError("context_len must be at least 2");
    TokenSeq seq;
    seq.reserve(text.size() + 2);
    seq.push_back(Vocabulary::kBos);
    for (char ch : text) seq.push_back(static_cast<unsigned char>(ch));
    seq.push_back(Vocabulary::kEos);
    if (seq.size() > static_cast<std::size_t>(context_len)) seq.resize(context_len);
    return seq;
}

std::string decode(std::span<const int> tokens) {
    std::string out;
    for (int t : tokens)
        if (t >= 0 && t < 256) out.push_back(static_cast<char>(t));
    return out;
}

double token_nll(std::span<const double> logits, int target) {
    if (target < 0 || static_cast<std::size_t>(target) >= logits.size()) throw ShapeError("target out of range");
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - mx);
    return mx + std::log(sum) - logits[target];
}

RowMatrix logits(const ModelParams& params, std::span<const int> seq) {
    check_sequence(params.config(), seq);
    ForwardCache cache;
    return forward(params, seq, cache);
}

NllResult nll(const ModelParams& params, std::span<const int> seq) {
    const RowMatrix z = logits(params, seq);
    NllResult r;
    r.per_token.reserve(seq.size() - 1);
    double total = 0.0;
    for (std::size_t t = 0; t + 1 < seq.size(); ++t) {
        const double v = token_nll({z.row(static_cast<Index>(t)).data(), static_cast<std::size_t>(z.cols())}, seq[t + 1]);
        r.per_token.push_back(v);
        total += v;
    }
    r.mean = total / static_cast<double>(r.per_token.size());
    return r;
}

double loss_and_grad(const ModelParams& params, std::span<const int> seq, std::span<double> grad) {
    check_sequence(params.config(), seq);
    if (grad.size() != params.size()) throw ShapeError("gradient buffer does not match parameter count");
    ForwardCache cache;
    const RowMatrix z = forward(params, seq, cache);
    const Index T = z.rows();
    const Index n_pred = T - 1;
    RowMatrix dlogits = RowMatrix::Zero(T, z.cols());
    double total = 0.0;
    for (Index t = 0; t < n_pred; ++t) {
        const double mx = z.row(t).maxCoeff();
        const Eigen::RowVectorXd e = (z.row(t).array() - mx).exp().matrix();
        const double sum = e.sum();
        const int target = seq[static_cast<std::size_t>(t) + 1];
        total += mx + std::log(sum) - z(t, target);
        dlogits.row(t) = e / (sum * static_cast<double>(n_pred));
        dlogits(t, target) -= 1.0 / static_cast<double>(n_pred);
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    backward(params, seq, cache, dlogits, grad.data());
    return total / static_cast<double>(n_pred);
}

GradientSet per_sample_grads(const ModelParams& params, std::span<const TokenSeq> batch,
                             std::span<const std::size_t> batch_ids) {
    if (batch.empty()) throw PreconditionError("per_sample_grads needs a non-empty batch");
    if (!batch_ids.empty() && batch_ids.size() != batch.size())
        throw ShapeError("batch_ids length does not match batch");
    GradientSet gs;
    gs.per_sample.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        std::vector<double> g(params.size());
        gs.losses.push_back(loss_and_grad(params, batch[i], g));
        gs.per_sample.push_back(std::move(g));
        gs.batch_ids.push_back(batch_ids.empty() ? i : batch_ids[i]);
    }
    return gs;
}

CorpusPerplexity corpus_perplexity(const ModelParams& params, std::span<const std::string> corpus) {
    if (corpus.empty()) throw PreconditionError("perplexity needs a non-empty corpus");
    CorpusPerplexity out;
    double total = 0.0;
    for (const std::string& s : corpus) {
        const NllResult r = nll(params, encode(s, params.config().context_len));
        double sentence = 0.0;
        for (double v : r.per_token) sentence += v;
        total += sentence;
        out.tokens += r.per_token.size();
        out.per_sentence_ppl.push_back(std::exp(r.mean));
    }
    out.mean_nll = total / static_cast<double>(out.tokens);
    out.ppl = std::exp(out.mean_nll);
    return out;
}

double perplexity(const ModelParams& params, std::span<const std::string> corpus) {
    return corpus_perplexity(params, corpus).ppl;
}

}  // namespace llmceg::lm
