#include "mmlatent/text_model.hpp"

#include <cmath>
#include <iostream>

#include "mmlatent/errors.hpp"

namespace mmlatent {

namespace {

constexpr double kMaskNegative = -1e30;

LayerNormParams make_ln(ParamRegistry& reg, const std::string& name, const std::string& group,
                        int d) {
    LayerNormParams p;
    p.gamma = reg.full(name + ".gamma", group, {d}, 1.0);
    p.beta = reg.zeros(name + ".beta", group, {d});
    return p;
}

AttentionParams make_attn(ParamRegistry& reg, const std::string& name, const std::string& group,
                          int d, Prng& rng) {
    const double std = 1.0 / std::sqrt(static_cast<double>(d));
    AttentionParams p;
    p.wq = reg.normal(name + ".wq", group, {d, d}, std, rng);
    p.bq = reg.zeros(name + ".bq", group, {d});
    p.wk = reg.normal(name + ".wk", group, {d, d}, std, rng);
    p.bk = reg.zeros(name + ".bk", group, {d});
    p.wv = reg.normal(name + ".wv", group, {d, d}, std, rng);
    p.bv = reg.zeros(name + ".bv", group, {d});
    p.wo = reg.normal(name + ".wo", group, {d, d}, std, rng);
    p.bo = reg.zeros(name + ".bo", group, {d});
    return p;
}

FfnParams make_ffn(ParamRegistry& reg, const std::string& name, const std::string& group, int d,
                   int d_ffn, Prng& rng) {
    FfnParams p;
    p.w1 = reg.normal(name + ".w1", group, {d, d_ffn}, 1.0 / std::sqrt(static_cast<double>(d)),
                      rng);
    p.b1 = reg.zeros(name + ".b1", group, {d_ffn});
    p.w2 = reg.normal(name + ".w2", group, {d_ffn, d},
                      1.0 / std::sqrt(static_cast<double>(d_ffn)), rng);
    p.b2 = reg.zeros(name + ".b2", group, {d});
    return p;
}

TensorPtr apply_ffn(const FfnParams& p, const TensorPtr& x) {
    return add_rowvec(matmul(gelu(add_rowvec(matmul(x, p.w1), p.b1)), p.w2), p.b2);
}

TensorPtr apply_ln(const LayerNormParams& p, const TensorPtr& x) {
    return layer_norm(x, p.gamma, p.beta);
}

}  // namespace

TensorPtr sinusoidal_positions(int n, int d_model) {
    std::vector<double> pe(static_cast<std::size_t>(n) * static_cast<std::size_t>(d_model));
    for (int pos = 0; pos < n; ++pos) {
        for (int i = 0; i < d_model; i += 2) {
            const double rate = std::exp(-std::log(10000.0) * static_cast<double>(i) /
                                         static_cast<double>(d_model));
            const double angle = static_cast<double>(pos) * rate;
            pe[static_cast<std::size_t>(pos * d_model + i)] = std::sin(angle);
            if (i + 1 < d_model)
                pe[static_cast<std::size_t>(pos * d_model + i + 1)] = std::cos(angle);
        }
    }
    return tensor_from({n, d_model}, std::move(pe), false);
}

TensorPtr causal_mask(int n) {
    std::vector<double> m(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) m[static_cast<std::size_t>(i * n + j)] = kMaskNegative;
    return tensor_from({n, n}, std::move(m), false);
}

TensorPtr scaled_dot_attention(const TensorPtr& q, const TensorPtr& k, const TensorPtr& v,
                               double scale, const TensorPtr& additive_mask) {
    auto scores = mmlatent::scale(matmul(q, transpose(k)), scale);
    if (additive_mask) scores = add(scores, additive_mask);
    return matmul(softmax(scores, -1), v);
}

TensorPtr multi_head_attention(const AttentionParams& p, int n_heads, const TensorPtr& q_in,
                               const TensorPtr& kv_in, const TensorPtr& mask) {
    const std::int64_t d = p.wq->shape[0];
    if (d % n_heads != 0)
        throw ConfigError("d_model " + std::to_string(d) + " not divisible by " +
                          std::to_string(n_heads) + " heads");
    const std::int64_t dh = d / n_heads;
    auto q = add_rowvec(matmul(q_in, p.wq), p.bq);
    auto k = add_rowvec(matmul(kv_in, p.wk), p.bk);
    auto v = add_rowvec(matmul(kv_in, p.wv), p.bv);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<TensorPtr> heads;
    heads.reserve(static_cast<std::size_t>(n_heads));
    for (int h = 0; h < n_heads; ++h) {
        auto qh = slice_cols(q, h * dh, dh);
        auto kh = slice_cols(k, h * dh, dh);
        auto vh = slice_cols(v, h * dh, dh);
        heads.push_back(scaled_dot_attention(qh, kh, vh, scale, mask));
    }
    return add_rowvec(matmul(concat_cols(heads), p.wo), p.bo);
}

TextEncoder::TextEncoder(const TextModelConfig& cfg, ParamRegistry& reg,
                         const std::string& prefix, Prng& rng)
    : cfg_(cfg) {
    if (cfg.vocab_size <= 0) throw ConfigError("TextEncoder: vocab_size must be set");
    const std::string g = "text_encoder";
    embed_ = reg.normal(prefix + ".embed", g, {cfg.vocab_size, cfg.d_model}, 0.02, rng);
    layers_.resize(static_cast<std::size_t>(cfg.n_enc_layers));
    for (int l = 0; l < cfg.n_enc_layers; ++l) {
        const std::string base = prefix + ".layer" + std::to_string(l);
        auto& layer = layers_[static_cast<std::size_t>(l)];
        layer.ln1 = make_ln(reg, base + ".ln1", g, cfg.d_model);
        layer.attn = make_attn(reg, base + ".attn", g, cfg.d_model, rng);
        layer.ln2 = make_ln(reg, base + ".ln2", g, cfg.d_model);
        layer.ffn = make_ffn(reg, base + ".ffn", g, cfg.d_model, cfg.d_ffn, rng);
    }
    ln_final_ = make_ln(reg, prefix + ".ln_final", g, cfg.d_model);
}

TextEncoding TextEncoder::encode(const std::vector<int>& ids) const {
    if (ids.empty()) throw ContractError("encode: empty id sequence");
    std::vector<int> kept = ids;
    if (static_cast<int>(kept.size()) > cfg_.max_input_len) {
        // Drop the oldest content tokens; templates put context first, so
        // question/options survive.
        std::cerr << "[mmlatent] warning: input of " << kept.size()
                  << " tokens truncated to " << cfg_.max_input_len << "\n";
        const std::size_t keep = static_cast<std::size_t>(cfg_.max_input_len) - 1;
        std::vector<int> t;
        t.push_back(kept.front());
        t.insert(t.end(), kept.end() - static_cast<std::ptrdiff_t>(keep), kept.end());
        kept = std::move(t);
    }
    const int n = static_cast<int>(kept.size());
    auto x = add(embedding(embed_, kept), sinusoidal_positions(n, cfg_.d_model));
    for (const auto& layer : layers_) {
        auto h = apply_ln(layer.ln1, x);
        x = add(x, multi_head_attention(layer.attn, cfg_.n_heads, h, h));
        x = add(x, apply_ffn(layer.ffn, apply_ln(layer.ln2, x)));
    }
    TextEncoding out;
    out.z = apply_ln(ln_final_, x);
    out.ids = std::move(kept);
    out.mask.assign(static_cast<std::size_t>(n), 1);
    return out;
}

TextDecoder::TextDecoder(const TextModelConfig& cfg, ParamRegistry& reg,
                         const std::string& prefix, Prng& rng)
    : cfg_(cfg) {
    if (cfg.vocab_size <= 0) throw ConfigError("TextDecoder: vocab_size must be set");
    const std::string g = "text_decoder";
    embed_ = reg.normal(prefix + ".embed", g, {cfg.vocab_size, cfg.d_model}, 0.02, rng);
    layers_.resize(static_cast<std::size_t>(cfg.n_dec_layers));
    for (int l = 0; l < cfg.n_dec_layers; ++l) {
        const std::string base = prefix + ".layer" + std::to_string(l);
        auto& layer = layers_[static_cast<std::size_t>(l)];
        layer.ln1 = make_ln(reg, base + ".ln1", g, cfg.d_model);
        layer.self_attn = make_attn(reg, base + ".self", g, cfg.d_model, rng);
        layer.ln2 = make_ln(reg, base + ".ln2", g, cfg.d_model);
        layer.cross_attn = make_attn(reg, base + ".cross", g, cfg.d_model, rng);
        layer.ln3 = make_ln(reg, base + ".ln3", g, cfg.d_model);
        layer.ffn = make_ffn(reg, base + ".ffn", g, cfg.d_model, cfg.d_ffn, rng);
    }
    ln_final_ = make_ln(reg, prefix + ".ln_final", g, cfg.d_model);
    w_out_ = reg.normal(prefix + ".w_out", g, {cfg.d_model, cfg.vocab_size},
                        1.0 / std::sqrt(static_cast<double>(cfg.d_model)), rng);
    b_out_ = reg.zeros(prefix + ".b_out", g, {cfg.vocab_size});
}

TensorPtr TextDecoder::forward_logits(const std::vector<int>& in_ids,
                                      const TensorPtr& memory) const {
    if (!memory) throw ContractError("decoder: empty fused representation");
    if (in_ids.empty()) throw ContractError("decoder: empty input prefix");
    const int n = static_cast<int>(in_ids.size());
    auto mask = causal_mask(n);
    auto y = add(embedding(embed_, in_ids), sinusoidal_positions(n, cfg_.d_model));
    for (const auto& layer : layers_) {
        auto h = apply_ln(layer.ln1, y);
        y = add(y, multi_head_attention(layer.self_attn, cfg_.n_heads, h, h, mask));
        y = add(y, multi_head_attention(layer.cross_attn, cfg_.n_heads, apply_ln(layer.ln2, y),
                                        memory));
        y = add(y, apply_ffn(layer.ffn, apply_ln(layer.ln3, y)));
    }
    return add_rowvec(matmul(apply_ln(ln_final_, y), w_out_), b_out_);
}

TensorPtr TextDecoder::next_distribution(const DecoderState& state, const TensorPtr& memory) const {
    auto logits = forward_logits(state.prefix, memory);
    auto last = gather_rows(logits, {logits->shape[0] - 1});
    return reshape(softmax(last, -1), {cfg_.vocab_size});
}

std::vector<int> TextDecoder::greedy_generate(const TensorPtr& memory, int max_len) const {
    if (max_len < 1) throw ContractError("greedy_generate: max_len must be >= 1");
    NoGradGuard ng;
    DecoderState state;
    std::vector<int> out;
    while (static_cast<int>(out.size()) < max_len) {
        auto dist = next_distribution(state, memory);
        int best = 0;
        for (int j = 1; j < cfg_.vocab_size; ++j)
            if (dist->data[static_cast<std::size_t>(j)] >
                dist->data[static_cast<std::size_t>(best)])
                best = j;  // strict > keeps the lowest id on ties
        if (best == Vocab::kEos) break;
        out.push_back(best);
        state.prefix.push_back(best);
    }
    return out;
}

TensorPtr seq_loss(const TensorPtr& logits, const std::vector<int>& targets, bool mean_reduce) {
    if (!logits || logits->rank() != 2)
        throw ContractError("seq_loss: [L x V] logits required");
    if (static_cast<std::size_t>(logits->shape[0]) != targets.size())
        throw ContractError("seq_loss: " + std::to_string(targets.size()) + " targets for " +
                            std::to_string(logits->shape[0]) + " logit rows");
    std::vector<std::int64_t> keep_rows;
    std::vector<int> keep_targets;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i] == Vocab::kPad) continue;
        keep_rows.push_back(static_cast<std::int64_t>(i));
        keep_targets.push_back(targets[i]);
    }
    if (keep_targets.empty()) throw ContractError("seq_loss: all targets are PAD");
    auto rows = keep_rows.size() == targets.size() ? logits : gather_rows(logits, keep_rows);
    auto loss = cross_entropy_with_softmax(rows, keep_targets);
    if (mean_reduce) loss = scale(loss, 1.0 / static_cast<double>(keep_targets.size()));
    return loss;
}

}  // namespace mmlatent
