#pragma once

#include <string>
#include <vector>

#include "mmlatent/ops.hpp"
#include "mmlatent/param_registry.hpp"
#include "mmlatent/vocab.hpp"

namespace mmlatent {

struct TextModelConfig {
    int vocab_size = 0;
    int d_model = 64;
    int n_heads = 4;
    int n_enc_layers = 2;
    int n_dec_layers = 2;
    int d_ffn = 256;
    int max_input_len = 512;
};

/// Text representation produced by the encoder: one row per retained token.
struct TextEncoding {
    TensorPtr z;                      // [n x d_model]
    std::vector<int> ids;             // token ids actually encoded
    std::vector<std::uint8_t> mask;   // per-token keep mask (all ones here)
};

/// Decoding state for stepwise generation: the grown prefix (starts at BOS);
/// the step index is the prefix length.
struct DecoderState {
    std::vector<int> prefix{Vocab::kBos};
    int step() const { return static_cast<int>(prefix.size()); }
};

struct AttentionParams {
    TensorPtr wq, bq, wk, bk, wv, bv, wo, bo;
};

struct FfnParams {
    TensorPtr w1, b1, w2, b2;
};

struct LayerNormParams {
    TensorPtr gamma, beta;
};

/// Shared attention primitive: softmax(QK^T * scale + mask) V.
TensorPtr scaled_dot_attention(const TensorPtr& q, const TensorPtr& k, const TensorPtr& v,
                               double scale, const TensorPtr& additive_mask = nullptr);

/// Multi-head attention with learned projections; `mask` is additive on the
/// score matrix (shared across heads).
TensorPtr multi_head_attention(const AttentionParams& p, int n_heads, const TensorPtr& q_in,
                               const TensorPtr& kv_in, const TensorPtr& mask = nullptr);

/// Sinusoidal position table for n positions (constant, no grad).
TensorPtr sinusoidal_positions(int n, int d_model);

/// Additive causal mask: 0 at or before the diagonal, -1e30 after.
TensorPtr causal_mask(int n);

/// Pre-norm transformer encoder producing Z_L.
class TextEncoder {
  public:
    TextEncoder(const TextModelConfig& cfg, ParamRegistry& reg, const std::string& prefix,
                Prng& rng);

    /// Over-length input is truncated from the left (BOS kept) with a logged
    /// warning; the template places context first, so context goes first.
    TextEncoding encode(const std::vector<int>& ids) const;

    const TextModelConfig& config() const { return cfg_; }

  private:
    struct Layer {
        LayerNormParams ln1, ln2;
        AttentionParams attn;
        FfnParams ffn;
    };
    TextModelConfig cfg_;
    TensorPtr embed_;
    std::vector<Layer> layers_;
    LayerNormParams ln_final_;
};

/// Pre-norm transformer decoder with causal self-attention and
/// cross-attention whose keys/values are the fused representation rows.
class TextDecoder {
  public:
    TextDecoder(const TextModelConfig& cfg, ParamRegistry& reg, const std::string& prefix,
                Prng& rng);

    /// Teacher-forced pass: logits for every prefix position. [L x V]
    TensorPtr forward_logits(const std::vector<int>& in_ids, const TensorPtr& memory) const;

    /// Next-token distribution for the state's prefix. [V], sums to 1.
    TensorPtr next_distribution(const DecoderState& state, const TensorPtr& memory) const;

    /// Deterministic argmax decoding; ties break toward the lowest token id;
    /// stops at EOS or after max_len emitted tokens. Returns emitted ids
    /// (no BOS/EOS).
    std::vector<int> greedy_generate(const TensorPtr& memory, int max_len) const;

    const TextModelConfig& config() const { return cfg_; }

  private:
    struct Layer {
        LayerNormParams ln1, ln2, ln3;
        AttentionParams self_attn, cross_attn;
        FfnParams ffn;
    };
    TextModelConfig cfg_;
    TensorPtr embed_;
    std::vector<Layer> layers_;
    LayerNormParams ln_final_;
    TensorPtr w_out_, b_out_;
};

/// Token-level negative log-likelihood of `targets` under `logits`
/// (teacher-forcing aligned). Positions whose target is PAD are excluded.
/// Sum reduction by default; `mean_reduce` divides by the counted positions.
TensorPtr seq_loss(const TensorPtr& logits, const std::vector<int>& targets,
                   bool mean_reduce = false);

}  // namespace mmlatent
