#pragma once

#include <string>

#include "mmlatent/latent.hpp"
#include "mmlatent/param_registry.hpp"

namespace mmlatent {

struct FusionConfig {
    int latent_channels = 4;  // c_z
    int d_model = 64;
    bool gate_bias = true;     // zero-initialized; strict-paper mode disables it
    bool learned_qkv = false;  // raw Q/K/V by default, projections behind a flag
    int n_heads = 1;           // one softmax by default
};

/// Result of gate fusion for one stage.
struct FusedState {
    TensorPtr z_text;    // Z_L,      [n x d]
    TensorPtr z_vt;      // Z_V^T,    [(h*w) x d]
    TensorPtr z_attn;    // Z_V^attn, [n x d]
    TensorPtr alpha;     // gate,     [n x d], strictly inside (0,1)
    TensorPtr z_fuse;    // (1-alpha) * Z_L + alpha * Z_V^attn
};

/// Image-to-text-space projection, length alignment by attention with the
/// text as query, and the sigmoid gate mix.
class FusionModule {
  public:
    FusionModule(const FusionConfig& cfg, ParamRegistry& reg, const std::string& prefix,
                 Prng& rng);

    /// Row-wise bias-free linear map of latent rows into text space.
    TensorPtr project_latent(const LatentSequence& seq) const;

    /// softmax(Q K^T / sqrt(d_k)) V with Q = z_text and K = V = z_vt
    /// (per-head slices when configured with several heads). Output has one
    /// row per text token; each row is a convex combination of z_vt rows.
    TensorPtr cross_modal_attention(const TensorPtr& z_text, const TensorPtr& z_vt) const;

    /// alpha = sigmoid(Z_L W_l + Z_attn W_v [+ b]); convex mix of the two.
    std::pair<TensorPtr, TensorPtr> gated_fusion(const TensorPtr& z_text,
                                                 const TensorPtr& z_attn) const;

    /// Full Eq-4/5/6/7 path.
    FusedState fuse(const TensorPtr& z_text, const LatentSequence& seq) const;

    const FusionConfig& config() const { return cfg_; }

  private:
    FusionConfig cfg_;
    TensorPtr w_h_;                 // [c_z x d], bias-free
    TensorPtr w_l_, w_v_, bias_;    // gate parameters
    TensorPtr wq_, wk_, wv_;        // only when learned_qkv
};

}  // namespace mmlatent
