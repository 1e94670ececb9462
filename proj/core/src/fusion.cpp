#include "mmlatent/fusion.hpp"

#include <cmath>

#include "mmlatent/errors.hpp"
#include "mmlatent/ops.hpp"
#include "mmlatent/text_model.hpp"

namespace mmlatent {

FusionModule::FusionModule(const FusionConfig& cfg, ParamRegistry& reg,
                           const std::string& prefix, Prng& rng)
    : cfg_(cfg) {
    const std::string g = "fusion";
    const int d = cfg.d_model;
    if (d % cfg.n_heads != 0)
        throw ConfigError("FusionModule: d_model not divisible by n_heads");
    auto std_of = [](int fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); };
    w_h_ = reg.normal(prefix + ".w_h", g, {cfg.latent_channels, d}, std_of(cfg.latent_channels),
                      rng);
    w_l_ = reg.normal(prefix + ".w_l", g, {d, d}, std_of(d), rng);
    w_v_ = reg.normal(prefix + ".w_v", g, {d, d}, std_of(d), rng);
    if (cfg.gate_bias) bias_ = reg.zeros(prefix + ".gate_bias", g, {d});
    if (cfg.learned_qkv) {
        wq_ = reg.normal(prefix + ".attn.wq", g, {d, d}, std_of(d), rng);
        wk_ = reg.normal(prefix + ".attn.wk", g, {d, d}, std_of(d), rng);
        wv_ = reg.normal(prefix + ".attn.wv", g, {d, d}, std_of(d), rng);
    }
}

TensorPtr FusionModule::project_latent(const LatentSequence& seq) const {
    if (!seq.rows) throw ContractError("project_latent: null latent sequence");
    if (seq.rows->rank() != 2 || seq.rows->shape[1] != cfg_.latent_channels)
        throw ShapeError("project_latent: sequence " + seq.rows->shape_str() +
                         " vs latent channels " + std::to_string(cfg_.latent_channels));
    return matmul(seq.rows, w_h_);
}

TensorPtr FusionModule::cross_modal_attention(const TensorPtr& z_text,
                                              const TensorPtr& z_vt) const {
    if (!z_text || !z_vt || z_vt->numel() == 0)
        throw ContractError("cross_modal_attention: empty projected latent");
    if (z_text->rank() != 2 || z_vt->rank() != 2 || z_text->shape[1] != cfg_.d_model ||
        z_vt->shape[1] != cfg_.d_model)
        throw ShapeError("cross_modal_attention: " + z_text->shape_str() + " vs " +
                         z_vt->shape_str() + " at d_model " + std::to_string(cfg_.d_model));

    auto q = cfg_.learned_qkv ? matmul(z_text, wq_) : z_text;
    auto k = cfg_.learned_qkv ? matmul(z_vt, wk_) : z_vt;
    auto v = cfg_.learned_qkv ? matmul(z_vt, wv_) : z_vt;

    const std::int64_t dh = cfg_.d_model / cfg_.n_heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    if (cfg_.n_heads == 1) return scaled_dot_attention(q, k, v, inv_sqrt);

    std::vector<TensorPtr> heads;
    heads.reserve(static_cast<std::size_t>(cfg_.n_heads));
    for (int h = 0; h < cfg_.n_heads; ++h) {
        auto qh = slice_cols(q, h * dh, dh);
        auto kh = slice_cols(k, h * dh, dh);
        auto vh = slice_cols(v, h * dh, dh);
        heads.push_back(scaled_dot_attention(qh, kh, vh, inv_sqrt));
    }
    return concat_cols(heads);
}

std::pair<TensorPtr, TensorPtr> FusionModule::gated_fusion(const TensorPtr& z_text,
                                                           const TensorPtr& z_attn) const {
    if (!z_text || !z_attn) throw ContractError("gated_fusion: null input");
    if (z_text->shape != z_attn->shape)
        throw ShapeError("gated_fusion: " + z_text->shape_str() + " vs " + z_attn->shape_str());
    auto logits = add(matmul(z_text, w_l_), matmul(z_attn, w_v_));
    if (bias_) logits = add_rowvec(logits, bias_);
    auto alpha = sigmoid(logits);
    auto z_fuse = add(mul(affine(alpha, -1.0, 1.0), z_text), mul(alpha, z_attn));
    return {alpha, z_fuse};
}

FusedState FusionModule::fuse(const TensorPtr& z_text, const LatentSequence& seq) const {
    FusedState st;
    st.z_text = z_text;
    st.z_vt = project_latent(seq);
    st.z_attn = cross_modal_attention(z_text, st.z_vt);
    auto [alpha, z_fuse] = gated_fusion(z_text, st.z_attn);
    st.alpha = alpha;
    st.z_fuse = z_fuse;
    return st;
}

}  // namespace mmlatent
