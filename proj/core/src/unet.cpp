#include "mmlatent/unet.hpp"

#include <cmath>

#include "mmlatent/errors.hpp"
#include "mmlatent/ops.hpp"
#include "mmlatent/text_model.hpp"

namespace mmlatent {

NoisePredictor::NoisePredictor(const UnetConfig& cfg, ParamRegistry& reg,
                               const std::string& prefix, Prng& rng)
    : cfg_(cfg) {
    if (cfg.latent_hw % 4 != 0)
        throw ConfigError("NoisePredictor: latent grid side must be divisible by 4");
    const std::string g = "unet";
    auto std_of = [](int fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); };
    const int cz = cfg.latent_channels, c1 = cfg.ch1, c2 = cfg.ch2;
    const int td = cfg.time_dim, ad = cfg.attn_dim;

    lift_w_ = reg.normal(prefix + ".lift.w", g, {cz, c1}, std_of(cz), rng);
    lift_t_ = reg.normal(prefix + ".lift.t", g, {td, c1}, std_of(td), rng);

    down1_w_ = reg.normal(prefix + ".down1.w", g, {4 * c1, c1}, std_of(4 * c1), rng);
    down1_b_ = reg.zeros(prefix + ".down1.b", g, {c1});
    down1_t_ = reg.normal(prefix + ".down1.t", g, {td, c1}, std_of(td), rng);

    down2_w_ = reg.normal(prefix + ".down2.w", g, {4 * c1, c2}, std_of(4 * c1), rng);
    down2_b_ = reg.zeros(prefix + ".down2.b", g, {c2});
    down2_t_ = reg.normal(prefix + ".down2.t", g, {td, c2}, std_of(td), rng);

    attn_wq_ = reg.normal(prefix + ".attn.wq", g, {c2, ad}, std_of(c2), rng);
    attn_wk_ = reg.normal(prefix + ".attn.wk", g, {cfg.text_dim, ad}, std_of(cfg.text_dim), rng);
    attn_wv_ = reg.normal(prefix + ".attn.wv", g, {cfg.text_dim, ad}, std_of(cfg.text_dim), rng);

    mid_w1_ = reg.normal(prefix + ".mid.w1", g, {ad, 2 * ad}, std_of(ad), rng);
    mid_b1_ = reg.zeros(prefix + ".mid.b1", g, {2 * ad});
    mid_w2_ = reg.normal(prefix + ".mid.w2", g, {2 * ad, c2}, std_of(2 * ad), rng);
    mid_b2_ = reg.zeros(prefix + ".mid.b2", g, {c2});

    up1_w_ = reg.normal(prefix + ".up1.w", g, {c2, 4 * c1}, std_of(c2), rng);
    up1_b_ = reg.zeros(prefix + ".up1.b", g, {4 * c1});
    up1_mix_w_ = reg.normal(prefix + ".up1.mix.w", g, {2 * c1, c1}, std_of(2 * c1), rng);
    up1_mix_b_ = reg.zeros(prefix + ".up1.mix.b", g, {c1});
    up1_t_ = reg.normal(prefix + ".up1.t", g, {td, c1}, std_of(td), rng);

    up2_w_ = reg.normal(prefix + ".up2.w", g, {c1, 4 * c1}, std_of(c1), rng);
    up2_b_ = reg.zeros(prefix + ".up2.b", g, {4 * c1});
    up2_mix_w_ = reg.normal(prefix + ".up2.mix.w", g, {2 * c1, c1}, std_of(2 * c1), rng);
    up2_mix_b_ = reg.zeros(prefix + ".up2.mix.b", g, {c1});
    up2_t_ = reg.normal(prefix + ".up2.t", g, {td, c1}, std_of(td), rng);

    out_w_ = reg.normal(prefix + ".out.w", g, {c1, cz}, std_of(c1), rng);
    out_b_ = reg.zeros(prefix + ".out.b", g, {cz});
}

TensorPtr NoisePredictor::time_embedding(int t) const {
    // One sinusoidal row at position t.
    std::vector<double> row(static_cast<std::size_t>(cfg_.time_dim));
    for (int i = 0; i < cfg_.time_dim; i += 2) {
        const double rate = std::exp(-std::log(10000.0) * static_cast<double>(i) /
                                     static_cast<double>(cfg_.time_dim));
        row[static_cast<std::size_t>(i)] = std::sin(t * rate);
        if (i + 1 < cfg_.time_dim) row[static_cast<std::size_t>(i + 1)] = std::cos(t * rate);
    }
    return tensor_from({1, cfg_.time_dim}, std::move(row), false);
}

LatentGrid NoisePredictor::predict(const LatentGrid& z_t, int t, const TensorPtr& z_text) const {
    if (!z_text || z_text->numel() == 0)
        throw ContractError("predict_noise: empty text representation");
    if (z_text->rank() != 2 || z_text->shape[1] != cfg_.text_dim)
        throw ShapeError("predict_noise: text representation " + z_text->shape_str() +
                         " does not match configured width " + std::to_string(cfg_.text_dim));
    const int hw = cfg_.latent_hw;
    if (!z_t.z || z_t.z->rank() != 3 || z_t.z->shape[0] != cfg_.latent_channels ||
        z_t.z->shape[1] != hw || z_t.z->shape[2] != hw)
        throw ShapeError("predict_noise: latent " + (z_t.z ? z_t.z->shape_str() : "null") +
                         " does not match configured grid");

    auto temb = time_embedding(t);
    auto tproj = [&](const TensorPtr& w) { return reshape(matmul(temb, w), {w->shape[1]}); };
    const int c1 = cfg_.ch1, c2 = cfg_.ch2;
    const int h2 = hw / 2, h4 = hw / 4;

    // lift at full resolution
    auto h0 = tanh_op(add_rowvec(matmul(grid_to_sequence(z_t).rows, lift_w_), tproj(lift_t_)));

    // down 1: hw -> hw/2
    auto d1_in = reshape(space_to_depth(reshape(h0, {hw, hw, c1}), 2), {h2 * h2, 4 * c1});
    auto h1 = tanh_op(add_rowvec(add_rowvec(matmul(d1_in, down1_w_), down1_b_), tproj(down1_t_)));

    // down 2: hw/2 -> hw/4
    auto d2_in = reshape(space_to_depth(reshape(h1, {h2, h2, c1}), 2), {h4 * h4, 4 * c1});
    auto h2t = tanh_op(add_rowvec(add_rowvec(matmul(d2_in, down2_w_), down2_b_), tproj(down2_t_)));

    // middle: cross-attention, Q from the latent path, K/V from the text
    auto q = matmul(h2t, attn_wq_);
    auto k = matmul(z_text, attn_wk_);
    auto v = matmul(z_text, attn_wv_);
    auto attended = add(
        scaled_dot_attention(q, k, v, 1.0 / std::sqrt(static_cast<double>(cfg_.attn_dim))), q);
    auto mid =
        add_rowvec(matmul(tanh_op(add_rowvec(matmul(attended, mid_w1_), mid_b1_)), mid_w2_),
                   mid_b2_);
    auto bottleneck = add(mid, h2t);

    // up 1: hw/4 -> hw/2, skip pairs with down 1
    auto u1_up = reshape(
        depth_to_space(reshape(add_rowvec(matmul(bottleneck, up1_w_), up1_b_), {h4, h4, 4 * c1}),
                       2),
        {h2 * h2, c1});
    auto u1 = tanh_op(add_rowvec(
        add_rowvec(matmul(concat_cols({u1_up, h1}), up1_mix_w_), up1_mix_b_), tproj(up1_t_)));

    // up 2: hw/2 -> hw, skip pairs with the lift
    auto u2_up = reshape(
        depth_to_space(reshape(add_rowvec(matmul(u1, up2_w_), up2_b_), {h2, h2, 4 * c1}), 2),
        {hw * hw, c1});
    auto u2 = tanh_op(add_rowvec(
        add_rowvec(matmul(concat_cols({u2_up, h0}), up2_mix_w_), up2_mix_b_), tproj(up2_t_)));

    auto eps_rows = add_rowvec(matmul(u2, out_w_), out_b_);
    return sequence_to_grid(LatentSequence{eps_rows}, hw, hw);
}

}  // namespace mmlatent
