#include "mmlatent/vae.hpp"

#include <cmath>

#include "mmlatent/errors.hpp"
#include "mmlatent/ops.hpp"

namespace mmlatent {

const char* imageless_policy_name(ImagelessPolicy p) {
    return p == ImagelessPolicy::zero_tensor ? "zero_tensor" : "blank_image";
}

ImagelessPolicy imageless_policy_from_name(const std::string& name) {
    if (name == "zero_tensor") return ImagelessPolicy::zero_tensor;
    if (name == "blank_image") return ImagelessPolicy::blank_image;
    throw ConfigError("unknown imageless policy '" + name + "'");
}

Vae::Vae(const VaeConfig& cfg, ParamRegistry& reg, const std::string& prefix, Prng& rng)
    : cfg_(cfg) {
    if (cfg.image_size % 4 != 0)
        throw ConfigError("Vae: image_size must be divisible by 4 (two stride-2 stages)");
    if (cfg.eta <= 0.0) throw ConfigError("Vae: eta must be positive");
    const std::string g = "vae";
    const int p1 = 4 * cfg.image_channels;  // 2x2 patch of pixels
    const int p2 = 4 * cfg.hidden1;         // 2x2 patch of stage-1 features
    auto std_of = [](int fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); };
    enc_w1_ = reg.normal(prefix + ".enc.w1", g, {p1, cfg.hidden1}, std_of(p1), rng);
    enc_w2_ = reg.normal(prefix + ".enc.w2", g, {p2, cfg.hidden2}, std_of(p2), rng);
    enc_wout_ = reg.normal(prefix + ".enc.w_out", g, {cfg.hidden2, 2 * cfg.latent_channels},
                           std_of(cfg.hidden2), rng);
    const int d1 = 4 * cfg.hidden1;
    dec_w1_ = reg.normal(prefix + ".dec.w1", g, {cfg.latent_channels, d1},
                         std_of(cfg.latent_channels), rng);
    dec_b1_ = reg.zeros(prefix + ".dec.b1", g, {d1});
    dec_w2_ = reg.normal(prefix + ".dec.w2", g, {cfg.hidden1, 4 * cfg.image_channels},
                         std_of(cfg.hidden1), rng);
    dec_b2_ = reg.zeros(prefix + ".dec.b2", g, {4 * cfg.image_channels});
}

TensorPtr Vae::encode_rows(const Image& img, EncodeMode mode, Prng* rng) const {
    if (!img.pixels || img.pixels->rank() != 3)
        throw ContractError("vae_encode: [H x W x C] image required");
    if (img.height() != cfg_.image_size || img.width() != cfg_.image_size ||
        img.channels() != cfg_.image_channels)
        throw ShapeError("vae_encode: image " + img.pixels->shape_str() +
                         " does not match configured " + std::to_string(cfg_.image_size) + "x" +
                         std::to_string(cfg_.image_size) + "x" +
                         std::to_string(cfg_.image_channels));
    for (double v : img.pixels->data)
        if (!(v >= 0.0 && v <= 1.0))
            throw ContractError("vae_encode: pixel value " + std::to_string(v) +
                                " outside [0,1]");

    const int s1 = cfg_.image_size / 2;
    const int hw = cfg_.latent_hw();
    auto h1 = tanh_op(matmul(reshape(space_to_depth(img.pixels, 2),
                                     {s1 * s1, 4 * cfg_.image_channels}),
                             enc_w1_));
    auto h2 = tanh_op(matmul(reshape(space_to_depth(reshape(h1, {s1, s1, cfg_.hidden1}), 2),
                                     {hw * hw, 4 * cfg_.hidden1}),
                             enc_w2_));
    auto stats = matmul(h2, enc_wout_);  // [(hw*hw) x 2c_z], bias-free
    auto mean_rows = slice_cols(stats, 0, cfg_.latent_channels);
    if (mode == EncodeMode::mean) return scale(mean_rows, cfg_.eta);

    if (rng == nullptr) throw ContractError("vae_encode: sample mode needs an rng");
    auto logvar = slice_cols(stats, cfg_.latent_channels, cfg_.latent_channels);
    auto noise = tensor_randn(*rng, {hw * hw, cfg_.latent_channels}, 1.0, false);
    auto drawn = add(mean_rows, mul(exp_op(scale(logvar, 0.5)), noise));
    return scale(drawn, cfg_.eta);
}

LatentGrid Vae::encode(const Image& img, EncodeMode mode, Prng* rng) const {
    const int hw = cfg_.latent_hw();
    return sequence_to_grid(LatentSequence{encode_rows(img, mode, rng)}, hw, hw);
}

Image Vae::decode(const LatentGrid& z) const {
    const int hw = cfg_.latent_hw();
    if (!z.z || z.z->rank() != 3 || z.z->shape[0] != cfg_.latent_channels ||
        z.z->shape[1] != hw || z.z->shape[2] != hw)
        throw ShapeError("vae_decode: latent " + (z.z ? z.z->shape_str() : "null") +
                         " does not match configured grid");
    auto rows = scale(grid_to_sequence(z).rows, 1.0 / cfg_.eta);
    auto h1 = tanh_op(add_rowvec(matmul(rows, dec_w1_), dec_b1_));
    const int s1 = cfg_.image_size / 2;
    auto up1 = reshape(depth_to_space(reshape(h1, {hw, hw, 4 * cfg_.hidden1}), 2),
                       {s1 * s1, cfg_.hidden1});
    auto out = add_rowvec(matmul(up1, dec_w2_), dec_b2_);
    auto pixels = clamp01(
        depth_to_space(reshape(out, {s1, s1, 4 * cfg_.image_channels}), 2));
    return Image{pixels};
}

LatentGrid Vae::make_latent(const std::optional<Image>& img, ImagelessPolicy policy,
                            EncodeMode mode, Prng* rng) const {
    if (img.has_value()) return encode(*img, mode, rng);
    const int hw = cfg_.latent_hw();
    if (policy == ImagelessPolicy::zero_tensor)
        return LatentGrid{tensor_zeros({cfg_.latent_channels, hw, hw}, false)};
    return encode(white_image(cfg_.image_size, cfg_.image_size, cfg_.image_channels), mode, rng);
}

TensorPtr Vae::reconstruction_loss(const Image& img) const {
    auto recon = decode(encode(img, EncodeMode::mean));
    return mse(recon.pixels, img.pixels);
}

}  // namespace mmlatent
