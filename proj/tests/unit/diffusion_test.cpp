#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mmlatent/diffusion.hpp"
#include "mmlatent/errors.hpp"
#include "mmlatent/grad_check.hpp"
#include "mmlatent/ops.hpp"
#include "mmlatent/text_model.hpp"
#include "mmlatent/unet.hpp"
#include "support/testing.hpp"

using namespace mmlatent;

TEST_SUITE("schedule") {
    TEST_CASE("T=2 hand product") {
        auto s = NoiseSchedule(2, {0.1, 0.2});
        CHECK(s.alpha_at(1) == doctest::Approx(0.9).epsilon(1e-12));
        CHECK(s.alpha_at(2) == doctest::Approx(0.8).epsilon(1e-12));
        CHECK(s.alpha_bar_at(1) == doctest::Approx(0.9).epsilon(1e-12));
        CHECK(s.alpha_bar_at(2) == doctest::Approx(0.72).epsilon(1e-12));
    }

    TEST_CASE("all-zero beta makes diffusion the identity") {
        auto s = build_schedule(5, 0.0, 0.0);
        for (int t = 1; t <= 5; ++t) CHECK(s.alpha_bar_at(t) == 1.0);
    }

    TEST_CASE("default schedule decays below 1e-4 by step 1000") {
        auto s = build_schedule(1000, 1e-4, 0.02);
        // independent direct product
        double bar = 1.0;
        for (int t = 0; t < 1000; ++t)
            bar *= 1.0 - (1e-4 + (0.02 - 1e-4) * static_cast<double>(t) / 999.0);
        CHECK(s.alpha_bar_at(1000) == doctest::Approx(bar).epsilon(1e-12));
        CHECK(s.alpha_bar_at(1000) < 1e-4);
    }

    TEST_CASE("the alpha_bar recursion holds bit-exactly") {
        auto s = build_schedule(100, 1e-4, 0.05);
        for (int t = 2; t <= 100; ++t)
            CHECK(s.alpha_bar_at(t) == s.alpha_bar_at(t - 1) * s.alpha_at(t));
    }

    TEST_CASE("bounds violations are contract errors") {
        CHECK_THROWS_AS(build_schedule(0, 0.1, 0.2), ContractError);
        CHECK_THROWS_AS(build_schedule(10, 0.2, 0.1), ContractError);
        CHECK_THROWS_AS(build_schedule(10, 0.1, 1.0), ContractError);
        auto s = build_schedule(10, 0.1, 0.2);
        CHECK_THROWS_AS(s.alpha_bar_at(0), ContractError);
        CHECK_THROWS_AS(s.alpha_bar_at(11), ContractError);
    }

    TEST_CASE("dump table has one row per step with three columns") {
        auto s = build_schedule(4, 0.1, 0.2);
        auto table = s.dump_table();
        int rows = 0;
        for (char c : table) rows += c == '\n';
        CHECK(rows == 4);
        CHECK(table.rfind("1 0.1 0.9", 0) == 0);
    }
}

TEST_SUITE("forward diffusion") {
    TEST_CASE("zero noise keeps the scaled signal") {
        auto s = NoiseSchedule(2, {0.1, 0.2});
        auto z0 = LatentGrid{tensor_from({1, 1, 1}, {2.0})};
        auto eps = tensor_zeros({1, 1, 1});
        auto zt = forward_diffuse(z0, 2, eps, s);
        CHECK(zt.z->data[0] == doctest::Approx(std::sqrt(0.72) * 2.0).epsilon(1e-6));
    }

    TEST_CASE("zero signal keeps the scaled noise") {
        auto s = NoiseSchedule(2, {0.1, 0.2});
        auto z0 = LatentGrid{tensor_zeros({1, 1, 1})};
        auto eps = tensor_from({1, 1, 1}, {3.0});
        auto zt = forward_diffuse(z0, 2, eps, s);
        CHECK(zt.z->data[0] == doctest::Approx(std::sqrt(0.28) * 3.0).epsilon(1e-6));
    }

    TEST_CASE("hand-computed scalar case") {
        auto s = NoiseSchedule(2, {0.1, 0.2});
        auto z0 = LatentGrid{tensor_from({1, 1, 1}, {1.0})};
        auto eps = tensor_from({1, 1, 1}, {1.0});
        auto zt = forward_diffuse(z0, 2, eps, s);
        CHECK(zt.z->data[0] == doctest::Approx(1.3777).epsilon(1e-4));
    }

    TEST_CASE("step out of range is a contract error") {
        auto s = NoiseSchedule(2, {0.1, 0.2});
        auto z0 = LatentGrid{tensor_zeros({1, 1, 1})};
        auto eps = tensor_zeros({1, 1, 1});
        CHECK_THROWS_AS(forward_diffuse(z0, 0, eps, s), ContractError);
        CHECK_THROWS_AS(forward_diffuse(z0, 3, eps, s), ContractError);
    }

    TEST_CASE("noise shape must match the latent") {
        auto s = NoiseSchedule(2, {0.1, 0.2});
        auto z0 = LatentGrid{tensor_zeros({1, 2, 2})};
        auto eps = tensor_zeros({1, 1, 1});
        CHECK_THROWS_AS(forward_diffuse(z0, 1, eps, s), ShapeError);
    }

    TEST_CASE("closed form matches the iterated chain in distribution") {
        // Iterating z_t = sqrt(1-beta_t) z_{t-1} + sqrt(beta_t) e_t must match
        // N(sqrt(abar_t) z0, 1-abar_t): mean within 4 standard errors,
        // variance within 5%.
        const int T = 5;
        auto s = build_schedule(T, 0.05, 0.3);
        const double z0 = 0.8;
        const int n = 10000;
        Prng rng(1234);
        for (int t = 1; t <= T; ++t) {
            double sum = 0.0, sumsq = 0.0;
            for (int i = 0; i < n; ++i) {
                double z = z0;
                for (int step = 1; step <= t; ++step)
                    z = std::sqrt(1.0 - s.beta_at(step)) * z +
                        std::sqrt(s.beta_at(step)) * rng.normal();
                sum += z;
                sumsq += z * z;
            }
            const double mean = sum / n;
            const double var = sumsq / n - mean * mean;
            const double expect_mean = std::sqrt(s.alpha_bar_at(t)) * z0;
            const double expect_var = 1.0 - s.alpha_bar_at(t);
            const double se = std::sqrt(expect_var / n);
            CHECK(std::abs(mean - expect_mean) < 4.0 * se);
            CHECK(std::abs(var - expect_var) / expect_var < 0.05);
        }
    }
}

TEST_SUITE("timestep sampling") {
    TEST_CASE("T=1 always draws 1") {
        Prng rng(5);
        for (int i = 0; i < 100; ++i) CHECK(sample_timestep(rng, 1) == 1);
    }

    TEST_CASE("draws are uniform by chi-squared") {
        const int T = 10;
        const int n = 100000;
        Prng rng(6);
        std::vector<int> counts(static_cast<std::size_t>(T), 0);
        for (int i = 0; i < n; ++i) counts[static_cast<std::size_t>(sample_timestep(rng, T) - 1)]++;
        const double expected = static_cast<double>(n) / T;
        double chi2 = 0.0;
        for (int c : counts) {
            const double d = c - expected;
            chi2 += d * d / expected;
        }
        // 9 dof, p > 0.01 -> chi2 below 21.67
        CHECK(chi2 < 21.666);
    }

    TEST_CASE("same seed gives the same draw sequence") {
        Prng a(7), b(7);
        for (int i = 0; i < 100; ++i) CHECK(sample_timestep(a, 1000) == sample_timestep(b, 1000));
    }
}

TEST_SUITE("noise prediction") {
    TEST_CASE("output shape equals the input latent shape") {
        ParamRegistry reg;
        Prng rng(8);
        UnetConfig cfg;
        NoisePredictor unet(cfg, reg, "unet", rng);
        auto z = LatentGrid{tensor_randn(rng, {4, 8, 8}, 1.0)};
        auto text = tensor_randn(rng, {9, cfg.text_dim}, 1.0);
        auto eps_hat = unet.predict(z, 17, text);
        CHECK(eps_hat.z->shape == z.z->shape);
    }

    TEST_CASE("empty text conditioning is a contract error") {
        ParamRegistry reg;
        Prng rng(9);
        NoisePredictor unet(UnetConfig{}, reg, "unet", rng);
        auto z = LatentGrid{tensor_randn(rng, {4, 8, 8}, 1.0)};
        CHECK_THROWS_AS(unet.predict(z, 1, nullptr), ContractError);
    }

    TEST_CASE("a single text token makes every attention row its value projection") {
        // softmax over one key puts weight 1 on it, so each query row attends
        // to exactly the token's value projection
        DtypeGuard g(Dtype::f64);
        ParamRegistry reg;
        Prng rng(10);
        UnetConfig cfg;
        NoisePredictor unet(cfg, reg, "unet", rng);
        auto text = tensor_randn(rng, {1, cfg.text_dim}, 1.0);
        auto v_row = matmul(text, reg.find("unet.attn.wv"));
        auto q_probe = matmul(tensor_randn(rng, {4, cfg.ch2}, 1.0), reg.find("unet.attn.wq"));
        auto k_probe = matmul(text, reg.find("unet.attn.wk"));
        auto attn = scaled_dot_attention(q_probe, k_probe, v_row,
                                         1.0 / std::sqrt(static_cast<double>(cfg.attn_dim)));
        for (std::int64_t r = 0; r < attn->shape[0]; ++r)
            for (std::int64_t c = 0; c < attn->shape[1]; ++c)
                CHECK(attn->data[static_cast<std::size_t>(r * attn->shape[1] + c)] ==
                      doctest::Approx(v_row->data[static_cast<std::size_t>(c)]).epsilon(1e-9));
    }

    TEST_CASE("deterministic given inputs and parameters") {
        ParamRegistry reg;
        Prng rng(11);
        UnetConfig cfg;
        NoisePredictor unet(cfg, reg, "unet", rng);
        auto z = LatentGrid{tensor_randn(rng, {4, 8, 8}, 1.0)};
        auto text = tensor_randn(rng, {5, cfg.text_dim}, 1.0);
        CHECK(unet.predict(z, 3, text).z->data == unet.predict(z, 3, text).z->data);
    }

    TEST_CASE("gradients w.r.t. text and unet weights match finite differences") {
        DtypeGuard g(Dtype::f64);
        ParamRegistry reg;
        Prng rng(12);
        UnetConfig cfg;
        cfg.latent_channels = 2;
        cfg.latent_hw = 4;
        cfg.ch1 = 3;
        cfg.ch2 = 4;
        cfg.attn_dim = 5;
        cfg.time_dim = 6;
        cfg.text_dim = 7;
        NoisePredictor unet(cfg, reg, "unet", rng);
        auto z = LatentGrid{tensor_randn(rng, {2, 4, 4}, 1.0, true)};
        auto text = tensor_randn(rng, {3, 7}, 1.0, true);
        auto f = [&] { return mean_all(unet.predict(z, 2, text).z); };
        std::vector<std::pair<std::string, TensorPtr>> params = {{"z", z.z}, {"text", text}};
        for (const auto& e : reg.entries()) params.emplace_back(e.name, e.tensor);
        auto rep = grad_check(f, params, 1e-5);
        CHECK(rep.max_rel_err < 1e-4);
    }
}

TEST_SUITE("ldm loss") {
    TEST_CASE("equal tensors give zero") {
        Prng rng(13);
        auto eps = tensor_randn(rng, {4, 8, 8}, 1.0);
        CHECK(ldm_loss(eps, eps)->item() == 0.0);
    }

    TEST_CASE("zero noise against all-ones prediction gives one") {
        auto eps = tensor_zeros({2, 3, 4});
        auto eps_hat = tensor_full({2, 3, 4}, 1.0);
        CHECK(ldm_loss(eps, eps_hat)->item() == doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("random pair equals the direct recomputation") {
        DtypeGuard g(Dtype::f64);
        Prng rng(14);
        auto a = tensor_randn(rng, {3, 5}, 1.0);
        auto b = tensor_randn(rng, {3, 5}, 1.0);
        double s = 0.0;
        for (std::size_t i = 0; i < a->data.size(); ++i) {
            const double d = a->data[i] - b->data[i];
            s += d * d;
        }
        CHECK(ldm_loss(a, b)->item() == doctest::Approx(s / 15.0).epsilon(1e-12));
    }

    TEST_CASE("permutation of entries leaves the loss unchanged") {
        DtypeGuard g(Dtype::f64);
        Prng rng(15);
        auto a = tensor_randn(rng, {12}, 1.0);
        auto b = tensor_randn(rng, {12}, 1.0);
        const double base = ldm_loss(a, b)->item();
        std::vector<std::size_t> idx(12);
        for (std::size_t i = 0; i < 12; ++i) idx[i] = i;
        Prng shuffler(16);
        shuffler.shuffle(idx);
        std::vector<double> pa(12), pb(12);
        for (std::size_t i = 0; i < 12; ++i) {
            pa[i] = a->data[idx[i]];
            pb[i] = b->data[idx[i]];
        }
        CHECK(ldm_loss(tensor_from({12}, pa), tensor_from({12}, pb))->item() ==
              doctest::Approx(base).epsilon(1e-12));
    }

    TEST_CASE("shape mismatch is rejected") {
        auto a = tensor_zeros({3});
        auto b = tensor_zeros({4});
        CHECK_THROWS_AS(ldm_loss(a, b), ShapeError);
    }
}
