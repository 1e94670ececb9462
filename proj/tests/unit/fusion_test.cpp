#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mmlatent/errors.hpp"
#include "mmlatent/fusion.hpp"
#include "mmlatent/grad_check.hpp"
#include "mmlatent/ops.hpp"
#include "mmlatent/text_model.hpp"
#include "support/testing.hpp"

using namespace mmlatent;

namespace {

FusionConfig small_cfg(int d = 8, int cz = 3) {
    FusionConfig cfg;
    cfg.d_model = d;
    cfg.latent_channels = cz;
    return cfg;
}

}  // namespace

TEST_SUITE("project latent") {
    TEST_CASE("zero sequence projects to zero (bias-free)") {
        ParamRegistry reg;
        Prng rng(1);
        FusionModule fusion(small_cfg(), reg, "fusion", rng);
        auto seq = LatentSequence{tensor_zeros({10, 3})};
        auto z_vt = fusion.project_latent(seq);
        CHECK(z_vt->shape == std::vector<std::int64_t>{10, 8});
        for (double v : z_vt->data) CHECK(v == 0.0);
    }

    TEST_CASE("identity-extended weights copy the first channels") {
        ParamRegistry reg;
        Prng rng(2);
        FusionModule fusion(small_cfg(), reg, "fusion", rng);
        auto w = reg.find("fusion.w_h");
        std::fill(w->data.begin(), w->data.end(), 0.0);
        for (int c = 0; c < 3; ++c) w->data[static_cast<std::size_t>(c * 8 + c)] = 1.0;
        auto seq = LatentSequence{tensor_from({2, 3}, {1, 2, 3, 4, 5, 6})};
        auto z_vt = fusion.project_latent(seq);
        CHECK(z_vt->data[0] == 1.0);
        CHECK(z_vt->data[1] == 2.0);
        CHECK(z_vt->data[2] == 3.0);
        CHECK(z_vt->data[3] == 0.0);
        CHECK(z_vt->data[8] == 4.0);
    }

    TEST_CASE("column-count mismatch is rejected") {
        ParamRegistry reg;
        Prng rng(3);
        FusionModule fusion(small_cfg(), reg, "fusion", rng);
        CHECK_THROWS_AS(fusion.project_latent(LatentSequence{tensor_zeros({10, 5})}),
                        ShapeError);
    }
}

TEST_SUITE("cross-modal attention") {
    TEST_CASE("a single latent row is copied to every output row") {
        ParamRegistry reg;
        Prng rng(4);
        FusionModule fusion(small_cfg(), reg, "fusion", rng);
        Prng r2(5);
        auto z_text = tensor_randn(r2, {4, 8}, 1.0);
        auto v = tensor_randn(r2, {1, 8}, 1.0);
        auto out = fusion.cross_modal_attention(z_text, v);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 8; ++c)
                CHECK(out->data[static_cast<std::size_t>(r * 8 + c)] ==
                      doctest::Approx(v->data[static_cast<std::size_t>(c)]).epsilon(1e-6));
    }

    TEST_CASE("identical latent rows collapse to that common row") {
        ParamRegistry reg;
        Prng rng(6);
        FusionModule fusion(small_cfg(), reg, "fusion", rng);
        Prng r2(7);
        auto z_text = tensor_randn(r2, {3, 8}, 1.0);
        std::vector<double> row(8);
        for (auto& x : row) x = r2.uniform(-1, 1);
        std::vector<double> data;
        for (int i = 0; i < 6; ++i) data.insert(data.end(), row.begin(), row.end());
        auto kv = tensor_from({6, 8}, data);
        auto out = fusion.cross_modal_attention(z_text, kv);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 8; ++c)
                CHECK(out->data[static_cast<std::size_t>(r * 8 + c)] ==
                      doctest::Approx(row[static_cast<std::size_t>(c)]).epsilon(1e-6));
    }

    TEST_CASE("two-key hand-computed example") {
        // Q=[[1,0]], K=[[1,0],[0,1]], V=[[2,0],[0,2]], d_k=2:
        // scores = (1/sqrt(2), 0) -> weights (0.6698, 0.3302),
        // output = (1.3396, 0.6604)
        FusionConfig cfg = small_cfg(2, 2);
        ParamRegistry reg;
        Prng rng(8);
        FusionModule fusion(cfg, reg, "fusion", rng);
        auto q = tensor_from({1, 2}, {1, 0});
        auto k = tensor_from({2, 2}, {1, 0, 0, 1});
        // raw attention uses K == V; check the weight vector through V=K first
        auto out_kv = fusion.cross_modal_attention(q, k);
        CHECK(out_kv->data[0] == doctest::Approx(0.6698).epsilon(2e-3));
        CHECK(out_kv->data[1] == doctest::Approx(0.3302).epsilon(2e-3));
        // and the doubled-value output via the shared primitive
        auto v = tensor_from({2, 2}, {2, 0, 0, 2});
        auto out = scaled_dot_attention(q, k, v, 1.0 / std::sqrt(2.0));
        CHECK(out->data[0] == doctest::Approx(1.3396).epsilon(2e-3));
        CHECK(out->data[1] == doctest::Approx(0.6604).epsilon(2e-3));
    }

    TEST_CASE("attention weights per query row sum to one") {
        ParamRegistry reg;
        Prng rng(9);
        FusionModule fusion(small_cfg(), reg, "fusion", rng);
        Prng r2(10);
        // rows of the output must be convex combinations: probe with V = ones
        auto z_text = tensor_randn(r2, {5, 8}, 2.0);
        auto ones = tensor_full({7, 8}, 1.0);
        auto out = fusion.cross_modal_attention(z_text, ones);
        for (double v : out->data) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));
    }

    TEST_CASE("empty projected latent is a contract error") {
        ParamRegistry reg;
        Prng rng(11);
        FusionModule fusion(small_cfg(), reg, "fusion", rng);
        auto z_text = tensor_zeros({3, 8});
        CHECK_THROWS_AS(fusion.cross_modal_attention(z_text, nullptr), ContractError);
    }
}

TEST_SUITE("gated fusion") {
    TEST_CASE("zero gate weights give alpha 0.5 and the midpoint mix") {
        ParamRegistry reg;
        Prng rng(12);
        FusionModule fusion(small_cfg(), reg, "fusion", rng);
        for (const char* name : {"fusion.w_l", "fusion.w_v"}) {
            auto w = reg.find(name);
            std::fill(w->data.begin(), w->data.end(), 0.0);
        }
        Prng r2(13);
        auto z_text = tensor_randn(r2, {4, 8}, 1.0);
        auto z_attn = tensor_randn(r2, {4, 8}, 1.0);
        auto [alpha, z_fuse] = fusion.gated_fusion(z_text, z_attn);
        for (double a : alpha->data) CHECK(a == doctest::Approx(0.5).epsilon(1e-6));
        for (std::size_t i = 0; i < z_fuse->data.size(); ++i)
            CHECK(z_fuse->data[i] ==
                  doctest::Approx(0.5 * (z_text->data[i] + z_attn->data[i])).epsilon(1e-6));
    }

    TEST_CASE("equal inputs are a fixed point regardless of alpha") {
        ParamRegistry reg;
        Prng rng(14);
        FusionModule fusion(small_cfg(), reg, "fusion", rng);
        Prng r2(15);
        auto z = tensor_randn(r2, {4, 8}, 1.0);
        auto [alpha, z_fuse] = fusion.gated_fusion(z, z);
        for (std::size_t i = 0; i < z->data.size(); ++i)
            CHECK(z_fuse->data[i] == doctest::Approx(z->data[i]).epsilon(1e-6));
    }

    TEST_CASE("scalar sigmoid case") {
        // z_text=0, z_attn=1, w_l=0, w_v=1, b=0: alpha = sigmoid(1) = 0.7311
        FusionConfig cfg = small_cfg(1, 1);
        ParamRegistry reg;
        Prng rng(16);
        FusionModule fusion(cfg, reg, "fusion", rng);
        reg.find("fusion.w_l")->data[0] = 0.0;
        reg.find("fusion.w_v")->data[0] = 1.0;
        auto z_text = tensor_zeros({1, 1});
        auto z_attn = tensor_full({1, 1}, 1.0);
        auto [alpha, z_fuse] = fusion.gated_fusion(z_text, z_attn);
        CHECK(alpha->data[0] == doctest::Approx(0.7311).epsilon(1e-4));
        CHECK(z_fuse->data[0] == doctest::Approx(0.7311).epsilon(1e-4));
    }

    TEST_CASE("shape mismatch is rejected") {
        ParamRegistry reg;
        Prng rng(17);
        FusionModule fusion(small_cfg(), reg, "fusion", rng);
        CHECK_THROWS_AS(fusion.gated_fusion(tensor_zeros({3, 8}), tensor_zeros({4, 8})),
                        ShapeError);
    }
}

TEST_SUITE("fusion properties") {
    TEST_CASE("alpha lies strictly inside (0,1) and the mix is convex, 1000 cases") {
        ParamRegistry reg;
        Prng rng(18);
        FusionModule fusion(small_cfg(4, 2), reg, "fusion", rng);
        Prng r2(19);
        for (int rep = 0; rep < 1000; ++rep) {
            const int n = static_cast<int>(r2.uniform_int(1, 4));
            const int m = static_cast<int>(r2.uniform_int(1, 5));
            auto z_text = tensor_randn(r2, {n, 4}, 2.0);
            auto seq = LatentSequence{tensor_randn(r2, {m, 2}, 2.0)};
            auto st = fusion.fuse(z_text, seq);
            for (double a : st.alpha->data) {
                CHECK(a > 0.0);
                CHECK(a < 1.0);
            }
            for (std::size_t i = 0; i < st.z_fuse->data.size(); ++i) {
                const double lo = std::min(st.z_text->data[i], st.z_attn->data[i]);
                const double hi = std::max(st.z_text->data[i], st.z_attn->data[i]);
                CHECK(st.z_fuse->data[i] >= lo - 1e-12);
                CHECK(st.z_fuse->data[i] <= hi + 1e-12);
            }
            // each attended row stays inside the value column's range
            for (std::int64_t r = 0; r < st.z_attn->shape[0]; ++r) {
                for (std::int64_t c = 0; c < 4; ++c) {
                    double lo = 1e300, hi = -1e300;
                    for (std::int64_t k = 0; k < m; ++k) {
                        const double v = st.z_vt->data[static_cast<std::size_t>(k * 4 + c)];
                        lo = std::min(lo, v);
                        hi = std::max(hi, v);
                    }
                    const double v = st.z_attn->data[static_cast<std::size_t>(r * 4 + c)];
                    CHECK(v >= lo - 1e-9);
                    CHECK(v <= hi + 1e-9);
                }
            }
        }
    }

    TEST_CASE("zero latent is exactly inert") {
        DtypeGuard g(Dtype::f64);
        ParamRegistry reg;
        Prng rng(20);
        FusionModule fusion(small_cfg(), reg, "fusion", rng);
        Prng r2(21);
        auto z_text = tensor_randn(r2, {5, 8}, 1.0);
        auto st = fusion.fuse(z_text, LatentSequence{tensor_zeros({12, 3})});
        for (double v : st.z_attn->data) CHECK(v == 0.0);
        for (std::size_t i = 0; i < st.z_fuse->data.size(); ++i)
            CHECK(st.z_fuse->data[i] ==
                  (1.0 - st.alpha->data[i]) * z_text->data[i]);
    }

    TEST_CASE("all three operations pass grad_check") {
        DtypeGuard g(Dtype::f64);
        ParamRegistry reg;
        Prng rng(22);
        FusionModule fusion(small_cfg(4, 2), reg, "fusion", rng);
        Prng r2(23);
        auto z_text = tensor_randn(r2, {3, 4}, 1.0, true);
        auto seq = LatentSequence{tensor_randn(r2, {5, 2}, 1.0, true)};
        auto f = [&] { return mean_all(fusion.fuse(z_text, seq).z_fuse); };
        std::vector<std::pair<std::string, TensorPtr>> params = {{"z_text", z_text},
                                                                 {"seq", seq.rows}};
        for (const auto& e : reg.entries()) params.emplace_back(e.name, e.tensor);
        auto rep = grad_check(f, params, 1e-5);
        CHECK(rep.max_rel_err < 1e-4);
    }

    TEST_CASE("learned projections and multiple heads stay differentiable") {
        DtypeGuard g(Dtype::f64);
        FusionConfig cfg = small_cfg(4, 2);
        cfg.learned_qkv = true;
        cfg.n_heads = 2;
        ParamRegistry reg;
        Prng rng(24);
        FusionModule fusion(cfg, reg, "fusion", rng);
        Prng r2(25);
        auto z_text = tensor_randn(r2, {3, 4}, 1.0, true);
        auto seq = LatentSequence{tensor_randn(r2, {5, 2}, 1.0, true)};
        auto f = [&] { return mean_all(fusion.fuse(z_text, seq).z_fuse); };
        auto rep = grad_check_max_err(f, {z_text, seq.rows}, 1e-5);
        CHECK(rep < 1e-4);
    }
}
