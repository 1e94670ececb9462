#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "mmlatent/errors.hpp"
#include "mmlatent/grad_check.hpp"
#include "mmlatent/text_model.hpp"
#include "mmlatent/vocab.hpp"
#include "support/testing.hpp"

using namespace mmlatent;

namespace {

Vocab tiny_vocab() {
    return Vocab::from_words({"the", "cat", "sat", "on", "mat", "red", "circles", "are",
                              "there", "how", "many", "image", "in", "context:", "question:",
                              "rationale:", "0", "1", "2", "3", "?", "."});
}

TextModelConfig tiny_config(int vocab_size, int max_len = 64) {
    TextModelConfig cfg;
    cfg.vocab_size = vocab_size;
    cfg.d_model = 16;
    cfg.n_heads = 2;
    cfg.n_enc_layers = 1;
    cfg.n_dec_layers = 1;
    cfg.d_ffn = 32;
    cfg.max_input_len = max_len;
    return cfg;
}

}  // namespace

TEST_SUITE("vocab") {
    TEST_CASE("empty text encodes to [BOS, EOS]") {
        auto v = tiny_vocab();
        CHECK(v.encode("") == std::vector<int>{Vocab::kBos, Vocab::kEos});
    }

    TEST_CASE("template sentences round-trip") {
        auto v = tiny_vocab();
        for (const std::string s :
             {"the cat sat on the mat.", "how many red circles are there?",
              "context: the image. question: how many? rationale:"}) {
            CHECK(v.decode(v.encode(s)) == s);
        }
    }

    TEST_CASE("unknown words map to UNK") {
        auto v = tiny_vocab();
        auto ids = v.encode("the zebra sat");
        CHECK(std::count(ids.begin(), ids.end(), Vocab::kUnk) == 1);
    }

    TEST_CASE("ids are dense and specials distinct") {
        auto v = tiny_vocab();
        for (int i = 0; i < v.size(); ++i) {
            const auto& t = v.token(i);
            CHECK(v.id(t) == i);
        }
    }

    TEST_CASE("save/load preserves ids") {
        auto v = tiny_vocab();
        auto path = std::filesystem::temp_directory_path() / "mmlatent_vocab.txt";
        v.save(path.string());
        auto w = Vocab::load(path.string());
        CHECK(w.size() == v.size());
        for (int i = 0; i < v.size(); ++i) CHECK(w.token(i) == v.token(i));
    }
}

TEST_SUITE("encoder") {
    TEST_CASE("n tokens produce n rows and permutation changes Z_L") {
        auto v = tiny_vocab();
        auto cfg = tiny_config(v.size());
        ParamRegistry reg;
        Prng rng(3);
        TextEncoder enc(cfg, reg, "enc", rng);

        auto ids = v.encode("the cat sat on the mat");
        auto e = enc.encode(ids);
        CHECK(e.z->shape == std::vector<std::int64_t>{static_cast<std::int64_t>(ids.size()),
                                                      cfg.d_model});

        // swap two non-adjacent distinct tokens: positional encoding is active
        auto swapped = ids;
        std::swap(swapped[1], swapped[4]);
        auto e2 = enc.encode(swapped);
        bool differs = false;
        for (std::size_t i = 0; i < e.z->data.size(); ++i)
            differs = differs || e.z->data[i] != e2.z->data[i];
        CHECK(differs);
    }

    TEST_CASE("deterministic given parameters") {
        auto v = tiny_vocab();
        auto cfg = tiny_config(v.size());
        ParamRegistry reg;
        Prng rng(4);
        TextEncoder enc(cfg, reg, "enc", rng);
        auto ids = v.encode("the cat sat");
        CHECK(enc.encode(ids).z->data == enc.encode(ids).z->data);
    }

    TEST_CASE("over-length input truncates from the left, keeping the tail") {
        auto v = tiny_vocab();
        auto cfg = tiny_config(v.size(), 8);
        ParamRegistry reg;
        Prng rng(5);
        TextEncoder enc(cfg, reg, "enc", rng);
        std::vector<int> ids{Vocab::kBos};
        for (int i = 0; i < 20; ++i) ids.push_back(v.id("cat"));
        ids.push_back(v.id("mat"));
        ids.push_back(Vocab::kEos);
        auto e = enc.encode(ids);
        CHECK(static_cast<int>(e.ids.size()) == cfg.max_input_len);
        CHECK(e.ids.front() == Vocab::kBos);
        CHECK(e.ids.back() == Vocab::kEos);
        CHECK(e.ids[e.ids.size() - 2] == v.id("mat"));
    }

    TEST_CASE("gradient of mean(Z_L) w.r.t. embeddings matches finite differences") {
        DtypeGuard g(Dtype::f64);
        auto v = tiny_vocab();
        auto cfg = tiny_config(v.size());
        cfg.d_model = 8;
        cfg.d_ffn = 16;
        ParamRegistry reg;
        Prng rng(6);
        TextEncoder enc(cfg, reg, "enc", rng);
        auto ids = v.encode("the cat");
        auto f = [&] { return mean_all(enc.encode(ids).z); };
        auto err = grad_check_max_err(f, {reg.find("enc.embed")}, 1e-5);
        CHECK(err < 1e-4);
    }
}

TEST_SUITE("seq_loss") {
    TEST_CASE("probability one on every gold token gives zero loss") {
        // logits with a huge margin on the gold ids
        const int V = 5;
        std::vector<double> rows(3 * V, -50.0);
        std::vector<int> gold = {1, 3, 2};
        for (int i = 0; i < 3; ++i) rows[static_cast<std::size_t>(i * V + gold[i])] = 50.0;
        auto logits = tensor_from({3, V}, rows);
        CHECK(seq_loss(logits, gold)->item() == doctest::Approx(0.0).epsilon(1e-9));
    }

    TEST_CASE("uniform logits over V=4 at N=3 give 3 ln 4") {
        auto logits = tensor_zeros({3, 4});
        CHECK(seq_loss(logits, {1, 3, 2})->item() ==
              doctest::Approx(3.0 * std::log(4.0)).epsilon(1e-6));
    }

    TEST_CASE("a single step with P(gold)=0.5 gives ln 2") {
        auto logits = tensor_from({1, 2}, {0.0, 0.0});
        CHECK(seq_loss(logits, {1})->item() == doctest::Approx(std::log(2.0)).epsilon(1e-6));
    }

    TEST_CASE("length mismatch is a contract error") {
        auto logits = tensor_zeros({3, 4});
        CHECK_THROWS_AS(seq_loss(logits, {0, 1}), ContractError);
    }

    TEST_CASE("PAD targets are excluded by the mask") {
        auto logits = tensor_zeros({3, 4});
        const double with_pad = seq_loss(logits, {Vocab::kPad, 1, 2})->item();
        CHECK(with_pad == doctest::Approx(2.0 * std::log(4.0)).epsilon(1e-6));
    }

    TEST_CASE("loss is non-negative") {
        DtypeGuard g(Dtype::f64);
        Prng rng(7);
        for (int rep = 0; rep < 20; ++rep) {
            auto logits = mmlatent::testing::random_tensor(rng, {4, 6}, false, 3.0);
            std::vector<int> gold;
            for (int i = 0; i < 4; ++i) gold.push_back(static_cast<int>(rng.uniform_int(1, 5)));
            CHECK(seq_loss(logits, gold)->item() >= 0.0);
        }
    }
}

TEST_SUITE("decoder") {
    TEST_CASE("next-token distribution sums to one") {
        auto v = tiny_vocab();
        auto cfg = tiny_config(v.size());
        ParamRegistry reg;
        Prng rng(8);
        TextDecoder dec(cfg, reg, "dec", rng);
        auto memory = tensor_randn(rng, {5, cfg.d_model}, 1.0);
        DecoderState st;
        st.prefix = {Vocab::kBos, 7, 8};
        auto dist = dec.next_distribution(st, memory);
        double s = 0.0;
        for (double p : dist->data) s += p;
        CHECK(std::abs(s - 1.0) < 1e-6);
    }

    TEST_CASE("causality: appending a token never changes earlier distributions") {
        auto v = tiny_vocab();
        auto cfg = tiny_config(v.size());
        ParamRegistry reg;
        Prng rng(9);
        TextDecoder dec(cfg, reg, "dec", rng);
        auto memory = tensor_randn(rng, {4, cfg.d_model}, 1.0);

        std::vector<int> shorter = {Vocab::kBos, 7, 9};
        std::vector<int> longer = shorter;
        longer.push_back(11);
        auto lg_short = dec.forward_logits(shorter, memory);
        auto lg_long = dec.forward_logits(longer, memory);
        for (std::size_t i = 0; i < shorter.size(); ++i)
            for (int j = 0; j < cfg.vocab_size; ++j)
                CHECK(lg_short->data[i * static_cast<std::size_t>(cfg.vocab_size) +
                                     static_cast<std::size_t>(j)] ==
                      doctest::Approx(
                          lg_long->data[i * static_cast<std::size_t>(cfg.vocab_size) +
                                        static_cast<std::size_t>(j)])
                          .epsilon(1e-9));
    }

    TEST_CASE("empty fused representation is a contract error") {
        auto v = tiny_vocab();
        auto cfg = tiny_config(v.size());
        ParamRegistry reg;
        Prng rng(10);
        TextDecoder dec(cfg, reg, "dec", rng);
        DecoderState st;
        CHECK_THROWS_AS(dec.next_distribution(st, nullptr), ContractError);
    }

    TEST_CASE("greedy stops at EOS and respects max_len") {
        auto v = tiny_vocab();
        auto cfg = tiny_config(v.size());
        ParamRegistry reg;
        Prng rng(11);
        TextDecoder dec(cfg, reg, "dec", rng);
        auto memory = tensor_randn(rng, {3, cfg.d_model}, 1.0);

        // Rig the output head so EOS always wins: zero weights, huge EOS bias.
        auto w_out = reg.find("dec.w_out");
        std::fill(w_out->data.begin(), w_out->data.end(), 0.0);
        auto b_out = reg.find("dec.b_out");
        std::fill(b_out->data.begin(), b_out->data.end(), 0.0);
        b_out->data[Vocab::kEos] = 20.0;
        CHECK(dec.greedy_generate(memory, 16).empty());

        // Now make token 8 always win: output is capped by max_len.
        b_out->data[Vocab::kEos] = 0.0;
        b_out->data[8] = 20.0;
        auto out = dec.greedy_generate(memory, 5);
        CHECK(out.size() == 5);
        for (int t : out) CHECK(t == 8);
    }

    TEST_CASE("ties break toward the lowest token id") {
        auto v = tiny_vocab();
        auto cfg = tiny_config(v.size());
        ParamRegistry reg;
        Prng rng(12);
        TextDecoder dec(cfg, reg, "dec", rng);
        auto memory = tensor_randn(rng, {3, cfg.d_model}, 1.0);
        auto w_out = reg.find("dec.w_out");
        std::fill(w_out->data.begin(), w_out->data.end(), 0.0);
        auto b_out = reg.find("dec.b_out");
        std::fill(b_out->data.begin(), b_out->data.end(), 0.0);
        // all logits tie at zero; lowest id is PAD(0)
        auto out = dec.greedy_generate(memory, 3);
        REQUIRE(out.size() == 3);
        for (int t : out) CHECK(t == Vocab::kPad);
    }

    TEST_CASE("max_len below one is rejected") {
        auto v = tiny_vocab();
        auto cfg = tiny_config(v.size());
        ParamRegistry reg;
        Prng rng(13);
        TextDecoder dec(cfg, reg, "dec", rng);
        auto memory = tensor_randn(rng, {3, cfg.d_model}, 1.0);
        CHECK_THROWS_AS(dec.greedy_generate(memory, 0), ContractError);
    }

    TEST_CASE("decoder gradients pass grad_check") {
        DtypeGuard g(Dtype::f64);
        auto v = tiny_vocab();
        auto cfg = tiny_config(v.size());
        cfg.d_model = 8;
        cfg.d_ffn = 16;
        cfg.n_heads = 2;
        ParamRegistry reg;
        Prng rng(14);
        TextDecoder dec(cfg, reg, "dec", rng);
        auto memory = tensor_randn(rng, {3, cfg.d_model}, 1.0, true);
        std::vector<int> prefix = {Vocab::kBos, 7, 9};
        std::vector<int> target = {7, 9, Vocab::kEos};
        auto f = [&] { return seq_loss(dec.forward_logits(prefix, memory), target); };
        std::vector<std::pair<std::string, TensorPtr>> probe = {
            {"memory", memory},
            {"embed", reg.find("dec.embed")},
            {"cross.wk", reg.find("dec.layer0.cross.wk")},
            {"w_out", reg.find("dec.w_out")},
        };
        auto rep = grad_check(f, probe, 1e-5);
        CHECK(rep.max_rel_err < 1e-4);
    }
}
