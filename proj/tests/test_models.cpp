#include <doctest.h>

#include <cmath>

#include "testutil.hpp"
#include "wam/core/error.hpp"
#include "wam/models/models.hpp"

using namespace wam;
using namespace wam::models;

namespace {

ModelConfig desk_config(EncoderKind kind, int bins = 16) {
    ModelConfig cfg;
    cfg.kind = kind;
    cfg.filters = {32, 64, 128};
    cfg.input_size = 32;
    cfg.patch = 8;
    cfg.bins = bins;
    return cfg;
}

ModelConfig full_config(EncoderKind kind, int bins = 64) {
    ModelConfig cfg;
    cfg.kind = kind;
    cfg.filters = {128, 256, 512};
    cfg.input_size = 128;
    cfg.patch = 16;
    cfg.bins = bins;
    return cfg;
}

Param* find_param(std::vector<Param*> params, const std::string& name) {
    for (Param* p : params)
        if (p->name == name) return p;
    REQUIRE_MESSAGE(false, ("missing param " + name).c_str());
    return nullptr;
}

}  // namespace

TEST_CASE("encoder shape contract at full scale: 128x128x9 -> 16x16x512") {
    Rng rng(51);
    Tensorf x = wamtest::rand_tensorf(Shape{1, 128, 128, 9}, rng);
    for (EncoderKind kind : {EncoderKind::Sequential, EncoderKind::Residual}) {
        ModelConfig cfg = full_config(kind);
        Rng init(1);
        Encoder enc(cfg, init);
        Graphf g;
        Var latent = enc.apply(g, g.constant(x), Mode::Train, false);
        CHECK(latent.shape == Shape{1, 16, 16, 512});
    }
}

TEST_CASE("encoder shape contract at desk scale: 32x32x9 -> 4x4x128") {
    Rng rng(52);
    Tensorf x = wamtest::rand_tensorf(Shape{2, 32, 32, 9}, rng);
    for (EncoderKind kind : {EncoderKind::Sequential, EncoderKind::Residual}) {
        ModelConfig cfg = desk_config(kind);
        Rng init(1);
        Encoder enc(cfg, init);
        Graphf g;
        Var latent = enc.apply(g, g.constant(x), Mode::Train, false);
        CHECK(latent.shape == Shape{2, 4, 4, 128});
    }
}

TEST_CASE("sequential encoder: zero input with zero biases gives a zero latent") {
    ModelConfig cfg = desk_config(EncoderKind::Sequential);
    Rng init(2);
    Encoder enc(cfg, init);  // biases and beta start at zero
    Tensorf x(Shape{1, 32, 32, 9});
    Graphf g;
    Var latent = enc.apply(g, g.constant(x), Mode::Train, false);
    for (float v : g.value(latent).data) CHECK(v == 0.0f);
}

TEST_CASE("residual encoder has strictly more parameters than sequential") {
    ModelConfig seq = desk_config(EncoderKind::Sequential);
    ModelConfig res = desk_config(EncoderKind::Residual);
    Rng r1(3), r2(3);
    Encoder enc_seq(seq, r1);
    Encoder enc_res(res, r2);
    CHECK(enc_res.param_count() > enc_seq.param_count());
}

TEST_CASE("residual wiring: manual with-skip replica matches, no-skip differs") {
    ModelConfig cfg = desk_config(EncoderKind::Residual);
    cfg.input_size = 16;  // smaller spatial extent keeps the replica cheap
    cfg.patch = 8;        // latent 2x2 pools onto a 2x2 patch grid
    PretrainModel model(cfg, 77);
    Rng rng(53);
    Tensorf x = wamtest::rand_tensorf(Shape{1, 16, 16, 9}, rng);

    // model path first (its batch-norm states run once, from fresh)
    Graphf gm;
    Var latent = model.encoder().apply(gm, gm.constant(x), Mode::Train, false);
    Tensorf got = gm.value(latent);

    // manual replica from the named parameters
    auto params = model.encoder().params();
    auto run_manual = [&](bool with_skip) {
        Graphf g;
        Var h = g.constant(x);
        for (int b = 0; b < 3; ++b) {
            Var act{};
            for (int l = 0; l < 4; ++l) {
                const std::string base = "enc.b" + std::to_string(b) + "." + std::to_string(l);
                Param* k = find_param(params, base + ".conv.kernel");
                Param* bias = find_param(params, base + ".conv.bias");
                Param* gamma = find_param(params, base + ".bn.gamma");
                Param* beta = find_param(params, base + ".bn.beta");
                Var in = l == 0 ? h : act;
                Var pre = g.conv2d_same(in, g.constant(k->value), g.constant(bias->value));
                BatchNormState<float> fresh(gamma->value.shape[0]);
                pre = g.batch_norm(pre, g.constant(gamma->value), g.constant(beta->value), fresh,
                                   Mode::Train);
                if (l > 0 && with_skip) pre = g.add(pre, act);
                act = g.gelu(pre);
            }
            h = g.max_pool2(act);
        }
        return g.value(h);
    };

    Tensorf with_skip = run_manual(true);
    REQUIRE(with_skip.numel() == got.numel());
    for (std::int64_t i = 0; i < got.numel(); ++i)
        CHECK(with_skip[i] == doctest::Approx(got[i]).epsilon(1e-5));

    Tensorf no_skip = run_manual(false);
    double max_diff = 0.0;
    for (std::int64_t i = 0; i < got.numel(); ++i)
        max_diff = std::max(max_diff, std::fabs(static_cast<double>(no_skip[i]) - got[i]));
    CHECK(max_diff > 1e-3);  // skips are load-bearing
}

TEST_CASE("decoder widths and logit shapes across bin counts") {
    for (int bins : {4, 8, 16, 32, 64}) {
        ModelConfig cfg = full_config(EncoderKind::Sequential, bins);
        PretrainModel model(cfg, 5);
        Param* w = find_param(model.params(), "dec.dense.w");
        CHECK(w->value.shape == Shape{512, 9 * bins});
        if (bins == 64) CHECK(w->value.shape[1] == 576);

        Rng rng(54);
        Tensorf x = wamtest::rand_tensorf(Shape{128, 128, 9}, rng);
        Tensorf logits = model.decode_sample(x, Mode::Train);
        CHECK(logits.shape == Shape{8, 8, 9, bins});
    }
}

TEST_CASE("decoder at desk scale: K=4 gives width 36 and shape (4,4,9,4)") {
    ModelConfig cfg = desk_config(EncoderKind::Sequential, 4);
    PretrainModel model(cfg, 6);
    Param* w = find_param(model.params(), "dec.dense.w");
    CHECK(w->value.shape == Shape{128, 36});
    Rng rng(55);
    Tensorf x = wamtest::rand_tensorf(Shape{32, 32, 9}, rng);
    Tensorf logits = model.decode_sample(x, Mode::Train);
    CHECK(logits.shape == Shape{4, 4, 9, 4});
}

TEST_CASE("regression head: six outputs, deterministic inference") {
    ModelConfig cfg = desk_config(EncoderKind::Residual);
    WamModel model(cfg, 7);
    Rng rng(56);
    Tensorf x = wamtest::rand_tensorf(Shape{32, 32, 9}, rng);
    Tensorf first = model.predict_sample(x, Mode::Train);  // initializes bn stats
    CHECK(first.shape == Shape{6});
    Tensorf a = model.predict_sample(x);
    Tensorf b = model.predict_sample(x);
    CHECK(a.shape == Shape{6});
    for (int i = 0; i < 6; ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("regression head: zero latent gives the bias-path output") {
    ModelConfig cfg = desk_config(EncoderKind::Sequential);
    WamModel model(cfg, 8);
    Tensorf x(Shape{32, 32, 9});  // zero input, zero conv biases -> zero latent
    Tensorf pred = model.predict_sample(x, Mode::Train);

    Param* fc_b = find_param(model.all_params(), "head.fc.b");
    Param* out_b = find_param(model.all_params(), "head.out.b");
    // the affine chain at zero collapses to out.b because fc.b is zero-init
    for (float v : fc_b->value.data) CHECK(v == 0.0f);
    for (int i = 0; i < 6; ++i) CHECK(pred[i] == doctest::Approx(out_b->value[i]));
}

TEST_CASE("dropout is active in train mode on the regression head") {
    ModelConfig cfg = desk_config(EncoderKind::Sequential);
    cfg.dropout = 0.7;
    WamModel model(cfg, 9);
    Rng rng(57);
    Tensorf x = wamtest::rand_tensorf(Shape{1, 32, 32, 9}, rng);
    Graphf g;
    Rng d1(100), d2(200);
    Var p1 = model.predict(g, g.constant(x), Mode::Train, d1, false);
    Var p2 = model.predict(g, g.constant(x), Mode::Train, d2, false);
    double diff = 0.0;
    for (int i = 0; i < 6; ++i)
        diff += std::fabs(static_cast<double>(g.value(p1)[i]) - g.value(p2)[i]);
    CHECK(diff > 0.0);
}

TEST_CASE("checkpoint round trip reproduces forward output bit-exactly") {
    ModelConfig cfg = desk_config(EncoderKind::Residual);
    PretrainModel model(cfg, 10);
    Rng rng(58);
    Tensorf x = wamtest::rand_tensorf(Shape{32, 32, 9}, rng);
    (void)model.decode_sample(x, Mode::Train);  // initialize running stats
    Tensorf before = model.decode_sample(x);

    geo::NormalizationStats stats;
    const std::string path = "/tmp/wam_test_model.ckpt";
    model.save(path, stats, 4242);

    PretrainModel::Loaded loaded = PretrainModel::load(path);
    CHECK(loaded.rng_seed == 4242);
    Tensorf after = loaded.model->decode_sample(x);
    REQUIRE(after.numel() == before.numel());
    for (std::int64_t i = 0; i < before.numel(); ++i) CHECK(after[i] == before[i]);
}

TEST_CASE("loading a sequential checkpoint into a residual config fails") {
    ModelConfig seq = desk_config(EncoderKind::Sequential);
    PretrainModel model(seq, 11);
    geo::NormalizationStats stats;
    const std::string path = "/tmp/wam_test_model_seq.ckpt";
    model.save(path, stats, 1);
    ModelConfig res = desk_config(EncoderKind::Residual);
    CHECK_THROWS_WITH_AS(PretrainModel::load_expect(path, res),
                         doctest::Contains("fingerprint mismatch"), Error);
    CHECK_NOTHROW(PretrainModel::load_expect(path, seq));
}

TEST_CASE("frozen encoder stays bit-identical through head updates") {
    ModelConfig cfg = desk_config(EncoderKind::Sequential);
    PretrainModel pre(cfg, 12);
    Rng rng(59);
    Tensorf x = wamtest::rand_tensorf(Shape{4, 32, 32, 9}, rng);
    {
        Graphf g;
        (void)pre.encoder().apply(g, g.constant(x), Mode::Train, false);  // init bn stats
    }
    WamModel model(pre, 13);

    std::vector<wam::AVec<float>> snapshot;
    for (Param* p : model.encoder().params()) snapshot.push_back(p->value.data);

    Tensorf target(Shape{4, 6});
    target.fill(0.5f);
    Rng drop(60);
    for (int step = 0; step < 3; ++step) {
        Graphf g;
        Var out = model.predict(g, g.constant(x), Mode::Train, drop, true);
        Var loss = g.mse(out, target);
        g.backward(loss);
        adam_step<float>(model.head_params(), 1e-3);
    }

    auto params = model.encoder().params();
    for (std::size_t i = 0; i < params.size(); ++i) {
        REQUIRE(params[i]->value.data.size() == snapshot[i].size());
        for (std::size_t j = 0; j < snapshot[i].size(); ++j)
            CHECK(params[i]->value.data[j] == snapshot[i][j]);
    }

    bool moved = false;
    for (Param* p : model.head_params()) moved = moved || p->step_count > 0;
    CHECK(moved);
}

TEST_CASE("config canonical text round trips") {
    ModelConfig cfg = desk_config(EncoderKind::Residual, 32);
    cfg.dropout = 0.55;
    ModelConfig back = ModelConfig::from_canonical_text(cfg.canonical_text());
    CHECK(back.fingerprint() == cfg.fingerprint());
    CHECK(back.kind == cfg.kind);
    CHECK(back.bins == 32);
    CHECK(back.input_size == 32);
    CHECK(back.dropout == doctest::Approx(0.55));
}
