#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lckasr/complexity.hpp"
#include "lckasr/graph.hpp"
#include "lckasr/model.hpp"
#include "testutil.hpp"

using namespace lckasr;
using namespace testutil;

namespace {

ModelConfig tiny_config(AttentionKind kind = AttentionKind::Lcka) {
    ModelConfig cfg;
    cfg.scale = 2;
    cfg.channels = 24;
    cfg.blocks = 2;
    cfg.attention.kind = kind;
    cfg.seed = 41;
    return cfg;
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("build is deterministic for a fixed seed") {
    ModelConfig cfg = tiny_config();
    ParamStore a = build_model(cfg);
    ParamStore b = build_model(cfg);
    REQUIRE(a.count() == b.count());
    for (std::size_t i = 0; i < a.count(); ++i) {
        CHECK(a.entries()[i].name == b.entries()[i].name);
        CHECK(a.entries()[i].tensor.vec() == b.entries()[i].tensor.vec());
    }

    cfg.seed = 42;
    ParamStore c = build_model(cfg);
    CHECK(c.entries()[0].tensor.vec() != a.entries()[0].tensor.vec());
}

TEST_CASE("build rejects C = 47 citing the divisibility constraint") {
    ModelConfig cfg = tiny_config();
    cfg.channels = 47;
    CHECK_THROWS_WITH_AS(build_model(cfg), doctest::Contains("C divisible by 3"), ConfigError);
}

TEST_CASE("parameter totals match the analyzer across the config matrix") {
    for (int channels : {24, 48})
        for (int blocks : {2, 8})
            for (int scale : {2, 3, 4})
                for (AttentionKind kind : {AttentionKind::Lka, AttentionKind::Lska,
                                           AttentionKind::Lcka, AttentionKind::None}) {
                    ModelConfig cfg;
                    cfg.channels = channels;
                    cfg.blocks = blocks;
                    cfg.scale = scale;
                    cfg.attention.kind = kind;
                    CAPTURE(channels);
                    CAPTURE(blocks);
                    CAPTURE(scale);
                    CAPTURE(attention_kind_name(kind));
                    CHECK(build_model(cfg).total_scalars() == count_params(cfg).total_params);
                }
}

TEST_CASE("parameter count is monotone over attention variants") {
    auto total = [](AttentionKind kind) {
        ModelConfig cfg = tiny_config(kind);
        return count_params(cfg).total_params;
    };
    const auto none = total(AttentionKind::None);
    const auto lska = total(AttentionKind::Lska);
    const auto lcka = total(AttentionKind::Lcka);
    const auto lka = total(AttentionKind::Lka);
    CHECK(none < lska);
    CHECK(lska == lcka);
    CHECK(lcka < lka);
}

TEST_CASE("the ablation rows are plain configs of one code path") {
    // baseline | +mbsconv | +mbsconv+lska | +mbsconv+lcka
    ModelConfig baseline = tiny_config(AttentionKind::None);
    baseline.mbsconv = false;
    ModelConfig with_mbs = tiny_config(AttentionKind::None);
    ModelConfig with_lska = tiny_config(AttentionKind::Lska);
    ModelConfig with_lcka = tiny_config(AttentionKind::Lcka);
    for (const auto& cfg : {baseline, with_mbs, with_lska, with_lcka}) {
        ParamStore store = build_model(cfg);
        Tensor x = random_tensor<float>({1, 3, 8, 8}, 71, 0.0, 1.0);
        Tensor y = forward(store, cfg, x);
        CHECK(y.shape() == Shape4{1, 3, 16, 16});
    }
}

TEST_CASE("every trunk tensor keeps the LR spatial size") {
    ModelConfig cfg = tiny_config();
    ShapeCtx ctx;
    Shape4 out = lcan_graph(ctx, Shape4{1, 3, 10, 14}, cfg);
    CHECK(out == Shape4{1, 3, 20, 28});
    // all conv rows ran at 10x14: their MAC counts are multiples of 10*14
    for (const auto& row : ctx.rows) CHECK(row.macs % (10 * 14) == 0);
}

TEST_CASE("forward: output shape and determinism") {
    ModelConfig cfg = tiny_config();
    ParamStore store = build_model(cfg);
    Tensor x = random_tensor<float>({1, 3, 8, 8}, 72, 0.0, 1.0);
    Tensor y1 = forward(store, cfg, x);
    Tensor y2 = forward(store, cfg, x);
    CHECK(y1.shape() == Shape4{1, 3, 16, 16});
    CHECK(y1.vec() == y2.vec());
    for (float v : y1.vec()) CHECK(std::isfinite(v));
}

TEST_CASE("forward rejects non-finite parameters naming the tensor") {
    ModelConfig cfg = tiny_config();
    ParamStore store = build_model(cfg);
    store.tensor("marb.1.fuse.weight")[0] = std::numeric_limits<float>::quiet_NaN();
    Tensor x(1, 3, 8, 8, 0.5f);
    CHECK_THROWS_WITH_AS(forward(store, cfg, x), doctest::Contains("marb.1.fuse.weight"),
                         NumericError);
}

TEST_CASE("forward equals a hand-wired oracle of the block ops") {
    ModelConfig cfg = tiny_config();
    cfg.blocks = 2;
    ParamStore store = build_model(cfg);
    Tensor x = random_tensor<float>({1, 3, 16, 16}, 73, 0.0, 1.0);

    EagerCtx ctx(store);
    Tensor rep = replicate_channels(x, cfg.replication);
    Tensor f0 = mbsconv_block(ctx, rep, "shallow", cfg.channels, cfg.bias, cfg.mbsconv);
    Tensor f1 = marb_block(ctx, f0, "marb.0", cfg);
    Tensor f2 = marb_block(ctx, f1, "marb.1", cfg);
    Tensor fused = conv2d(channel_concat(std::vector<Tensor>{f1, f2}),
                          store.tensor("fusion.pw.weight"), &store.tensor("fusion.pw.bias"),
                          pointwise_geom(true));
    fused = mbsconv_block(ctx, gelu(fused), "fusion.smooth", cfg.channels, cfg.bias, cfg.mbsconv);
    Tensor skip = ewise_add(fused, f0);
    Tensor recon = conv2d(skip, store.tensor("recon.conv.weight"),
                          &store.tensor("recon.conv.bias"), standard_geom(3, 3, true));
    Tensor want = pixel_shuffle(recon, cfg.scale);

    CHECK(max_abs_diff(forward(store, cfg, x), want) < 1e-6);
}

TEST_CASE("self-ensemble of an equivariant stub equals the plain output") {
    // nearest-neighbor x2 upsampling commutes with the dihedral group
    auto stub = [](const Tensor& x) {
        Tensor y(x.n(), x.c(), x.h() * 2, x.w() * 2);
        for (int n = 0; n < x.n(); ++n)
            for (int c = 0; c < x.c(); ++c)
                for (int h = 0; h < y.h(); ++h)
                    for (int w = 0; w < y.w(); ++w)
                        y.at(n, c, h, w) = x.at(n, c, h / 2, w / 2);
        return y;
    };
    Tensor x = random_tensor<float>({1, 3, 6, 6}, 74, 0.0, 1.0);
    CHECK(max_abs_diff(ensemble_over(stub, x), stub(x)) < 1e-6);
}

TEST_CASE("self-ensemble of a constant image is constant away from the borders") {
    ModelConfig cfg = tiny_config();
    ParamStore store = build_model(cfg);
    const int size = 96;
    Tensor x(1, 3, size, size, 0.25f);
    Tensor ens = forward_ensemble(store, cfg, x);

    // group-averaging makes the result invariant under every transform
    for (int t = 0; t < 8; ++t)
        CHECK(max_abs_diff(dihedral_apply(ens, t), ens) < 1e-5);

    // zero padding breaks constancy only within the receptive field of the
    // border; the interior must be a single value
    const int margin = 40 * cfg.scale;
    for (int c = 0; c < 3; ++c) {
        const float ref = ens.at(0, c, margin, margin);
        for (int h = margin; h < size * cfg.scale - margin; ++h)
            for (int w = margin; w < size * cfg.scale - margin; ++w)
                CHECK(ens.at(0, c, h, w) == doctest::Approx(ref).epsilon(1e-6));
    }
}

TEST_CASE("self-ensemble equals the explicit mean of 8 transformed forwards") {
    ModelConfig cfg = tiny_config();
    ParamStore store = build_model(cfg);
    Tensor x = random_tensor<float>({1, 3, 8, 8}, 75, 0.0, 1.0);

    Tensor sum;
    for (int t = 0; t < 8; ++t) {
        Tensor y = dihedral_invert(forward(store, cfg, dihedral_apply(x, t)), t);
        sum = t == 0 ? y : ewise_add(sum, y);
    }
    Tensor want(sum.shape());
    for (std::size_t i = 0; i < sum.size(); ++i) want[i] = sum[i] / 8.0f;

    CHECK(max_abs_diff(forward_ensemble(store, cfg, x), want) < 1e-6);
}

TEST_CASE("dihedral transforms invert exactly") {
    Tensor x = random_tensor<float>({2, 3, 4, 7}, 76);
    for (int t = 0; t < 8; ++t)
        CHECK(max_abs_diff(dihedral_invert(dihedral_apply(x, t), t), x) == 0.0);
}

TEST_CASE("weight file round trip is bit-identical") {
    ModelConfig cfg = tiny_config();
    ParamStore store = build_model(cfg);
    const std::string path = temp_path("lckasr_roundtrip.lcw");
    save_model(store, path);
    ParamStore loaded = load_model(path, cfg);
    REQUIRE(loaded.count() == store.count());
    for (std::size_t i = 0; i < store.count(); ++i) {
        CHECK(loaded.entries()[i].name == store.entries()[i].name);
        CHECK(loaded.entries()[i].dims == store.entries()[i].dims);
        CHECK(loaded.entries()[i].tensor.vec() == store.entries()[i].tensor.vec());
    }
    std::filesystem::remove(path);
}

TEST_CASE("truncated weight file is rejected with a byte offset") {
    ModelConfig cfg = tiny_config();
    ParamStore store = build_model(cfg);
    const std::string path = temp_path("lckasr_trunc.lcw");
    save_model(store, path);
    const auto full = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, full / 2);
    CHECK_THROWS_AS(load_model(path, cfg), FormatError);
    try {
        load_model(path, cfg);
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("weight file from config A is rejected against config B") {
    ModelConfig a = tiny_config();
    ModelConfig b = tiny_config(AttentionKind::Lka);
    const std::string path = temp_path("lckasr_finger.lcw");
    save_model(build_model(a), path);
    CHECK_THROWS_WITH_AS(load_model(path, b), doctest::Contains("fingerprint"), FormatError);
    std::filesystem::remove(path);
}

TEST_CASE("bad magic is rejected at offset zero") {
    const std::string path = temp_path("lckasr_magic.lcw");
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOTAWEIGHTFILE";
    }
    try {
        load_param_store(path);
        CHECK(false);
    } catch (const FormatError& e) {
        CHECK(e.offset == 0);
    }
    std::filesystem::remove(path);
}
