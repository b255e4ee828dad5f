#include <doctest.h>

#include <cmath>

#include "fane/encoders.hpp"
#include "fane/rng.hpp"

using namespace fane;

namespace {

Dims small_dims() {
    Dims d;
    d.token_dim = 8;
    d.embed_dim = 12;
    d.mask_hidden = 6;
    return d;
}

std::vector<Mat> random_report(Rng& rng, int n_sent, int token_dim) {
    std::vector<Mat> out;
    for (int u = 0; u < n_sent; ++u) out.push_back(rng.normal_mat(3 + u % 3, token_dim, 1.0));
    return out;
}

}  // namespace

TEST_CASE("init_params: shapes, defaults and bias init") {
    const ModelParams p = init_params(5, Dims{});
    CHECK(p.dims.embed_dim == 128);
    CHECK(p.img_w1.rows == 16);
    CHECK(p.img_w1.cols == 128);
    CHECK(p.attn_wq.rows == 128);
    CHECK(p.attn_wq.cols == 128);
    CHECK(p.mask_w1.rows == 256);  // [t ; v] concat
    CHECK(p.bias_b.rows == 1);
    CHECK(p.bias_b.cols == 1);
    CHECK(p.bias_b(0, 0) == doctest::Approx(-10.0));
    for (double v : p.ln_gain.data) CHECK(v == 1.0);
    for (double v : p.ln_bias.data) CHECK(v == 0.0);
}

TEST_CASE("init_params: deterministic per seed") {
    const ModelParams a = init_params(7, small_dims());
    const ModelParams b = init_params(7, small_dims());
    const ModelParams c = init_params(8, small_dims());
    CHECK(a.img_w1.data == b.img_w1.data);
    CHECK(a.attn_wv.data == b.attn_wv.data);
    CHECK(a.img_w1.data != c.img_w1.data);
}

TEST_CASE("visit: canonical order covers 22 tensors") {
    ModelParams p = init_params(1, small_dims());
    int count = 0;
    std::string first, last;
    p.visit([&](const char* name, Mat&) {
        if (count == 0) first = name;
        last = name;
        ++count;
    });
    CHECK(count == 22);
    CHECK(first == "img_w1");
    CHECK(last == "bias_b");
}

TEST_CASE("encode_image: shapes and unit global embedding") {
    const Dims d = small_dims();
    const ModelParams params = init_params(3, d);
    Rng rng(9);
    const Mat patches = rng.normal_mat(9, d.token_dim, 1.0);
    ad::Tape tape;
    const ParamVars pv = register_params(tape, params);
    const ImageFeatures img = encode_image(tape, patches, pv, d);
    CHECK(tape.value(img.v_l).rows == 9);
    CHECK(tape.value(img.v_l).cols == d.embed_dim);
    CHECK(tape.value(img.v_g).rows == 1);
    CHECK(row_norm(tape.value(img.v_g), 0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("encode_image: patch permutation permutes v_l and leaves v_g fixed") {
    const Dims d = small_dims();
    const ModelParams params = init_params(3, d);
    Rng rng(10);
    const Mat patches = rng.normal_mat(6, d.token_dim, 1.0);
    Mat reversed(6, d.token_dim);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < d.token_dim; ++j) reversed(i, j) = patches(5 - i, j);

    ad::Tape ta, tb;
    const ImageFeatures a = encode_image(ta, patches, register_params(ta, params), d);
    const ImageFeatures b = encode_image(tb, reversed, register_params(tb, params), d);
    const Mat& vla = ta.value(a.v_l);
    const Mat& vlb = tb.value(b.v_l);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < d.embed_dim; ++j)
            CHECK(vla(i, j) == doctest::Approx(vlb(5 - i, j)).epsilon(1e-9));
    for (int j = 0; j < d.embed_dim; ++j)
        CHECK(ta.value(a.v_g)(0, j) == doctest::Approx(tb.value(b.v_g)(0, j)).epsilon(1e-9));
}

TEST_CASE("encode_report: shapes, unit t_g, stacked local rows") {
    const Dims d = small_dims();
    const ModelParams params = init_params(4, d);
    Rng rng(11);
    const std::vector<Mat> sentences = random_report(rng, 5, d.token_dim);
    ad::Tape tape;
    const ParamVars pv = register_params(tape, params);
    const ReportFeatures rep = encode_report(tape, sentences, pv, d);
    REQUIRE(rep.t_l_rows.size() == 5);
    CHECK(tape.value(rep.t_l).rows == 5);
    CHECK(tape.value(rep.t_l).cols == d.embed_dim);
    CHECK(row_norm(tape.value(rep.t_g), 0) == doctest::Approx(1.0).epsilon(1e-9));
    for (int u = 0; u < 5; ++u)
        for (int j = 0; j < d.embed_dim; ++j)
            CHECK(tape.value(rep.t_l)(u, j) == tape.value(rep.t_l_rows[u])(0, j));
}

TEST_CASE("encode_report: empty report throws") {
    const Dims d = small_dims();
    const ModelParams params = init_params(4, d);
    ad::Tape tape;
    const ParamVars pv = register_params(tape, params);
    CHECK_THROWS_AS(encode_report(tape, {}, pv, d), EmptyReport);
}

TEST_CASE("encoders: deterministic forward pass") {
    const Dims d = small_dims();
    const ModelParams params = init_params(6, d);
    Rng rng(12);
    const Mat patches = rng.normal_mat(9, d.token_dim, 1.0);
    ad::Tape ta, tb;
    const ImageFeatures a = encode_image(ta, patches, register_params(ta, params), d);
    const ImageFeatures b = encode_image(tb, patches, register_params(tb, params), d);
    CHECK(ta.value(a.v_g).data == tb.value(b.v_g).data);
    CHECK(ta.value(a.v_l).data == tb.value(b.v_l).data);
}

TEST_CASE("collect_grads: round trips through the tape") {
    const Dims d = small_dims();
    const ModelParams params = init_params(2, d);
    ad::Tape tape;
    const ParamVars pv = register_params(tape, params);
    REQUIRE(pv.vars.size() == 22);
    // loss = sum of all entries of img_w1 -> gradient of ones there, zeros elsewhere
    tape.backward(tape.sum(pv.img_w1));
    ModelParams grads = zeros_like(params);
    collect_grads(tape, pv, grads);
    for (double v : grads.img_w1.data) CHECK(v == 1.0);
    for (double v : grads.attn_wq.data) CHECK(v == 0.0);
    for (double v : grads.bias_b.data) CHECK(v == 0.0);
}
