#include "fane/encoders.hpp"

#include <cmath>

#include "fane/rng.hpp"

namespace fane {

namespace {
constexpr double kAttnGain = 8.0;
}  // namespace

ModelParams init_params(uint64_t seed, const Dims& dims, double b_init) {
    Rng rng(seed);
    const int td = dims.token_dim;
    const int d = dims.embed_dim;
    const int mh = dims.mask_hidden;

    auto weight = [&](int fan_in, int fan_out) {
        return rng.normal_mat(fan_in, fan_out, 1.0 / std::sqrt(static_cast<double>(fan_in)));
    };

    ModelParams p;
    p.dims = dims;
    p.img_w1 = weight(td, d);
    p.img_b1 = Mat(1, d);
    p.img_w2 = weight(d, d);
    p.img_b2 = Mat(1, d);
    p.img_pool_q = weight(1, d);
    p.txt_token_q = weight(1, td);
    p.txt_report_q = weight(1, td);
    p.proj_img_local = weight(d, d);
    p.proj_img_global = weight(d, d);
    p.proj_txt_local = weight(td, d);
    p.proj_txt_global = weight(td, d);
    // larger gain on the pooling projections keeps the gated attention
    // logits a_k * m_k informative once the sparsity penalty shrinks the
    // gates; unit-gain init lets the local contrastive loss go dead
    p.attn_wq = scale(weight(d, d), kAttnGain);
    p.attn_wk = scale(weight(d, d), kAttnGain);
    p.attn_wv = weight(d, d);
    p.attn_wo = weight(d, d);
    p.ln_gain = Mat(1, d, 1.0);
    p.ln_bias = Mat(1, d);
    p.mask_w1 = weight(2 * d, mh);
    p.mask_b1 = Mat(1, mh);
    p.mask_w2 = weight(mh, 1);
    p.mask_b2 = Mat(1, 1);
    p.bias_b = Mat(1, 1, b_init);
    return p;
}

ModelParams zeros_like(const ModelParams& p) {
    ModelParams z = p;
    z.visit([](const char*, Mat& m) { std::fill(m.data.begin(), m.data.end(), 0.0); });
    return z;
}

ParamVars register_params(ad::Tape& tape, const ModelParams& params) {
    ParamVars v;
    auto reg = [&](const Mat& m) {
        const ad::Var var = tape.input(m);
        v.vars.push_back(var);
        return var;
    };
    v.img_w1 = reg(params.img_w1);
    v.img_b1 = reg(params.img_b1);
    v.img_w2 = reg(params.img_w2);
    v.img_b2 = reg(params.img_b2);
    v.img_pool_q = reg(params.img_pool_q);
    v.txt_token_q = reg(params.txt_token_q);
    v.txt_report_q = reg(params.txt_report_q);
    v.proj_img_local = reg(params.proj_img_local);
    v.proj_img_global = reg(params.proj_img_global);
    v.proj_txt_local = reg(params.proj_txt_local);
    v.proj_txt_global = reg(params.proj_txt_global);
    v.attn_wq = reg(params.attn_wq);
    v.attn_wk = reg(params.attn_wk);
    v.attn_wv = reg(params.attn_wv);
    v.attn_wo = reg(params.attn_wo);
    v.ln_gain = reg(params.ln_gain);
    v.ln_bias = reg(params.ln_bias);
    v.mask_w1 = reg(params.mask_w1);
    v.mask_b1 = reg(params.mask_b1);
    v.mask_w2 = reg(params.mask_w2);
    v.mask_b2 = reg(params.mask_b2);
    v.bias_b = reg(params.bias_b);
    return v;
}

void collect_grads(const ad::Tape& tape, const ParamVars& vars, ModelParams& grads_out) {
    size_t k = 0;
    grads_out.visit([&](const char*, Mat& m) { m = tape.grad(vars.vars[k++]); });
}

namespace {
// Learned-query attention pooling: softmax over items of <x_i, q>/sqrt(d).
ad::Var attention_pool(ad::Tape& t, ad::Var items, ad::Var query) {
    const int d = t.value(items).cols;
    const ad::Var logits = t.scale(t.matmul_nt(query, items), 1.0 / std::sqrt(static_cast<double>(d)));
    const ad::Var w = t.softmax_rows(logits);  // 1 x n
    return t.matmul(w, items);                 // 1 x d
}
}  // namespace

ImageFeatures encode_image(ad::Tape& tape, const Mat& patch_inputs, const ParamVars& p, const Dims& dims) {
    if (patch_inputs.cols != dims.token_dim) throw ShapeMismatch("encode_image: patch width != token_dim");
    const ad::Var x = tape.constant(patch_inputs);
    const ad::Var h1 = tape.tanh(tape.add_row_broadcast(tape.matmul(x, p.img_w1), p.img_b1));
    const ad::Var trunk = tape.add_row_broadcast(tape.matmul(h1, p.img_w2), p.img_b2);  // I x D

    ImageFeatures f;
    f.v_l = tape.matmul(trunk, p.proj_img_local);
    const ad::Var pooled = attention_pool(tape, trunk, p.img_pool_q);
    f.v_g = tape.l2_normalize_rows(tape.matmul(pooled, p.proj_img_global));
    return f;
}

ReportFeatures encode_report(ad::Tape& tape, const std::vector<Mat>& sentence_inputs, const ParamVars& p,
                             const Dims& dims) {
    if (sentence_inputs.empty()) throw EmptyReport("encode_report: report has no sentences");

    ReportFeatures f;
    std::vector<ad::Var> pooled_sentences;
    for (const Mat& tokens : sentence_inputs) {
        if (tokens.cols != dims.token_dim) throw ShapeMismatch("encode_report: token width != token_dim");
        const ad::Var tv = tape.constant(tokens);
        const ad::Var s = attention_pool(tape, tv, p.txt_token_q);  // 1 x token_dim
        pooled_sentences.push_back(s);
        f.t_l_rows.push_back(tape.matmul(s, p.proj_txt_local));
    }
    f.t_l = tape.stack_rows(f.t_l_rows);
    const ad::Var sent_stack = tape.stack_rows(pooled_sentences);
    const ad::Var report = attention_pool(tape, sent_stack, p.txt_report_q);
    f.t_g = tape.l2_normalize_rows(tape.matmul(report, p.proj_txt_global));
    return f;
}

}  // namespace fane
