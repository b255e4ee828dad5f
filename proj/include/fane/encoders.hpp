#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fane/autodiff.hpp"
#include "fane/mat.hpp"

namespace fane {

struct Dims {
    int token_dim = 16;
    int embed_dim = 128;   // shared D
    int mask_hidden = 32;  // mask-MLP hidden width
};

// All trainable tensors. The visit order below is the canonical flat order
// used by the optimizer, gradient checking, and checkpoints.
struct ModelParams {
    Dims dims;

    // image trunk: per-patch 2-layer MLP, tanh hidden
    Mat img_w1, img_b1, img_w2, img_b2;
    Mat img_pool_q;  // learned pooling query over patches

    // text pooling queries (token level and report level)
    Mat txt_token_q, txt_report_q;

    // four independent projection heads into the shared space
    Mat proj_img_local, proj_img_global, proj_txt_local, proj_txt_global;

    // cross-attention
    Mat attn_wq, attn_wk, attn_wv, attn_wo;
    Mat ln_gain, ln_bias;

    // mask MLP: [sentence ; patch] -> scalar gate logit
    Mat mask_w1, mask_b1, mask_w2, mask_b2;

    Mat bias_b;  // learnable sigmoid-loss bias, 1x1

    template <class F>
    void visit(F&& f) {
        f("img_w1", img_w1);
        f("img_b1", img_b1);
        f("img_w2", img_w2);
        f("img_b2", img_b2);
        f("img_pool_q", img_pool_q);
        f("txt_token_q", txt_token_q);
        f("txt_report_q", txt_report_q);
        f("proj_img_local", proj_img_local);
        f("proj_img_global", proj_img_global);
        f("proj_txt_local", proj_txt_local);
        f("proj_txt_global", proj_txt_global);
        f("attn_wq", attn_wq);
        f("attn_wk", attn_wk);
        f("attn_wv", attn_wv);
        f("attn_wo", attn_wo);
        f("ln_gain", ln_gain);
        f("ln_bias", ln_bias);
        f("mask_w1", mask_w1);
        f("mask_b1", mask_b1);
        f("mask_w2", mask_w2);
        f("mask_b2", mask_b2);
        f("bias_b", bias_b);
    }

    template <class F>
    void visit(F&& f) const {
        const_cast<ModelParams*>(this)->visit([&](const char* name, Mat& m) { f(name, static_cast<const Mat&>(m)); });
    }
};

ModelParams init_params(uint64_t seed, const Dims& dims, double b_init = -10.0);
ModelParams zeros_like(const ModelParams& p);

// Tape handles for every parameter tensor, registered in canonical order.
struct ParamVars {
    std::vector<ad::Var> vars;  // canonical order
    ad::Var img_w1, img_b1, img_w2, img_b2, img_pool_q;
    ad::Var txt_token_q, txt_report_q;
    ad::Var proj_img_local, proj_img_global, proj_txt_local, proj_txt_global;
    ad::Var attn_wq, attn_wk, attn_wv, attn_wo, ln_gain, ln_bias;
    ad::Var mask_w1, mask_b1, mask_w2, mask_b2, bias_b;
};

ParamVars register_params(ad::Tape& tape, const ModelParams& params);
void collect_grads(const ad::Tape& tape, const ParamVars& vars, ModelParams& grads_out);

struct ImageFeatures {
    ad::Var v_l;  // I x D
    ad::Var v_g;  // 1 x D, unit norm
};

struct ReportFeatures {
    std::vector<ad::Var> t_l_rows;  // per sentence, 1 x D
    ad::Var t_l;                    // P_i x D (stacked rows)
    ad::Var t_g;                    // 1 x D, unit norm
};

ImageFeatures encode_image(ad::Tape& tape, const Mat& patch_inputs, const ParamVars& p, const Dims& dims);
ReportFeatures encode_report(ad::Tape& tape, const std::vector<Mat>& sentence_inputs, const ParamVars& p,
                             const Dims& dims);

}  // namespace fane
