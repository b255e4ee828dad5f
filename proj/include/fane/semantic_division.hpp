#pragma once

#include "fane/mat.hpp"

namespace fane {

struct DivisionParams {
    double ema_alpha = 0.05;
    double epsilon = 1e-8;
    double kappa = 0.95;
};

struct SimilarityState {
    Mat prototype;        // 1 x D_k
    double base_sim_raw;  // o-hat*
    double base_sim_ema;  // o*
    Mat S;                // B x B raw cosine
    Mat S_tilde;          // B x B center-shift normalized
    Mat H;                // B x B, {0,1}
    long step;
};

// p_b = mean of L2-normalized rows
Mat batch_prototype(const Mat& t_g);

// o-hat* = mean cosine of normalized rows against the normalized prototype
double base_similarity(const Mat& t_g, const Mat& prototype);

// o*_t = alpha * o-hat_t + (1 - alpha) * o*_{t-1}; at t=0 the output is o-hat_0
double ema_update(double prev_smoothed, double new_raw, double alpha);

Mat normalize_similarity(const Mat& S, double o_star, double epsilon);

// H_ij = 1 iff S~_ij > kappa; diagonal forced to 1
Mat class_matrix(const Mat& S_tilde, double kappa);

// Full per-batch pipeline on knowledge embeddings. ema_state carries the
// smoothed o* across steps (ignored and overwritten at step 0).
SimilarityState divide(const Mat& knowledge_t_g, const DivisionParams& params, double& ema_state, long step);

}  // namespace fane
