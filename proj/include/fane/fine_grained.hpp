#pragma once

#include <string>
#include <vector>

#include "fane/autodiff.hpp"
#include "fane/encoders.hpp"
#include "fane/mat.hpp"

namespace fane {

enum class PoolNormalizer { Sigmoid, Softmax };

// Per-patch gates for one sentence: sigmoid(MLP2(tanh(MLP1([t^{l,u} ; v^{l,k}])))).
// Returns 1 x I, entries strictly in (0,1).
ad::Var sparse_mask(ad::Tape& tape, ad::Var t_lu, ad::Var v_l, const ParamVars& p);

// Eq.-10 style pooling: logits a_k = (t W_q)(v_k W_k)^T / sqrt(D), gated
// multiplicatively by m_u before the normalizer; pooled value is LayerNormed
// then projected by W_o.
ad::Var text_conditioned_pool(ad::Tape& tape, ad::Var t_lu, ad::Var v_l, ad::Var m_u, const ParamVars& p,
                              PoolNormalizer norm = PoolNormalizer::Sigmoid);

// Sum of gate activations over all sentences, divided by the sentence count.
ad::Var sparsity_loss(ad::Tape& tape, const std::vector<ad::Var>& masks);

// Within-report symmetric InfoNCE between v_tc rows and t_l rows. Returns the
// summed (not averaged) directional losses for one report.
struct LocalContrastTerms {
    ad::Var t2i_sum;
    ad::Var i2t_sum;
};
LocalContrastTerms local_contrastive_terms(ad::Tape& tape, ad::Var v_tc, ad::Var t_l, double tau2);

// Batch-level fine-grained pipeline over already-encoded features.
struct FineGrainedBatch {
    ad::Var l_tc;
    ad::Var l_spa;
    std::vector<std::vector<ad::Var>> gates;  // [sample][sentence] -> 1 x I
};
FineGrainedBatch fine_grained_batch(ad::Tape& tape, const std::vector<ImageFeatures>& images,
                                    const std::vector<ReportFeatures>& reports, const ParamVars& p,
                                    double tau2, PoolNormalizer norm = PoolNormalizer::Sigmoid);

// Batch mean L_tc from summed per-report terms: (sum_t2i + sum_i2t) / (2 * total_sentences).
ad::Var combine_local_contrastive(ad::Tape& tape, const std::vector<LocalContrastTerms>& terms,
                                  int total_sentences);

// Reshapes a per-patch weight vector to grid_side x grid_side, min-max
// normalizes to [0,255] (zero range maps to 0) and writes binary PGM (P5).
void export_attention(const Mat& weights, int grid_side, int upscale, const std::string& path);

}  // namespace fane
