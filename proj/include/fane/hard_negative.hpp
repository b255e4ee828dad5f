#pragma once

#include <vector>

#include "fane/autodiff.hpp"
#include "fane/mat.hpp"

namespace fane {

// y = 1 - H (negatives), diagonal 0.
Mat negative_indicator(const Mat& H);

struct HardWeights {
    Mat weights;  // B x B, zero on non-negatives
    std::vector<int> fallback_rows;
};

// Per-row normalized hardness weights w_ij = (y s/tau3) / sum_{k != i} y s/tau3.
// Degenerate rows (tiny denominator or any negative weight) fall back to
// uniform 1/#negatives; rows without negatives get all-zero weights. Both are
// recorded in fallback_rows.
HardWeights hard_weights(const Mat& sims, const Mat& y, double tau3);

// L = (1/B) sum_i log sum_j exp(y_ij w_ij s_ij / tau3); weights are
// stop-gradient constants, sims come from the tape (unit-norm rows).
ad::Var intra_modal_loss(ad::Tape& tape, ad::Var g, const Mat& y, const Mat& weights, double tau3);

}  // namespace fane
