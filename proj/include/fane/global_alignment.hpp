#pragma once

#include "fane/autodiff.hpp"
#include "fane/mat.hpp"

namespace fane {

// H in {0,1} -> h in {-1,+1}, elementwise 2H - 1.
Mat pair_labels(const Mat& H);

// L_mp = (1/B) sum_ij softplus(-h_ij * z_ij) with z_ij = <v_i, t_j>/tau1 + b.
// eq6_literal instead evaluates the printed form softplus(h_ij * (-s/tau1 + b)).
ad::Var multi_positive_loss(ad::Tape& tape, ad::Var v_g, ad::Var t_g, const Mat& labels, double tau1,
                            ad::Var bias, bool eq6_literal = false);

}  // namespace fane
