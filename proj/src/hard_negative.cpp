#include "fane/hard_negative.hpp"

#include <algorithm>
#include <cmath>

namespace fane {

Mat negative_indicator(const Mat& H) {
    Mat y = H;
    for (double& v : y.data) {
        if (v != 0.0 && v != 1.0) throw BadEntry("negative_indicator: H entries must be 0 or 1");
        v = 1.0 - v;
    }
    for (int i = 0; i < std::min(y.rows, y.cols); ++i) y(i, i) = 0.0;
    return y;
}

HardWeights hard_weights(const Mat& sims, const Mat& y, double tau3) {
    if (tau3 <= 0.0) throw InvalidSpec("hard_weights: tau3 must be > 0");
    if (!sims.same_shape(y)) throw DimMismatch("hard_weights: shape mismatch");
    if (sims.rows != sims.cols) throw DimMismatch("hard_weights: similarity matrix must be square");
    const int n = sims.rows;
    HardWeights out;
    out.weights = Mat(n, n);
    for (int i = 0; i < n; ++i) {
        int n_neg = 0;
        double denom = 0.0;
        for (int k = 0; k < n; ++k) {
            if (k == i || y(i, k) == 0.0) continue;
            ++n_neg;
            denom += sims(i, k) / tau3;
        }
        if (n_neg == 0) {
            out.fallback_rows.push_back(i);  // all-zero row
            continue;
        }
        bool degenerate = std::abs(denom) < 1e-8;
        if (!degenerate) {
            for (int j = 0; j < n; ++j) {
                if (y(i, j) == 0.0) continue;
                const double w = (sims(i, j) / tau3) / denom;
                if (w < 0.0) {
                    degenerate = true;
                    break;
                }
                out.weights(i, j) = w;
            }
        }
        if (degenerate) {
            for (int j = 0; j < n; ++j) out.weights(i, j) = y(i, j) != 0.0 ? 1.0 / n_neg : 0.0;
            out.fallback_rows.push_back(i);
        }
    }
    return out;
}

ad::Var intra_modal_loss(ad::Tape& tape, ad::Var g, const Mat& y, const Mat& weights, double tau3) {
    // copy the batch size now: pushing ops below may reallocate the tape's
    // node storage and invalidate references returned by value()
    const int b = tape.value(g).rows;
    if (b != y.rows) throw DimMismatch("intra_modal_loss: batch size mismatch");
    for (int i = 0; i < b; ++i)
        if (std::abs(row_norm(tape.value(g), i) - 1.0) > 1e-4)
            throw NonUnitRows("intra_modal_loss: rows must be unit norm");

    // exponent e_ij = (y w / tau3) * s_ij; zero where y = 0, so those pairs
    // contribute exp(0) = 1 exactly as the printed sum does.
    Mat coeff = hadamard(y, weights);
    for (double& v : coeff.data) v /= tau3;
    const ad::Var sims = tape.matmul_nt(g, g);
    const ad::Var exponents = tape.mul_const(sims, coeff);
    return tape.scale(tape.sum(tape.logsumexp_rows(exponents)), 1.0 / b);
}

}  // namespace fane
