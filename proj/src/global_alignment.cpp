#include "fane/global_alignment.hpp"

#include <cmath>

namespace fane {

Mat pair_labels(const Mat& H) {
    Mat h = H;
    for (double& v : h.data) {
        if (v != 0.0 && v != 1.0) throw BadEntry("pair_labels: H entries must be 0 or 1");
        v = 2.0 * v - 1.0;
    }
    return h;
}

namespace {
void check_unit_rows(const Mat& m, const char* what) {
    for (int i = 0; i < m.rows; ++i)
        if (std::abs(row_norm(m, i) - 1.0) > 1e-4)
            throw NonUnitRows(std::string(what) + ": row norms must be 1");
}
}  // namespace

ad::Var multi_positive_loss(ad::Tape& tape, ad::Var v_g, ad::Var t_g, const Mat& labels, double tau1,
                            ad::Var bias, bool eq6_literal) {
    if (tau1 <= 0.0) throw InvalidSpec("multi_positive_loss: tau1 must be > 0");
    const Mat& vv = tape.value(v_g);
    const Mat& tv = tape.value(t_g);
    if (vv.rows != labels.rows || tv.rows != labels.cols)
        throw DimMismatch("multi_positive_loss: label shape mismatch");
    check_unit_rows(vv, "multi_positive_loss(v_g)");
    check_unit_rows(tv, "multi_positive_loss(t_g)");

    const int batch = labels.rows;
    const ad::Var sims = tape.matmul_nt(v_g, t_g);  // rows unit, so dot == cosine
    ad::Var per_pair;
    if (eq6_literal) {
        // Eq. 6 exactly as printed: softplus(h * (-s/tau1 + b))
        const ad::Var inner = tape.add_scalar_broadcast(tape.scale(sims, -1.0 / tau1), bias);
        per_pair = tape.softplus(tape.mul_const(inner, labels));
    } else {
        // SigLIP convention: logit z = s/tau1 + b, loss softplus(-h z)
        const ad::Var z = tape.add_scalar_broadcast(tape.scale(sims, 1.0 / tau1), bias);
        per_pair = tape.softplus(tape.mul_const(z, scale(labels, -1.0)));
    }
    return tape.scale(tape.sum(per_pair), 1.0 / batch);
}

}  // namespace fane
