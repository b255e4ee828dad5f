#include "fane/semantic_division.hpp"

#include <algorithm>

namespace fane {

Mat batch_prototype(const Mat& t_g) {
    const Mat unit = l2_normalize_rows(t_g);
    Mat p(1, t_g.cols);
    for (int i = 0; i < unit.rows; ++i)
        for (int j = 0; j < unit.cols; ++j) p(0, j) += unit(i, j);
    p = scale(p, 1.0 / unit.rows);
    if (row_norm(p, 0) < 1e-12)
        throw ZeroPrototype("batch_prototype: normalized rows cancel to zero");
    return p;
}

double base_similarity(const Mat& t_g, const Mat& prototype) {
    if (row_norm(prototype, 0) < 1e-12)
        throw ZeroPrototype("base_similarity: prototype norm is zero (degenerate batch)");
    const Mat unit = l2_normalize_rows(t_g);
    const Mat pn = l2_normalize_rows(prototype);
    double acc = 0.0;
    for (int i = 0; i < unit.rows; ++i) acc += dot_rows(unit, i, pn, 0);
    return acc / unit.rows;
}

double ema_update(double prev_smoothed, double new_raw, double alpha) {
    return alpha * new_raw + (1.0 - alpha) * prev_smoothed;
}

Mat normalize_similarity(const Mat& S, double o_star, double epsilon) {
    Mat out = S;
    const double denom = 1.0 - o_star + epsilon;
    for (double& v : out.data) v = (v - o_star) / denom;
    ensure_finite(out, "normalize_similarity");
    return out;
}

Mat class_matrix(const Mat& S_tilde, double kappa) {
    Mat H(S_tilde.rows, S_tilde.cols);
    for (int i = 0; i < H.rows; ++i)
        for (int j = 0; j < H.cols; ++j) H(i, j) = S_tilde(i, j) > kappa ? 1.0 : 0.0;
    const int n = std::min(H.rows, H.cols);
    for (int i = 0; i < n; ++i) H(i, i) = 1.0;  // ground-truth pair always kept
    return H;
}

SimilarityState divide(const Mat& knowledge_t_g, const DivisionParams& params, double& ema_state, long step) {
    SimilarityState st;
    st.step = step;
    st.prototype = batch_prototype(knowledge_t_g);
    st.base_sim_raw = base_similarity(knowledge_t_g, st.prototype);
    ema_state = step == 0 ? st.base_sim_raw : ema_update(ema_state, st.base_sim_raw, params.ema_alpha);
    st.base_sim_ema = ema_state;
    st.S = cosine_sim_matrix(knowledge_t_g, knowledge_t_g);
    st.S_tilde = normalize_similarity(st.S, st.base_sim_ema, params.epsilon);
    st.H = class_matrix(st.S_tilde, params.kappa);
    return st;
}

}  // namespace fane
