#include "fane/fine_grained.hpp"

#include <cmath>
#include <fstream>

namespace fane {

ad::Var sparse_mask(ad::Tape& tape, ad::Var t_lu, ad::Var v_l, const ParamVars& p) {
    const Mat& tv = tape.value(t_lu);
    const Mat& vv = tape.value(v_l);
    if (tv.rows != 1 || tv.cols != vv.cols) throw ShapeMismatch("sparse_mask: sentence/patch width mismatch");
    const int patches = vv.rows;
    const ad::Var pairs = tape.concat_cols(tape.broadcast_row(t_lu, patches), v_l);  // I x 2D
    const ad::Var h = tape.tanh(tape.add_row_broadcast(tape.matmul(pairs, p.mask_w1), p.mask_b1));
    const ad::Var logits = tape.add_row_broadcast(tape.matmul(h, p.mask_w2), p.mask_b2);  // I x 1
    return tape.sigmoid(tape.transpose(logits));                                          // 1 x I
}

ad::Var text_conditioned_pool(ad::Tape& tape, ad::Var t_lu, ad::Var v_l, ad::Var m_u, const ParamVars& p,
                              PoolNormalizer norm) {
    const int d = tape.value(v_l).cols;
    const ad::Var q = tape.matmul(t_lu, p.attn_wq);                                               // 1 x D
    const ad::Var k = tape.matmul(v_l, p.attn_wk);                                                // I x D
    const ad::Var logits = tape.scale(tape.matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(d)));
    const ad::Var gated = tape.mul(logits, m_u);  // mask applied before the normalizer
    const ad::Var w = norm == PoolNormalizer::Sigmoid ? tape.sigmoid(gated) : tape.softmax_rows(gated);
    const ad::Var pooled = tape.matmul(w, tape.matmul(v_l, p.attn_wv));  // 1 x D
    return tape.matmul(tape.layer_norm_rows(pooled, p.ln_gain, p.ln_bias), p.attn_wo);
}

ad::Var sparsity_loss(ad::Tape& tape, const std::vector<ad::Var>& masks) {
    if (masks.empty()) return tape.constant(Mat(1, 1, 0.0));
    ad::Var acc = tape.sum(masks[0]);
    for (size_t u = 1; u < masks.size(); ++u) acc = tape.add(acc, tape.sum(masks[u]));
    return tape.scale(acc, 1.0 / static_cast<double>(masks.size()));
}

LocalContrastTerms local_contrastive_terms(ad::Tape& tape, ad::Var v_tc, ad::Var t_l, double tau2) {
    if (tau2 <= 0.0) throw InvalidSpec("local_contrastive: tau2 must be > 0");
    const ad::Var tn = tape.l2_normalize_rows(t_l);
    const ad::Var vn = tape.l2_normalize_rows(v_tc);
    const ad::Var sims = tape.scale(tape.matmul_nt(tn, vn), 1.0 / tau2);  // P x P, t rows vs v cols
    LocalContrastTerms out;
    // Per sentence u: -log softmax diag; denominators index this report only.
    out.t2i_sum = tape.sub(tape.sum(tape.logsumexp_rows(sims)), tape.trace(sims));
    out.i2t_sum = tape.sub(tape.sum(tape.logsumexp_rows(tape.transpose(sims))), tape.trace(sims));
    return out;
}

ad::Var combine_local_contrastive(ad::Tape& tape, const std::vector<LocalContrastTerms>& terms,
                                  int total_sentences) {
    ad::Var t2i = tape.constant(Mat(1, 1, 0.0));
    ad::Var i2t = tape.constant(Mat(1, 1, 0.0));
    for (const LocalContrastTerms& t : terms) {
        t2i = tape.add(t2i, t.t2i_sum);
        i2t = tape.add(i2t, t.i2t_sum);
    }
    return tape.scale(tape.add(t2i, i2t), 1.0 / (2.0 * total_sentences));
}

FineGrainedBatch fine_grained_batch(ad::Tape& tape, const std::vector<ImageFeatures>& images,
                                    const std::vector<ReportFeatures>& reports, const ParamVars& p,
                                    double tau2, PoolNormalizer norm) {
    if (images.size() != reports.size()) throw ShapeMismatch("fine_grained_batch: batch size mismatch");
    FineGrainedBatch out;
    std::vector<ad::Var> all_masks;
    std::vector<LocalContrastTerms> terms;
    int total_sentences = 0;
    for (size_t i = 0; i < images.size(); ++i) {
        const ReportFeatures& rep = reports[i];
        std::vector<ad::Var> v_tc_rows;
        std::vector<ad::Var> gates;
        for (const ad::Var& t_lu : rep.t_l_rows) {
            const ad::Var m_u = sparse_mask(tape, t_lu, images[i].v_l, p);
            gates.push_back(m_u);
            all_masks.push_back(m_u);
            v_tc_rows.push_back(text_conditioned_pool(tape, t_lu, images[i].v_l, m_u, p, norm));
        }
        const ad::Var v_tc = tape.stack_rows(v_tc_rows);
        terms.push_back(local_contrastive_terms(tape, v_tc, rep.t_l, tau2));
        total_sentences += static_cast<int>(rep.t_l_rows.size());
        out.gates.push_back(std::move(gates));
    }
    out.l_tc = combine_local_contrastive(tape, terms, total_sentences);
    out.l_spa = sparsity_loss(tape, all_masks);
    return out;
}

void export_attention(const Mat& weights, int grid_side, int upscale, const std::string& path) {
    if (weights.size() != grid_side * grid_side)
        throw NotSquareGrid("export_attention: weight count != grid_side^2");
    if (upscale < 1) upscale = 1;
    double lo = weights.data[0], hi = weights.data[0];
    for (double v : weights.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double range = hi - lo;
    const int side = grid_side * upscale;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open for write: " + path);
    os << "P5\n" << side << " " << side << "\n255\n";
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            const double v = weights.data[(y / upscale) * grid_side + (x / upscale)];
            const int g = range <= 0.0 ? 0 : static_cast<int>(std::lround((v - lo) / range * 255.0));
            os.put(static_cast<char>(g));
        }
}

}  // namespace fane
