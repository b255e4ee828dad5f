#include "fane/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "fane/global_alignment.hpp"
#include "fane/hard_negative.hpp"

namespace fane {

namespace fs = std::filesystem;
using nlohmann::json;

BatchView gather_batch(const Corpus& corpus, const std::vector<int>& indices) {
    BatchView b;
    b.knowledge = Mat(static_cast<int>(indices.size()), corpus.knowledge.cols);
    for (size_t r = 0; r < indices.size(); ++r) {
        b.samples.push_back(&corpus.samples[indices[r]]);
        for (int j = 0; j < corpus.knowledge.cols; ++j)
            b.knowledge(static_cast<int>(r), j) = corpus.knowledge(indices[r], j);
    }
    return b;
}

LossBreakdown total_loss(const BatchView& batch, const ModelParams& params, const HyperParams& hp,
                         double& ema_state, long step, ModelParams* grads_out, LossComponent backprop,
                         const HardWeightOverride* frozen_weights) {
    const int b = static_cast<int>(batch.samples.size());
    if (b < 2) throw BatchTooSmall("total_loss: batch size must be >= 2");
    const Dims& dims = params.dims;

    // Knowledge-side relabeling (Eqs. 1-5 analogue), no gradients involved.
    const SimilarityState st = divide(batch.knowledge, hp.division(), ema_state, step);
    const Mat labels = pair_labels(st.H);
    const Mat y = negative_indicator(st.H);

    ad::Tape tape;
    const ParamVars pv = register_params(tape, params);

    std::vector<ImageFeatures> images;
    std::vector<ReportFeatures> reports;
    std::vector<ad::Var> v_g_rows, t_g_rows;
    for (const Sample* s : batch.samples) {
        images.push_back(encode_image(tape, s->patch_inputs, pv, dims));
        reports.push_back(encode_report(tape, s->sentence_inputs, pv, dims));
        v_g_rows.push_back(images.back().v_g);
        t_g_rows.push_back(reports.back().t_g);
    }
    const ad::Var v_g = tape.stack_rows(v_g_rows);
    const ad::Var t_g = tape.stack_rows(t_g_rows);

    const ad::Var l_mp = multi_positive_loss(tape, v_g, t_g, labels, hp.tau1, pv.bias_b, hp.eq6_literal);
    const FineGrainedBatch fg = fine_grained_batch(tape, images, reports, pv, hp.tau2, hp.pool_norm);

    const HardWeights w_img = hard_weights(matmul_nt(tape.value(v_g), tape.value(v_g)), y, hp.tau3);
    const HardWeights w_txt = hard_weights(matmul_nt(tape.value(t_g), tape.value(t_g)), y, hp.tau3);
    const Mat& wi = frozen_weights ? frozen_weights->img : w_img.weights;
    const Mat& wt = frozen_weights ? frozen_weights->txt : w_txt.weights;
    const ad::Var l_img = intra_modal_loss(tape, v_g, y, wi, hp.tau3);
    const ad::Var l_txt = intra_modal_loss(tape, t_g, y, wt, hp.tau3);
    const ad::Var l_hn = tape.scale(tape.add(l_img, l_txt), 0.5);

    ad::Var total = l_mp;
    if (hp.lambda1 != 0.0) total = tape.add(total, tape.scale(fg.l_tc, hp.lambda1));
    if (hp.lambda2 != 0.0) total = tape.add(total, tape.scale(l_hn, hp.lambda2));
    if (hp.lambda3 != 0.0) total = tape.add(total, tape.scale(fg.l_spa, hp.lambda3));

    LossBreakdown out;
    out.l_mp = tape.scalar(l_mp);
    out.l_tc = tape.scalar(fg.l_tc);
    out.l_spa = tape.scalar(fg.l_spa);
    out.l_hn = tape.scalar(l_hn);
    out.total = tape.scalar(total);
    out.fallback_rows = static_cast<int>(w_img.fallback_rows.size() + w_txt.fallback_rows.size());
    double pos = 0.0;
    for (double v : st.H.data) pos += v;
    out.positives_per_row = pos / b;

    if (!std::isfinite(out.total)) throw NonFiniteLoss("total_loss: objective is not finite");

    if (grads_out) {
        ad::Var target = total;
        switch (backprop) {
            case LossComponent::Total: target = total; break;
            case LossComponent::Mp: target = l_mp; break;
            case LossComponent::Tc: target = fg.l_tc; break;
            case LossComponent::Spa: target = fg.l_spa; break;
            case LossComponent::Hn: target = l_hn; break;
        }
        tape.backward(target);
        collect_grads(tape, pv, *grads_out);
    }
    return out;
}

HardWeightOverride compute_hard_weights(const BatchView& batch, const ModelParams& params,
                                        const HyperParams& hp) {
    double ema = 0.0;
    const SimilarityState st = divide(batch.knowledge, hp.division(), ema, 0);
    const Mat y = negative_indicator(st.H);
    ad::Tape tape;
    const ParamVars pv = register_params(tape, params);
    std::vector<ad::Var> v_g_rows, t_g_rows;
    for (const Sample* s : batch.samples) {
        v_g_rows.push_back(encode_image(tape, s->patch_inputs, pv, params.dims).v_g);
        t_g_rows.push_back(encode_report(tape, s->sentence_inputs, pv, params.dims).t_g);
    }
    const Mat v_g = tape.value(tape.stack_rows(v_g_rows));
    const Mat t_g = tape.value(tape.stack_rows(t_g_rows));
    HardWeightOverride out;
    out.img = hard_weights(matmul_nt(v_g, v_g), y, hp.tau3).weights;
    out.txt = hard_weights(matmul_nt(t_g, t_g), y, hp.tau3).weights;
    return out;
}

double cosine_lr(double lr_init, long step, long total_steps) {
    if (total_steps <= 0) return lr_init;
    const double t = std::min<double>(static_cast<double>(step), static_cast<double>(total_steps));
    return lr_init * 0.5 * (1.0 + std::cos(3.141592653589793 * t / static_cast<double>(total_steps)));
}

AdamOptimizer::AdamOptimizer(const ModelParams& shape, double beta1, double beta2, double eps,
                             double weight_decay)
    : m_(zeros_like(shape)), v_(zeros_like(shape)), beta1_(beta1), beta2_(beta2), eps_(eps),
      weight_decay_(weight_decay) {}

void AdamOptimizer::step(ModelParams& params, const ModelParams& grads, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    std::vector<Mat*> ps, ms, vs;
    std::vector<const Mat*> gs;
    params.visit([&](const char*, Mat& m) { ps.push_back(&m); });
    m_.visit([&](const char*, Mat& m) { ms.push_back(&m); });
    v_.visit([&](const char*, Mat& m) { vs.push_back(&m); });
    grads.visit([&](const char*, const Mat& m) { gs.push_back(&m); });
    for (size_t i = 0; i < ps.size(); ++i) {
        Mat& p = *ps[i];
        Mat& m = *ms[i];
        Mat& v = *vs[i];
        const Mat& g = *gs[i];
        for (int k = 0; k < p.size(); ++k) {
            m.data[k] = beta1_ * m.data[k] + (1.0 - beta1_) * g.data[k];
            v.data[k] = beta2_ * v.data[k] + (1.0 - beta2_) * g.data[k] * g.data[k];
            const double mhat = m.data[k] / bc1;
            const double vhat = v.data[k] / bc2;
            p.data[k] -= lr * (mhat / (std::sqrt(vhat) + eps_) + weight_decay_ * p.data[k]);
        }
    }
}

namespace {
uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

json metrics_line(const EpochMetrics& em, const HyperParams& hp) {
    return json{{"epoch", em.epoch},
                {"lr", em.lr},
                {"l_mp", em.mean.l_mp},
                {"l_tc", em.mean.l_tc},
                {"l_spa", em.mean.l_spa},
                {"l_hn", em.mean.l_hn},
                {"total", em.mean.total},
                {"fallback_rows", em.mean.fallback_rows},
                {"positives_per_row", em.mean.positives_per_row},
                {"kappa", hp.kappa}};
}
}  // namespace

TrainResult train(const Corpus& corpus, const HyperParams& hp, const std::string& out_dir) {
    const int n = static_cast<int>(corpus.samples.size());
    const int n_train = n - hp.holdout;
    if (n_train < hp.batch) throw EmptySplit("train: not enough samples left after holdout");

    Dims dims{corpus.spec.token_dim, hp.embed_dim, hp.mask_hidden};
    TrainResult result;
    result.params = init_params(hp.seed, dims, hp.b_init);
    AdamOptimizer opt(result.params, 0.9, 0.999, 1e-8, hp.weight_decay);
    ModelParams grads = zeros_like(result.params);

    const long steps_per_epoch = n_train / hp.batch;
    const long total_steps = steps_per_epoch * hp.epochs;

    std::ofstream metrics;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        metrics.open(fs::path(out_dir) / "metrics.jsonl");
    }

    Checkpoint last_good;
    last_good.params = result.params;
    last_good.seed = hp.seed;

    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        const auto batches = make_batches(n_train, hp.batch, mix_seed(hp.seed, static_cast<uint64_t>(epoch)));
        EpochMetrics em;
        em.epoch = epoch;
        for (const std::vector<int>& idx : batches) {
            const BatchView batch = gather_batch(corpus, idx);
            LossBreakdown lb;
            try {
                lb = total_loss(batch, result.params, hp, result.ema_o_star, result.step, &grads);
            } catch (const NonFiniteLoss&) {
                if (!out_dir.empty()) save_checkpoint(last_good, (fs::path(out_dir) / "checkpoint").string());
                throw DivergedLoss("train: loss became non-finite; last good checkpoint kept");
            }
            const double lr = cosine_lr(hp.lr_init, result.step, total_steps);
            opt.step(result.params, grads, lr);
            ++result.step;
            em.lr = lr;
            em.mean.l_mp += lb.l_mp;
            em.mean.l_tc += lb.l_tc;
            em.mean.l_spa += lb.l_spa;
            em.mean.l_hn += lb.l_hn;
            em.mean.total += lb.total;
            em.mean.fallback_rows += lb.fallback_rows;
            em.mean.positives_per_row += lb.positives_per_row;
        }
        const double inv = batches.empty() ? 0.0 : 1.0 / static_cast<double>(batches.size());
        em.mean.l_mp *= inv;
        em.mean.l_tc *= inv;
        em.mean.l_spa *= inv;
        em.mean.l_hn *= inv;
        em.mean.total *= inv;
        em.mean.positives_per_row *= inv;
        result.history.push_back(em);
        if (metrics.is_open()) metrics << metrics_line(em, hp).dump() << "\n";

        last_good.params = result.params;
        last_good.ema_o_star = result.ema_o_star;
        last_good.step = result.step;
    }

    if (!out_dir.empty()) {
        Checkpoint ck{result.params, result.ema_o_star, result.step, hp.seed};
        save_checkpoint(ck, (fs::path(out_dir) / "checkpoint").string());
    }
    return result;
}

RetrievalReport evaluate(const ModelParams& params, const Corpus& corpus, int holdout, int k) {
    const int n = static_cast<int>(corpus.samples.size());
    if (holdout <= 0 || holdout > n) throw EmptySplit("evaluate: empty held-out split");
    const int start = n - holdout;

    Mat v_g(holdout, params.dims.embed_dim), t_g(holdout, params.dims.embed_dim);
    std::vector<int> groups(holdout);
    for (int i = 0; i < holdout; ++i) {
        const Sample& s = corpus.samples[start + i];
        ad::Tape tape;
        const ParamVars pv = register_params(tape, params);
        const ImageFeatures im = encode_image(tape, s.patch_inputs, pv, params.dims);
        const ReportFeatures rep = encode_report(tape, s.sentence_inputs, pv, params.dims);
        for (int j = 0; j < params.dims.embed_dim; ++j) {
            v_g(i, j) = tape.value(im.v_g)(0, j);
            t_g(i, j) = tape.value(rep.t_g)(0, j);
        }
        groups[i] = s.group_id;
    }

    const Mat sims = matmul_nt(v_g, t_g);
    RetrievalReport rep;
    rep.pool = holdout;
    k = std::min(k, holdout);

    auto count_hits = [&](bool image_to_text) {
        int strict = 0, grouped = 0;
        for (int i = 0; i < holdout; ++i) {
            std::vector<int> order(holdout);
            for (int j = 0; j < holdout; ++j) order[j] = j;
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                const double sa = image_to_text ? sims(i, a) : sims(a, i);
                const double sb = image_to_text ? sims(i, b) : sims(b, i);
                return sa > sb;
            });
            bool s_hit = false, g_hit = false;
            for (int r = 0; r < k; ++r) {
                if (order[r] == i) s_hit = true;
                if (groups[order[r]] == groups[i]) g_hit = true;
            }
            strict += s_hit;
            grouped += g_hit;
        }
        return std::pair<double, double>{static_cast<double>(strict) / holdout,
                                         static_cast<double>(grouped) / holdout};
    };
    std::tie(rep.strict_i2t, rep.group_i2t) = count_hits(true);
    std::tie(rep.strict_t2i, rep.group_t2i) = count_hits(false);
    return rep;
}

void save_checkpoint(const Checkpoint& ck, const std::string& dir) {
    const fs::path tmp = dir + ".tmp";
    fs::remove_all(tmp);
    fs::create_directories(tmp);

    json manifest;
    manifest["format"] = "fane-checkpoint-v1";
    manifest["dims"] = {{"token_dim", ck.params.dims.token_dim},
                        {"embed_dim", ck.params.dims.embed_dim},
                        {"mask_hidden", ck.params.dims.mask_hidden}};
    manifest["seed"] = ck.seed;
    manifest["step"] = ck.step;
    manifest["ema_o_star"] = ck.ema_o_star;
    json tensors = json::array();
    ck.params.visit([&](const char* name, const Mat& m) {
        tensors.push_back(json{{"name", name}, {"rows", m.rows}, {"cols", m.cols}});
        save_embeddings((tmp / (std::string(name) + ".femb")).string(), m);
    });
    manifest["tensors"] = std::move(tensors);
    std::ofstream os(tmp / "manifest.json");
    os << manifest.dump(2) << "\n";
    os.close();

    fs::remove_all(dir);
    fs::rename(tmp, dir);
}

Checkpoint load_checkpoint(const std::string& dir) {
    std::ifstream is(fs::path(dir) / "manifest.json");
    if (!is) throw Error("cannot open checkpoint manifest in " + dir);
    json manifest = json::parse(is);
    if (manifest.value("format", "") != "fane-checkpoint-v1")
        throw Error("unknown checkpoint format in " + dir);

    Dims dims{manifest.at("dims").at("token_dim"), manifest.at("dims").at("embed_dim"),
              manifest.at("dims").at("mask_hidden")};
    Checkpoint ck;
    ck.seed = manifest.at("seed");
    ck.step = manifest.at("step");
    ck.ema_o_star = manifest.at("ema_o_star");
    ck.params = init_params(0, dims, 0.0);
    ck.params.visit([&](const char* name, Mat& m) {
        m = load_embeddings((fs::path(dir) / (std::string(name) + ".femb")).string());
    });
    return ck;
}

}  // namespace fane
