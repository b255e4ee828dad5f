#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fane/corpus.hpp"
#include "fane/encoders.hpp"
#include "fane/fine_grained.hpp"
#include "fane/semantic_division.hpp"

namespace fane {

struct HyperParams {
    double tau1 = 0.1;
    double tau2 = 0.07;
    double tau3 = 0.07;
    double kappa = 0.95;
    double ema_alpha = 0.05;
    double epsilon = 1e-8;
    double lambda1 = 1.0;  // L_tc
    double lambda2 = 1.0;  // L_hn
    double lambda3 = 1.0;  // L_spa
    double b_init = -10.0;
    double lr_init = 4e-4;
    double weight_decay = 0.0;
    int epochs = 60;
    int batch = 12;
    int embed_dim = 128;
    int mask_hidden = 32;
    int holdout = 60;
    uint64_t seed = 7;
    bool eq6_literal = false;
    PoolNormalizer pool_norm = PoolNormalizer::Sigmoid;

    DivisionParams division() const { return {ema_alpha, epsilon, kappa}; }
};

struct LossBreakdown {
    double l_mp = 0, l_tc = 0, l_spa = 0, l_hn = 0, total = 0;
    int fallback_rows = 0;
    double positives_per_row = 0;
};

struct BatchView {
    std::vector<const Sample*> samples;
    Mat knowledge;  // B x K_dim rows for these samples
};

BatchView gather_batch(const Corpus& corpus, const std::vector<int>& indices);

enum class LossComponent { Total, Mp, Tc, Spa, Hn };

// Stop-gradient hardness weights, normally recomputed every step. Gradient
// checking freezes them so central differences probe the same function the
// analytic gradient describes.
struct HardWeightOverride {
    Mat img;
    Mat txt;
};

HardWeightOverride compute_hard_weights(const BatchView& batch, const ModelParams& params,
                                        const HyperParams& hp);

// Full weighted-sum pipeline on one batch. ema_state is updated in place (one
// EMA step per call, seeded at step 0). When grads_out is non-null the
// analytic gradient of the selected component is written there.
LossBreakdown total_loss(const BatchView& batch, const ModelParams& params, const HyperParams& hp,
                         double& ema_state, long step, ModelParams* grads_out,
                         LossComponent backprop = LossComponent::Total,
                         const HardWeightOverride* frozen_weights = nullptr);

struct EpochMetrics {
    int epoch = 0;
    double lr = 0;
    LossBreakdown mean;
};

struct TrainResult {
    ModelParams params;
    double ema_o_star = 0;
    long step = 0;
    std::vector<EpochMetrics> history;
};

// Trains on samples [0, n - holdout). Writes metrics.jsonl and a checkpoint/
// directory under out_dir when out_dir is non-empty.
TrainResult train(const Corpus& corpus, const HyperParams& hp, const std::string& out_dir);

struct RetrievalReport {
    int pool = 0;
    double strict_i2t = 0, strict_t2i = 0;
    double group_i2t = 0, group_t2i = 0;
};

// Recall@K over the held-out tail of the corpus.
RetrievalReport evaluate(const ModelParams& params, const Corpus& corpus, int holdout, int k);

struct Checkpoint {
    ModelParams params;
    double ema_o_star = 0;
    long step = 0;
    uint64_t seed = 0;
};

void save_checkpoint(const Checkpoint& ck, const std::string& dir);
Checkpoint load_checkpoint(const std::string& dir);

double cosine_lr(double lr_init, long step, long total_steps);

// Adam with standard defaults (paper names only lr and the cosine policy).
class AdamOptimizer {
public:
    AdamOptimizer(const ModelParams& shape, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8,
                  double weight_decay = 0.0);
    void step(ModelParams& params, const ModelParams& grads, double lr);

private:
    ModelParams m_, v_;
    double beta1_, beta2_, eps_, weight_decay_;
    long t_ = 0;
};

}  // namespace fane
