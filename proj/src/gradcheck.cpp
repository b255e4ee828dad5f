#include "fane/gradcheck.hpp"

#include <cmath>

#include "fane/corpus.hpp"
#include "fane/rng.hpp"

namespace fane {

GradCheckReport finite_diff_check(const std::string& op_name, const LossFn& loss_fn, ModelParams params,
                                  int probes, uint64_t seed) {
    if (probes < 1) throw InvalidSpec("finite_diff_check: probes must be >= 1");

    ModelParams analytic = zeros_like(params);
    const double base = loss_fn(params, &analytic);
    if (!std::isfinite(base)) throw NonFiniteLoss("finite_diff_check: loss is not finite");

    std::vector<Mat*> tensors;
    std::vector<const Mat*> grad_tensors;
    params.visit([&](const char*, Mat& m) { tensors.push_back(&m); });
    analytic.visit([&](const char*, const Mat& m) { grad_tensors.push_back(&m); });
    long total = 0;
    for (const Mat* m : tensors) total += m->size();

    const double h = 1e-4;
    Rng rng(seed);
    GradCheckReport rep;
    rep.op_name = op_name;
    rep.probe_count = probes;
    for (int p = 0; p < probes; ++p) {
        long flat = static_cast<long>(rng.uniform() * static_cast<double>(total));
        flat = std::min(flat, total - 1);
        size_t ti = 0;
        while (flat >= tensors[ti]->size()) flat -= tensors[ti++]->size();
        double& coord = tensors[ti]->data[static_cast<size_t>(flat)];
        const double g_a = grad_tensors[ti]->data[static_cast<size_t>(flat)];

        const double saved = coord;
        coord = saved + h;
        const double f_plus = loss_fn(params, nullptr);
        coord = saved - h;
        const double f_minus = loss_fn(params, nullptr);
        coord = saved;
        if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
            throw NonFiniteLoss("finite_diff_check: perturbed loss is not finite");

        const double g_fd = (f_plus - f_minus) / (2.0 * h);
        const double abs_err = std::abs(g_a - g_fd);
        const double rel_err = abs_err / std::max(1e-8, std::abs(g_a) + std::abs(g_fd));
        rep.max_abs_err = std::max(rep.max_abs_err, abs_err);
        rep.max_rel_err = std::max(rep.max_rel_err, rel_err);
    }
    return rep;
}

std::vector<GradCheckReport> run_gradcheck_suite(const HyperParams& hp, int batch_size, int probes,
                                                 uint64_t seed, bool corrupt_analytic) {
    // Small planted corpus sized for fast central differences.
    CorpusSpec spec;
    spec.n_samples = batch_size;
    spec.n_concepts = 6;
    spec.sentences_min = 4;
    spec.sentences_max = 5;
    spec.grid_side = 3;
    spec.patches = 9;
    spec.token_dim = 8;
    spec.duplicate_group_count = batch_size >= 6 ? 1 : 0;
    spec.noise_sigma = 0.05;
    spec.seed = seed;
    const Corpus corpus = generate(spec);

    std::vector<int> indices(batch_size);
    for (int i = 0; i < batch_size; ++i) indices[i] = i;
    const BatchView batch = gather_batch(corpus, indices);

    HyperParams toy = hp;
    Dims dims{spec.token_dim, toy.embed_dim, toy.mask_hidden};
    ModelParams params = init_params(seed + 1, dims, toy.b_init);

    // Hardness weights are stop-gradient; freeze them at the base point so
    // the probed function matches the analytic gradient's contract.
    const HardWeightOverride frozen = compute_hard_weights(batch, params, toy);

    auto make_fn = [&](LossComponent comp) {
        return [&, comp](ModelParams& p, ModelParams* grads) {
            double ema = 0.0;  // frozen at step 0; EMA depends only on constants
            const LossBreakdown lb = total_loss(batch, p, toy, ema, 0, grads, comp, &frozen);
            if (grads && corrupt_analytic) grads->attn_wq.data[0] += 0.5;
            switch (comp) {
                case LossComponent::Mp: return lb.l_mp;
                case LossComponent::Tc: return lb.l_tc;
                case LossComponent::Spa: return lb.l_spa;
                case LossComponent::Hn: return lb.l_hn;
                case LossComponent::Total: return lb.total;
            }
            return lb.total;
        };
    };

    std::vector<GradCheckReport> reports;
    reports.push_back(finite_diff_check("L_mp", make_fn(LossComponent::Mp), params, probes, seed + 10));
    reports.push_back(finite_diff_check("L_tc", make_fn(LossComponent::Tc), params, probes, seed + 11));
    reports.push_back(finite_diff_check("L_spa", make_fn(LossComponent::Spa), params, probes, seed + 12));
    reports.push_back(finite_diff_check("L_hn", make_fn(LossComponent::Hn), params, probes, seed + 13));
    reports.push_back(finite_diff_check("total", make_fn(LossComponent::Total), params, probes, seed + 14));
    return reports;
}

}  // namespace fane
