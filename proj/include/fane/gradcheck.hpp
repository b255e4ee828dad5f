#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fane/encoders.hpp"
#include "fane/trainer.hpp"

namespace fane {

struct GradCheckReport {
    std::string op_name;
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    int probe_count = 0;
};

// Deterministic scalar loss; fills *grads when non-null.
using LossFn = std::function<double(ModelParams&, ModelParams*)>;

// Central differences with h = 1e-4 on `probes` randomly selected parameter
// coordinates; rel err = |g_a - g_fd| / max(1e-8, |g_a| + |g_fd|).
GradCheckReport finite_diff_check(const std::string& op_name, const LossFn& loss_fn, ModelParams params,
                                  int probes, uint64_t seed);

// Standard verification suite on a small synthetic batch: one report per loss
// component plus the full weighted objective. corrupt_analytic flips one
// analytic gradient entry (negative-control hook).
std::vector<GradCheckReport> run_gradcheck_suite(const HyperParams& hp, int batch_size, int probes,
                                                 uint64_t seed, bool corrupt_analytic = false);

}  // namespace fane
