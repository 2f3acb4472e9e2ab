#pragma once

#include <cstddef>

#include "vofde/tape.hpp"

namespace vofde::ad {

struct AdamOptions {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Moment accumulators for one ParamStore.
struct AdamState {
    AdamOptions options;
    ParamStore first_moment;
    ParamStore second_moment;
    std::size_t step = 0;

    AdamState() = default;
    explicit AdamState(AdamOptions opts) : options(opts) {}
};

// Bias-corrected Adam update of every entry in params. Throws
// OptimizerError, leaving params and state untouched, if any gradient is
// non-finite or shapes disagree.
void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state);

}  // namespace vofde::ad
