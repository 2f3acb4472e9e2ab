#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "vofde/tape.hpp"

namespace vofde::ad {

// Builds a scalar loss on the given tape, reading parameters through
// tape.param(store, name).
using LossBuilder = std::function<Var(Tape&)>;

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double worst_autodiff = 0.0;
    double worst_numeric = 0.0;
    std::size_t parameters_checked = 0;
    double tolerance = 1e-4;

    bool passed() const noexcept { return max_rel_error <= tolerance; }
};

// Compares reverse-mode gradients against a five-point central difference
// for every scalar in every store. The discrepancy per entry is
// |autodiff - numeric| / max(1e-8, |numeric|). Stores are restored on return.
GradCheckReport grad_check(const LossBuilder& loss, std::span<ParamStore* const> stores,
                           double rel_tol = 1e-4, double step = 1e-4);

}  // namespace vofde::ad
