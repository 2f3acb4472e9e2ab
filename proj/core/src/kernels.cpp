#include "vofde/kernels.hpp"

#include <cmath>

#include <fmt/format.h>

#include "vofde/errors.hpp"
#include "vofde/special.hpp"

namespace vofde::frac {

namespace {

void check_step_args(const char* who, double alpha, double h) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw DomainError(fmt::format("{}: order {} outside (0, 1]", who, alpha));
    }
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw DomainError(fmt::format("{}: step size {} must be positive", who, h));
    }
}

}  // namespace

double kernel_pow(double k, double e) {
    if (k == 0.0) {
        return 0.0;
    }
    return std::pow(k, e);
}

WeightRow l1_weights(std::size_t n, double alpha, double h) {
    check_step_args("l1_weights", alpha, h);
    const double beta = 1.0 - alpha;
    const double nd = static_cast<double>(n);

    WeightRow row;
    row.order_used = alpha;
    row.scale = gamma(2.0 - alpha) * std::pow(h, alpha);
    row.weights.resize(n + 1);
    row.weights[0] = kernel_pow(nd + 1.0, beta) - kernel_pow(nd, beta);
    for (std::size_t j = 1; j <= n; ++j) {
        const double m = static_cast<double>(n - j);
        row.weights[j] = 2.0 * kernel_pow(m + 1.0, beta) - kernel_pow(m, beta) -
                         kernel_pow(m + 2.0, beta);
    }
    return row;
}

WeightRow abm_weights(std::size_t n, double alpha, double h) {
    check_step_args("abm_weights", alpha, h);
    WeightRow row;
    row.order_used = alpha;
    row.scale = std::pow(h, alpha) * (1.0 / gamma(1.0 + alpha));
    row.weights.resize(n + 1);
    for (std::size_t j = 0; j <= n; ++j) {
        const double m = static_cast<double>(n - j);
        row.weights[j] = kernel_pow(m + 1.0, alpha) - kernel_pow(m, alpha);
    }
    return row;
}

WeightRow corrector_weights(std::size_t n, double alpha, double h) {
    check_step_args("corrector_weights", alpha, h);
    const double nd = static_cast<double>(n);
    const double e = alpha + 1.0;

    WeightRow row;
    row.order_used = alpha;
    row.scale = std::pow(h, alpha) * (1.0 / gamma(alpha + 2.0));
    row.implicit_weight = 1.0;
    row.weights.resize(n + 1);
    row.weights[0] = kernel_pow(nd, e) - (nd - alpha) * std::pow(nd + 1.0, alpha);
    for (std::size_t j = 1; j <= n; ++j) {
        const double m = static_cast<double>(n - j);
        row.weights[j] = kernel_pow(m + 2.0, e) + kernel_pow(m, e) - 2.0 * kernel_pow(m + 1.0, e);
    }
    return row;
}

SplitWeights corrector_split_weights(std::size_t n, double alpha, double h) {
    check_step_args("corrector_split_weights", alpha, h);
    const double alpha_p1 = alpha + 1.0;

    SplitWeights split;
    split.order_used = alpha;
    split.scale = std::pow(h, alpha) * (1.0 / gamma(alpha_p1 + 1.0));
    split.left.resize(n + 1);
    split.right.resize(n + 1);
    // interval k sits at distance m = n - k from the evaluation point
    for (std::size_t k = 0; k < n; ++k) {
        const double m = static_cast<double>(n - k);
        const double dp = kernel_pow(m + 1.0, alpha_p1) - kernel_pow(m, alpha_p1);
        const double dq = kernel_pow(m + 1.0, alpha) - kernel_pow(m, alpha);
        split.left[k] = alpha * dp - alpha_p1 * m * dq;
        split.right[k] = alpha_p1 * (m + 1.0) * dq - alpha * dp;
    }
    // last interval (m = 0) in closed form
    split.left[n] = alpha;
    split.right[n] = 1.0;
    return split;
}

}  // namespace vofde::frac
