#pragma once

#include <cstddef>
#include <vector>

namespace vofde::frac {

// One row of history coefficients for the step n -> n+1, with the order
// frozen at alpha(t_n, x_n).
struct WeightRow {
    std::vector<double> weights;   // index j = 0..n
    double scale = 0.0;            // per-step multiplier
    double order_used = 1.0;
    double implicit_weight = 0.0;  // weight on f(t_{n+1}, x_{n+1}^P); corrector rows only
};

// k^e with the convention 0^e := 0 for every e >= 0 (including e = 0).
double kernel_pow(double k, double e);

// L1 discretisation of the variable-order Caputo derivative.
// weights sum to 1; scale = Gamma(2 - alpha) h^alpha.
WeightRow l1_weights(std::size_t n, double alpha, double h);

// Fractional rectangle (Adams-Bashforth) predictor weights
// b_j = (n+1-j)^alpha - (n-j)^alpha; scale = h^alpha / Gamma(1 + alpha).
WeightRow abm_weights(std::size_t n, double alpha, double h);

// Product-trapezoidal (Adams-Moulton) corrector weights for the history
// j = 0..n plus an implicit weight of 1 on the predicted point;
// scale = h^alpha / Gamma(alpha + 2).
WeightRow corrector_weights(std::size_t n, double alpha, double h);

// The corrector row split by interval: left[k] multiplies the value at t_k and
// right[k] the value at t_{k+1} for interval [t_k, t_{k+1}], k = 0..n, with
// right[n] = 1. left[j] + right[j-1] reproduces corrector_weights().weights[j].
struct SplitWeights {
    std::vector<double> left;
    std::vector<double> right;
    double scale = 0.0;  // h^alpha / Gamma(alpha + 2)
    double order_used = 1.0;
};

SplitWeights corrector_split_weights(std::size_t n, double alpha, double h);

}  // namespace vofde::frac
