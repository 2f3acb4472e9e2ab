#pragma once

#include <cstddef>

namespace vofde::frac {

inline constexpr double kEulerGamma = 0.57721566490153286060651209;

// Gamma function via a g=7, 9-term Lanczos approximation with reflection
// below 1/2. Positive integer arguments return the exact factorial.
// Throws DomainError within 1e-9 of a pole (0, -1, -2, ...).
double gamma(double x);

// Digamma (psi) for x > 0. Upward recurrence to x >= 10, then the
// asymptotic Bernoulli series.
double digamma(double x);

// E_alpha(z) = sum_k z^k / Gamma(alpha k + 1) for alpha in (0, 1], |z| <= 50.
// Direct series summed in long double; intended as a test oracle.
double mittag_leffler(double alpha, double z);

// Variable-order Caputo derivative of t^n at a frozen order alpha_t:
// 0 for n = 0, otherwise Gamma(n+1) / Gamma(n+1-alpha_t) * t^(n-alpha_t).
double caputo_power_term(std::size_t n, double alpha_t, double t);

}  // namespace vofde::frac
