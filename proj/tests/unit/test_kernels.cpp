#include <cmath>
#include <random>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include "vofde/errors.hpp"
#include "vofde/kernels.hpp"

using namespace vofde;
using namespace vofde::frac;

TEST(KernelPow, ZeroConvention) {
    EXPECT_EQ(kernel_pow(0.0, 0.0), 0.0);
    EXPECT_EQ(kernel_pow(0.0, 0.4), 0.0);
    EXPECT_EQ(kernel_pow(3.0, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(kernel_pow(4.0, 0.5), 2.0);
}

TEST(L1Weights, Examples) {
    const WeightRow r0 = l1_weights(0, 0.5, 0.1);
    ASSERT_EQ(r0.weights.size(), 1u);
    EXPECT_DOUBLE_EQ(r0.weights[0], 1.0);
    EXPECT_NEAR(r0.scale, 0.2802495608, 1e-10);
    EXPECT_EQ(r0.order_used, 0.5);

    const WeightRow r3 = l1_weights(3, 1.0, 0.1);
    ASSERT_EQ(r3.weights.size(), 4u);
    EXPECT_EQ(r3.weights[0], 0.0);
    EXPECT_EQ(r3.weights[1], 0.0);
    EXPECT_EQ(r3.weights[2], 0.0);
    EXPECT_EQ(r3.weights[3], 1.0);
    EXPECT_DOUBLE_EQ(r3.scale, 0.1);
}

TEST(L1Weights, FormulaAgainstLongDouble) {
    const std::size_t n = 6;
    const double a = 0.37;
    const WeightRow r = l1_weights(n, a, 0.2);
    auto p = [&](long double k) { return k == 0 ? 0.0L : std::pow(k, 1.0L - a); };
    EXPECT_NEAR(r.weights[0], static_cast<double>(p(n + 1) - p(n)), 1e-14);
    for (std::size_t j = 1; j <= n; ++j) {
        const long double ref = 2 * p(n + 1 - j) - p(n - j) - p(n + 2 - j);
        EXPECT_NEAR(r.weights[j], static_cast<double>(ref), 1e-14) << j;
    }
}

TEST(AbmWeights, Examples) {
    const WeightRow r = abm_weights(2, 0.5, 1.0);
    EXPECT_NEAR(r.weights[0], std::sqrt(3.0) - std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(r.weights[0], 0.3178372452, 1e-10);

    const WeightRow e = abm_weights(5, 1.0, 0.01);
    for (double w : e.weights) {
        EXPECT_EQ(w, 1.0);
    }
    EXPECT_DOUBLE_EQ(e.scale, 0.01);

    const WeightRow s = abm_weights(4, 0.8, 0.3);
    double sum = 0.0;
    for (double w : s.weights) {
        sum += w;
    }
    EXPECT_NEAR(sum, 3.6238983, 1e-7);
    EXPECT_NEAR(s.scale, std::pow(0.3, 0.8) / boost::math::tgamma(1.8), 1e-15);
}

TEST(Kernels, TelescopingIdentities) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(1e-3, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const double a = trial == 0 ? 1.0 : dist(rng);
        for (std::size_t n = 0; n <= 50; ++n) {
            double s1 = 0.0;
            for (double w : l1_weights(n, a, 0.1).weights) {
                s1 += w;
            }
            double s2 = 0.0;
            for (double w : abm_weights(n, a, 0.1).weights) {
                EXPECT_GT(w, 0.0);
                s2 += w;
            }
            EXPECT_NEAR(s1, 1.0, 1e-10);
            EXPECT_NEAR(s2, std::pow(n + 1.0, a), 1e-10);
        }
    }
}

TEST(CorrectorWeights, HeunLimit) {
    const WeightRow r = corrector_weights(0, 1.0, 0.1);
    ASSERT_EQ(r.weights.size(), 1u);
    EXPECT_DOUBLE_EQ(r.weights[0], 1.0);
    EXPECT_EQ(r.implicit_weight, 1.0);
    EXPECT_DOUBLE_EQ(r.scale, 0.05);  // h / 2
}

TEST(CorrectorWeights, NonNegative) {
    for (std::size_t n = 0; n <= 50; ++n) {
        for (int k = 1; k <= 99; ++k) {
            const double a = k / 99.0;
            for (double w : corrector_weights(n, a, 1.0).weights) {
                EXPECT_GE(w, 0.0) << "n=" << n << " a=" << a;
            }
        }
    }
}

TEST(CorrectorWeights, ProductTrapezoidQuadrature) {
    // scale * w_j = int_0^{t_{n+1}} (t_{n+1} - s)^{a-1} / Gamma(a) phi_j(s) ds
    const std::size_t n = 2;
    const double a = 0.7;
    const double h = 1.0;
    const WeightRow r = corrector_weights(n, a, h);
    const double t_end = (n + 1) * h;
    boost::math::quadrature::tanh_sinh<double> integrator;
    for (std::size_t j = 0; j <= n + 1; ++j) {
        auto hat = [&](double s) {
            const double d = std::abs(s - j * h) / h;
            return d < 1.0 ? 1.0 - d : 0.0;
        };
        double quad = 0.0;
        for (std::size_t k = 0; k <= n; ++k) {
            auto f = [&](double s, double sc) {
                // sc = b - s near the right endpoint, where the kernel is singular
                const double dist = (sc > 0.0 && k == n) ? sc : t_end - s;
                return std::pow(dist, a - 1.0) * hat(s) / boost::math::tgamma(a);
            };
            quad += integrator.integrate(f, k * h, (k + 1) * h);
        }
        const double w = j <= n ? r.weights[j] : r.implicit_weight;
        EXPECT_NEAR(w * r.scale, quad, 1e-8) << "j=" << j;
    }
}

TEST(CorrectorSplitWeights, RecombineToCorrectorRow) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(0.01, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double a = dist(rng);
        for (std::size_t n = 0; n <= 30; ++n) {
            const WeightRow row = corrector_weights(n, a, 0.05);
            const SplitWeights split = corrector_split_weights(n, a, 0.05);
            EXPECT_NEAR(split.scale, row.scale, 1e-15);
            EXPECT_NEAR(split.left[0], row.weights[0], 1e-10);
            for (std::size_t j = 1; j <= n; ++j) {
                EXPECT_NEAR(split.left[j] + split.right[j - 1], row.weights[j], 1e-9)
                    << "n=" << n << " j=" << j << " a=" << a;
            }
            EXPECT_EQ(split.right[n], row.implicit_weight);
        }
    }
}

TEST(Kernels, RejectBadArguments) {
    EXPECT_THROW(l1_weights(2, 0.0, 0.1), DomainError);
    EXPECT_THROW(abm_weights(2, 1.2, 0.1), DomainError);
    EXPECT_THROW(corrector_weights(2, 0.5, 0.0), DomainError);
    EXPECT_THROW(corrector_split_weights(2, 0.5, -1.0), DomainError);
}
