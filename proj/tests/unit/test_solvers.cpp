#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/special_functions/erf.hpp>
#include <gtest/gtest.h>

#include "vofde/errors.hpp"
#include "vofde/order_model.hpp"
#include "vofde/solvers.hpp"
#include "vofde/special.hpp"

using namespace vofde;
using solve::Scheme;
using solve::SolverConfig;
using solve::State;
using solve::Trajectory;
using solve::TapeTrajectory;
using solve::to_string;
using order::OrderModel;

namespace {

State growth(double, std::span<const double> x) { return {x[0]}; }
State decay(double, std::span<const double> x) { return {-x[0]}; }
State zero(double, std::span<const double> x) { return State(x.size(), 0.0); }

// oracle for D^a u = -u, u(0) = 1: E_a(-t^a); E_{1/2} in closed form
double ml_solution(double a, double t) {
    if (a == 0.5) {
        const double z = -std::sqrt(t);
        return std::exp(z * z) * boost::math::erfc(-z);
    }
    return frac::mittag_leffler(a, -std::pow(t, a));
}

SolverConfig unit_cfg(std::size_t steps, Scheme scheme) {
    return SolverConfig{.t0 = 0.0, .t1 = 1.0, .steps = steps, .scheme = scheme};
}

}  // namespace

TEST(Solvers, EulerDegeneracy) {
    const std::vector<double> x0{1.0};
    const OrderModel one = OrderModel::constant(1.0);
    for (Scheme s : {Scheme::L1, Scheme::AbmPredictor}) {
        const Trajectory tr = solve::solve(growth, one, x0, unit_cfg(100, s));
        double x = 1.0;
        for (std::size_t n = 0; n <= 100; ++n) {
            EXPECT_NEAR(tr.states[n][0], x, 1e-12) << to_string(s) << " n=" << n;
            x += 0.01 * x;
        }
        EXPECT_NEAR(tr.states.back()[0], std::pow(1.01, 100), 1e-12);
        EXPECT_NEAR(tr.states.back()[0], 2.7048138, 1e-7);
    }
}

TEST(Solvers, HeunDegeneracy) {
    const std::vector<double> x0{1.0, 0.5};
    auto f = [](double t, std::span<const double> x) { return State{x[0] * t, -x[1] + t}; };
    const Trajectory tr = solve::solve_abm_pc(f, OrderModel::constant(1.0), x0,
                                       unit_cfg(100, Scheme::AbmPredictorCorrector));
    State x{1.0, 0.5};
    const double h = 0.01;
    for (std::size_t n = 0; n < 100; ++n) {
        const double t = n * h;
        const State k1 = f(t, x);
        const State xp{x[0] + h * k1[0], x[1] + h * k1[1]};
        const State k2 = f(t + h, xp);
        x = {x[0] + 0.5 * h * (k1[0] + k2[0]), x[1] + 0.5 * h * (k1[1] + k2[1])};
        EXPECT_NEAR(tr.states[n + 1][0], x[0], 1e-12);
        EXPECT_NEAR(tr.states[n + 1][1], x[1], 1e-12);
    }
}

TEST(Solvers, ZeroRhsConstant) {
    const std::vector<double> x0{0.7, -2.0};
    for (Scheme s : {Scheme::L1, Scheme::AbmPredictor, Scheme::AbmPredictorCorrector}) {
        for (double a : {0.2, 0.65, 1.0}) {
            const Trajectory tr = solve::solve(zero, OrderModel::constant(a), x0, unit_cfg(50, s));
            for (const State& x : tr.states) {
                EXPECT_NEAR(x[0], 0.7, 1e-14);
                EXPECT_NEAR(x[1], -2.0, 1e-14);
            }
        }
    }
}

TEST(Solvers, L1MittagLeffler) {
    const std::vector<double> x0{1.0};
    const Trajectory tr = solve::solve_l1(decay, OrderModel::constant(0.6), x0, unit_cfg(1000, Scheme::L1));
    EXPECT_NEAR(tr.states.back()[0], frac::mittag_leffler(0.6, -1.0), 5e-2);
}

TEST(Solvers, AbmMittagLeffler) {
    const std::vector<double> x0{1.0};
    const Trajectory tr = solve::solve_abm_predictor(decay, OrderModel::constant(0.5), x0,
                                              unit_cfg(2000, Scheme::AbmPredictor));
    EXPECT_NEAR(tr.states.back()[0], 0.4275835762, 5e-2);
}

TEST(Solvers, CorrectorBeatsPredictor) {
    const std::vector<double> x0{1.0};
    const OrderModel half = OrderModel::constant(0.5);
    const Trajectory p = solve::solve(decay, half, x0, unit_cfg(500, Scheme::AbmPredictor));
    const Trajectory pc = solve::solve(decay, half, x0, unit_cfg(500, Scheme::AbmPredictorCorrector));
    double ep = 0.0;
    double epc = 0.0;
    for (std::size_t n = 1; n <= 500; ++n) {
        const double ref = ml_solution(0.5, p.times[n]);
        ep = std::max(ep, std::abs(p.states[n][0] - ref));
        epc = std::max(epc, std::abs(pc.states[n][0] - ref));
    }
    EXPECT_LT(epc, ep);
    EXPECT_LT(std::abs(pc.states.back()[0] - 0.4275835762),
              std::abs(p.states.back()[0] - 0.4275835762));
}

TEST(Solvers, ConvergenceProbe) {
    const std::vector<double> x0{1.0};
    for (double a : {0.3, 0.6}) {
        auto exact = [a](double t) { return State{ml_solution(a, t)}; };
        const auto probe = solve::convergence_probe(decay, OrderModel::constant(a), x0, 1.0,
                                             {2000, 250, 1000, 500}, Scheme::AbmPredictor, exact);
        ASSERT_EQ(probe.size(), 4u);
        EXPECT_EQ(probe.front().steps, 250u);
        for (std::size_t i = 1; i < probe.size(); ++i) {
            EXPECT_LT(probe[i].max_error, probe[i - 1].max_error) << "a=" << a;
        }
    }
    auto exact_exp = [](double t) { return State{std::exp(t)}; };
    const auto probe = solve::convergence_probe(growth, OrderModel::constant(1.0), x0, 1.0,
                                         {100, 200, 400}, Scheme::AbmPredictor, exact_exp);
    for (std::size_t i = 1; i < probe.size(); ++i) {
        EXPECT_NEAR(probe[i].max_error / probe[i - 1].max_error, 0.5, 0.1);
    }
}

TEST(Solvers, VariableOrderRecordsOrders) {
    const std::vector<double> x0{1.0};
    const OrderModel g = OrderModel::grid({0.0, 1.0}, {order::unsquash(0.4), order::unsquash(0.9)});
    const Trajectory tr = solve::solve(decay, g, x0, unit_cfg(10, Scheme::L1));
    ASSERT_EQ(tr.orders.size(), 11u);
    for (std::size_t n = 0; n <= 10; ++n) {
        EXPECT_NEAR(tr.orders[n], g.eval(tr.times[n]), 1e-15);
    }
    const auto trace = solve::order_trace(g, tr);
    EXPECT_NEAR(trace.front().second, 0.4, 1e-12);
    EXPECT_NEAR(trace.back().second, 0.9, 1e-12);
}

TEST(Solvers, MemoryWindow) {
    const std::vector<double> x0{1.0};
    const OrderModel a = OrderModel::constant(0.7);
    SolverConfig full = unit_cfg(200, Scheme::AbmPredictor);
    SolverConfig windowed = full;
    windowed.memory_window = 200;
    EXPECT_EQ(solve::solve(decay, a, x0, full).states.back(), solve::solve(decay, a, x0, windowed).states.back());
    windowed.memory_window = 20;
    const double wide = solve::solve(decay, a, x0, full).states.back()[0];
    const double narrow = solve::solve(decay, a, x0, windowed).states.back()[0];
    EXPECT_NE(wide, narrow);
    EXPECT_TRUE(std::isfinite(narrow));

    SolverConfig l1 = unit_cfg(50, Scheme::L1);
    l1.memory_window = 5;
    for (const State& x : solve::solve(zero, a, x0, l1).states) {
        EXPECT_NEAR(x[0], 1.0, 1e-14);
    }
}

TEST(Solvers, DivergenceCarriesStep) {
    const std::vector<double> x0{1.0};
    auto blowup = [](double, std::span<const double> x) { return State{x[0] * x[0] * 1e200}; };
    try {
        solve::solve(blowup, OrderModel::constant(1.0), x0, unit_cfg(10, Scheme::AbmPredictor));
        FAIL() << "expected divergence";
    } catch (const DivergenceError& e) {
        EXPECT_GE(e.step(), 1u);
        EXPECT_LE(e.step(), 10u);
    }
}

TEST(Solvers, ConfigValidation) {
    const std::vector<double> x0{1.0};
    const OrderModel a = OrderModel::constant(0.5);
    EXPECT_THROW(solve::solve(decay, a, x0, SolverConfig{.t0 = 1.0, .t1 = 1.0}), DomainError);
    EXPECT_THROW(solve::solve(decay, a, x0, SolverConfig{.steps = 0}), DomainError);
    SolverConfig w;
    w.memory_window = 0;
    EXPECT_THROW(solve::solve(decay, a, x0, w), DomainError);
    EXPECT_THROW(solve::parse_scheme("RK4"), FormatError);
    EXPECT_EQ(solve::parse_scheme(to_string(Scheme::AbmPredictorCorrector)), Scheme::AbmPredictorCorrector);
}

TEST(Solvers, CsvRoundTrip) {
    const std::vector<double> x0{0.1, 2.0 / 3.0};
    auto f = [](double t, std::span<const double> x) { return State{std::sin(t) * x[1], -x[0]}; };
    const OrderModel g = OrderModel::grid(0.0, 1.0, 4, 0.55);
    const Trajectory tr = solve::solve(f, g, x0, unit_cfg(37, Scheme::AbmPredictorCorrector));
    const std::string text = solve::trajectory_to_csv(tr);
    EXPECT_EQ(text.substr(0, text.find('\n')), "t,alpha,x_0,x_1");
    const Trajectory back = solve::trajectory_from_csv(text);
    EXPECT_EQ(back.times, tr.times);
    EXPECT_EQ(back.orders, tr.orders);
    EXPECT_EQ(back.states, tr.states);
    EXPECT_EQ(solve::trajectory_to_csv(back), text);

    const std::string trace = solve::order_trace_to_csv(order_trace(g, tr));
    EXPECT_EQ(trace.substr(0, trace.find('\n')), "t,alpha");
}
