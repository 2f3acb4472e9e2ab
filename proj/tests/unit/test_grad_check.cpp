#include <gtest/gtest.h>

#include "vofde/grad_check.hpp"
#include "vofde/grad_suite.hpp"
#include "vofde/order_model.hpp"
#include "vofde/solvers.hpp"

using namespace vofde;
using namespace vofde::ad;

TEST(GradCheck, QuadraticIsExact) {
    ParamStore s;
    s.set("p", Tensor::vector({0.3, -1.2, 2.5}));
    ParamStore* stores[] = {&s};
    const ParamStore before = s;
    const GradCheckReport r =
        grad_check([&](Tape& t) { return sum(square(t.param(s, "p"))); }, stores);
    EXPECT_LE(r.max_rel_error, 1e-8);
    EXPECT_EQ(r.parameters_checked, 3u);
    EXPECT_EQ(s, before);
}

TEST(GradCheck, ConstantLossBothZero) {
    ParamStore s;
    s.set("p", Tensor::vector({1.0, 2.0}));
    ParamStore* stores[] = {&s};
    const GradCheckReport r = grad_check([&](Tape& t) { return t.constant(4.0); }, stores);
    EXPECT_EQ(r.max_rel_error, 0.0);
    EXPECT_EQ(r.worst_autodiff, 0.0);
    EXPECT_EQ(r.worst_numeric, 0.0);
    EXPECT_TRUE(r.passed());
}

TEST(GradCheck, SolverThroughStateNet) {
    auto order = order::OrderModel::state_net(1, 0.0, 1.0, {.hidden = 8, .seed = 3});
    solve::SolverConfig cfg{.t0 = 0.0, .t1 = 1.0, .steps = 5};
    ParamStore* stores[] = {&order.params()};
    auto loss = [&](Tape& t) {
        auto traj = solve::solve_on_tape(
            t, [](double, Var x) { return -1.0 * x + 0.2 * square(x); }, order,
            t.constant(Tensor::vector({1.0})), cfg);
        return sum(square(traj.states.back()));
    };
    const GradCheckReport r = grad_check(loss, stores);
    EXPECT_GT(r.parameters_checked, 0u);
    EXPECT_LE(r.max_rel_error, 1e-4) << r.worst_param;
}

TEST(GradSuite, AllCasesPass) {
    for (const auto& name : check::suite_names()) {
        const check::SuiteResult res = check::run_suite_case(name);
        EXPECT_TRUE(res.report.passed()) << name << " " << res.report.max_rel_error;
        EXPECT_GT(res.report.parameters_checked, 0u) << name;
    }
}

TEST(GradSuite, InjectedFaultIsDetected) {
    for (const auto& name : check::suite_names()) {
        EXPECT_FALSE(check::run_suite_case(name, 1e-4, true).report.passed()) << name;
    }
}
